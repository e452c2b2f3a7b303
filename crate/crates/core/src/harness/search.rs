use std::io::{self, Write};

use serde::Serialize;

use super::slices::{IndexFunction, SliceTable};
use crate::geometry::Angle;
use crate::lang::CoverSpec;
use crate::measures::{estimate_rotated_intersections, Execution, MeasureEstimate, RngStream, SamplingError};
use crate::partition::PartitionHandle;

/// Header line of the objective-curve CSV.
pub const OBJECTIVE_CSV_HEADER: &str = "# raimi-objective v1";

/// Knobs of the grid/bisection search and the certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Halvings of the step around the best grid shift.
    pub bisection_steps: u32,
    /// Surface samples behind each certified intersection.
    pub certificate_samples: u64,
    /// Positivity bar: an estimate counts as positive when `mean > z·std_err`.
    pub z: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { bisection_steps: 5, certificate_samples: 100_000, z: 3.0 }
    }
}

/// A 1-D reduced estimate of `μ(R_{θ₀}F_m ∩ E_i^X)` from the slice table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedEstimate {
    pub mean: f64,
    pub sigma: f64,
}

/// The reduced objective on a fixed slice table and base partition:
/// `g_i(m, θ₀) = (1/G) Σ_{θ_g ∈ E_i} ν̂(A_m(θ_g − θ₀))` and
/// `J(m, θ₀) = min_i g_i`.
pub struct Objective<'a> {
    table: &'a SliceTable,
    classes: Vec<usize>,
    r: usize,
}

impl<'a> Objective<'a> {
    pub fn new(table: &'a SliceTable, handle: &PartitionHandle) -> Self {
        let base = handle.base();
        let classes = (0..table.grid()).map(|g| base.classify(table.theta(g)) - 1).collect();
        Objective { table, classes, r: base.r() }
    }

    /// Class of each grid angle, 1-based.
    pub fn grid_class(&self, g: usize) -> usize {
        self.classes[g] + 1
    }

    /// `g_i(m, θ₀)` for every class, at a shift of `shift` grid cells
    /// (`θ₀ = shift/G`). Off-grid shifts interpolate linearly between rows.
    pub fn per_class(&self, m: usize, shift: f64) -> Vec<ReducedEstimate> {
        let grid = self.table.grid();
        let gf = grid as f64;
        let base = shift.floor();
        let w = shift - base;
        let base = (base.rem_euclid(gf)) as usize;
        let mut sums = vec![0.0; self.r];
        let mut vars = vec![0.0; self.r];
        for g in 0..grid {
            // θ_g − θ₀ = (g − base − w)/G, between rows q − 1 and q
            let q = (g + grid - base) % grid;
            let e0 = self.table.row(q)[m - 1];
            let (mean, var) = if w == 0.0 {
                (e0.mean, e0.std_err * e0.std_err)
            } else {
                let e1 = self.table.row((q + grid - 1) % grid)[m - 1];
                ((1.0 - w) * e0.mean + w * e1.mean, (1.0 - w).powi(2) * e0.std_err.powi(2) + w * w * e1.std_err.powi(2))
            };
            sums[self.classes[g]] += mean;
            vars[self.classes[g]] += var;
        }
        sums.iter().zip(&vars).map(|(s, v)| ReducedEstimate { mean: s / gf, sigma: v.sqrt() / gf }).collect()
    }

    /// `J(m, θ₀)` at a shift of `shift` grid cells.
    pub fn value(&self, m: usize, shift: f64) -> f64 {
        self.per_class(m, shift).iter().map(|e| e.mean).fold(f64::INFINITY, f64::min)
    }

    /// `J(m, j/G)` for every grid shift `j` and part `m`, indexed `[j][m−1]`.
    pub fn scan(&self, exec: Execution) -> Vec<Vec<f64>> {
        exec.map(self.table.grid(), |j| (1..=self.table.t()).map(|m| self.value(m, j as f64)).collect())
    }

    /// Writes the per-class objective curves as CSV, one line per `(m, j)`.
    pub fn write_csv<W: Write>(&self, mut out: W, exec: Execution) -> io::Result<()> {
        let grid = self.table.grid();
        let rows = exec.map(grid * self.table.t(), |k| {
            let (m, j) = (k / grid + 1, k % grid);
            (m, j, self.per_class(m, j as f64))
        });
        writeln!(out, "{OBJECTIVE_CSV_HEADER}")?;
        write!(out, "m,theta0,objective")?;
        for i in 1..=self.r {
            write!(out, ",class_{i}")?;
        }
        writeln!(out)?;
        for (m, j, per) in rows {
            let obj = per.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
            write!(out, "{m},{},{obj}", j as f64 / grid as f64)?;
            for e in per {
                write!(out, ",{}", e.mean)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NotCertifiedReason {
    /// No candidate's reduced objective cleared the positivity bar.
    SearchExhausted,
    /// The best candidate looked positive on the slice table, but the direct
    /// surface estimate did not clear the bar.
    TooNoisy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Status {
    Certified,
    NotCertified(NotCertifiedReason),
}

/// One row of the audit of `μ(R_{θ₀}F_m ∩ E_i^X) ≥ (1/t)·μ₁(R_{θ₀}C_m ∩ E_i^C)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub class: usize,
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
    pub rhs_std_err: f64,
    pub pass: bool,
}

/// Config hash and seed a report was produced from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    #[serde(flatten)]
    pub status: Status,
    pub certified: bool,
    pub chosen_m: usize,
    pub chosen_theta0: Angle,
    /// `J` at the chosen candidate, from the slice table.
    pub objective: f64,
    pub reduced: Vec<ReducedEstimate>,
    /// Direct surface estimates of `μ(R_{θ₀}F_m ∩ E_i^X)`, `i = 1..r`.
    pub intersections: Vec<MeasureEstimate>,
    pub inequality_audit: Vec<AuditRow>,
    pub audit_passed: bool,
    /// Grid cells where the index function fell back to the argmax.
    pub flagged_cells: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Finds `(m, θ₀)` maximizing the reduced objective, refines `θ₀` by
/// bisection, and certifies the result by direct sampling of the `r`
/// intersections on `stream`.
pub fn rotation_search(
    cover: &CoverSpec,
    handle: &PartitionHandle,
    table: &SliceTable,
    idx: &IndexFunction,
    cfg: &SearchConfig,
    stream: RngStream,
    exec: Execution,
) -> Result<VerificationReport, SamplingError> {
    assert_eq!(table.t(), cover.len(), "slice table built for another cover");
    assert_eq!(idx.assignment.len(), table.grid(), "index function built for another grid");
    let grid = table.grid();
    let objective = Objective::new(table, handle);

    let scan = objective.scan(exec);
    let (mut best_m, mut best_shift, mut best) = (1, 0.0, f64::NEG_INFINITY);
    for m in 1..=table.t() {
        for (j, row) in scan.iter().enumerate() {
            if row[m - 1] > best {
                (best_m, best_shift, best) = (m, j as f64, row[m - 1]);
            }
        }
    }
    let centre = best_shift;
    let mut h = 0.5;
    for _ in 0..cfg.bisection_steps {
        for s in [centre - h, centre + h] {
            let v = objective.value(best_m, s);
            if v > best {
                (best_shift, best) = (s, v);
            }
        }
        h /= 2.0;
    }

    let theta0 = Angle::new(best_shift / grid as f64);
    let reduced = objective.per_class(best_m, best_shift);
    let intersections = estimate_rotated_intersections(
        &cover.parts()[best_m - 1],
        theta0,
        handle,
        cfg.certificate_samples,
        stream,
        exec,
    )?;

    let certified = intersections.iter().all(|e| e.significantly_positive(cfg.z));
    let status = if certified {
        Status::Certified
    } else if reduced.iter().all(|e| e.mean > cfg.z * e.sigma) {
        Status::NotCertified(NotCertifiedReason::TooNoisy)
    } else {
        Status::NotCertified(NotCertifiedReason::SearchExhausted)
    };

    let inequality_audit = audit(&objective, idx, best_m, theta0, &intersections, cfg.z);
    let audit_passed = inequality_audit.iter().all(|row| row.pass);
    Ok(VerificationReport {
        status,
        certified,
        chosen_m: best_m,
        chosen_theta0: theta0,
        objective: best,
        reduced,
        intersections,
        inequality_audit,
        audit_passed,
        flagged_cells: idx.flagged.clone(),
        provenance: None,
    })
}

/// Compares each certified intersection with `(1/t)·μ̂₁(R_{θ₀}C_m ∩ E_i^C)`,
/// the right side counted on the grid. The grid count is treated as a
/// proportion over `G` points for its error.
fn audit(
    objective: &Objective<'_>,
    idx: &IndexFunction,
    m: usize,
    theta0: Angle,
    intersections: &[MeasureEstimate],
    z: f64,
) -> Vec<AuditRow> {
    let grid = objective.table.grid();
    let t = objective.table.t() as f64;
    let mut counts = vec![0u64; objective.r];
    for g in 0..grid {
        if idx.at(objective.table.theta(g) - theta0) == m {
            counts[objective.classes[g]] += 1;
        }
    }
    intersections
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (lhs, c))| {
            let p = c as f64 / grid as f64;
            let rhs = p / t;
            let rhs_std_err = (p * (1.0 - p) / grid as f64).sqrt() / t;
            let pass = lhs.mean >= rhs - z * lhs.std_err.hypot(rhs_std_err);
            AuditRow { class: i + 1, lhs: lhs.mean, lhs_std_err: lhs.std_err, rhs, rhs_std_err, pass }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceSpec;
    use crate::harness::{build_slice_table, index_function};
    use crate::lang::SetExpr;
    use crate::measures::Surface;
    use crate::partition::BasePartition;

    fn setup(parts: &[&str], r: usize, grid: usize) -> (CoverSpec, PartitionHandle, SliceTable) {
        let surface = Surface::new(SurfaceSpec::sphere(3).unwrap());
        let parts = parts.iter().map(|p| SetExpr::parse(p, 3).unwrap()).collect();
        let mut cover = CoverSpec::new(parts, surface.clone()).unwrap();
        cover.absorb_axis();
        let handle = PartitionHandle::new(surface, BasePartition::intervals(r).unwrap());
        let table = build_slice_table(&cover, grid, 200, RngStream::new(9, 1), Execution::Parallel).unwrap();
        (cover, handle, table)
    }

    #[test]
    fn halves_certify_at_a_quarter_turn() {
        let (cover, handle, table) = setup(&["sector[0,0.5)", "sector[0.5,1)"], 2, 256);
        let idx = index_function(&table);
        let rep = rotation_search(
            &cover,
            &handle,
            &table,
            &idx,
            &SearchConfig::default(),
            RngStream::new(9, 2),
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(rep.status, Status::Certified);
        assert_eq!(rep.chosen_m, 1);
        assert!((rep.chosen_theta0.turns() - 0.25).abs() <= 1.0 / 256.0);
        assert_eq!(rep.objective, 0.25);
        for e in &rep.intersections {
            assert!(e.consistent_with(0.25, 3.0), "{e:?}");
        }
        assert!(rep.audit_passed, "{:?}", rep.inequality_audit);
    }

    #[test]
    fn interval_overlap_objective() {
        // g_1(1, θ₀) = |[θ₀, θ₀ + ½) ∩ [0, ½)| = ½ − θ₀ for θ₀ ∈ [0, ½]
        let (_, handle, table) = setup(&["sector[0,0.5)", "sector[0.5,1)"], 2, 128);
        let obj = Objective::new(&table, &handle);
        for j in 0..=64 {
            let per = obj.per_class(1, j as f64);
            let theta0 = j as f64 / 128.0;
            assert!((per[0].mean - (0.5 - theta0)).abs() < 1e-12);
            assert!((per[1].mean - theta0).abs() < 1e-12);
        }
        assert!((obj.value(1, 32.5) - 0.25).abs() < 1.0 / 128.0);
    }

    #[test]
    fn whole_space_certifies_anywhere() {
        let (cover, handle, table) = setup(&["TRUE"], 3, 64);
        let idx = index_function(&table);
        let rep = rotation_search(
            &cover,
            &handle,
            &table,
            &idx,
            &SearchConfig::default(),
            RngStream::new(9, 3),
            Execution::Sequential,
        )
        .unwrap();
        assert!(rep.certified);
        for e in &rep.intersections {
            assert!(e.consistent_with(1.0 / 3.0, 3.0));
        }
        assert!(rep.audit_passed);
    }

    #[test]
    fn partition_lift_as_cover() {
        let (cover, handle, table) = setup(&["sector[0,0.5)", "!sector[0,0.5)"], 2, 256);
        let idx = index_function(&table);
        let rep = rotation_search(
            &cover,
            &handle,
            &table,
            &idx,
            &SearchConfig::default(),
            RngStream::new(9, 4),
            Execution::Parallel,
        )
        .unwrap();
        assert!(rep.certified);
        assert!((rep.chosen_theta0.turns() - 0.25).abs() <= 1.0 / 256.0);
        for e in &rep.intersections {
            assert!(e.consistent_with(0.25, 3.0));
        }
    }

    #[test]
    fn thin_sliver_loses_to_its_complement() {
        // a cover piece of measure 2⁻¹² cannot meet both halves after any rotation on a 64 grid
        let (cover, handle, table) = setup(&["sector[0,0.000244140625)", "!sector[0,0.000244140625)"], 2, 64);
        let idx = index_function(&table);
        let cfg = SearchConfig { certificate_samples: 1000, ..SearchConfig::default() };
        let rep =
            rotation_search(&cover, &handle, &table, &idx, &cfg, RngStream::new(9, 5), Execution::Parallel).unwrap();
        // the complement still certifies
        assert!(rep.certified);
        assert_eq!(rep.chosen_m, 2);
    }

    #[test]
    fn empty_piece_is_search_exhausted() {
        let (cover, handle, _) = setup(&["EMPTY"], 2, 16);
        let table = SliceTable::from_rows(vec![vec![MeasureEstimate::exact(0.0, 100)]; 16]);
        let idx = index_function(&table);
        assert_eq!(idx.flagged.len(), 16);
        let cfg = SearchConfig { certificate_samples: 1000, ..SearchConfig::default() };
        let rep =
            rotation_search(&cover, &handle, &table, &idx, &cfg, RngStream::new(9, 7), Execution::Parallel).unwrap();
        assert_eq!(rep.status, Status::NotCertified(NotCertifiedReason::SearchExhausted));
        assert!(!rep.certified);
    }

    #[test]
    fn starved_certificate_is_too_noisy() {
        let (cover, handle, table) = setup(&["TRUE"], 3, 16);
        let idx = index_function(&table);
        let cfg = SearchConfig { certificate_samples: 2, ..SearchConfig::default() };
        let rep =
            rotation_search(&cover, &handle, &table, &idx, &cfg, RngStream::new(9, 8), Execution::Parallel).unwrap();
        assert_eq!(rep.status, Status::NotCertified(NotCertifiedReason::TooNoisy));
    }

    #[test]
    fn search_is_independent_of_execution() {
        let (cover, handle, table) = setup(&["cap[(0,0,1),0.2] | sector[0,0.3)", "!cap[(0,0,1),0.2]"], 3, 64);
        let idx = index_function(&table);
        let cfg = SearchConfig { certificate_samples: 20_000, ..SearchConfig::default() };
        let a =
            rotation_search(&cover, &handle, &table, &idx, &cfg, RngStream::new(9, 6), Execution::Sequential).unwrap();
        let b =
            rotation_search(&cover, &handle, &table, &idx, &cfg, RngStream::new(9, 6), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_csv_shape() {
        let (_, handle, table) = setup(&["sector[0,0.5)", "sector[0.5,1)"], 2, 8);
        let mut out = Vec::new();
        Objective::new(&table, &handle).write_csv(&mut out, Execution::Parallel).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], OBJECTIVE_CSV_HEADER);
        assert_eq!(lines[1], "m,theta0,objective,class_1,class_2");
        assert_eq!(lines.len(), 2 + 16);
        assert_eq!(lines[4], "1,0.25,0.25,0.25,0.25");
    }
}
