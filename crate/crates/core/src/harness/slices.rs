use std::io::{self, Write};

use serde::Serialize;

use crate::geometry::Angle;
use crate::lang::CoverSpec;
use crate::measures::{Execution, MeasureEstimate, RngStream, SamplingError};

/// Header line of the slice-table CSV.
pub const SLICES_CSV_HEADER: &str = "# raimi-slices v1";

/// Estimates of the slice measures `ν(A_m(θ_g))` on the grid `θ_g = g/G`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceTable {
    grid: usize,
    t: usize,
    values: Vec<Vec<MeasureEstimate>>,
}

impl SliceTable {
    /// Builds a table from precomputed rows, one row of `t` estimates per
    /// grid point.
    pub fn from_rows(values: Vec<Vec<MeasureEstimate>>) -> Self {
        assert!(!values.is_empty(), "a slice table needs at least one grid point");
        let t = values[0].len();
        assert!(t > 0 && values.iter().all(|row| row.len() == t), "ragged slice table");
        SliceTable { grid: values.len(), t, values }
    }

    /// Grid size `G`.
    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Number of cover parts `t`.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn theta(&self, g: usize) -> Angle {
        Angle::new(g as f64 / self.grid as f64)
    }

    pub fn row(&self, g: usize) -> &[MeasureEstimate] {
        &self.values[g]
    }

    pub fn rows(&self) -> &[Vec<MeasureEstimate>] {
        &self.values
    }

    /// Grid points where `Σ_m ν̂(A_m) < 1 − z·σ`, i.e. where the parts fail
    /// to cover the fiber.
    pub fn cover_violations(&self, z: f64) -> Vec<usize> {
        self.violations(|row| {
            let sum: f64 = row.iter().map(|e| e.mean).sum();
            let sigma = row.iter().map(|e| e.std_err * e.std_err).sum::<f64>().sqrt();
            sum < 1.0 - z * sigma
        })
    }

    /// Grid points where no part reaches `1/t − z·σ`.
    pub fn pigeonhole_violations(&self, z: f64) -> Vec<usize> {
        let floor = 1.0 / self.t as f64;
        self.violations(|row| row.iter().all(|e| e.mean < floor - z * e.std_err))
    }

    fn violations(&self, bad: impl Fn(&[MeasureEstimate]) -> bool) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, row)| bad(row)).map(|(g, _)| g).collect()
    }

    /// Writes the table as CSV: the version header, a column header, then
    /// one line per `(g, m)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SLICES_CSV_HEADER}")?;
        writeln!(out, "g,theta,m,mean,std_err,n_samples")?;
        for (g, row) in self.values.iter().enumerate() {
            let theta = self.theta(g).turns();
            for (m, e) in row.iter().enumerate() {
                writeln!(out, "{g},{theta},{},{},{},{}", m + 1, e.mean, e.std_err, e.n_samples)?;
            }
        }
        Ok(())
    }
}

/// Builds the slice table of a cover: for each grid angle, draws
/// `samples_per_cell` fibre points `y ~ ν` and tests every part at
/// `Φ(θ_g, y)`. Row `g` uses `stream.child(g)`.
pub fn build_slice_table(
    cover: &CoverSpec,
    grid: usize,
    samples_per_cell: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<SliceTable, SamplingError> {
    assert!(grid > 0 && samples_per_cell > 0, "empty slice table");
    let surface = cover.surface();
    let t = cover.len();
    let rows = exec.map(grid, |g| -> Result<Vec<MeasureEstimate>, SamplingError> {
        let mut rng = stream.child(g as u64).rng();
        let theta = Angle::new(g as f64 / grid as f64);
        let mut hits = vec![0u64; t];
        let mut p = Vec::with_capacity(surface.dim());
        for _ in 0..samples_per_cell {
            let y = surface.sample_fiber(&mut rng)?;
            surface.embed_into(theta, &y, &mut p);
            for (h, part) in hits.iter_mut().zip(cover.parts()) {
                *h += u64::from(part.contains(&p));
            }
        }
        Ok(hits.into_iter().map(|h| MeasureEstimate::from_counts(h, samples_per_cell)).collect())
    });
    Ok(SliceTable::from_rows(rows.into_iter().collect::<Result<_, _>>()?))
}

/// The pigeonhole index `m(θ_g)` on the grid, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexFunction {
    pub assignment: Vec<usize>,
    /// Grid points where no estimate reached `1/t` and the argmax was used.
    pub flagged: Vec<usize>,
}

impl IndexFunction {
    /// The index at an arbitrary angle, read from the grid cell containing it.
    pub fn at(&self, theta: Angle) -> usize {
        let g = self.assignment.len();
        self.assignment[((theta.turns() * g as f64) as usize).min(g - 1)]
    }
}

/// `m(θ_g)` = the smallest `m` with `ν̂(A_m(θ_g)) ≥ 1/t`, or the first argmax
/// when noise pushes every estimate below `1/t`.
pub fn index_function(table: &SliceTable) -> IndexFunction {
    let floor = 1.0 / table.t() as f64;
    let mut flagged = Vec::new();
    let assignment = table
        .rows()
        .iter()
        .enumerate()
        .map(|(g, row)| match row.iter().position(|e| e.mean >= floor) {
            Some(m) => m + 1,
            None => {
                flagged.push(g);
                let mut best = 0;
                for (m, e) in row.iter().enumerate() {
                    if e.mean > row[best].mean {
                        best = m;
                    }
                }
                best + 1
            }
        })
        .collect();
    IndexFunction { assignment, flagged }
}
