//! Samplers for the surface measure `μ`, the fiber measure `ν` and the base
//! measure `μ₁`, and Monte Carlo estimators built on them.
//!
//! Every estimator splits its sample budget into fixed-size chunks, each
//! drawn from its own [`RngStream::child`] and reduced in chunk order, so a
//! result depends only on `(seed, stream_id, n_samples)` and never on the
//! worker count.

mod estimate;
mod exec;
mod radial;
mod rng;
mod sampler;

pub use estimate::{agree, CompensatedSum, MeanEstimate, MeasureEstimate};
pub use exec::{init_workers, Execution, CHUNK_SAMPLES};
pub use radial::RadialTable;
pub use rng::{RngStream, StreamRng};
#[cfg(test)]
pub(crate) use sampler::uniform_ball;
pub use sampler::{Surface, REJECTION_BUDGET};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Angle, Rotation, SurfaceSpec};
use crate::lang::SetExpr;
use crate::partition::{sum_counts, PartitionHandle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error(
        "rejection sampler for {surface} failed {attempts} consecutive times; is the base domain of measure zero?"
    )]
    RejectionBudgetExceeded { surface: String, attempts: u64 },
    #[error("test function `{name}` took value {value}, outside its declared bound {bound}")]
    UnboundedFunction { name: String, value: f64, bound: f64 },
}

/// `μ(set)` by sampling the surface measure.
pub fn estimate_measure(
    surface: &Surface,
    set: &SetExpr,
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<MeasureEstimate, SamplingError> {
    let hits = exec.map_chunks(n_samples, |c, len| -> Result<u64, SamplingError> {
        let mut rng = stream.child(c).rng();
        let mut hits = 0;
        for _ in 0..len {
            let p = surface.sample_point(&mut rng)?;
            hits += u64::from(set.contains(&p));
        }
        Ok(hits)
    });
    let hits = hits.into_iter().sum::<Result<u64, _>>()?;
    Ok(MeasureEstimate::from_counts(hits, n_samples))
}

/// `μ(R_{θ₀}(F) ∩ E_i^X)` for every class `i`, from one set of draws
/// `x ~ μ`, using `x ∈ R_{θ₀}(F) ⟺ R_{−θ₀}(x) ∈ F`.
pub fn estimate_rotated_intersections(
    set_f: &SetExpr,
    theta0: Angle,
    part: &PartitionHandle,
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<Vec<MeasureEstimate>, SamplingError> {
    let r = part.r();
    let back = Rotation::new(-theta0);
    let parts = exec.map_chunks(n_samples, |c, len| -> Result<Vec<u64>, SamplingError> {
        let mut rng = stream.child(c).rng();
        let mut counts = vec![0u64; r];
        let mut q = Vec::with_capacity(part.surface().dim());
        for _ in 0..len {
            let p = part.surface().sample_point(&mut rng)?;
            q.clear();
            q.extend_from_slice(&p);
            back.apply(&mut q);
            if set_f.contains(&q) {
                counts[part.classify_point(&p) - 1] += 1;
            }
        }
        Ok(counts)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(sum_counts(parts, r).into_iter().map(|h| MeasureEstimate::from_counts(h, n_samples)).collect())
}

/// `μ(R_{θ₀}(F) ∩ E_i^X)` for a single 1-based class `i`.
pub fn estimate_rotated_intersection(
    set_f: &SetExpr,
    theta0: Angle,
    part: &PartitionHandle,
    i: usize,
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<MeasureEstimate, SamplingError> {
    assert!((1..=part.r()).contains(&i), "class index {i} outside 1..={}", part.r());
    Ok(estimate_rotated_intersections(set_f, theta0, part, n_samples, stream, exec)?[i - 1])
}

/// A bounded real function on the ambient space, for disintegration checks.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub name: String,
    pub kind: TestFnKind,
    /// Declared bound on `|f|`; exceeding it is an error.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestFnKind {
    Constant(f64),
    /// `∏ x_i^{e_i}` over the listed exponents.
    Monomial(Vec<u32>),
    Indicator(SetExpr),
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction { name: format!("{c}"), kind: TestFnKind::Constant(c), bound: c.abs() }
    }

    /// Bound derived from the surface's coordinate bound.
    pub fn monomial(spec: &SurfaceSpec, exponents: Vec<u32>) -> Self {
        let b = spec.coordinate_bound();
        let name = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{e}", i + 1) })
            .collect::<Vec<_>>()
            .join("*");
        let bound = exponents.iter().map(|&e| b.powi(e as i32)).product::<f64>() * (1.0 + 1e-12);
        TestFunction { name, kind: TestFnKind::Monomial(exponents), bound }
    }

    pub fn indicator(set: SetExpr) -> Self {
        TestFunction { name: format!("1[{set}]"), kind: TestFnKind::Indicator(set), bound: 1.0 }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, SamplingError> {
        let v = match &self.kind {
            TestFnKind::Constant(c) => *c,
            TestFnKind::Monomial(e) => e.iter().zip(p).map(|(&e, &x)| x.powi(e as i32)).product(),
            TestFnKind::Indicator(s) => f64::from(u8::from(s.contains(p))),
        };
        if v.abs() > self.bound {
            return Err(SamplingError::UnboundedFunction { name: self.name.clone(), value: v, bound: self.bound });
        }
        Ok(v)
    }

    /// The fixed ten-function corpus: moments, sector indicators and
    /// cap/half-space indicators, scaled to the surface.
    pub fn standard_corpus(spec: &SurfaceSpec) -> Vec<TestFunction> {
        let n = spec.dim();
        let mono = |pairs: &[(usize, u32)]| {
            let mut e = vec![0u32; n];
            for &(i, k) in pairs {
                e[i - 1] = k;
            }
            TestFunction::monomial(spec, e)
        };
        let set = |text: String| TestFunction::indicator(SetExpr::parse(&text, n).expect("corpus expression"));
        let unit = |i: usize| {
            let mut v = vec!["0"; n];
            v[i - 1] = "1";
            format!("({})", v.join(","))
        };
        // thresholds placed inside each surface's range of x_n and x_1
        let (top, side) = match spec {
            SurfaceSpec::Sphere { .. } => (0.3, 0.5),
            SurfaceSpec::Power { k, radius, .. } => (0.5 * radius.powf(*k), radius / 3.0),
            SurfaceSpec::Cylinder { radius, omega, .. } => {
                let (lo, hi) = omega.bbox()[n - 3];
                (0.5 * (lo + hi), radius / 2.0)
            }
        };
        let cap_or_half = |i: usize, c: f64| match spec {
            SurfaceSpec::Sphere { .. } => format!("cap[{},{c}]", unit(i)),
            _ => format!("halfspace[{},{c}]", unit(i)),
        };
        vec![
            TestFunction::constant(1.0),
            mono(&[(1, 2)]),
            mono(&[(n, 1)]),
            mono(&[(n, 2)]),
            mono(&[(1, 1), (n, 1)]),
            set("sector[0,0.1)".into()),
            set("sector[0.3,0.75)".into()),
            set(cap_or_half(n, top)),
            set(cap_or_half(1, side)),
            set(format!("sector[0.6,0.9) & {}", cap_or_half(n, top))),
        ]
    }
}

/// One row of [`disintegration_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisintegrationRow {
    pub function: String,
    /// `∫_X f dμ` by sampling the surface measure.
    pub lhs: MeanEstimate,
    /// `∫_C ∫_Y f(Φ(θ, y)) dν dμ₁` by sampling `(θ, y)`.
    pub rhs: MeanEstimate,
    pub pass: bool,
}

fn mean_over_chunks<F>(
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
    draw: F,
) -> Result<MeanEstimate, SamplingError>
where
    F: Fn(&mut StreamRng) -> Result<f64, SamplingError> + Sync + Send,
{
    let parts = exec.map_chunks(n_samples, |c, len| -> Result<(f64, f64), SamplingError> {
        let mut rng = stream.child(c).rng();
        let (mut s, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
        for _ in 0..len {
            let v = draw(&mut rng)?;
            s.add(v);
            s2.add(v * v);
        }
        Ok((s.value(), s2.value()))
    });
    let (mut s, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
    for part in parts {
        let (a, b) = part?;
        s.add(a);
        s2.add(b);
    }
    Ok(MeanEstimate::from_sums(s.value(), s2.value(), n_samples))
}

/// Compares both sides of the product disintegration for each function;
/// a row passes when they agree within `z` combined standard errors.
pub fn disintegration_check(
    surface: &Surface,
    test_fns: &[TestFunction],
    n_samples: u64,
    stream: RngStream,
    z: f64,
    exec: Execution,
) -> Result<Vec<DisintegrationRow>, SamplingError> {
    test_fns
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let lhs_stream = stream.child(2 * j as u64);
            let rhs_stream = stream.child(2 * j as u64 + 1);
            let lhs = mean_over_chunks(n_samples, lhs_stream, exec, |rng| f.eval(&surface.sample_point(rng)?))?;
            let rhs = mean_over_chunks(n_samples, rhs_stream, exec, |rng| {
                let theta = Surface::sample_angle(rng);
                let y = surface.sample_fiber(rng)?;
                f.eval(&surface.embed(theta, &y))
            })?;
            let pass = agree(lhs.mean, lhs.std_err, rhs.mean, rhs.std_err, z);
            Ok(DisintegrationRow { function: f.name.clone(), lhs, rhs, pass })
        })
        .collect()
}
