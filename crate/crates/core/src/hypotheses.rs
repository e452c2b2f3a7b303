//! Statistical and numerical checks of the structure the certification
//! pipeline relies on: equivariance and invertibility of `Φ`, the product
//! disintegration, uniformity of the base angle and rotation invariance of
//! the surface measure.

use rand::Rng;
use serde::Serialize;

use crate::geometry::{phi, phi_inverse, polar_angle, rotate, Angle, Polar, Rotation};
use crate::lang::SetExpr;
use crate::measures::{
    agree, disintegration_check, estimate_measure, DisintegrationRow, Execution, MeasureEstimate, RngStream,
    SamplingError, Surface, TestFunction,
};
use crate::stats::{chi_square_homogeneity, ks_uniform, TestResult};
use crate::Error;

/// Tolerance of the equivariance identity `Φ(θ ⊕ α, y) = R_α Φ(θ, y)`.
pub const EQUIVARIANCE_TOLERANCE: f64 = 1e-12;

/// Tolerance of `Φ⁻¹ ∘ Φ = id`, in turns for the angle and in coordinates
/// for the fibre.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equivariance {
    pub samples: u64,
    /// Largest componentwise `|Φ(θ ⊕ α, y) − R_α Φ(θ, y)|`.
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub samples: u64,
    pub max_angle_error: f64,
    pub max_fiber_error: f64,
    pub pass: bool,
}

/// Per-chunk maxima, reduced in chunk order.
fn max_over_chunks<const K: usize, F>(n: u64, stream: RngStream, exec: Execution, f: F) -> Result<[f64; K], Error>
where
    F: Fn(&mut crate::measures::StreamRng) -> Result<[f64; K], Error> + Sync + Send,
{
    let parts = exec.map_chunks(n, |c, len| -> Result<[f64; K], Error> {
        let mut rng = stream.child(c).rng();
        let mut worst = [0.0f64; K];
        for _ in 0..len {
            let e = f(&mut rng)?;
            for (w, e) in worst.iter_mut().zip(e) {
                *w = w.max(e);
            }
        }
        Ok(worst)
    });
    let mut worst = [0.0f64; K];
    for part in parts {
        for (w, e) in worst.iter_mut().zip(part?) {
            *w = w.max(e);
        }
    }
    Ok(worst)
}

/// Draws `(θ, α, y)` and compares `Φ(θ ⊕ α, y)` with `R_α Φ(θ, y)`.
pub fn equivariance(
    surface: &Surface,
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<Equivariance, Error> {
    let spec = surface.spec();
    let [max_error] = max_over_chunks(n_samples, stream, exec, |rng| {
        let theta = Surface::sample_angle(rng);
        let alpha = Surface::sample_angle(rng);
        let y = surface.sample_fiber(rng)?;
        let lhs = phi(spec, theta + alpha, &y)?;
        let rhs = rotate(spec, alpha, &phi(spec, theta, &y)?)?;
        Ok([lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)])
    })?;
    Ok(Equivariance { samples: n_samples, max_error, pass: max_error <= EQUIVARIANCE_TOLERANCE })
}

/// Draws `(θ, y)` and checks that `Φ⁻¹(Φ(θ, y)) = (θ, y)`.
pub fn round_trip(surface: &Surface, n_samples: u64, stream: RngStream, exec: Execution) -> Result<RoundTrip, Error> {
    let spec = surface.spec();
    let [max_angle_error, max_fiber_error] = max_over_chunks(n_samples, stream, exec, |rng| {
        let theta = Surface::sample_angle(rng);
        let y = surface.sample_fiber(rng)?;
        match phi_inverse(spec, &phi(spec, theta, &y)?)? {
            Polar::Regular { theta: back, fiber } => {
                let d = (back - theta).turns();
                let fiber_err = fiber.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                Ok([d.min(1.0 - d), fiber_err])
            }
            Polar::InN => Ok([f64::INFINITY, f64::INFINITY]),
        }
    })?;
    let pass = max_angle_error <= ROUND_TRIP_TOLERANCE && max_fiber_error <= ROUND_TRIP_TOLERANCE;
    Ok(RoundTrip { samples: n_samples, max_angle_error, max_fiber_error, pass })
}

/// KS test of `θ(x)` for `x ~ μ` against the uniform law on the circle.
pub fn base_angle_uniformity(
    surface: &Surface,
    n_samples: u64,
    stream: RngStream,
    exec: Execution,
) -> Result<TestResult, SamplingError> {
    let parts = exec.map_chunks(n_samples, |c, len| -> Result<Vec<f64>, SamplingError> {
        let mut rng = stream.child(c).rng();
        (0..len).map(|_| Ok(polar_angle(&surface.sample_point(&mut rng)?).map_or(0.0, Angle::turns))).collect()
    });
    let mut thetas = Vec::with_capacity(n_samples as usize);
    for part in parts {
        thetas.extend(part?);
    }
    Ok(ks_uniform(&mut thetas))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationInvariance {
    pub original: MeasureEstimate,
    pub rotated: MeasureEstimate,
    pub pass: bool,
}

/// Compares `μ(F)` with `μ(R_α F)` on independent streams, using
/// `x ∈ R_α F ⟺ R_{−α} x ∈ F`.
pub fn rotation_invariance(
    surface: &Surface,
    set: &SetExpr,
    alpha: Angle,
    n_samples: u64,
    stream: RngStream,
    z: f64,
    exec: Execution,
) -> Result<RotationInvariance, SamplingError> {
    let original = estimate_measure(surface, set, n_samples, stream.child(0), exec)?;
    let back = Rotation::new(-alpha);
    let rotated_stream = stream.child(1);
    let hits = exec.map_chunks(n_samples, |c, len| -> Result<u64, SamplingError> {
        let mut rng = rotated_stream.child(c).rng();
        let mut hits = 0;
        for _ in 0..len {
            let mut p = surface.sample_point(&mut rng)?;
            back.apply(&mut p);
            hits += u64::from(set.contains(&p));
        }
        Ok(hits)
    });
    let rotated = MeasureEstimate::from_counts(hits.into_iter().sum::<Result<u64, _>>()?, n_samples);
    let pass = agree(original.mean, original.std_err, rotated.mean, rotated.std_err, z);
    Ok(RotationInvariance { original, rotated, pass })
}

/// Cell of a point in the closed unit 3-ball: four equal-volume shells,
/// eight octants and a polar/equatorial split, 64 cells in all.
fn ball_cell(p: &[f64]) -> usize {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let shell = ((r.powi(3) * 4.0) as usize).min(3);
    let octant = usize::from(p[0] >= 0.0) | usize::from(p[1] >= 0.0) << 1 | usize::from(p[2] >= 0.0) << 2;
    let polar = usize::from(p[2].abs() * 2.0 >= r);
    shell * 16 + octant * 2 + polar
}

/// Projects uniform points of `S⁴` to their last three coordinates and
/// compares the result with uniform draws from the unit 3-ball, by a
/// chi-square homogeneity test over 64 cells. The ball oracle is
/// rejection sampling from the cube.
pub fn archimedes_pushforward(n_samples: u64, stream: RngStream, exec: Execution) -> Result<TestResult, SamplingError> {
    let sphere = Surface::new(crate::geometry::SurfaceSpec::sphere(5).expect("valid sphere"));
    let projected = exec.map_chunks(n_samples, |c, len| -> Result<Vec<u64>, SamplingError> {
        let mut rng = stream.child(2 * c).rng();
        let mut counts = vec![0u64; 64];
        for _ in 0..len {
            let p = sphere.sample_point(&mut rng)?;
            counts[ball_cell(&p[2..])] += 1;
        }
        Ok(counts)
    });
    let oracle = exec.map_chunks(n_samples, |c, len| {
        let mut rng = stream.child(2 * c + 1).rng();
        let mut counts = vec![0u64; 64];
        let mut accepted = 0;
        while accepted < len {
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            if q.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                counts[ball_cell(&q)] += 1;
                accepted += 1;
            }
        }
        counts
    });
    let a = crate::partition::sum_counts(projected.into_iter().collect::<Result<_, _>>()?, 64);
    let b = crate::partition::sum_counts(oracle, 64);
    Ok(chi_square_homogeneity(&a, &b))
}

/// Settings of [`check_hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisSettings {
    /// Samples for the equivariance, round-trip and uniformity checks.
    pub samples: u64,
    /// Samples per side of each disintegration row.
    pub disintegration_samples: u64,
    pub z: f64,
    /// Significance level of the uniformity test.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for HypothesisSettings {
    fn default() -> Self {
        HypothesisSettings { samples: 100_000, disintegration_samples: 100_000, z: 3.0, alpha: 0.01, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub surface: String,
    pub settings: HypothesisSettings,
    pub equivariance: Equivariance,
    pub round_trip: RoundTrip,
    pub base_angle_uniformity: TestResult,
    pub disintegration: Vec<DisintegrationRow>,
    pub passed: bool,
}

/// Runs the equivariance, round-trip, uniformity and disintegration suites
/// on one surface.
pub fn check_hypotheses(
    surface: &Surface,
    settings: &HypothesisSettings,
    exec: Execution,
) -> Result<HypothesisReport, Error> {
    let s = settings.seed;
    let equivariance = equivariance(surface, settings.samples, RngStream::new(s, 1), exec)?;
    let round_trip = round_trip(surface, settings.samples, RngStream::new(s, 2), exec)?;
    let uniformity = base_angle_uniformity(surface, settings.samples, RngStream::new(s, 3), exec)?;
    let corpus = TestFunction::standard_corpus(surface.spec());
    let disintegration = disintegration_check(
        surface,
        &corpus,
        settings.disintegration_samples,
        RngStream::new(s, 4),
        settings.z,
        exec,
    )?;
    let passed = equivariance.pass
        && round_trip.pass
        && uniformity.p_value > settings.alpha
        && disintegration.iter().all(|row| row.pass);
    Ok(HypothesisReport {
        surface: surface.spec().to_string(),
        settings: *settings,
        equivariance,
        round_trip,
        base_angle_uniformity: uniformity,
        disintegration,
        passed,
    })
}
