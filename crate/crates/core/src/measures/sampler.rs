use rand::Rng;
use rand_distr::StandardNormal;

use super::radial::RadialTable;
use super::{SamplingError, StreamRng};
use crate::geometry::{Angle, FiberPoint, Point, SurfaceSpec};

/// Consecutive rejections tolerated before a sampler gives up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// A surface prepared for sampling its normalized surface measure `μ`, the
/// fiber measure `ν` and the base measure `μ₁`.
#[derive(Clone, Debug)]
pub struct Surface {
    spec: SurfaceSpec,
    radial: Option<RadialTable>,
}

impl Surface {
    pub fn new(spec: SurfaceSpec) -> Self {
        let radial = match spec {
            SurfaceSpec::Power { n, k, radius } if k < 1.0 => Some(RadialTable::new(n, k, radius)),
            _ => None,
        };
        Surface { spec, radial }
    }

    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// A draw from `μ₁`, the normalized Lebesgue measure on the circle.
    #[inline]
    pub fn sample_angle(rng: &mut StreamRng) -> Angle {
        Angle::new(rng.random::<f64>())
    }

    /// A draw from the normalized surface measure.
    ///
    /// The sphere normalizes a standard Gaussian vector. The power surface and
    /// the cylinder draw `(θ, y) ~ μ₁ × ν` and map it through `Φ`.
    pub fn sample_point(&self, rng: &mut StreamRng) -> Result<Point, SamplingError> {
        match self.spec {
            SurfaceSpec::Sphere { n } => {
                let mut x = vec![0.0; n];
                loop {
                    gaussian_fill(rng, &mut x);
                    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        x.iter_mut().for_each(|v| *v /= norm);
                        return Ok(x);
                    }
                }
            }
            _ => {
                let theta = Self::sample_angle(rng);
                let y = self.sample_fiber(rng)?;
                Ok(self.embed(theta, &y))
            }
        }
    }

    /// A draw from the fiber measure `ν`.
    pub fn sample_fiber(&self, rng: &mut StreamRng) -> Result<FiberPoint, SamplingError> {
        match &self.spec {
            SurfaceSpec::Sphere { n } => Ok(FiberPoint::BallVec { v: uniform_ball(rng, n - 2, 1.0) }),
            SurfaceSpec::Power { n, k, radius } => {
                let base = match &self.radial {
                    Some(table) => loop {
                        let s = table.quantile(rng.random::<f64>());
                        let mut x = unit_direction(rng, n - 1);
                        x.iter_mut().for_each(|v| *v *= s);
                        if x[0] != 0.0 || x[1] != 0.0 {
                            break x;
                        }
                    },
                    None => self.power_rejection(rng, *n, *k, *radius)?,
                };
                Ok(FiberPoint::RhoX { rho: base[0].hypot(base[1]), xpp: base[2..].to_vec() })
            }
            SurfaceSpec::Cylinder { omega, .. } => {
                let mut w = vec![0.0; omega.bbox().len()];
                for _ in 0..REJECTION_BUDGET {
                    for (wi, &(lo, hi)) in w.iter_mut().zip(omega.bbox()) {
                        *wi = lo + (hi - lo) * rng.random::<f64>();
                    }
                    if omega.contains(&w) {
                        return Ok(FiberPoint::OmegaVec { w });
                    }
                }
                Err(SamplingError::RejectionBudgetExceeded {
                    surface: self.spec.to_string(),
                    attempts: REJECTION_BUDGET,
                })
            }
        }
    }

    /// `x′` uniform in the radius-`R` ball, accepted with probability
    /// `w(|x′|) / w(R)` where `w(s) = √(1 + k² s^{2(k−1)})` is nondecreasing
    /// for `k ≥ 1`.
    fn power_rejection(&self, rng: &mut StreamRng, n: usize, k: f64, radius: f64) -> Result<Vec<f64>, SamplingError> {
        let area = |s: f64| (1.0 + k * k * s.powf(2.0 * (k - 1.0))).sqrt();
        let w_max = area(radius);
        for _ in 0..REJECTION_BUDGET {
            let x = uniform_ball(rng, n - 1, radius);
            let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (x[0] == 0.0 && x[1] == 0.0) || s == 0.0 {
                continue;
            }
            if rng.random::<f64>() * w_max < area(s) {
                return Ok(x);
            }
        }
        Err(SamplingError::RejectionBudgetExceeded { surface: self.spec.to_string(), attempts: REJECTION_BUDGET })
    }

    /// `Φ(θ, y)` without validating `y`; `y` must come from this surface's
    /// fiber space.
    pub fn embed(&self, theta: Angle, y: &FiberPoint) -> Point {
        let mut out = Vec::with_capacity(self.dim());
        self.embed_into(theta, y, &mut out);
        out
    }

    pub fn embed_into(&self, theta: Angle, y: &FiberPoint, out: &mut Vec<f64>) {
        let (sin, cos) = theta.radians().sin_cos();
        out.clear();
        match (&self.spec, y) {
            (SurfaceSpec::Sphere { .. }, FiberPoint::BallVec { v }) => {
                let r = (1.0 - v.iter().map(|x| x * x).sum::<f64>()).sqrt();
                out.extend([r * cos, r * sin]);
                out.extend_from_slice(v);
            }
            (SurfaceSpec::Power { k, .. }, FiberPoint::RhoX { rho, xpp }) => {
                out.extend([rho * cos, rho * sin]);
                out.extend_from_slice(xpp);
                let s_sq = rho * rho + xpp.iter().map(|x| x * x).sum::<f64>();
                out.push(s_sq.powf(k / 2.0));
            }
            (SurfaceSpec::Cylinder { radius, .. }, FiberPoint::OmegaVec { w }) => {
                out.extend([radius * cos, radius * sin]);
                out.extend_from_slice(w);
            }
            _ => panic!("fiber point does not belong to {}", self.spec),
        }
    }
}

fn gaussian_fill(rng: &mut StreamRng, x: &mut [f64]) {
    for v in x {
        *v = rng.sample(StandardNormal);
    }
}

fn unit_direction(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    loop {
        gaussian_fill(rng, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
            return x;
        }
    }
}

/// Uniform in the open ball of the given radius in `ℝ^d`.
pub(crate) fn uniform_ball(rng: &mut StreamRng, d: usize, radius: f64) -> Vec<f64> {
    let mut x = unit_direction(rng, d);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    x.iter_mut().for_each(|v| *v *= r);
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{on_surface, Omega};
    use crate::lang::SetExpr;
    use crate::measures::RngStream;

    fn mean_of(n: usize, mut f: impl FnMut() -> f64) -> (f64, f64) {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = f();
            s += x;
            s2 += x * x;
        }
        let m = s / n as f64;
        (m, ((s2 / n as f64 - m * m) / n as f64).sqrt())
    }

    #[test]
    fn samples_lie_on_their_surfaces() {
        let omega =
            Omega::new(SetExpr::parse("band[1,0,0.5] | band[2,0.5,1]", 2).unwrap(), vec![(0.0, 1.0); 2]).unwrap();
        let specs = [
            SurfaceSpec::sphere(5).unwrap(),
            SurfaceSpec::power(3, 0.5, 1.0).unwrap(),
            SurfaceSpec::power(4, 2.0, 1.5).unwrap(),
            SurfaceSpec::cylinder(4, 2.0, omega).unwrap(),
        ];
        let mut rng = RngStream::new(1, 0).rng();
        for spec in specs {
            let s = Surface::new(spec.clone());
            for _ in 0..2000 {
                let p = s.sample_point(&mut rng).unwrap();
                assert!(on_surface(&spec, &p).unwrap(), "{spec}: {p:?}");
            }
        }
    }

    #[test]
    fn sphere_mean_is_origin() {
        let s = Surface::new(SurfaceSpec::sphere(3).unwrap());
        let mut rng = RngStream::new(2, 0).rng();
        let n = 1_000_000;
        let mut acc = [0.0; 3];
        let mut upper = 0u64;
        for _ in 0..n {
            let p = s.sample_point(&mut rng).unwrap();
            for (a, x) in acc.iter_mut().zip(&p) {
                *a += x;
            }
            upper += u64::from(p[2] > 0.0);
        }
        for a in acc {
            assert!((a / n as f64).abs() < 4e-3);
        }
        let frac = upper as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn cone_radius_mean_matches_quadrature() {
        // density of ρ on the cone x3 = |x'| is 2ρ/R² on (0, R]; E[ρ] = 2R/3
        let s = Surface::new(SurfaceSpec::power(3, 1.0, 1.0).unwrap());
        let mut rng = RngStream::new(3, 0).rng();
        let (m, se) = mean_of(200_000, || match s.sample_fiber(&mut rng).unwrap() {
            FiberPoint::RhoX { rho, .. } => rho,
            _ => unreachable!(),
        });
        assert!((m - 2.0 / 3.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn cylinder_fiber_uniform_on_interval() {
        let omega = Omega::new(SetExpr::whole(1), vec![(0.0, 1.0)]).unwrap();
        let s = Surface::new(SurfaceSpec::cylinder(3, 1.0, omega).unwrap());
        let mut rng = RngStream::new(4, 0).rng();
        let (m, se) = mean_of(200_000, || s.sample_fiber(&mut rng).unwrap().coords()[0]);
        assert!((m - 0.5).abs() <= 3.0 * se);
    }

    /// Importance-weighted oracle: E_μ[f] = E[f·w] / E[w] with x′ uniform in
    /// the base ball and `w` the area factor. Independent of both samplers.
    fn weighted_oracle(n: usize, k: f64, radius: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut rng = RngStream::new(99, 0).rng();
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..400_000 {
            let x = uniform_ball(&mut rng, n - 1, radius);
            let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = (1.0 + k * k * s.powf(2.0 * (k - 1.0))).sqrt();
            let mut p = x.clone();
            p.push(s.powf(k));
            num += f(&p) * w;
            den += w;
        }
        num / den
    }

    #[test]
    fn power_sampler_matches_importance_weighted_oracle() {
        for &(n, k, r) in &[(3, 2.0, 1.0), (3, 0.5, 1.0), (4, 2.0, 1.0), (3, 3.0, 1.2)] {
            let s = Surface::new(SurfaceSpec::power(n, k, r).unwrap());
            let mut rng = RngStream::new(5, 0).rng();
            let f = |p: &[f64]| p[n - 1];
            let (m, se) = mean_of(400_000, || f(&s.sample_point(&mut rng).unwrap()));
            let want = weighted_oracle(n, k, r, f);
            // oracle carries its own noise; 4σ of the sampler side covers both
            assert!((m - want).abs() <= 4.0 * se * 2f64.sqrt(), "n={n} k={k}: {m} vs {want} (se {se})");
        }
    }

    #[test]
    fn rejection_and_table_routes_agree_for_k_at_least_one() {
        let spec = SurfaceSpec::power(3, 2.0, 1.0).unwrap();
        let rejection = Surface::new(spec);
        let table = RadialTable::new(3, 2.0, 1.0);
        let mut rng = RngStream::new(6, 0).rng();
        let (m1, se1) = mean_of(200_000, || match rejection.sample_fiber(&mut rng).unwrap() {
            FiberPoint::RhoX { rho, .. } => rho,
            _ => unreachable!(),
        });
        let (m2, se2) = mean_of(200_000, || table.quantile(rng.random::<f64>()));
        assert!((m1 - m2).abs() <= 3.0 * se1.hypot(se2), "{m1} vs {m2}");
    }

    #[test]
    fn empty_omega_exhausts_rejection_budget() {
        let omega = Omega::new_unchecked(SetExpr::parse("EMPTY", 1).unwrap(), vec![(0.0, 1.0)]);
        let s = Surface::new(SurfaceSpec::cylinder(3, 1.0, omega).unwrap());
        let mut rng = RngStream::new(7, 0).rng();
        assert!(matches!(
            s.sample_fiber(&mut rng),
            Err(SamplingError::RejectionBudgetExceeded { attempts: REJECTION_BUDGET, .. })
        ));
        assert!(s.sample_point(&mut rng).is_err());
    }
}
