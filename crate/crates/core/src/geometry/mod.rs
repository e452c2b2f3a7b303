//! Trivializations `Φ : C × Y → X ∖ N` of the three surface families, their
//! inverses, and the circle action by rotation in the `(x₁, x₂)` plane.
//!
//! Every surface here has the same shape: the first two coordinates sit on a
//! circle whose radius depends only on the fiber coordinate, and the rotation
//! `R_α` turns that circle by `2πα` while fixing everything else. The
//! exceptional set `N` is the rotation axis `x₁ = x₂ = 0`.

mod angle;
mod surface;

pub use angle::Angle;
pub use surface::{FiberPoint, Omega, SurfaceSpec};

use thiserror::Error;

/// Coordinates `(x₁, …, x_n)` of a point in the ambient space.
pub type Point = Vec<f64>;

/// Points with `√(x₁² + x₂²)` at or below this are on the axis `N`.
pub const AXIS_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance of the defining equations in [`on_surface`].
pub const SURFACE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not on the surface {0}")]
    OffSurface(String),
    #[error("fiber point variant does not match the {0} surface")]
    FiberMismatch(&'static str),
    #[error("fiber point outside its domain: {0}")]
    DomainViolation(String),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
}

/// Result of inverting `Φ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Polar {
    Regular {
        theta: Angle,
        fiber: FiberPoint,
    },
    /// The point lies on the rotation axis, where no angle exists.
    InN,
}

/// A precomputed rotation `R_α` of the `(x₁, x₂)` plane.
#[derive(Clone, Copy, Debug)]
pub struct Rotation {
    cos: f64,
    sin: f64,
}

impl Rotation {
    pub fn new(alpha: Angle) -> Self {
        let (sin, cos) = alpha.radians().sin_cos();
        Rotation { cos, sin }
    }

    /// Rotates `p` in place. Points on the axis are left untouched.
    #[inline]
    pub fn apply(&self, p: &mut [f64]) {
        let (x, y) = (p[0], p[1]);
        if x.hypot(y) <= AXIS_TOLERANCE {
            return;
        }
        p[0] = self.cos * x - self.sin * y;
        p[1] = self.sin * x + self.cos * y;
    }
}

/// The base-circle coordinate `θ(x)`, or `None` on the axis.
#[inline]
pub fn polar_angle(p: &[f64]) -> Option<Angle> {
    Angle::from_xy(p[0], p[1], AXIS_TOLERANCE)
}

fn check_len(spec: &SurfaceSpec, len: usize) -> Result<(), GeometryError> {
    if len != spec.dim() {
        return Err(GeometryError::DimensionMismatch { expected: spec.dim(), got: len });
    }
    Ok(())
}

/// Whether `p` satisfies the surface's defining equation within
/// [`SURFACE_TOLERANCE`], together with its domain constraints.
pub fn on_surface(spec: &SurfaceSpec, p: &[f64]) -> Result<bool, GeometryError> {
    check_len(spec, p.len())?;
    let planar_sq = p[0] * p[0] + p[1] * p[1];
    Ok(match spec {
        SurfaceSpec::Sphere { .. } => {
            let norm_sq: f64 = p.iter().map(|x| x * x).sum();
            (norm_sq - 1.0).abs() <= SURFACE_TOLERANCE
        }
        SurfaceSpec::Power { n, k, radius } => {
            let base = &p[..n - 1];
            let s = base.iter().map(|x| x * x).sum::<f64>().sqrt();
            s > 0.0 && s <= radius + SURFACE_TOLERANCE && (p[n - 1] - s.powf(*k)).abs() <= SURFACE_TOLERANCE
        }
        SurfaceSpec::Cylinder { radius, omega, .. } => {
            (planar_sq - radius * radius).abs() <= SURFACE_TOLERANCE && omega.contains(&p[2..])
        }
    })
}

fn require_on_surface(spec: &SurfaceSpec, p: &[f64]) -> Result<(), GeometryError> {
    if on_surface(spec, p)? {
        Ok(())
    } else {
        Err(GeometryError::OffSurface(spec.to_string()))
    }
}

/// `R_α(p)`: turns the first two coordinates by `2πα`. Points of `N` are
/// fixed.
pub fn rotate(spec: &SurfaceSpec, alpha: Angle, p: &[f64]) -> Result<Point, GeometryError> {
    require_on_surface(spec, p)?;
    let mut out = p.to_vec();
    Rotation::new(alpha).apply(&mut out);
    Ok(out)
}

/// Radius of the `(x₁, x₂)` circle over the fiber point `y`, after checking
/// that `y` belongs to this surface's fiber space.
fn fiber_radius(spec: &SurfaceSpec, y: &FiberPoint) -> Result<f64, GeometryError> {
    let n = spec.dim();
    match (spec, y) {
        (SurfaceSpec::Sphere { .. }, FiberPoint::BallVec { v }) => {
            if v.len() != n - 2 {
                return Err(GeometryError::DimensionMismatch { expected: n - 2, got: v.len() });
            }
            let norm_sq: f64 = v.iter().map(|x| x * x).sum();
            if norm_sq.is_nan() || norm_sq >= 1.0 {
                return Err(GeometryError::DomainViolation(format!("|v|^2 = {norm_sq} is not < 1")));
            }
            Ok((1.0 - norm_sq).sqrt())
        }
        (SurfaceSpec::Power { radius, .. }, FiberPoint::RhoX { rho, xpp }) => {
            if xpp.len() != n - 3 {
                return Err(GeometryError::DimensionMismatch { expected: n - 3, got: xpp.len() });
            }
            let s_sq = rho * rho + xpp.iter().map(|x| x * x).sum::<f64>();
            if rho.is_nan() || *rho <= 0.0 || s_sq > radius * radius {
                return Err(GeometryError::DomainViolation(format!(
                    "need rho > 0 and rho^2 + |x''|^2 <= R^2, got rho = {rho}, sum = {s_sq}"
                )));
            }
            Ok(*rho)
        }
        (SurfaceSpec::Cylinder { radius, omega, .. }, FiberPoint::OmegaVec { w }) => {
            if w.len() != n - 2 {
                return Err(GeometryError::DimensionMismatch { expected: n - 2, got: w.len() });
            }
            if !omega.contains(w) {
                return Err(GeometryError::DomainViolation(format!("{w:?} is not in omega")));
            }
            Ok(*radius)
        }
        (spec, _) => Err(GeometryError::FiberMismatch(spec.family())),
    }
}

/// `Φ(θ, y)`.
pub fn phi(spec: &SurfaceSpec, theta: Angle, y: &FiberPoint) -> Result<Point, GeometryError> {
    let planar = fiber_radius(spec, y)?;
    let mut out = Vec::with_capacity(spec.dim());
    let (sin, cos) = theta.radians().sin_cos();
    out.push(planar * cos);
    out.push(planar * sin);
    match (spec, y) {
        (SurfaceSpec::Power { k, .. }, FiberPoint::RhoX { rho, xpp }) => {
            out.extend_from_slice(xpp);
            let s_sq = rho * rho + xpp.iter().map(|x| x * x).sum::<f64>();
            out.push(s_sq.powf(k / 2.0));
        }
        (_, FiberPoint::BallVec { v }) => out.extend_from_slice(v),
        (_, FiberPoint::OmegaVec { w }) => out.extend_from_slice(w),
        _ => unreachable!("fiber_radius checked the variant"),
    }
    Ok(out)
}

/// Inverse of `Φ` on `X ∖ N`; returns [`Polar::InN`] on the axis.
pub fn phi_inverse(spec: &SurfaceSpec, p: &[f64]) -> Result<Polar, GeometryError> {
    require_on_surface(spec, p)?;
    let Some(theta) = polar_angle(p) else {
        return Ok(Polar::InN);
    };
    Ok(Polar::Regular { theta, fiber: fiber_of(spec, p) })
}

/// Fiber projection `π(p)` without any surface check. `p` must be off the
/// axis and have the right length.
pub fn fiber_of(spec: &SurfaceSpec, p: &[f64]) -> FiberPoint {
    match spec {
        SurfaceSpec::Sphere { .. } => FiberPoint::BallVec { v: p[2..].to_vec() },
        SurfaceSpec::Power { n, .. } => FiberPoint::RhoX { rho: p[0].hypot(p[1]), xpp: p[2..n - 1].to_vec() },
        SurfaceSpec::Cylinder { .. } => FiberPoint::OmegaVec { w: p[2..].to_vec() },
    }
}
