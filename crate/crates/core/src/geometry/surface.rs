use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::GeometryError;
use crate::lang::SetExpr;
use crate::measures::RngStream;

/// Samples used to confirm that a cylinder base has positive volume.
const OMEGA_VALIDATION_SAMPLES: usize = 100_000;

/// A bounded base domain `Ω ⊂ ℝ^{n−2}` for a cylinder: the points of the
/// bounding box that satisfy `expr`.
#[derive(Clone, Debug, PartialEq)]
pub struct Omega {
    expr: SetExpr,
    bbox: Vec<(f64, f64)>,
    /// Estimated fraction of the bounding box occupied by Ω.
    fill: f64,
}

impl Omega {
    pub fn new(expr: SetExpr, bbox: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if expr.dimension() != bbox.len() {
            return Err(GeometryError::DimensionMismatch { expected: bbox.len(), got: expr.dimension() });
        }
        for (i, &(lo, hi)) in bbox.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::InvalidSurface(format!(
                    "omega bounding box axis {} must satisfy lo < hi, got [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        let mut rng = RngStream::new(0x6f6d656761, 0).rng();
        let mut w = vec![0.0; bbox.len()];
        let mut hits = 0usize;
        for _ in 0..OMEGA_VALIDATION_SAMPLES {
            for (wi, &(lo, hi)) in w.iter_mut().zip(&bbox) {
                *wi = rng.random_range(lo..hi);
            }
            if expr.contains(&w) {
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(GeometryError::InvalidSurface(
                "omega has estimated zero volume inside its bounding box".into(),
            ));
        }
        let fill = hits as f64 / OMEGA_VALIDATION_SAMPLES as f64;
        Ok(Omega { expr, bbox, fill })
    }

    /// Skips the volume check. Only for exercising sampler failure paths.
    #[cfg(test)]
    pub(crate) fn new_unchecked(expr: SetExpr, bbox: Vec<(f64, f64)>) -> Self {
        Omega { expr, bbox, fill: 0.0 }
    }

    pub fn expr(&self) -> &SetExpr {
        &self.expr
    }

    pub fn bbox(&self) -> &[(f64, f64)] {
        &self.bbox
    }

    /// Estimated volume fraction of the bounding box, from construction.
    pub fn fill(&self) -> f64 {
        self.fill
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.bbox.len()
            && w.iter().zip(&self.bbox).all(|(&x, &(lo, hi))| lo <= x && x <= hi)
            && self.expr.contains(w)
    }
}

/// Which surface, with its parameters. Construct through [`SurfaceSpec::sphere`],
/// [`SurfaceSpec::power`] or [`SurfaceSpec::cylinder`] so the invariants hold.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceSpec {
    /// Unit sphere `S^{n−1} ⊂ ℝ^n`.
    Sphere { n: usize },
    /// Graph `x_n = |x′|^k` over `0 < |x′| ≤ radius`.
    Power { n: usize, k: f64, radius: f64 },
    /// `x₁² + x₂² = radius²` with `(x″, x_n) ∈ Ω`.
    Cylinder { n: usize, radius: f64, omega: Omega },
}

impl SurfaceSpec {
    pub fn sphere(n: usize) -> Result<Self, GeometryError> {
        check_dimension(n)?;
        Ok(SurfaceSpec::Sphere { n })
    }

    pub fn power(n: usize, k: f64, radius: f64) -> Result<Self, GeometryError> {
        check_dimension(n)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(GeometryError::InvalidSurface(format!("power exponent k must be > 0, got {k}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidSurface(format!("radius must be > 0, got {radius}")));
        }
        Ok(SurfaceSpec::Power { n, k, radius })
    }

    pub fn cylinder(n: usize, radius: f64, omega: Omega) -> Result<Self, GeometryError> {
        check_dimension(n)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidSurface(format!("radius must be > 0, got {radius}")));
        }
        if omega.bbox().len() != n - 2 {
            return Err(GeometryError::DimensionMismatch { expected: n - 2, got: omega.bbox().len() });
        }
        Ok(SurfaceSpec::Cylinder { n, radius, omega })
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        match *self {
            SurfaceSpec::Sphere { n } | SurfaceSpec::Power { n, .. } | SurfaceSpec::Cylinder { n, .. } => n,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            SurfaceSpec::Sphere { .. } => "sphere",
            SurfaceSpec::Power { .. } => "power",
            SurfaceSpec::Cylinder { .. } => "cylinder",
        }
    }

    /// Upper bound on `|x_i|` over the surface, for every coordinate.
    pub fn coordinate_bound(&self) -> f64 {
        match self {
            SurfaceSpec::Sphere { .. } => 1.0,
            SurfaceSpec::Power { k, radius, .. } => radius.max(radius.powf(*k)),
            SurfaceSpec::Cylinder { radius, omega, .. } => {
                omega.bbox().iter().fold(*radius, |acc, &(lo, hi)| acc.max(lo.abs()).max(hi.abs()))
            }
        }
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Sphere { n } => write!(f, "sphere(n={n})"),
            SurfaceSpec::Power { n, k, radius } => write!(f, "power(n={n}, k={k}, R={radius})"),
            SurfaceSpec::Cylinder { n, radius, omega } => {
                write!(f, "cylinder(n={n}, R={radius}, omega={}, box=[", omega.expr())?;
                for (i, (lo, hi)) in omega.bbox().iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "[{lo}, {hi}]")?;
                }
                f.write_str("])")
            }
        }
    }
}

fn check_dimension(n: usize) -> Result<(), GeometryError> {
    if n < 3 {
        return Err(GeometryError::InvalidSurface(format!("dimension n must be >= 3, got {n}")));
    }
    Ok(())
}

/// A point of the fiber space `Y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiberPoint {
    /// Sphere: `v` in the open unit ball of `ℝ^{n−2}`.
    BallVec { v: Vec<f64> },
    /// Power surface: `(ρ, x″)` with `ρ > 0` and `ρ² + |x″|² ≤ R²`.
    RhoX { rho: f64, xpp: Vec<f64> },
    /// Cylinder: `w = (x″, x_n) ∈ Ω`.
    OmegaVec { w: Vec<f64> },
}

impl FiberPoint {
    /// Flattened coordinates, in the order they appear in the variant.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            FiberPoint::BallVec { v } => v.clone(),
            FiberPoint::RhoX { rho, xpp } => std::iter::once(*rho).chain(xpp.iter().copied()).collect(),
            FiberPoint::OmegaVec { w } => w.clone(),
        }
    }
}
