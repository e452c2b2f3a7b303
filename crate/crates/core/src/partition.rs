//! Candidate partitions `{E_i^C}` of the base circle and their lifts
//! `E_i^X = Φ(E_i^C × Y)` to a surface, with the axis `N` adjoined to the
//! first class.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{on_surface, polar_angle, Angle, GeometryError, SurfaceSpec};
use crate::lang::SetExpr;
use crate::measures::{Execution, MeasureEstimate, RngStream, SamplingError, Surface};

/// Uniform draws of `θ` used to confirm that every class has positive mass.
pub const VALIDATION_SAMPLES: u64 = 100_000;

/// Digits beyond this position are never read.
pub const MAX_DIGIT_POSITION: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("a partition needs r >= 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("class {class} has estimated base measure 0 ({samples} samples)")]
    EmptyClass { class: usize, samples: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    /// `E_i^C = [(i−1)/r, i/r)`.
    Intervals,
    /// Multiscale digit rule: read the digits of `θ` at the listed positions,
    /// take the first nonzero one `d`, and return class `(d mod r) + 1`;
    /// class 1 when all listed digits vanish.
    DigitBlocks { base: u32, positions: Vec<u32> },
    /// Class `i` is the first expression containing `(cos 2πθ, sin 2πθ)`;
    /// class `r` when none does.
    Custom { classes: Vec<SetExpr> },
}

/// A partition of the circle into `r` classes, numbered `1..=r`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePartition {
    r: usize,
    scheme: Scheme,
}

impl BasePartition {
    pub fn intervals(r: usize) -> Result<Self, PartitionError> {
        Self::validated(r, Scheme::Intervals)
    }

    pub fn digit_blocks(r: usize, base: u32, positions: Vec<u32>) -> Result<Self, PartitionError> {
        if base < 2 {
            return Err(PartitionError::Invalid(format!("digit base must be >= 2, got {base}")));
        }
        if positions.is_empty() {
            return Err(PartitionError::Invalid("digit positions must be nonempty".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) || positions[0] == 0 {
            return Err(PartitionError::Invalid(format!(
                "digit positions must be strictly increasing and >= 1, got {positions:?}"
            )));
        }
        if *positions.last().unwrap() > MAX_DIGIT_POSITION {
            return Err(PartitionError::Invalid(format!(
                "digit positions are truncated at {MAX_DIGIT_POSITION}, got {positions:?}"
            )));
        }
        Self::validated(r, Scheme::DigitBlocks { base, positions })
    }

    /// Expressions live in `ℝ²` and are evaluated on the unit circle.
    pub fn custom(r: usize, classes: Vec<SetExpr>) -> Result<Self, PartitionError> {
        if classes.len() > r {
            return Err(PartitionError::Invalid(format!("{} class expressions for r = {r}", classes.len())));
        }
        if let Some(e) = classes.iter().find(|e| e.dimension() != 2) {
            return Err(PartitionError::Invalid(format!(
                "custom class expressions must be over R^2, `{e}` is over R^{}",
                e.dimension()
            )));
        }
        Self::validated(r, Scheme::Custom { classes })
    }

    fn validated(r: usize, scheme: Scheme) -> Result<Self, PartitionError> {
        if r < 2 {
            return Err(PartitionError::TooFewClasses(r));
        }
        let base = BasePartition { r, scheme };
        let masses = base.base_masses(VALIDATION_SAMPLES, RngStream::new(0x7061_7274, 0), Execution::Sequential);
        if let Some(i) = masses.iter().position(|m| m.mean == 0.0) {
            return Err(PartitionError::EmptyClass { class: i + 1, samples: VALIDATION_SAMPLES });
        }
        Ok(base)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// The class of `θ`, in `1..=r`.
    pub fn classify(&self, theta: Angle) -> usize {
        let t = theta.turns();
        match &self.scheme {
            Scheme::Intervals => ((self.r as f64 * t) as usize).min(self.r - 1) + 1,
            Scheme::DigitBlocks { base, positions } => {
                let b = f64::from(*base);
                let mut x = t;
                let mut pos = 0;
                for &p in positions {
                    let mut d = 0.0;
                    while pos < p {
                        x *= b;
                        d = x.floor();
                        x -= d;
                        pos += 1;
                    }
                    let digit = (d as usize).min(*base as usize - 1);
                    if digit != 0 {
                        return digit % self.r + 1;
                    }
                }
                1
            }
            Scheme::Custom { classes } => {
                let (sin, cos) = theta.radians().sin_cos();
                let p = [cos, sin];
                classes.iter().position(|e| e.contains(&p)).map_or(self.r, |i| i + 1)
            }
        }
    }

    /// `μ₁(E_i^C)` for every class, by uniform sampling of `θ`.
    pub fn base_masses(&self, n_samples: u64, stream: RngStream, exec: Execution) -> Vec<MeasureEstimate> {
        let counts = exec.map_chunks(n_samples, |c, len| {
            let mut rng = stream.child(c).rng();
            let mut counts = vec![0u64; self.r];
            for _ in 0..len {
                counts[self.classify(Surface::sample_angle(&mut rng)) - 1] += 1;
            }
            counts
        });
        sum_counts(counts, self.r).into_iter().map(|h| MeasureEstimate::from_counts(h, n_samples)).collect()
    }

    /// Minimum class mass, over all classes and all dyadic intervals of the
    /// given depth, estimated with `samples_per_interval` uniform draws each.
    pub fn scale_presence(
        &self,
        depth: u32,
        samples_per_interval: u64,
        stream: RngStream,
        exec: Execution,
    ) -> ScalePresence {
        let intervals = 1usize << depth;
        let width = 1.0 / intervals as f64;
        let per_interval: Vec<Vec<u64>> = exec.map(intervals, |j| {
            let mut rng = stream.child(j as u64).rng();
            let mut counts = vec![0u64; self.r];
            for _ in 0..samples_per_interval {
                let t = Angle::new((j as f64 + rand::Rng::random::<f64>(&mut rng)) * width);
                counts[self.classify(t) - 1] += 1;
            }
            counts
        });
        let mut worst = (0usize, 0usize, u64::MAX);
        for (j, counts) in per_interval.iter().enumerate() {
            for (i, &c) in counts.iter().enumerate() {
                if c < worst.2 {
                    worst = (j, i + 1, c);
                }
            }
        }
        ScalePresence {
            depth,
            samples_per_interval,
            worst_interval: worst.0,
            worst_class: worst.1,
            worst_fraction: worst.2 as f64 / samples_per_interval as f64,
            all_present: worst.2 > 0,
        }
    }
}

impl fmt::Display for BasePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.scheme {
            Scheme::Intervals => write!(f, "intervals(r={})", self.r),
            Scheme::DigitBlocks { base, positions } => {
                write!(f, "digit-blocks(r={}, base={base}, positions={positions:?})", self.r)
            }
            Scheme::Custom { classes } => {
                write!(f, "custom(r={}", self.r)?;
                for c in classes {
                    write!(f, ", {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Outcome of [`BasePartition::scale_presence`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalePresence {
    pub depth: u32,
    pub samples_per_interval: u64,
    pub worst_interval: usize,
    pub worst_class: usize,
    pub worst_fraction: f64,
    pub all_present: bool,
}

pub(crate) fn sum_counts(parts: Vec<Vec<u64>>, width: usize) -> Vec<u64> {
    parts.into_iter().fold(vec![0u64; width], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
        acc
    })
}

/// A base partition lifted to a surface.
#[derive(Clone, Debug)]
pub struct PartitionHandle {
    surface: Surface,
    base: BasePartition,
}

impl PartitionHandle {
    pub fn new(surface: Surface, base: BasePartition) -> Self {
        PartitionHandle { surface, base }
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn spec(&self) -> &SurfaceSpec {
        self.surface.spec()
    }

    pub fn base(&self) -> &BasePartition {
        &self.base
    }

    pub fn r(&self) -> usize {
        self.base.r
    }

    /// The class of an on-surface point; axis points belong to class 1.
    pub fn classify_surface(&self, p: &[f64]) -> Result<usize, GeometryError> {
        if !on_surface(self.spec(), p)? {
            return Err(GeometryError::OffSurface(self.spec().to_string()));
        }
        Ok(self.classify_point(p))
    }

    /// [`classify_surface`](Self::classify_surface) without the surface check.
    #[inline]
    pub fn classify_point(&self, p: &[f64]) -> usize {
        polar_angle(p).map_or(1, |t| self.base.classify(t))
    }

    /// `μ(E_i^X)` for every class, by sampling the surface measure.
    pub fn partition_masses(
        &self,
        n_samples: u64,
        stream: RngStream,
        exec: Execution,
    ) -> Result<Vec<MeasureEstimate>, SamplingError> {
        let r = self.r();
        let parts = exec.map_chunks(n_samples, |c, len| -> Result<Vec<u64>, SamplingError> {
            let mut rng = stream.child(c).rng();
            let mut counts = vec![0u64; r];
            for _ in 0..len {
                let p = self.surface.sample_point(&mut rng)?;
                counts[self.classify_point(&p) - 1] += 1;
            }
            Ok(counts)
        });
        let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(sum_counts(parts, r).into_iter().map(|h| MeasureEstimate::from_counts(h, n_samples)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::SetExpr;

    fn sphere3(base: BasePartition) -> PartitionHandle {
        PartitionHandle::new(Surface::new(SurfaceSpec::sphere(3).unwrap()), base)
    }

    #[test]
    fn interval_classes() {
        let p2 = BasePartition::intervals(2).unwrap();
        assert_eq!(p2.classify(Angle::new(0.3)), 1);
        assert_eq!(p2.classify(Angle::new(0.5)), 2);
        let p4 = BasePartition::intervals(4).unwrap();
        assert_eq!(p4.classify(Angle::new(0.99)), 4);
        assert_eq!(p4.classify(Angle::ZERO), 1);
    }

    #[test]
    fn digit_block_classes() {
        let p = BasePartition::digit_blocks(2, 3, vec![1, 2, 4, 8, 16, 32, 64]).unwrap();
        // 1/3 = 0.1000…₃: first listed nonzero digit is d₁ = 1
        assert_eq!(p.classify(Angle::new(1.0 / 3.0)), 2);
        // 2/3 = 0.2000…₃: d₁ = 2, 2 mod 2 = 0
        assert_eq!(p.classify(Angle::new(2.0 / 3.0)), 1);
        assert_eq!(p.classify(Angle::ZERO), 1);
        // 1/9 + 1/27 = 0.0110…₃: d₁ = 0, d₂ = 1
        assert_eq!(p.classify(Angle::new(1.0 / 9.0 + 1.0 / 27.0 + 1e-9)), 2);
    }

    #[test]
    fn digit_blocks_reject_bad_parameters() {
        assert!(BasePartition::digit_blocks(2, 3, vec![2, 1]).is_err());
        assert!(BasePartition::digit_blocks(2, 3, vec![0, 1]).is_err());
        assert!(BasePartition::digit_blocks(2, 3, vec![65]).is_err());
        // base-2 digits are 0/1, so class 3 of r = 3 is empty
        assert!(matches!(
            BasePartition::digit_blocks(3, 2, vec![1, 2, 3]),
            Err(PartitionError::EmptyClass { class: 3, .. })
        ));
        assert!(matches!(BasePartition::intervals(1), Err(PartitionError::TooFewClasses(1))));
    }

    #[test]
    fn custom_classes() {
        let classes = vec![SetExpr::parse("sector[0,0.3)", 2).unwrap(), SetExpr::parse("x2 >= 0", 2).unwrap()];
        let p = BasePartition::custom(3, classes).unwrap();
        assert_eq!(p.classify(Angle::new(0.1)), 1);
        assert_eq!(p.classify(Angle::new(0.4)), 2);
        assert_eq!(p.classify(Angle::new(0.7)), 3);
        let bad = vec![SetExpr::parse("EMPTY", 2).unwrap()];
        assert!(matches!(BasePartition::custom(2, bad), Err(PartitionError::EmptyClass { class: 1, .. })));
    }

    #[test]
    fn classify_surface_examples() {
        let h = sphere3(BasePartition::intervals(2).unwrap());
        assert_eq!(h.classify_surface(&[0.0, 0.0, 1.0]).unwrap(), 1);
        assert_eq!(h.classify_surface(&[0.0, -1.0, 0.0]).unwrap(), 2);
        assert!(h.classify_surface(&[0.0, -2.0, 0.0]).is_err());

        let omega = crate::geometry::Omega::new(SetExpr::whole(1), vec![(0.0, 1.0)]).unwrap();
        let cyl = Surface::new(SurfaceSpec::cylinder(3, 1.0, omega).unwrap());
        let h = PartitionHandle::new(cyl, BasePartition::intervals(3).unwrap());
        assert_eq!(h.classify_surface(&[1.0, 0.0, 0.5]).unwrap(), 1);
    }

    #[test]
    fn interval_masses_on_the_sphere() {
        for r in [2usize, 5] {
            let h = sphere3(BasePartition::intervals(r).unwrap());
            let n = 200_000;
            let masses = h.partition_masses(n, RngStream::new(11, r as u64), Execution::Parallel).unwrap();
            assert_eq!(masses.len(), r);
            for m in &masses {
                assert!(m.consistent_with(1.0 / r as f64, 3.0), "{m:?}");
            }
            let total: f64 = masses.iter().map(|m| m.mean).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn digit_blocks_present_at_every_dyadic_scale() {
        for (r, base) in [(2, 3), (3, 4)] {
            let p = BasePartition::digit_blocks(r, base, (12..=30).collect()).unwrap();
            let s = p.scale_presence(10, 10_000, RngStream::new(12, r as u64), Execution::Parallel);
            assert!(s.all_present, "{s:?}");
            assert!(s.worst_fraction > 0.2, "{s:?}");
        }
    }
}
