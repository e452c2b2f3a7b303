use thiserror::Error;

use super::{Expr, Leaf, Node, SetExpr};
use crate::measures::{estimate_measure, Execution, MeasureEstimate, RngStream, SamplingError, Surface};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverError {
    #[error("a cover needs at least one part")]
    Empty,
    #[error("cover part {index} is over R^{got}, the surface lives in R^{expected}")]
    Dimension { index: usize, expected: usize, got: usize },
}

/// An indexed family `F_1, …, F_t` meant to cover a surface. Parts may
/// overlap; indices are positional and 1-based.
#[derive(Clone, Debug)]
pub struct CoverSpec {
    parts: Vec<SetExpr>,
    surface: Surface,
}

impl CoverSpec {
    pub fn new(parts: Vec<SetExpr>, surface: Surface) -> Result<Self, CoverError> {
        if parts.is_empty() {
            return Err(CoverError::Empty);
        }
        for (i, p) in parts.iter().enumerate() {
            if p.dimension() != surface.dim() {
                return Err(CoverError::Dimension { index: i + 1, expected: surface.dim(), got: p.dimension() });
            }
        }
        Ok(CoverSpec { parts, surface })
    }

    pub fn parts(&self) -> &[SetExpr] {
        &self.parts
    }

    /// Number of parts `t`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    /// Replaces `F_1` by `F_1 ∪ N`. Idempotent.
    pub fn absorb_axis(&mut self) {
        let first = &mut self.parts[0];
        if let Node::Union(_, tail) = &first.root().node {
            if tail.node == Node::Leaf(Leaf::Axis) {
                return;
            }
        }
        let dim = first.dimension();
        let root = std::mem::replace(first, SetExpr::whole(dim)).into_root();
        *first = SetExpr::from_expr(Expr::union(root, Expr::leaf(Leaf::Axis)), dim).expect("same dimension");
    }

    /// The complement of the union of all parts.
    pub fn uncovered_set(&self) -> SetExpr {
        let dim = self.surface.dim();
        let union = self.parts.iter().map(|p| p.root().clone()).reduce(Expr::union).expect("nonempty cover");
        SetExpr::from_expr(Expr::complement(union), dim).expect("same dimension")
    }
}

#[derive(Clone, Debug)]
pub struct CoverValidation {
    /// Estimate of `μ(X ∖ ⋃ F_m)`.
    pub uncovered: MeasureEstimate,
    /// Whether the uncovered mass is consistent with zero at the given `z`.
    pub covers: bool,
    /// The cover with `F_1` enlarged to contain the axis.
    pub cover: CoverSpec,
}

/// Estimates the mass the cover misses and returns the cover with the axis
/// absorbed into its first part.
pub fn validate_cover(
    cover: &CoverSpec,
    n_samples: u64,
    z: f64,
    stream: RngStream,
    exec: Execution,
) -> Result<CoverValidation, SamplingError> {
    let uncovered = estimate_measure(cover.surface(), &cover.uncovered_set(), n_samples, stream, exec)?;
    let mut enlarged = cover.clone();
    enlarged.absorb_axis();
    Ok(CoverValidation { covers: uncovered.mean <= z * uncovered.std_err, uncovered, cover: enlarged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceSpec;

    fn cover(parts: &[&str]) -> CoverSpec {
        let parts = parts.iter().map(|p| SetExpr::parse(p, 3).unwrap()).collect();
        CoverSpec::new(parts, Surface::new(SurfaceSpec::sphere(3).unwrap())).unwrap()
    }

    #[test]
    fn halves_cover() {
        let v = validate_cover(
            &cover(&["sector[0,0.5)", "sector[0.5,1)"]),
            200_000,
            3.0,
            RngStream::new(1, 0),
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(v.uncovered.mean, 0.0);
        assert!(v.covers);
    }

    #[test]
    fn partial_sector_leaves_sixty_percent() {
        let v = validate_cover(&cover(&["sector[0,0.4)"]), 200_000, 3.0, RngStream::new(2, 0), Execution::Parallel)
            .unwrap();
        assert!(v.uncovered.consistent_with(0.6, 3.0), "{:?}", v.uncovered);
        assert!(!v.covers);
    }

    #[test]
    fn whole_space_is_exact() {
        let v = validate_cover(&cover(&["TRUE"]), 10_000, 3.0, RngStream::new(3, 0), Execution::Parallel).unwrap();
        assert_eq!(v.uncovered, MeasureEstimate::exact(0.0, 10_000));
    }

    #[test]
    fn axis_is_absorbed_into_first_part() {
        let v = validate_cover(
            &cover(&["sector[0.2,0.5)", "!sector[0.2,0.5)"]),
            1000,
            3.0,
            RngStream::new(4, 0),
            Execution::Sequential,
        )
        .unwrap();
        let first = &v.cover.parts()[0];
        assert_eq!(first.to_string(), "sector[0.2,0.5) | axis");
        assert!(first.contains(&[0.0, 0.0, 1.0]));
        let mut again = v.cover.clone();
        again.absorb_axis();
        assert_eq!(again.parts()[0], *first);
    }

    #[test]
    fn rejects_bad_covers() {
        let s = Surface::new(SurfaceSpec::sphere(3).unwrap());
        assert!(matches!(CoverSpec::new(vec![], s.clone()), Err(CoverError::Empty)));
        let wrong = vec![SetExpr::parse("TRUE", 4).unwrap()];
        assert!(matches!(CoverSpec::new(wrong, s), Err(CoverError::Dimension { index: 1, .. })));
    }
}
