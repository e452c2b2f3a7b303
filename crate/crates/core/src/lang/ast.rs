use std::fmt::{self, Write as _};

use crate::geometry::{polar_angle, Angle};

/// Byte range of a node in its source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Leaf predicates. Coordinate indices are 1-based, as written in source.
#[derive(Clone, Debug, PartialEq)]
pub enum Leaf {
    /// `x · normal ≥ offset` (closed).
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `x · center ≥ cos_min` with `|center| = 1` (closed).
    Cap {
        center: Vec<f64>,
        cos_min: f64,
    },
    /// `θ(x) ∈ [lo, hi)`, or `[lo, 1) ∪ [0, hi)` when `lo > hi`. Contains the
    /// axis iff `lo = 0`.
    Sector {
        lo: f64,
        hi: f64,
    },
    /// `lo ≤ x_coord ≤ hi` (closed).
    Band {
        coord: usize,
        lo: f64,
        hi: f64,
    },
    /// The `position`-th base-`base` digit of `θ(x)` equals `digit`. The axis
    /// is read as `θ = 0`.
    Digit {
        base: u32,
        position: u32,
        digit: u32,
    },
    /// The rotation axis `x₁ = x₂ = 0`.
    Axis,
    True,
    Empty,
}

#[derive(Clone, Debug)]
pub enum Node {
    Leaf(Leaf),
    Union(Box<Expr>, Box<Expr>),
    Intersect(Box<Expr>, Box<Expr>),
    Minus(Box<Expr>, Box<Expr>),
    Complement(Box<Expr>),
}

/// An AST node with its source span. Equality ignores spans.
#[derive(Clone, Debug)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        use Node::*;
        match (self, other) {
            (Leaf(a), Leaf(b)) => a == b,
            (Union(a, b), Union(c, d)) | (Intersect(a, b), Intersect(c, d)) | (Minus(a, b), Minus(c, d)) => {
                a == c && b == d
            }
            (Complement(a), Complement(b)) => a == b,
            _ => false,
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    pub fn leaf(leaf: Leaf) -> Self {
        Expr { node: Node::Leaf(leaf), span: Span::default() }
    }

    pub fn union(a: Expr, b: Expr) -> Self {
        Expr { node: Node::Union(Box::new(a), Box::new(b)), span: Span::default() }
    }

    pub fn intersect(a: Expr, b: Expr) -> Self {
        Expr { node: Node::Intersect(Box::new(a), Box::new(b)), span: Span::default() }
    }

    pub fn minus(a: Expr, b: Expr) -> Self {
        Expr { node: Node::Minus(Box::new(a), Box::new(b)), span: Span::default() }
    }

    pub fn complement(a: Expr) -> Self {
        Expr { node: Node::Complement(Box::new(a)), span: Span::default() }
    }

    fn precedence(&self) -> u8 {
        match self.node {
            Node::Union(..) => 1,
            Node::Minus(..) => 2,
            Node::Intersect(..) => 3,
            Node::Complement(..) => 4,
            Node::Leaf(_) => 5,
        }
    }

    pub(crate) fn eval(&self, p: &[f64], theta: &mut ThetaCache) -> bool {
        match &self.node {
            Node::Leaf(leaf) => leaf.eval(p, theta),
            Node::Union(a, b) => a.eval(p, theta) || b.eval(p, theta),
            Node::Intersect(a, b) => a.eval(p, theta) && b.eval(p, theta),
            Node::Minus(a, b) => a.eval(p, theta) && !b.eval(p, theta),
            Node::Complement(a) => !a.eval(p, theta),
        }
    }

    pub(crate) fn leaves(&self, out: &mut Vec<Leaf>) {
        match &self.node {
            Node::Leaf(l) => out.push(l.clone()),
            Node::Union(a, b) | Node::Intersect(a, b) | Node::Minus(a, b) => {
                a.leaves(out);
                b.leaves(out);
            }
            Node::Complement(a) => a.leaves(out),
        }
    }
}

/// Lazily computed `θ(x)`; `Some(None)` means the point is on the axis.
#[derive(Default)]
pub(crate) struct ThetaCache(Option<Option<Angle>>);

impl ThetaCache {
    fn get(&mut self, p: &[f64]) -> Option<Angle> {
        *self.0.get_or_insert_with(|| polar_angle(p))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Leaf {
    fn eval(&self, p: &[f64], theta: &mut ThetaCache) -> bool {
        match self {
            Leaf::HalfSpace { normal, offset } => dot(p, normal) >= *offset,
            Leaf::Cap { center, cos_min } => dot(p, center) >= *cos_min,
            Leaf::Sector { lo, hi } => match theta.get(p) {
                None => *lo == 0.0,
                Some(t) => sector_contains(*lo, *hi, t.turns()),
            },
            Leaf::Band { coord, lo, hi } => {
                let x = p[coord - 1];
                *lo <= x && x <= *hi
            }
            Leaf::Digit { base, position, digit } => {
                theta.get(p).unwrap_or(Angle::ZERO).digit(*base, *position) == *digit
            }
            Leaf::Axis => theta.get(p).is_none(),
            Leaf::True => true,
            Leaf::Empty => false,
        }
    }
}

#[inline]
pub(crate) fn sector_contains(lo: f64, hi: f64, t: f64) -> bool {
    if lo < hi {
        lo <= t && t < hi
    } else {
        t >= lo || t < hi
    }
}

fn write_vec(f: &mut fmt::Formatter<'_>, v: &[f64]) -> fmt::Result {
    f.write_char('(')?;
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{x}")?;
    }
    f.write_char(')')
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::HalfSpace { normal, offset } => {
                f.write_str("halfspace[")?;
                write_vec(f, normal)?;
                write!(f, ",{offset}]")
            }
            Leaf::Cap { center, cos_min } => {
                f.write_str("cap[")?;
                write_vec(f, center)?;
                write!(f, ",{cos_min}]")
            }
            Leaf::Sector { lo, hi } => write!(f, "sector[{lo},{hi})"),
            Leaf::Band { coord, lo, hi } => write!(f, "band[{coord},{lo},{hi}]"),
            Leaf::Digit { base, position, digit } => write!(f, "digit[{base},{position},{digit}]"),
            Leaf::Axis => f.write_str("axis"),
            Leaf::True => f.write_str("TRUE"),
            Leaf::Empty => f.write_str("EMPTY"),
        }
    }
}

/// Canonical form: minimal parentheses, left-associative binary operators,
/// single spaces around them.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = self.precedence();
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &self.node {
            Node::Leaf(l) => write!(f, "{l}"),
            Node::Complement(a) => {
                f.write_char('!')?;
                child(f, a, a.precedence() < prec)
            }
            Node::Union(a, b) | Node::Intersect(a, b) | Node::Minus(a, b) => {
                let op = match self.node {
                    Node::Union(..) => " | ",
                    Node::Intersect(..) => " & ",
                    _ => " \\ ",
                };
                child(f, a, a.precedence() < prec)?;
                f.write_str(op)?;
                child(f, b, b.precedence() <= prec)
            }
        }
    }
}
