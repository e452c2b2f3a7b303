//! A small set-algebra language for measurable subsets of `ℝ^n`, used to
//! describe covers, cylinder bases and custom partitions.
//!
//! Operators, loosest first: `|` (union), `\` (difference), `&`
//! (intersection), `!` (complement). All binary operators are
//! left-associative. See [`parser`] for the grammar.

mod ast;
mod cover;
pub(crate) mod parser;

pub use ast::{Expr, Leaf, Node, Span};
pub use cover::{validate_cover, CoverError, CoverSpec, CoverValidation};
pub(crate) use parser::line_col;

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("arity error at line {line}, column {column}: `{leaf}` takes {expected} arguments, got {got}")]
    Arity { line: usize, column: usize, leaf: String, expected: String, got: usize },
    #[error("dimension error at line {line}, column {column}: expected dimension {expected}, got {got}")]
    Dimension { line: usize, column: usize, expected: usize, got: usize },
    #[error("invalid argument at line {line}, column {column}: {message}")]
    InvalidArgument { line: usize, column: usize, message: String },
}

impl ParseError {
    /// 1-based `(line, column)` of the error within the expression source.
    pub fn location(&self) -> (usize, usize) {
        match *self {
            ParseError::Syntax { line, column, .. }
            | ParseError::Arity { line, column, .. }
            | ParseError::Dimension { line, column, .. }
            | ParseError::InvalidArgument { line, column, .. } => (line, column),
        }
    }

    /// The error text without its location.
    pub fn detail(&self) -> String {
        match self {
            ParseError::Syntax { message, .. } | ParseError::InvalidArgument { message, .. } => message.clone(),
            ParseError::Arity { leaf, expected, got, .. } => format!("`{leaf}` takes {expected} arguments, got {got}"),
            ParseError::Dimension { expected, got, .. } => format!("expected dimension {expected}, got {got}"),
        }
    }

    fn syntax(src: &str, offset: usize, message: String) -> Self {
        let (line, column) = parser::line_col(src, offset);
        ParseError::Syntax { line, column, message }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("dimension error: expression is over R^{expected}, point has {got} coordinates")]
pub struct EvalError {
    pub expected: usize,
    pub got: usize,
}

/// A parsed expression together with the dimension of the space it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct SetExpr {
    dim: usize,
    root: Expr,
}

impl SetExpr {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let root = parser::Parser::parse(text, dim)?;
        Ok(SetExpr { dim, root })
    }

    /// Wraps an AST built in code. Vector literals and coordinate indices
    /// must match `dim`.
    pub fn from_expr(root: Expr, dim: usize) -> Result<Self, EvalError> {
        let mut leaves = Vec::new();
        root.leaves(&mut leaves);
        for leaf in &leaves {
            let got = match leaf {
                Leaf::HalfSpace { normal: v, .. } | Leaf::Cap { center: v, .. } => v.len(),
                Leaf::Band { coord, .. } if *coord == 0 || *coord > dim => *coord,
                _ => dim,
            };
            if got != dim {
                return Err(EvalError { expected: dim, got });
            }
        }
        Ok(SetExpr { dim, root })
    }

    pub fn whole(dim: usize) -> Self {
        SetExpr { dim, root: Expr::leaf(Leaf::True) }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn into_root(self) -> Expr {
        self.root
    }

    /// Indicator with a dimension check.
    pub fn indicator(&self, p: &[f64]) -> Result<bool, EvalError> {
        if p.len() != self.dim {
            return Err(EvalError { expected: self.dim, got: p.len() });
        }
        Ok(self.contains(p))
    }

    /// Indicator without the dimension check, for hot loops.
    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        debug_assert_eq!(p.len(), self.dim);
        self.root.eval(p, &mut ast::ThetaCache::default())
    }

    /// All leaves, left to right.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.root.leaves(&mut out);
        out
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
