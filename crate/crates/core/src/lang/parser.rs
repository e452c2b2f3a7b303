//! Recursive-descent parser for set expressions.
//!
//! ```text
//! union     := minus ( "|" minus )*
//! minus     := intersect ( "\" intersect )*
//! intersect := unary ( "&" unary )*
//! unary     := "!" unary | primary
//! primary   := "(" union ")" | leaf
//! leaf      := "halfspace" "[" vec "," num "]"
//!            | "cap" "[" vec "," num "]"
//!            | "sector" "[" num "," num ")"
//!            | "band" "[" int "," num "," num "]"
//!            | "digit" "[" int "," int "," int "]"
//!            | "x" int ( ">" | ">=" | "<" | "<=" ) num
//!            | "axis" | "TRUE" | "EMPTY"
//! vec       := "(" num ( "," num )* ")"
//! ```

use super::ast::{Expr, Leaf, Node, Span};
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Pipe,
    Amp,
    Backslash,
    Bang,
    Cmp(Cmp),
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Cmp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(x) => format!("number `{x}`"),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Cmp(_) => "comparison operator".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, span) = lx.next_token()?;
            let done = tok == Tok::Eof;
            out.push((tok, span));
            if done {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, Span), ParseError> {
        while matches!(self.peek_byte(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::Eof, Span { start, end: start }));
        };
        let single = |tok| Ok((tok, Span { start, end: start + 1 }));
        self.pos += 1;
        match b {
            b'[' => single(Tok::LBracket),
            b']' => single(Tok::RBracket),
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b',' => single(Tok::Comma),
            b'|' => single(Tok::Pipe),
            b'&' => single(Tok::Amp),
            b'\\' => single(Tok::Backslash),
            b'!' => single(Tok::Bang),
            b'>' | b'<' => {
                let eq = self.peek_byte() == Some(b'=');
                if eq {
                    self.pos += 1;
                }
                let cmp = match (b, eq) {
                    (b'>', false) => Cmp::Gt,
                    (b'>', true) => Cmp::Ge,
                    (_, false) => Cmp::Lt,
                    (_, true) => Cmp::Le,
                };
                Ok((Tok::Cmp(cmp), Span { start, end: self.pos }))
            }
            b'-' | b'+' | b'.' | b'0'..=b'9' => self.number(start),
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while matches!(self.peek_byte(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                Ok((Tok::Ident(self.src[start..self.pos].to_string()), Span { start, end: self.pos }))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ParseError::syntax(self.src, start, format!("unexpected character `{ch}`")))
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<(Tok, Span), ParseError> {
        let bytes = self.src.as_bytes();
        let mut prev = bytes[start];
        while let Some(&c) = bytes.get(self.pos) {
            let exp_sign = (c == b'-' || c == b'+') && (prev == b'e' || prev == b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                prev = c;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok((Tok::Number(x), Span { start, end: self.pos })),
            _ => Err(ParseError::syntax(self.src, start, format!("malformed number `{text}`"))),
        }
    }
}

enum Arg {
    Num(f64, Span),
    Vec(Vec<f64>, Span),
}

impl Arg {
    fn span(&self) -> Span {
        match self {
            Arg::Num(_, s) | Arg::Vec(_, s) => *s,
        }
    }
}

pub(super) struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn parse(src: &'a str, dim: usize) -> Result<Expr, ParseError> {
        let toks = Lexer::tokens(src)?;
        let mut p = Parser { src, toks, pos: 0, dim };
        let expr = p.union()?;
        match p.peek() {
            Tok::Eof => Ok(expr),
            other => {
                let msg = format!("expected an operator or end of input, found {}", other.describe());
                Err(p.error_here(msg))
            }
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> ParseError {
        ParseError::syntax(self.src, self.span().start, message)
    }

    fn expect(&mut self, want: Tok) -> Result<Span, ParseError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            let msg = format!("expected {}, found {}", want.describe(), self.peek().describe());
            Err(self.error_here(msg))
        }
    }

    fn binary(
        &mut self,
        op: Tok,
        next: fn(&mut Self) -> Result<Expr, ParseError>,
        build: fn(Box<Expr>, Box<Expr>) -> Node,
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        while *self.peek() == op {
            self.bump();
            let rhs = next(self)?;
            let span = Span { start: lhs.span.start, end: rhs.span.end };
            lhs = Expr { node: build(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn union(&mut self) -> Result<Expr, ParseError> {
        self.binary(Tok::Pipe, Self::minus, Node::Union)
    }

    fn minus(&mut self) -> Result<Expr, ParseError> {
        self.binary(Tok::Backslash, Self::intersect, Node::Minus)
    }

    fn intersect(&mut self) -> Result<Expr, ParseError> {
        self.binary(Tok::Amp, Self::unary, Node::Intersect)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Bang {
            let start = self.bump().1.start;
            let inner = self.unary()?;
            let span = Span { start, end: inner.span.end };
            return Ok(Expr { node: Node::Complement(Box::new(inner)), span });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                let start = self.bump().1.start;
                let mut inner = self.union()?;
                let end = self.expect(Tok::RParen)?.end;
                inner.span = Span { start, end };
                Ok(inner)
            }
            Tok::Ident(name) => {
                let span = self.bump().1;
                self.leaf(&name, span)
            }
            other => {
                let msg = format!("expected a set expression, found {}", other.describe());
                Err(self.error_here(msg))
            }
        }
    }

    fn leaf(&mut self, name: &str, name_span: Span) -> Result<Expr, ParseError> {
        let simple = match name.to_ascii_lowercase().as_str() {
            "true" | "all" => Some(Leaf::True),
            "empty" => Some(Leaf::Empty),
            "axis" => Some(Leaf::Axis),
            _ => None,
        };
        if let Some(leaf) = simple {
            return Ok(Expr { node: Node::Leaf(leaf), span: name_span });
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            return self.comparison(idx, name_span);
        }
        let (args, close, end) = match name {
            "halfspace" | "cap" | "sector" | "band" | "digit" => self.args()?,
            _ => {
                return Err(ParseError::syntax(self.src, name_span.start, format!("unknown predicate `{name}`")));
            }
        };
        let span = Span { start: name_span.start, end };
        let want_close = if name == "sector" { Tok::RParen } else { Tok::RBracket };
        if close != want_close {
            let msg = if name == "sector" {
                "sector is right-open and must close with `)`".to_string()
            } else {
                format!("`{name}[...]` must close with `]`")
            };
            return Err(ParseError::syntax(self.src, end - 1, msg));
        }
        let leaf = match name {
            "halfspace" | "cap" => {
                let [a, b] = self.arity::<2>(name, name_span, args, "2 (vector, number)")?;
                let v = self.vector_arg(name, name_span, a)?;
                let c = self.num_arg(name, name_span, b)?;
                if name == "halfspace" {
                    Leaf::HalfSpace { normal: v, offset: c }
                } else {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > 1e-9 {
                        return Err(self.invalid(name_span, format!("cap center must be a unit vector, |c| = {norm}")));
                    }
                    Leaf::Cap { center: v, cos_min: c }
                }
            }
            "sector" => {
                let [a, b] = self.arity::<2>(name, name_span, args, "2")?;
                let lo = self.num_arg(name, name_span, a)?;
                let hi = self.num_arg(name, name_span, b)?;
                if !((0.0..1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo != hi) {
                    return Err(self.invalid(
                        name_span,
                        format!("sector needs 0 <= lo < 1, 0 <= hi <= 1 and lo != hi, got [{lo},{hi})"),
                    ));
                }
                Leaf::Sector { lo, hi }
            }
            "band" => {
                let [a, b, c] = self.arity::<3>(name, name_span, args, "3")?;
                let coord = self.int_arg(name, name_span, a)?;
                let lo = self.num_arg(name, name_span, b)?;
                let hi = self.num_arg(name, name_span, c)?;
                if coord == 0 || coord as usize > self.dim {
                    return Err(self.dimension(name_span, coord as usize));
                }
                if lo > hi {
                    return Err(self.invalid(name_span, format!("band needs lo <= hi, got [{lo},{hi}]")));
                }
                Leaf::Band { coord: coord as usize, lo, hi }
            }
            _ => {
                let [a, b, c] = self.arity::<3>(name, name_span, args, "3")?;
                let base = self.int_arg(name, name_span, a)?;
                let position = self.int_arg(name, name_span, b)?;
                let digit = self.int_arg(name, name_span, c)?;
                if !(2..=1 << 16).contains(&base) || !(1..=64).contains(&position) || digit >= base {
                    return Err(self.invalid(
                        name_span,
                        format!(
                            "digit needs base >= 2, 1 <= position <= 64, digit < base; got [{base},{position},{digit}]"
                        ),
                    ));
                }
                Leaf::Digit { base: base as u32, position: position as u32, digit: digit as u32 }
            }
        };
        Ok(Expr { node: Node::Leaf(leaf), span })
    }

    fn comparison(&mut self, idx: usize, name_span: Span) -> Result<Expr, ParseError> {
        if idx == 0 || idx > self.dim {
            return Err(self.dimension(name_span, idx));
        }
        let cmp = match self.peek() {
            Tok::Cmp(c) => *c,
            other => {
                let msg = format!("expected a comparison after `x{idx}`, found {}", other.describe());
                return Err(self.error_here(msg));
            }
        };
        self.bump();
        let (value, end) = match self.bump() {
            (Tok::Number(x), s) => (x, s.end),
            (other, s) => {
                return Err(ParseError::syntax(
                    self.src,
                    s.start,
                    format!("expected a number, found {}", other.describe()),
                ));
            }
        };
        let mut normal = vec![0.0; self.dim];
        let leaf = match cmp {
            Cmp::Gt | Cmp::Ge => {
                normal[idx - 1] = 1.0;
                Leaf::HalfSpace { normal, offset: value }
            }
            Cmp::Lt | Cmp::Le => {
                normal[idx - 1] = -1.0;
                Leaf::HalfSpace { normal, offset: -value }
            }
        };
        Ok(Expr { node: Node::Leaf(leaf), span: Span { start: name_span.start, end } })
    }

    /// Parses `[ arg, ... ` up to and including the closing `]` or `)`.
    fn args(&mut self) -> Result<(Vec<Arg>, Tok, usize), ParseError> {
        self.expect(Tok::LBracket)?;
        let mut args = Vec::new();
        loop {
            let arg = match self.bump() {
                (Tok::Number(x), s) => Arg::Num(x, s),
                (Tok::LParen, s) => {
                    let mut v = Vec::new();
                    loop {
                        match self.bump() {
                            (Tok::Number(x), _) => v.push(x),
                            (other, s) => {
                                let msg = format!("expected a number, found {}", other.describe());
                                return Err(ParseError::syntax(self.src, s.start, msg));
                            }
                        }
                        match self.bump() {
                            (Tok::Comma, _) => continue,
                            (Tok::RParen, e) => {
                                args.push(Arg::Vec(v, Span { start: s.start, end: e.end }));
                                break;
                            }
                            (other, s) => {
                                let msg = format!("expected `,` or `)`, found {}", other.describe());
                                return Err(ParseError::syntax(self.src, s.start, msg));
                            }
                        }
                    }
                    match self.bump() {
                        (Tok::Comma, _) => continue,
                        (close @ (Tok::RBracket | Tok::RParen), e) => return Ok((args, close, e.end)),
                        (other, s) => {
                            let msg = format!("expected `,` or a closing bracket, found {}", other.describe());
                            return Err(ParseError::syntax(self.src, s.start, msg));
                        }
                    }
                }
                (other, s) => {
                    let msg = format!("expected an argument, found {}", other.describe());
                    return Err(ParseError::syntax(self.src, s.start, msg));
                }
            };
            args.push(arg);
            match self.bump() {
                (Tok::Comma, _) => {}
                (close @ (Tok::RBracket | Tok::RParen), e) => return Ok((args, close, e.end)),
                (other, s) => {
                    let msg = format!("expected `,` or a closing bracket, found {}", other.describe());
                    return Err(ParseError::syntax(self.src, s.start, msg));
                }
            }
        }
    }

    fn arity<const N: usize>(
        &self,
        name: &str,
        span: Span,
        args: Vec<Arg>,
        expected: &str,
    ) -> Result<[Arg; N], ParseError> {
        let got = args.len();
        args.try_into().map_err(|_| {
            let (line, column) = line_col(self.src, span.start);
            ParseError::Arity { line, column, leaf: name.to_string(), expected: expected.to_string(), got }
        })
    }

    fn num_arg(&self, name: &str, _span: Span, arg: Arg) -> Result<f64, ParseError> {
        match arg {
            Arg::Num(x, _) => Ok(x),
            Arg::Vec(_, s) => Err(self.invalid(s, format!("`{name}` expected a number here, found a vector"))),
        }
    }

    fn int_arg(&self, name: &str, span: Span, arg: Arg) -> Result<u64, ParseError> {
        let s = arg.span();
        let x = self.num_arg(name, span, arg)?;
        if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
            return Err(self.invalid(s, format!("`{name}` expected a non-negative integer, found {x}")));
        }
        Ok(x as u64)
    }

    fn vector_arg(&self, name: &str, _span: Span, arg: Arg) -> Result<Vec<f64>, ParseError> {
        match arg {
            Arg::Vec(v, s) => {
                if v.len() != self.dim {
                    let (line, column) = line_col(self.src, s.start);
                    return Err(ParseError::Dimension { line, column, expected: self.dim, got: v.len() });
                }
                Ok(v)
            }
            Arg::Num(_, s) => Err(self.invalid(s, format!("`{name}` expected a vector `(x1,...,xn)` here"))),
        }
    }

    fn invalid(&self, span: Span, message: String) -> ParseError {
        let (line, column) = line_col(self.src, span.start);
        ParseError::InvalidArgument { line, column, message }
    }

    fn dimension(&self, span: Span, index: usize) -> ParseError {
        let (line, column) = line_col(self.src, span.start);
        ParseError::Dimension { line, column, expected: self.dim, got: index }
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub(crate) fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[line_start..].chars().count() + 1)
}
