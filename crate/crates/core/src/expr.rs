//! Small arithmetic expression language used by problem configs.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `t`, `y1..yn` (plus `y` when n = 1), the constants `pi`
//! and `e`, and the functions listed in [`Func`].

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("cannot evaluate `{node}`: {message}")]
    EvalDomain { node: String, message: String },
    #[error("expression expects a state of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    /// Zero-based state coordinate.
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" | "arctan" => Func::Atan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl fmt::Display for Expr {
    /// Fully parenthesized rendering; reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::Y(i)) => write!(f, "y{}", i + 1),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression bound to a state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Expr,
    dim: usize,
}

impl Expression {
    pub fn parse(source: &str, dim: usize) -> Result<Self, ExprError> {
        let ast = Parser::new(source, dim).parse_all()?;
        Ok(Expression { ast, dim })
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Expression {
            ast: Expr::Num(value),
            dim,
        }
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates at `(t, y)`. Domain violations are errors, never NaN.
    pub fn eval(&self, t: f64, y: &[f64]) -> Result<f64, ExprError> {
        if y.len() != self.dim {
            return Err(ExprError::DimensionMismatch {
                expected: self.dim,
                found: y.len(),
            });
        }
        eval_node(&self.ast, t, y)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

fn domain(node: &Expr, message: impl Into<String>) -> ExprError {
    ExprError::EvalDomain {
        node: node.to_string(),
        message: message.into(),
    }
}

fn eval_node(node: &Expr, t: f64, y: &[f64]) -> Result<f64, ExprError> {
    let value = match node {
        Expr::Num(v) => *v,
        Expr::Var(Var::T) => t,
        Expr::Var(Var::Y(i)) => y[*i],
        Expr::Neg(inner) => -eval_node(inner, t, y)?,
        Expr::Bin(op, l, r) => {
            let a = eval_node(l, t, y)?;
            let b = eval_node(r, t, y)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    if a < 0.0 && b.fract() != 0.0 {
                        return Err(domain(node, "negative base with non-integer exponent"));
                    }
                    if a == 0.0 && b < 0.0 {
                        return Err(domain(node, "zero raised to a negative power"));
                    }
                    a.powf(b)
                }
            }
        }
        Expr::Call(func, args) => {
            let x = eval_node(&args[0], t, y)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    if x.cos() == 0.0 {
                        return Err(domain(node, "tangent pole"));
                    }
                    x.tan()
                }
                Func::Atan => x.atan(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain(node, format!("logarithm of non-positive value {x}")));
                    }
                    x.ln()
                }
                Func::Abs => x.abs(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(node, format!("square root of negative value {x}")));
                    }
                    x.sqrt()
                }
                Func::Min => x.min(eval_node(&args[1], t, y)?),
                Func::Max => x.max(eval_node(&args[1], t, y)?),
            }
        }
    };
    if !value.is_finite() {
        return Err(domain(node, format!("non-finite result {value}")));
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    dim: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Self {
        Parser {
            src,
            pos: 0,
            dim,
            tok: Tok::End,
            tok_start: 0,
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        self.advance()?;
        let e = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.expected("operator or end of input"));
        }
        Ok(e)
    }

    fn expected(&self, what: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.tok_start,
            expected: what.to_string(),
        }
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut look = self.pos + 1;
                if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                    look += 1;
                }
                if look < bytes.len() && bytes[look].is_ascii_digit() {
                    self.pos = look;
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
            }
            let text = &self.src[start..self.pos];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: "number".into(),
            })?;
            Tok::Num(v)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            Tok::Ident(self.src[start..self.pos].to_string())
        } else {
            self.pos += 1;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                _ => {
                    // Step back so the offset names the offending byte.
                    self.pos -= 1;
                    return Err(ExprError::Syntax {
                        offset: self.pos,
                        expected: "number, identifier, operator or parenthesis".into(),
                    });
                }
            }
        };
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.expected("`)`"));
                }
                self.advance()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.tok_start;
                self.advance()?;
                if self.tok == Tok::LParen {
                    let func = Func::lookup(&name).ok_or(ExprError::UnknownIdentifier {
                        name: name.clone(),
                        offset,
                    })?;
                    self.advance()?;
                    let mut args = vec![self.expr()?];
                    while self.tok == Tok::Comma {
                        self.advance()?;
                        args.push(self.expr()?);
                    }
                    if self.tok != Tok::RParen {
                        return Err(self.expected("`,` or `)`"));
                    }
                    self.advance()?;
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            name,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                self.identifier(&name, offset)
            }
            _ => Err(self.expected("number, identifier or `(`")),
        }
    }

    fn identifier(&self, name: &str, offset: usize) -> Result<Expr, ExprError> {
        match name {
            "t" => return Ok(Expr::Var(Var::T)),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            "y" if self.dim == 1 => return Ok(Expr::Var(Var::Y(0))),
            _ => {}
        }
        if let Some(idx) = name.strip_prefix('y').and_then(|d| d.parse::<usize>().ok()) {
            if idx >= 1 && idx <= self.dim && !name[1..].starts_with('0') {
                return Ok(Expr::Var(Var::Y(idx - 1)));
            }
        }
        if let Some(func) = Func::lookup(name) {
            return Err(ExprError::Arity {
                name: func.name().to_string(),
                expected: func.arity(),
                found: 0,
            });
        }
        Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(src: &str, t: f64, y: &[f64]) -> f64 {
        Expression::parse(src, y.len()).unwrap().eval(t, y).unwrap()
    }

    #[test]
    fn example_expressions() {
        assert!((ev("atan(y1) + 2*pi", 0.0, &[0.0]) - 2.0 * PI).abs() < 1e-15);
        assert!((ev("arctan(y) + 2*pi", 0.0, &[0.0]) - 6.283185307).abs() < 1e-9);
        assert_eq!(ev("1.2*sin(t)", 0.0, &[0.0]), 0.0);
        // Reference value from direct f64 evaluation of -1.4 e^-0.7.
        let reference = -1.4 * (-0.7f64).exp();
        assert!((ev("-1.4*exp(-t)", 0.7, &[0.0]) - reference).abs() < 1e-15);
        assert!((reference + 0.6952194).abs() < 1e-7);
        assert_eq!(ev("3", 12.0, &[4.0]), 3.0);
        assert_eq!(ev("cos(y1)", 0.0, &[0.0]), 1.0);
        assert!((ev("0.9*cos(y1)", 0.0, &[PI / 3.0]) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", 0.0, &[]), 14.0);
        assert_eq!(ev("2^3^2", 0.0, &[]), 512.0);
        assert_eq!(ev("-2^2", 0.0, &[]), -4.0);
        assert_eq!(ev("2^-1", 0.0, &[]), 0.5);
        assert_eq!(ev("10-4-3", 0.0, &[]), 3.0);
        assert_eq!(ev("24/4/3", 0.0, &[]), 2.0);
        assert_eq!(ev("(2+3)*4", 0.0, &[]), 20.0);
        assert_eq!(ev("max(1, 2) + min(-1, 3)", 0.0, &[]), 1.0);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0, &[]), 150.2);
        assert_eq!(ev("y2 - y1", 0.0, &[1.0, 5.0]), 4.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = Expression::parse("1 + * 2", 1).unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                offset: 4,
                expected: "number, identifier or `(`".into()
            }
        );
        assert!(matches!(Expression::parse("(1 + 2", 1), Err(ExprError::Syntax { offset: 6, .. })));
        assert!(matches!(Expression::parse("1 $ 2", 1), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(Expression::parse("1 2", 1), Err(ExprError::Syntax { offset: 2, .. })));
    }

    #[test]
    fn identifier_and_arity_errors() {
        assert!(matches!(
            Expression::parse("y3 + 1", 2),
            Err(ExprError::UnknownIdentifier { ref name, offset: 0 }) if name == "y3"
        ));
        assert!(matches!(Expression::parse("y", 2), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(Expression::parse("y0", 2), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(Expression::parse("foo(1)", 1), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(
            Expression::parse("min(1)", 1),
            Err(ExprError::Arity { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            Expression::parse("sin(1, 2)", 1),
            Err(ExprError::Arity { expected: 1, found: 2, .. })
        ));
        assert!(matches!(Expression::parse("cos + 1", 1), Err(ExprError::Arity { found: 0, .. })));
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = Expression::parse("1 + log(y1 - 1)", 1).unwrap();
        match e.eval(0.0, &[1.0]) {
            Err(ExprError::EvalDomain { node, .. }) => assert_eq!(node, "log((y1 - 1.0))"),
            other => panic!("unexpected {other:?}"),
        }
        let e = Expression::parse("1 / t", 1).unwrap();
        assert!(matches!(e.eval(0.0, &[1.0]), Err(ExprError::EvalDomain { .. })));
        let e = Expression::parse("sqrt(t)", 1).unwrap();
        assert!(matches!(e.eval(-1.0, &[1.0]), Err(ExprError::EvalDomain { .. })));
        let e = Expression::parse("exp(exp(t))", 1).unwrap();
        assert!(matches!(e.eval(10.0, &[1.0]), Err(ExprError::EvalDomain { .. })));
        assert!(matches!(e.eval(1.0, &[1.0, 2.0]), Err(ExprError::DimensionMismatch { .. })));
    }

    #[test]
    fn evaluation_is_bit_reproducible() {
        let e = Expression::parse("atan(y1)*exp(-t) + sin(y2)^2", 2).unwrap();
        let a = e.eval(0.3, &[1.7, -0.2]).unwrap();
        for _ in 0..10 {
            assert_eq!(e.eval(0.3, &[1.7, -0.2]).unwrap().to_bits(), a.to_bits());
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Var(Var::T)),
            (0usize..3).prop_map(|i| Expr::Var(Var::Y(i))),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
                (
                    prop_oneof![Just(Func::Sin), Just(Func::Atan), Just(Func::Abs), Just(Func::Exp)],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_expressions_reparse_to_same_tree(ast in arb_expr()) {
            let printed = ast.to_string();
            let reparsed = Expression::parse(&printed, 3).unwrap();
            prop_assert_eq!(reparsed.ast(), &ast);
        }
    }
}
