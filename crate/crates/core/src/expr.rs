//! Arithmetic expressions over named parameters.
//!
//! Grammar: numeric literals, identifiers, `+ - * / ^` (also `− × ÷`),
//! unary sign, parentheses and the functions `exp`, `ln`, `sqrt`. `^` is
//! right-associative and binds tighter than unary minus, so `-x^2 = -(x^2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression; keeps its source text for display.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{text}' in '{src}'")))?;
            out.push(Token::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else {
            let tok = match c {
                '+' => Token::Op('+'),
                '-' | '−' => Token::Op('-'),
                '*' | '×' => Token::Op('*'),
                '/' | '÷' => Token::Op('/'),
                '^' => Token::Op('^'),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => return Err(Error::Parse(format!("unexpected character '{c}' in '{src}'"))),
            };
            out.push(tok);
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} in '{}'", self.src))
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(self.unary()?.into()))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::Ident(name)) => {
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "ln" => Some(Func::Ln),
                    "sqrt" => Some(Func::Sqrt),
                    _ => None,
                };
                match func {
                    Some(f) => {
                        if self.next() != Some(Token::LParen) {
                            return Err(self.err(&format!("expected '(' after {}", f.name())));
                        }
                        let arg = self.expr()?;
                        if self.next() != Some(Token::RParen) {
                            return Err(self.err("expected ')'"));
                        }
                        Ok(Node::Call(f, arg.into()))
                    }
                    None => Ok(Node::Var(name)),
                }
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if self.next() != Some(Token::RParen) {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(t) => Err(self.err(&format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn eval(node: &Node, names: &[String], values: &[f64]) -> Result<f64> {
    let ev = |n: &Node| eval(n, names, values);
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(name) => {
            let i = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Parse(format!("unknown variable '{name}'")))?;
            values[i]
        }
        Node::Neg(a) => -ev(a)?,
        Node::Add(a, b) => ev(a)? + ev(b)?,
        Node::Sub(a, b) => ev(a)? - ev(b)?,
        Node::Mul(a, b) => ev(a)? * ev(b)?,
        Node::Div(a, b) => ev(a)? / ev(b)?,
        Node::Pow(a, b) => ev(a)?.powf(ev(b)?),
        Node::Call(f, a) => f.apply(ev(a)?),
    })
}

fn collect(node: &Node, out: &mut Vec<String>) {
    match node {
        Node::Num(_) => {}
        Node::Var(name) => {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        Node::Neg(a) | Node::Call(_, a) => collect(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            collect(a, out);
            collect(b, out);
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        if tokens.is_empty() {
            return Err(Error::Parse("empty expression".into()));
        }
        let mut p = Parser { tokens, pos: 0, src };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Self { source: src.trim().to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Variable names in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect(&self.root, &mut out);
        out
    }

    /// Evaluate with `names[i] = values[i]`.
    pub fn eval(&self, names: &[String], values: &[f64]) -> Result<f64> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: names.len(), got: values.len() });
        }
        eval(&self.root, names, values)
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[(&str, f64)]) -> f64 {
        let names: Vec<String> = vars.iter().map(|(n, _)| n.to_string()).collect();
        let values: Vec<f64> = vars.iter().map(|(_, v)| *v).collect();
        Expr::parse(src).unwrap().eval(&names, &values).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[]), 0.5);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("8 / 4 / 2", &[]), 1.0);
        assert_eq!(ev("6 − 1 × 2 ÷ 4", &[]), 5.5);
    }

    #[test]
    fn default_gaussian_family() {
        let x = 16.0;
        assert!((ev("X^(-1/4)", &[("X", x)]) - 0.5).abs() < 1e-15);
        assert_eq!(ev("W/X", &[("W", 3.0), ("X", 2.0)]), 1.5);
    }

    #[test]
    fn functions_and_literals() {
        assert!((ev("exp(ln(2.5))", &[]) - 2.5).abs() < 1e-15);
        assert_eq!(ev("sqrt(16)", &[]), 4.0);
        assert_eq!(ev("1.5e2 + .5", &[]), 150.5);
        assert_eq!(ev("2E-1", &[]), 0.2);
    }

    #[test]
    fn variables_in_order() {
        let e = Expr::parse("exp(l1) * l2 + l1").unwrap();
        assert_eq!(e.variables(), ["l1", "l2"]);
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "(1", "exp 2", "1 2", "2 $ 3", "sqrt(1"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
        let e = Expr::parse("y").unwrap();
        assert!(e.eval(&["x".into()], &[1.0]).is_err());
    }
}
