//! The condition mini-language: comparisons, arithmetic, indexing, field
//! access, method and function calls, joined by `&&`, `||` and `!`.
//!
//! Canonical printing uses infix operators with single spaces and adds
//! parentheses only where precedence requires them:
//!
//! | level | operators                  | associativity |
//! |-------|----------------------------|---------------|
//! | 1     | `\|\|`                     | left          |
//! | 2     | `&&`                       | left          |
//! | 3     | `==` `!=`                  | left          |
//! | 4     | `<` `<=` `>` `>=`          | left          |
//! | 5     | `+` `-`                    | left          |
//! | 6     | `*` `/` `%`                | left          |
//! | 7     | unary `!` `-`              | prefix        |
//! | 8     | `.f` `.m(..)` `[i]` `f(..)`| postfix       |

use std::fmt;

use thiserror::Error;

use crate::constraints::is_variable_reference;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Tok {
    Ident(String),
    Lit(String),
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

const OPS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "!", "+", "-", "*", "/", "%", ".", "(", ")",
    "[", "]", ",",
];

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |column: usize, message: String| ParseError { column, message };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphabetic() || c == '_' || c == '$' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            while i < chars.len() && matches!(chars[i], 'L' | 'l' | 'f' | 'F' | 'd' | 'D') {
                i += 1;
            }
            out.push((start, Tok::Lit(chars[start..i].iter().collect())));
        } else if c == '"' || c == '\'' {
            i += 1;
            while i < chars.len() && chars[i] != c {
                if chars[i] == '\\' {
                    i += 1;
                }
                i += 1;
            }
            if i >= chars.len() {
                return Err(err(start + 1, "unterminated literal".into()));
            }
            i += 1;
            out.push((start, Tok::Lit(chars[start..i].iter().collect())));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let op = OPS
                .iter()
                .find(|op| rest.starts_with(**op))
                .ok_or_else(|| err(start + 1, format!("unexpected character `{c}`")))?;
            i += op.len();
            out.push((start, Tok::Op(op)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    fn from_token(op: &str) -> Option<BinOp> {
        Some(match op {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    fn is_logic(self) -> bool {
        matches!(self, BinOp::Or | BinOp::And)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

const UNARY: u8 = 7;
const POSTFIX: u8 = 8;
const ATOM: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Lit(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Field(Box<Expr>, String),
    Method(Box<Expr>, String, Vec<Expr>),
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let column = self.toks.get(self.at).map_or(self.len, |t| t.0) + 1;
        ParseError {
            column,
            message: message.into(),
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{op}`")))
        }
    }

    fn binary(&mut self, level: u8) -> Result<Expr, ParseError> {
        if level > 6 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op(o)) => BinOp::from_token(o).filter(|b| b.precedence() == level),
                _ => None,
            };
            let Some(op) = op else {
                return Ok(lhs);
            };
            self.at += 1;
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.binary(1)?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn member(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.at += 1;
                Ok(name)
            }
            _ => Err(self.error("expected a member name")),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.eat(".") {
                let name = self.member()?;
                e = if self.eat("(") {
                    Expr::Method(Box::new(e), name, self.args()?)
                } else {
                    Expr::Field(Box::new(e), name)
                };
            } else if self.eat("[") {
                let idx = self.binary(1)?;
                self.expect("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Lit(l)) => {
                self.at += 1;
                Ok(Expr::Lit(l))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.eat("(") {
                    Ok(Expr::Call(name, self.args()?))
                } else if is_variable_reference(&name) {
                    Ok(Expr::Var(name))
                } else {
                    Ok(Expr::Lit(name))
                }
            }
            Some(Tok::Op("(")) => {
                self.at += 1;
                let e = self.binary(1)?;
                self.expect(")")?;
                Ok(e)
            }
            Some(_) => Err(self.error("expected an operand")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        len: src.chars().count(),
    };
    let e = p.binary(1)?;
    if p.at != p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

/// Printed output split at variable leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Piece {
    Text(String),
    Var(String),
}

struct Printer {
    pieces: Vec<Piece>,
}

impl Printer {
    fn text(&mut self, s: &str) {
        if let Some(Piece::Text(t)) = self.pieces.last_mut() {
            t.push_str(s);
        } else {
            self.pieces.push(Piece::Text(s.to_string()));
        }
    }

    fn at(&mut self, e: &Expr, min: u8) {
        if e.precedence() < min {
            self.text("(");
            self.expr(e);
            self.text(")");
        } else {
            self.expr(e);
        }
    }

    fn list(&mut self, args: &[Expr]) {
        self.text("(");
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.text(", ");
            }
            self.at(a, 1);
        }
        self.text(")");
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Var(v) => self.pieces.push(Piece::Var(v.clone())),
            Expr::Lit(l) => self.text(l),
            Expr::Unary(op, x) => {
                self.text(match op {
                    UnOp::Not => "!",
                    UnOp::Neg => "-",
                });
                self.at(x, UNARY);
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                self.at(l, p);
                self.text(&format!(" {} ", op.symbol()));
                self.at(r, p + 1);
            }
            Expr::Field(x, name) => {
                self.at(x, POSTFIX);
                self.text(&format!(".{name}"));
            }
            Expr::Method(x, name, args) => {
                self.at(x, POSTFIX);
                self.text(&format!(".{name}"));
                self.list(args);
            }
            Expr::Call(name, args) => {
                self.text(name);
                self.list(args);
            }
            Expr::Index(x, i) => {
                self.at(x, POSTFIX);
                self.text("[");
                self.at(i, 1);
                self.text("]");
            }
        }
    }
}

impl Expr {
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Var(_) | Expr::Lit(_) | Expr::Call(..) => ATOM,
            Expr::Field(..) | Expr::Method(..) | Expr::Index(..) => POSTFIX,
            Expr::Unary(..) => UNARY,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    /// Canonical rendering cut at variable leaves, left to right.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut p = Printer { pieces: Vec::new() };
        p.expr(self);
        p.pieces
    }

    /// Variable leaves in printing order, repeats included.
    pub fn variables(&self) -> Vec<String> {
        self.pieces()
            .into_iter()
            .filter_map(|p| match p {
                Piece::Var(v) => Some(v),
                Piece::Text(_) => None,
            })
            .collect()
    }

    pub fn has_logic(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Lit(_) => false,
            Expr::Unary(UnOp::Not, _) => true,
            Expr::Binary(op, ..) if op.is_logic() => true,
            Expr::Unary(_, x) | Expr::Field(x, _) => x.has_logic(),
            Expr::Binary(_, l, r) | Expr::Index(l, r) => l.has_logic() || r.has_logic(),
            Expr::Method(x, _, args) => x.has_logic() || args.iter().any(Expr::has_logic),
            Expr::Call(_, args) => args.iter().any(Expr::has_logic),
        }
    }

    fn split_into(self, out: &mut Vec<Expr>) {
        match self {
            Expr::Binary(op, l, r) if op.is_logic() => {
                l.split_into(out);
                r.split_into(out);
            }
            Expr::Unary(UnOp::Not, x) => x.split_into(out),
            e => out.push(e),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.pieces() {
            match p {
                Piece::Text(t) | Piece::Var(t) => f.write_str(&t)?,
            }
        }
        Ok(())
    }
}

pub fn canonical(src: &str) -> Result<String, ParseError> {
    parse_expr(src).map(|e| e.to_string())
}

/// Atomic operands of the connectives, in source order, with `!` removed.
pub fn split_logic_atoms(src: &str) -> Result<Vec<Expr>, ParseError> {
    let mut out = Vec::new();
    parse_expr(src)?.split_into(&mut out);
    Ok(out)
}

pub fn split_logic_ops(src: &str) -> Result<Vec<String>, ParseError> {
    Ok(split_logic_atoms(src)?.iter().map(Expr::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splitting() {
        assert_eq!(split_logic_ops("a && !b").unwrap(), ["a", "b"]);
        assert_eq!(split_logic_ops("x > 0").unwrap(), ["x > 0"]);
        assert_eq!(split_logic_ops("(p || q) && r").unwrap(), ["p", "q", "r"]);
        assert_eq!(
            split_logic_ops("!(s.isEmpty()) || c[d]==null").unwrap(),
            ["s.isEmpty()", "c[d] == null"]
        );
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical("hours>12").unwrap(), "hours > 12");
        assert_eq!(canonical("(a + b) * c").unwrap(), "(a + b) * c");
        assert_eq!(canonical("a + (b * c)").unwrap(), "a + b * c");
        assert_eq!(canonical("a - (b - c)").unwrap(), "a - (b - c)");
        assert_eq!(canonical("(a - b) - c").unwrap(), "a - b - c");
        assert_eq!(canonical("( x )  .  size ( ) >= - 1").unwrap(), "x.size() >= -1");
        assert_eq!(canonical("max(a,b) != \"q\"").unwrap(), "max(a, b) != \"q\"");
        assert_eq!(canonical("(-a).b").unwrap(), "(-a).b");
    }

    #[test]
    fn pieces_and_variables() {
        let e = parse_expr("c[d] == null").unwrap();
        assert_eq!(
            e.pieces(),
            [
                Piece::Var("c".into()),
                Piece::Text("[".into()),
                Piece::Var("d".into()),
                Piece::Text("] == null".into()),
            ]
        );
        assert_eq!(parse_expr("f(this, x.y)").unwrap().variables(), ["x"]);
        assert!(parse_expr("a == (b && c)").unwrap().has_logic());
        assert!(!parse_expr("a != b").unwrap().has_logic());
    }

    #[test]
    fn errors() {
        assert!(parse_expr("a >").is_err());
        assert!(parse_expr("a b").is_err());
        assert!(parse_expr("a # b").is_err());
        assert_eq!(parse_expr("(a").unwrap_err().column, 3);
        assert!(parse_expr("\"open").is_err());
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            prop::sample::select(vec!["a", "b", "len", "obj"]).prop_map(|s| Expr::Var(s.into())),
            prop::sample::select(vec!["0", "12", "null", "true", "\"s\""]).prop_map(|s| Expr::Lit(s.into())),
        ]
    }

    fn expr() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(4, 24, 3, |inner| {
            let ops = prop::sample::select(vec![
                BinOp::Or,
                BinOp::And,
                BinOp::Eq,
                BinOp::Lt,
                BinOp::Ge,
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Rem,
            ]);
            prop_oneof![
                (ops, inner.clone(), inner.clone())
                    .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
                inner.clone().prop_map(|x| Expr::Unary(UnOp::Not, Box::new(x))),
                inner.clone().prop_map(|x| Expr::Unary(UnOp::Neg, Box::new(x))),
                inner.clone().prop_map(|x| Expr::Field(Box::new(x), "f".into())),
                (inner.clone(), prop::collection::vec(inner.clone(), 0..3))
                    .prop_map(|(x, a)| Expr::Method(Box::new(x), "m".into(), a)),
                (inner.clone(), inner).prop_map(|(x, i)| Expr::Index(Box::new(x), Box::new(i))),
            ]
        })
    }

    fn split_oracle(e: &Expr, out: &mut Vec<String>) {
        match e {
            Expr::Binary(BinOp::And | BinOp::Or, l, r) => {
                split_oracle(l, out);
                split_oracle(r, out);
            }
            Expr::Unary(UnOp::Not, x) => split_oracle(x, out),
            other => out.push(other.to_string()),
        }
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in expr()) {
            let printed = e.to_string();
            let back = parse_expr(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn split_matches_tree_walk(e in expr()) {
            let mut want = Vec::new();
            split_oracle(&e, &mut want);
            prop_assert_eq!(split_logic_ops(&e.to_string()).unwrap(), want);
        }
    }
}
