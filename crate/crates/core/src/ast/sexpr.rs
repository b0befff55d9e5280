use std::fmt;

use thiserror::Error;

use crate::grammar::Symbol;

/// A complete, unannotated tree: the shape of a finished program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParseTree {
    pub symbol: Symbol,
    pub children: Vec<ParseTree>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("s-expression error at byte {offset}: {message}")]
pub struct SexprError {
    pub offset: usize,
    pub message: String,
}

impl ParseTree {
    pub fn leaf(symbol: Symbol) -> Self {
        ParseTree {
            symbol,
            children: Vec::new(),
        }
    }

    pub fn node(symbol: Symbol, children: Vec<ParseTree>) -> Self {
        ParseTree { symbol, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ParseTree::size).sum::<usize>()
    }

    pub fn leaves(&self) -> Vec<&Symbol> {
        if self.children.is_empty() {
            return vec![&self.symbol];
        }
        self.children.iter().flat_map(ParseTree::leaves).collect()
    }

    /// Terminal leaves joined by single spaces.
    pub fn render(&self) -> String {
        self.leaves()
            .into_iter()
            .filter(|s| s.is_terminal())
            .map(Symbol::name)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses `(E (E "hours") "> 12")`: quoted atoms are terminals, bare
    /// atoms non-terminals.
    pub fn parse(text: &str) -> Result<Self, SexprError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let tree = p.tree()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(tree)
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return write!(f, "{}", self.symbol);
        }
        write!(f, "({}", self.symbol)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str(")")
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> SexprError {
        SexprError {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<ParseTree, SexprError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'(') {
            self.pos += 1;
            let symbol = self.atom()?;
            let mut children = Vec::new();
            loop {
                self.skip_ws();
                match self.src.get(self.pos) {
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    Some(_) => children.push(self.tree()?),
                    None => return Err(self.err("unclosed `(`")),
                }
            }
            if children.is_empty() {
                return Err(self.err("empty list"));
            }
            Ok(ParseTree::node(symbol, children))
        } else {
            Ok(ParseTree::leaf(self.atom()?))
        }
    }

    fn atom(&mut self) -> Result<Symbol, SexprError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'"') {
            self.pos += 1;
            let mut bytes = Vec::new();
            loop {
                match self.src.get(self.pos) {
                    Some(b'"') => {
                        self.pos += 1;
                        break;
                    }
                    Some(b'\\') => {
                        let escaped = *self.src.get(self.pos + 1).ok_or_else(|| self.err("bad escape"))?;
                        bytes.push(escaped);
                        self.pos += 2;
                    }
                    Some(&b) => {
                        bytes.push(b);
                        self.pos += 1;
                    }
                    None => return Err(self.err("unterminated string")),
                }
            }
            let text = String::from_utf8(bytes).map_err(|_| self.err("invalid utf-8"))?;
            if text.is_empty() {
                return Err(self.err("empty terminal"));
            }
            return Ok(Symbol::terminal(&text));
        }
        let start = self.pos;
        while let Some(&b) = self.src.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b'"' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an atom"));
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| self.err("invalid utf-8"))?;
        Ok(Symbol::non_terminal(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let t = ParseTree::parse(r#"(E (E "hours") "> 12")"#).unwrap();
        assert_eq!(t.size(), 4);
        assert_eq!(t.render(), "hours > 12");
        assert_eq!(t.to_string(), r#"(E (E "hours") "> 12")"#);
        assert!(ParseTree::parse("(E").is_err());
        assert!(ParseTree::parse("E F").is_err());
    }
}
