//! Context-free grammars and the rewriting rules derived from them.
//!
//! A grammar is written one production group per line:
//!
//! ```text
//! # comparisons over integer expressions
//! E -> E:Int "> 12" :: Boolean | E:Int "> 0" :: Boolean | E "+" E :: Int | "hours" :: $1
//! ```
//!
//! Terminals are double-quoted literal token text, non-terminals are bare
//! identifiers and the first left-hand side is the root. An item may carry
//! a type atom after `:` and an alternative may end with `:: atom` giving
//! the type of the left-hand side. A type atom is either a type name or
//! `$n`, meaning "same type as position n" where `$0` is the left-hand side
//! and `$1..` are the right-hand side items.

mod ambiguity;
mod rules;

pub use ambiguity::{check_unambiguous, enumerate_trees, AmbiguityReport, AmbiguityWitness};
pub use rules::{
    derive_bottom_up_rules, derive_creation_rules, derive_top_down_rules, CreationMode,
    Direction, GroupKey, RewritingRule, RuleId, RuleKind, RulePayload, RuleSet, RuleTree,
    SchemaEntry,
};

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::TypeName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymbolKind {
    NonTerminal,
    Terminal,
}

/// A grammar symbol. Terminals are named by their literal token text.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn non_terminal(name: &str) -> Self {
        assert!(!name.is_empty(), "symbol names are non-empty");
        Symbol {
            name: name.into(),
            kind: SymbolKind::NonTerminal,
        }
    }

    pub fn terminal(text: &str) -> Self {
        assert!(!text.is_empty(), "symbol names are non-empty");
        Symbol {
            name: text.into(),
            kind: SymbolKind::Terminal,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == SymbolKind::Terminal
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SymbolKind::NonTerminal => f.write_str(&self.name),
            SymbolKind::Terminal => write_quoted(f, &self.name),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_quoted(f: &mut impl fmt::Write, text: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in text.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

/// Type of one position of a production or rule: a constant, or "equal to
/// the type of another position".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeAtom {
    Const(TypeName),
    Same(usize),
}

impl fmt::Display for TypeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeAtom::Const(t) => write!(f, "{t}"),
            TypeAtom::Same(p) => write!(f, "${p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub lhs: Symbol,
    pub rhs: Vec<Symbol>,
    /// Indexed by position: 0 is the left-hand side, `i` is `rhs[i - 1]`.
    pub types: Vec<Option<TypeAtom>>,
}

impl Production {
    pub fn new(lhs: Symbol, rhs: Vec<Symbol>) -> Self {
        let types = vec![None; rhs.len() + 1];
        Production { lhs, rhs, types }
    }

    pub fn with_type(mut self, position: usize, atom: TypeAtom) -> Self {
        self.types[position] = Some(atom);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    symbols: Vec<Symbol>,
    productions: Vec<Production>,
    root: Symbol,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared symbol `{name}`")]
    UndeclaredSymbol { line: usize, name: String },
    #[error("line {line}: empty right-hand side for `{lhs}`")]
    EmptyRhs { line: usize, lhs: String },
    #[error("line {line}: type reference ${position} is out of range")]
    BadTypeRef { line: usize, position: usize },
    #[error("grammar has no productions")]
    Empty,
}

impl Grammar {
    /// Builds a grammar from productions; the root is the first left-hand side.
    pub fn new(productions: Vec<Production>) -> Result<Self, GrammarError> {
        let root = productions.first().ok_or(GrammarError::Empty)?.lhs.clone();
        let declared: HashSet<&Symbol> = productions.iter().map(|p| &p.lhs).collect();
        let mut symbols = Vec::new();
        let mut seen = HashSet::new();
        for (i, p) in productions.iter().enumerate() {
            if p.rhs.is_empty() {
                return Err(GrammarError::EmptyRhs {
                    line: i + 1,
                    lhs: p.lhs.name().to_string(),
                });
            }
            for s in std::iter::once(&p.lhs).chain(&p.rhs) {
                if !s.is_terminal() && !declared.contains(s) {
                    return Err(GrammarError::UndeclaredSymbol {
                        line: i + 1,
                        name: s.name().to_string(),
                    });
                }
                if seen.insert(s.clone()) {
                    symbols.push(s.clone());
                }
            }
            for atom in p.types.iter().flatten() {
                if let TypeAtom::Same(k) = atom {
                    if *k > p.rhs.len() {
                        return Err(GrammarError::BadTypeRef {
                            line: i + 1,
                            position: *k,
                        });
                    }
                }
            }
        }
        Ok(Grammar {
            symbols,
            productions,
            root,
        })
    }

    pub fn root(&self) -> &Symbol {
        &self.root
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn terminals(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(|s| s.is_terminal())
    }

    pub fn non_terminals(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(|s| !s.is_terminal())
    }

    pub fn productions_of<'a>(&'a self, lhs: &'a Symbol) -> impl Iterator<Item = &'a Production> {
        self.productions.iter().filter(move |p| &p.lhs == lhs)
    }

    /// Normalized text form; consecutive productions sharing a left-hand
    /// side are joined on one line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut prev: Option<&Symbol> = None;
        for p in &self.productions {
            if prev == Some(&p.lhs) {
                out.push_str(" | ");
            } else {
                if prev.is_some() {
                    out.push('\n');
                }
                out.push_str(p.lhs.name());
                out.push_str(" -> ");
            }
            for (i, s) in p.rhs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&s.to_string());
                if let Some(atom) = &p.types[i + 1] {
                    out.push(':');
                    out.push_str(&atom.to_string());
                }
            }
            if let Some(atom) = &p.types[0] {
                out.push_str(" :: ");
                out.push_str(&atom.to_string());
            }
            prev = Some(&p.lhs);
        }
        out.push('\n');
        out
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Arrow,
    Bar,
    Colon,
    DoubleColon,
    Dollar(usize),
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Tok>, GrammarError> {
    let syntax = |message: String| GrammarError::Syntax {
        line: lineno,
        message,
    };
    let mut toks = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(e) => text.push(e),
                            None => return Err(syntax("unterminated escape".into())),
                        },
                        Some(c) => text.push(c),
                        None => return Err(syntax("unterminated string".into())),
                    }
                }
                if text.is_empty() {
                    return Err(syntax("empty terminal".into()));
                }
                toks.push(Tok::Quoted(text));
            }
            '-' => {
                chars.next();
                if chars.next() != Some('>') {
                    return Err(syntax("expected `->`".into()));
                }
                toks.push(Tok::Arrow);
            }
            '|' => {
                chars.next();
                toks.push(Tok::Bar);
            }
            ':' => {
                chars.next();
                if chars.peek() == Some(&':') {
                    chars.next();
                    toks.push(Tok::DoubleColon);
                } else {
                    toks.push(Tok::Colon);
                }
            }
            '$' => {
                chars.next();
                let mut digits = String::new();
                while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                    digits.push(*d);
                    chars.next();
                }
                let n = digits
                    .parse()
                    .map_err(|_| syntax("expected digits after `$`".into()))?;
                toks.push(Tok::Dollar(n));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_') {
                    ident.push(*d);
                    chars.next();
                }
                toks.push(Tok::Ident(ident));
            }
            other => return Err(syntax(format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

/// Parses the grammar text format.
pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    struct RawAlt {
        line: usize,
        lhs: String,
        items: Vec<(Tok, Option<TypeAtom>)>,
        result: Option<TypeAtom>,
    }

    let mut alts: Vec<RawAlt> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = lex_line(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let syntax = |message: &str| GrammarError::Syntax {
            line: lineno,
            message: message.to_string(),
        };
        let lhs = match &toks[..] {
            [Tok::Ident(name), Tok::Arrow, ..] => name.clone(),
            _ => return Err(syntax("expected `LHS ->`")),
        };
        let mut rest = toks[2..].iter().peekable();
        loop {
            let mut alt = RawAlt {
                line: lineno,
                lhs: lhs.clone(),
                items: Vec::new(),
                result: None,
            };
            loop {
                match rest.next() {
                    None | Some(Tok::Bar) => break,
                    Some(t @ (Tok::Ident(_) | Tok::Quoted(_))) => {
                        let atom = if rest.peek() == Some(&&Tok::Colon) {
                            rest.next();
                            Some(parse_atom(rest.next(), lineno)?)
                        } else {
                            None
                        };
                        alt.items.push((t.clone(), atom));
                    }
                    Some(Tok::DoubleColon) => {
                        alt.result = Some(parse_atom(rest.next(), lineno)?);
                        match rest.next() {
                            None | Some(Tok::Bar) => break,
                            Some(_) => return Err(syntax("`:: type` must end an alternative")),
                        }
                    }
                    Some(_) => return Err(syntax("unexpected token in alternative")),
                }
            }
            let at_end = rest.peek().is_none();
            if alt.items.is_empty() {
                return Err(GrammarError::EmptyRhs {
                    line: lineno,
                    lhs: lhs.clone(),
                });
            }
            alts.push(alt);
            if at_end {
                // A trailing `|` leaves an empty alternative behind.
                if matches!(toks.last(), Some(Tok::Bar)) {
                    return Err(GrammarError::EmptyRhs { line: lineno, lhs });
                }
                break;
            }
        }
    }

    let declared: HashSet<&str> = alts.iter().map(|a| a.lhs.as_str()).collect();
    let mut productions = Vec::with_capacity(alts.len());
    for alt in &alts {
        let mut rhs = Vec::with_capacity(alt.items.len());
        let mut types = vec![alt.result.clone()];
        for (tok, atom) in &alt.items {
            let sym = match tok {
                Tok::Ident(name) => {
                    if !declared.contains(name.as_str()) {
                        return Err(GrammarError::UndeclaredSymbol {
                            line: alt.line,
                            name: name.clone(),
                        });
                    }
                    Symbol::non_terminal(name)
                }
                Tok::Quoted(text) => Symbol::terminal(text),
                _ => unreachable!("items are identifiers or terminals"),
            };
            rhs.push(sym);
            types.push(atom.clone());
        }
        for atom in types.iter().flatten() {
            if let TypeAtom::Same(k) = atom {
                if *k > rhs.len() {
                    return Err(GrammarError::BadTypeRef {
                        line: alt.line,
                        position: *k,
                    });
                }
            }
        }
        productions.push(Production {
            lhs: Symbol::non_terminal(&alt.lhs),
            rhs,
            types,
        });
    }
    Grammar::new(productions)
}

fn parse_atom(tok: Option<&Tok>, line: usize) -> Result<TypeAtom, GrammarError> {
    match tok {
        Some(Tok::Ident(name)) => Ok(TypeAtom::Const(TypeName::new(name))),
        Some(Tok::Dollar(n)) => Ok(TypeAtom::Same(*n)),
        _ => Err(GrammarError::Syntax {
            line,
            message: "expected a type name or `$n`".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const HOURS_GRAMMAR: &str =
        "E -> E \">12\" | \"hours\"\n";

    const FIVE_RULES: &str = r#"
# five productions sharing E
E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value"
"#;

    #[test]
    fn loads_two_production_grammar() {
        let g = load_grammar(HOURS_GRAMMAR).unwrap();
        assert_eq!(g.productions().len(), 2);
        assert_eq!(g.root().name(), "E");
        assert_eq!(g.productions()[0].rhs[1], Symbol::terminal(">12"));
    }

    #[test]
    fn loads_five_production_grammar() {
        let g = load_grammar(FIVE_RULES).unwrap();
        assert_eq!(g.productions().len(), 5);
        assert_eq!(g.root(), &Symbol::non_terminal("E"));
        let terms: Vec<_> = g.terminals().map(|s| s.name().to_string()).collect();
        assert_eq!(terms, ["> 12", "> 0", "+", "hours", "value"]);
    }

    #[test]
    fn rejects_undeclared_symbol() {
        let err = load_grammar("E -> X \"a\"\n").unwrap_err();
        assert_eq!(
            err,
            GrammarError::UndeclaredSymbol {
                line: 1,
                name: "X".into()
            }
        );
    }

    #[test]
    fn rejects_empty_rhs() {
        assert!(matches!(
            load_grammar("E -> \"a\" |\n"),
            Err(GrammarError::EmptyRhs { line: 1, .. })
        ));
        assert!(matches!(
            load_grammar("E -> | \"a\"\n"),
            Err(GrammarError::EmptyRhs { line: 1, .. })
        ));
        assert!(matches!(
            load_grammar("\n\nE ->\n"),
            Err(GrammarError::EmptyRhs { line: 3, .. })
        ));
    }

    #[test]
    fn reports_syntax_line() {
        let err = load_grammar("E -> \"a\"\nF => \"b\"\n").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn parses_type_annotations() {
        let g = load_grammar(
            "E -> E:Int \"> 12\" :: Boolean | E:$3 \"+\" E :: Int | \"hours\" :: $1\n",
        )
        .unwrap();
        let p = &g.productions()[0];
        assert_eq!(p.types[0], Some(TypeAtom::Const(TypeName::new("Boolean"))));
        assert_eq!(p.types[1], Some(TypeAtom::Const(TypeName::new("Int"))));
        assert_eq!(p.types[2], None);
        assert_eq!(g.productions()[1].types[1], Some(TypeAtom::Same(3)));
        assert!(matches!(
            load_grammar("E -> \"a\" :: $4\n"),
            Err(GrammarError::BadTypeRef { position: 4, .. })
        ));
    }

    #[test]
    fn normalized_text_round_trips() {
        let src = "E -> E:Int \"> 12\" :: Boolean | \"ho\\\"urs\" :: $1\nF -> E\nE -> \"x\"\n";
        let g = load_grammar(src).unwrap();
        let text = g.to_text();
        assert_eq!(text, src);
        assert_eq!(load_grammar(&text).unwrap(), g);
    }
}
