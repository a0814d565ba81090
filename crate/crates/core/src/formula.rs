//! Quantifier-free temporal formulas: parsing, printing and evaluation on
//! orbits.
//!
//! Grammar (precedence `!` > `&` > `|`):
//!
//! ```text
//! formula := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '!' unary | '(' formula ')' | 'true' | 'false' | VAR CMP VAR
//! CMP     := '<' | '<=' | '=' | '!=' | '>' | '>='
//! ```

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::order::WeakOrder;
use crate::rational::Rational;
use crate::relation::{check_arity, TemporalRelation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown comparison operator `{0}`")]
    UnknownOperator(String),
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl Cmp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Cmp::Lt => ord == Ordering::Less,
            Cmp::Le => ord != Ordering::Greater,
            Cmp::Eq => ord == Ordering::Equal,
            Cmp::Ne => ord != Ordering::Equal,
            Cmp::Gt => ord == Ordering::Greater,
            Cmp::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    fn from_symbol(s: &str) -> Option<Cmp> {
        Some(match s {
            "<" => Cmp::Lt,
            "<=" | "≤" => Cmp::Le,
            "=" => Cmp::Eq,
            "!=" | "≠" => Cmp::Ne,
            ">" => Cmp::Gt,
            ">=" | "≥" => Cmp::Ge,
            _ => return None,
        })
    }

    /// The binary relation `{(a, b) : a CMP b}`.
    pub fn relation(self) -> TemporalRelation {
        TemporalRelation::from_predicate(2, |w| self.holds(w.rank(0).cmp(&w.rank(1))))
    }
}

/// Formula body; atoms refer to variables by index into [`Formula::vars`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    True,
    False,
    Atom(usize, Cmp, usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    /// Evaluates with `cmp(i, j)` giving the order between variables `i`, `j`.
    pub fn eval_with(&self, cmp: &impl Fn(usize, usize) -> Ordering) -> bool {
        match self {
            Expr::True => true,
            Expr::False => false,
            Expr::Atom(a, op, b) => op.holds(cmp(*a, *b)),
            Expr::Not(e) => !e.eval_with(cmp),
            Expr::And(es) => es.iter().all(|e| e.eval_with(cmp)),
            Expr::Or(es) => es.iter().any(|e| e.eval_with(cmp)),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::True | Expr::False => None,
            Expr::Atom(a, _, b) => Some(*a.max(b)),
            Expr::Not(e) => e.max_var(),
            Expr::And(es) | Expr::Or(es) => es.iter().filter_map(Expr::max_var).max(),
        }
    }

    fn remap(&self, map: &[usize]) -> Expr {
        match self {
            Expr::True => Expr::True,
            Expr::False => Expr::False,
            Expr::Atom(a, op, b) => Expr::Atom(map[*a], *op, map[*b]),
            Expr::Not(e) => Expr::Not(Box::new(e.remap(map))),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.remap(map)).collect()),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.remap(map)).collect()),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, vars: &[String], prec: u8) -> fmt::Result {
        // prec: 0 = top/or, 1 = and operand, 2 = not operand
        match self {
            Expr::True => write!(f, "true"),
            Expr::False => write!(f, "false"),
            Expr::Atom(a, op, b) => {
                if prec >= 2 {
                    write!(f, "({} {} {})", vars[*a], op.symbol(), vars[*b])
                } else {
                    write!(f, "{} {} {}", vars[*a], op.symbol(), vars[*b])
                }
            }
            Expr::Not(e) => {
                write!(f, "!")?;
                e.write(f, vars, 2)
            }
            Expr::And(es) => write_joined(f, es, " & ", vars, prec > 1, 1),
            Expr::Or(es) => write_joined(f, es, " | ", vars, prec > 0, 0),
        }
    }
}

fn write_joined(
    f: &mut fmt::Formatter<'_>,
    es: &[Expr],
    sep: &str,
    vars: &[String],
    paren: bool,
    own: u8,
) -> fmt::Result {
    if es.is_empty() {
        return write!(f, "{}", if own == 1 { "true" } else { "false" });
    }
    if paren {
        write!(f, "(")?;
    }
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        e.write(f, vars, own + 1)?;
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

/// A quantifier-free formula over an ordered list of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    vars: Vec<String>,
    expr: Expr,
}

impl Formula {
    /// Builds a formula; fails if `expr` mentions an index outside `vars`.
    pub fn new(vars: Vec<String>, expr: Expr) -> Result<Self> {
        if let Some(m) = expr.max_var() {
            if m >= vars.len() {
                return Err(Error::UnboundVariable(format!("#{m}")));
            }
        }
        Ok(Formula { vars, expr })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Truth value on the representative of `order`, whose coordinates
    /// are this formula's variables in order.
    pub fn eval(&self, order: &WeakOrder) -> Result<bool> {
        if order.arity() < self.vars.len() {
            return Err(Error::UnboundVariable(self.vars[order.arity()].clone()));
        }
        Ok(self.eval_ranks(order.ranks()))
    }

    pub(crate) fn eval_ranks(&self, ranks: &[u8]) -> bool {
        self.expr.eval_with(&|a, b| ranks[a].cmp(&ranks[b]))
    }

    /// Direct evaluation on a concrete rational tuple.
    pub fn eval_tuple(&self, values: &[Rational]) -> Result<bool> {
        if values.len() < self.vars.len() {
            return Err(Error::UnboundVariable(self.vars[values.len()].clone()));
        }
        Ok(self.expr.eval_with(&|a, b| values[a].cmp(&values[b])))
    }

    /// Re-expresses the formula over `vars`, which must contain every
    /// variable of this formula.
    pub fn over_vars<S: AsRef<str>>(&self, vars: &[S]) -> Result<Formula> {
        let map = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w.as_ref() == v)
                    .ok_or_else(|| Error::UnboundVariable(v.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Formula {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            expr: self.expr.remap(&map),
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.write(f, &self.vars, 0)
    }
}

pub fn parse_formula(text: &str) -> std::result::Result<Formula, ParseError> {
    let tokens = lex(text, 1)?;
    let mut p = Parser::new(&tokens, 1, VarMode::Collect(Vec::new()));
    let expr = p.formula()?;
    p.expect_end()?;
    Ok(Formula {
        vars: p.into_vars(),
        expr,
    })
}

/// Parses with a fixed variable list; unknown variables are errors.
pub fn parse_formula_with_vars<S: AsRef<str>>(
    text: &str,
    vars: &[S],
) -> std::result::Result<Formula, ParseError> {
    let declared: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    let tokens = lex(text, 1)?;
    let mut p = Parser::new(&tokens, 1, VarMode::Fixed(declared));
    let expr = p.formula()?;
    p.expect_end()?;
    Ok(Formula {
        vars: p.into_vars(),
        expr,
    })
}

pub fn eval_formula(formula: &Formula, order: &WeakOrder) -> Result<bool> {
    formula.eval(order)
}

/// The relation defined by `formula` with coordinates ordered as `vars`.
pub fn relation_of_formula<S: AsRef<str>>(
    formula: &Formula,
    vars: &[S],
) -> Result<TemporalRelation> {
    check_arity(vars.len())?;
    let f = formula.over_vars(vars)?;
    Ok(TemporalRelation::from_predicate(vars.len(), |w| {
        f.eval_ranks(w.ranks())
    }))
}

/// Whether every orbit of `relation` satisfies `formula`; the formula's
/// variables must all be among `coords`, the relation's coordinate names.
pub fn entails<S: AsRef<str>>(
    relation: &TemporalRelation,
    formula: &Formula,
    coords: &[S],
) -> Result<bool> {
    if coords.len() != relation.arity() {
        return Err(Error::ArityMismatch {
            expected: relation.arity(),
            found: coords.len(),
        });
    }
    let f = formula.over_vars(coords)?;
    Ok(relation.orbits().iter().all(|w| f.eval_ranks(w.ranks())))
}

/// A disjunction with one chain formula per orbit of `relation`.
pub fn formula_of_relation<S: AsRef<str>>(
    relation: &TemporalRelation,
    vars: &[S],
) -> Result<Formula> {
    if vars.len() != relation.arity() {
        return Err(Error::ArityMismatch {
            expected: relation.arity(),
            found: vars.len(),
        });
    }
    let disjuncts = relation
        .orbits()
        .iter()
        .map(|w| {
            let mut coords: Vec<usize> = (0..w.arity()).collect();
            coords.sort_by_key(|&c| w.rank(c));
            let atoms: Vec<Expr> = coords
                .windows(2)
                .map(|p| {
                    let op = if w.rank(p[0]) == w.rank(p[1]) {
                        Cmp::Eq
                    } else {
                        Cmp::Lt
                    };
                    Expr::Atom(p[0], op, p[1])
                })
                .collect();
            match atoms.len() {
                0 if w.arity() > 0 => Expr::Atom(0, Cmp::Eq, 0),
                0 => Expr::True,
                _ => Expr::And(atoms),
            }
        })
        .collect::<Vec<_>>();
    let expr = if disjuncts.is_empty() {
        Expr::False
    } else {
        Expr::Or(disjuncts)
    };
    Formula::new(vars.iter().map(|v| v.as_ref().to_string()).collect(), expr)
}

// ---------------------------------------------------------------------------
// Lexing and parsing, shared with the instance reader.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Cmp(Cmp),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Comma,
    Colon,
    Define,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub column: usize,
}

pub(crate) fn lex(text: &str, line: usize) -> std::result::Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |column: usize, kind| ParseError { line, column, kind };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        let simple = match c {
            '&' | '∧' => Some(Tok::And),
            '|' | '∨' => Some(Tok::Or),
            '¬' => Some(Tok::Not),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '≤' => Some(Tok::Cmp(Cmp::Le)),
            '≥' => Some(Tok::Cmp(Cmp::Ge)),
            '≠' => Some(Tok::Cmp(Cmp::Ne)),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, column });
            i += 1;
            continue;
        }
        if c == ':' {
            if chars.get(i + 1) == Some(&'=') {
                out.push(Token {
                    tok: Tok::Define,
                    column,
                });
                i += 2;
            } else {
                out.push(Token {
                    tok: Tok::Colon,
                    column,
                });
                i += 1;
            }
            continue;
        }
        if c == '!' && chars.get(i + 1) != Some(&'=') {
            out.push(Token {
                tok: Tok::Not,
                column,
            });
            i += 1;
            continue;
        }
        if matches!(c, '<' | '>' | '=' | '!') {
            let start = i;
            while i < chars.len() && matches!(chars[i], '<' | '>' | '=' | '!') {
                i += 1;
            }
            let sym: String = chars[start..i].iter().collect();
            match Cmp::from_symbol(&sym) {
                Some(op) => out.push(Token {
                    tok: Tok::Cmp(op),
                    column,
                }),
                None => return Err(err(column, ParseErrorKind::UnknownOperator(sym))),
            }
            continue;
        }
        return Err(err(column, ParseErrorKind::UnexpectedChar(c)));
    }
    Ok(out)
}

pub(crate) enum VarMode {
    Collect(Vec<String>),
    Fixed(Vec<String>),
}

pub(crate) struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    vars: VarMode,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: &'a [Token], line: usize, vars: VarMode) -> Self {
        Parser {
            tokens,
            pos: 0,
            line,
            vars,
        }
    }

    pub(crate) fn into_vars(self) -> Vec<String> {
        match self.vars {
            VarMode::Collect(v) | VarMode::Fixed(v) => v,
        }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    pub(crate) fn bump(&mut self) -> Option<&Tok> {
        let t = self.tokens.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    pub(crate) fn column(&self) -> usize {
        match self.tokens.get(self.pos) {
            Some(t) => t.column,
            None => self.tokens.last().map_or(1, |t| t.column + 1),
        }
    }

    pub(crate) fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column(),
            kind,
        }
    }

    pub(crate) fn syntax(&self, msg: impl Into<String>) -> ParseError {
        self.error(ParseErrorKind::Syntax(msg.into()))
    }

    pub(crate) fn expect(&mut self, tok: Tok, what: &str) -> std::result::Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    pub(crate) fn expect_end(&self) -> std::result::Result<(), ParseError> {
        if self.pos < self.tokens.len() {
            Err(self.syntax("unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> std::result::Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.syntax(format!("expected {what}"))),
        }
    }

    fn var_index(&mut self, name: &str, column: usize) -> std::result::Result<usize, ParseError> {
        match &mut self.vars {
            VarMode::Collect(vars) => Ok(match vars.iter().position(|v| v == name) {
                Some(i) => i,
                None => {
                    vars.push(name.to_string());
                    vars.len() - 1
                }
            }),
            VarMode::Fixed(vars) => vars.iter().position(|v| v == name).ok_or(ParseError {
                line: self.line,
                column,
                kind: ParseErrorKind::UndeclaredVariable(name.to_string()),
            }),
        }
    }

    pub(crate) fn formula(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::Or(parts)
        })
    }

    fn conjunction(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::And(parts)
        })
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "true" => {
                self.pos += 1;
                Ok(Expr::True)
            }
            Some(Tok::Ident(name)) if name == "false" => {
                self.pos += 1;
                Ok(Expr::False)
            }
            Some(Tok::Ident(_)) => self.comparison(),
            _ => Err(self.syntax("expected a comparison, `!`, `(`, `true` or `false`")),
        }
    }

    pub(crate) fn comparison(&mut self) -> std::result::Result<Expr, ParseError> {
        let lcol = self.column();
        let lhs = self.ident("a variable")?;
        let op = match self.peek() {
            Some(Tok::Cmp(op)) => *op,
            _ => return Err(self.syntax("expected a comparison operator")),
        };
        self.pos += 1;
        let rcol = self.column();
        let rhs = self.ident("a variable")?;
        let a = self.var_index(&lhs, lcol)?;
        let b = self.var_index(&rhs, rcol)?;
        Ok(Expr::Atom(a, op, b))
    }
}
