//! CSP and QCSP instance files.
//!
//! ```text
//! # comment
//! rel NAME(v1, ..., vk) := FORMULA
//! csp ATOM (& ATOM)*
//! qcsp (forall VAR | exists VAR)+ : ATOM (& ATOM)*
//! ATOM := NAME(VAR, ..., VAR) | VAR CMP VAR
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::formula::{lex, relation_of_formula, Formula, Parser, Tok, VarMode};
use crate::relation::{check_arity, TemporalRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub params: Vec<String>,
    pub formula: Formula,
    pub relation: TemporalRelation,
}

/// One atomic constraint; `args` index the instance's variable list and may
/// repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub relation: TemporalRelation,
    pub args: Vec<usize>,
}

impl Constraint {
    pub fn new(
        label: impl Into<String>,
        relation: TemporalRelation,
        args: Vec<usize>,
    ) -> Result<Self> {
        let label = label.into();
        if relation.arity() != args.len() {
            return Err(Error::WrongArgumentCount {
                name: label,
                expected: relation.arity(),
                found: args.len(),
            });
        }
        Ok(Constraint {
            label,
            relation,
            args,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CspInstance {
    pub variables: Vec<String>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QcspInstance {
    pub variables: Vec<String>,
    pub prefix: Vec<(Quantifier, usize)>,
    pub constraints: Vec<Constraint>,
}

impl QcspInstance {
    /// Checks that the prefix is duplicate-free and quantifies every variable
    /// that occurs in a constraint.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.variables.len()];
        for &(_, v) in &self.prefix {
            let slot = seen
                .get_mut(v)
                .ok_or_else(|| Error::Invalid(format!("prefix variable #{v} out of range")))?;
            if *slot {
                return Err(Error::DuplicatePrefixVariable(self.variables[v].clone()));
            }
            *slot = true;
        }
        for c in &self.constraints {
            for &a in &c.args {
                if !seen.get(a).copied().unwrap_or(false) {
                    let name = self
                        .variables
                        .get(a)
                        .cloned()
                        .unwrap_or_else(|| format!("#{a}"));
                    return Err(Error::UnquantifiedVariable(name));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Csp(CspInstance),
    Qcsp(QcspInstance),
}

impl Instance {
    pub fn constraints(&self) -> &[Constraint] {
        match self {
            Instance::Csp(c) => &c.constraints,
            Instance::Qcsp(q) => &q.constraints,
        }
    }
}

/// A whole file: relation declarations plus at most one problem line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub relations: Vec<RelationDecl>,
    pub problem: Option<Instance>,
}

impl Document {
    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.iter().find(|r| r.name == name)
    }
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let tokens = lex(line, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut p = Parser::new(&tokens, line_no, VarMode::Collect(Vec::new()));
        let keyword = p.ident("`rel`, `csp` or `qcsp`")?;
        match keyword.as_str() {
            "rel" => {
                let decl = parse_rel(&mut p, &tokens, line_no)?;
                if doc.relation(&decl.name).is_some() {
                    return Err(Error::DuplicateRelation(decl.name));
                }
                doc.relations.push(decl);
            }
            "csp" | "qcsp" => {
                if doc.problem.is_some() {
                    return Err(p.syntax("only one `csp` or `qcsp` line is allowed").into());
                }
                doc.problem = Some(if keyword == "csp" {
                    Instance::Csp(parse_csp(&mut p, &doc)?)
                } else {
                    Instance::Qcsp(parse_qcsp(&mut p, &doc)?)
                });
            }
            other => {
                return Err(p.syntax(format!("unknown statement `{other}`")).into());
            }
        }
    }
    Ok(doc)
}

/// Parses a file that must contain a `csp` or `qcsp` line.
pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_document(text)?
        .problem
        .ok_or_else(|| Error::Invalid("no `csp` or `qcsp` line found".into()))
}

fn parse_rel(
    p: &mut Parser<'_>,
    tokens: &[crate::formula::Token],
    line: usize,
) -> Result<RelationDecl> {
    let name = p.ident("a relation name")?;
    p.expect(Tok::LParen, "`(`")?;
    let mut params = Vec::new();
    loop {
        let v = p.ident("a parameter name")?;
        if params.contains(&v) {
            return Err(p.syntax(format!("parameter `{v}` repeated")).into());
        }
        params.push(v);
        match p.bump() {
            Some(Tok::Comma) => continue,
            Some(Tok::RParen) => break,
            _ => return Err(p.syntax("expected `,` or `)`").into()),
        }
    }
    check_arity(params.len())?;
    p.expect(Tok::Define, "`:=`")?;
    let start = p.position();
    let mut body = Parser::new(&tokens[start..], line, VarMode::Fixed(params.clone()));
    let expr = body.formula()?;
    body.expect_end()?;
    let formula = Formula::new(params.clone(), expr)?;
    let relation = relation_of_formula(&formula, &params)?;
    Ok(RelationDecl {
        name,
        params,
        formula,
        relation,
    })
}

struct Scope {
    variables: Vec<String>,
}

impl Scope {
    fn var(&mut self, name: String) -> usize {
        match self.variables.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.variables.push(name);
                self.variables.len() - 1
            }
        }
    }
}

fn parse_atoms(p: &mut Parser<'_>, doc: &Document, scope: &mut Scope) -> Result<Vec<Constraint>> {
    let mut out = Vec::new();
    loop {
        let name = p.ident("a relation or variable name")?;
        match p.peek() {
            Some(Tok::LParen) => {
                p.bump();
                let mut args = Vec::new();
                loop {
                    let v = p.ident("a variable")?;
                    args.push(scope.var(v));
                    match p.bump() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RParen) => break,
                        _ => return Err(p.syntax("expected `,` or `)`").into()),
                    }
                }
                let decl = doc
                    .relation(&name)
                    .ok_or_else(|| Error::UndeclaredRelation(name.clone()))?;
                out.push(Constraint::new(name, decl.relation.clone(), args)?);
            }
            Some(Tok::Cmp(op)) => {
                let op = *op;
                p.bump();
                let rhs = p.ident("a variable")?;
                let a = scope.var(name);
                let b = scope.var(rhs);
                out.push(Constraint::new(op.symbol(), op.relation(), vec![a, b])?);
            }
            _ => return Err(p.syntax("expected `(` or a comparison operator").into()),
        }
        match p.peek() {
            Some(Tok::And) => {
                p.bump();
            }
            None => return Ok(out),
            _ => return Err(p.syntax("expected `&` or end of line").into()),
        }
    }
}

fn parse_csp(p: &mut Parser<'_>, doc: &Document) -> Result<CspInstance> {
    let mut scope = Scope {
        variables: Vec::new(),
    };
    let constraints = parse_atoms(p, doc, &mut scope)?;
    Ok(CspInstance {
        variables: scope.variables,
        constraints,
    })
}

fn parse_qcsp(p: &mut Parser<'_>, doc: &Document) -> Result<QcspInstance> {
    let mut scope = Scope {
        variables: Vec::new(),
    };
    let mut prefix = Vec::new();
    loop {
        match p.peek() {
            Some(Tok::Ident(q)) if q == "forall" || q == "exists" => {
                let q = if q == "forall" {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                p.bump();
                let v = p.ident("a variable")?;
                if scope.variables.contains(&v) {
                    return Err(Error::DuplicatePrefixVariable(v));
                }
                prefix.push((q, scope.var(v)));
            }
            Some(Tok::Colon) if !prefix.is_empty() => {
                p.bump();
                break;
            }
            _ => {
                return Err(p
                    .syntax("expected `forall VAR`, `exists VAR` or `:`")
                    .into())
            }
        }
    }
    let constraints = parse_atoms(p, doc, &mut scope)?;
    let q = QcspInstance {
        variables: scope.variables,
        prefix,
        constraints,
    };
    q.validate()?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qcsp_line() {
        let inst = parse_instance("qcsp forall y exists x : x > y").unwrap();
        let Instance::Qcsp(q) = inst else { panic!() };
        assert_eq!(q.variables, vec!["y", "x"]);
        assert_eq!(
            q.prefix,
            vec![(Quantifier::Forall, 0), (Quantifier::Exists, 1)]
        );
        assert_eq!(q.constraints.len(), 1);
        assert_eq!(q.constraints[0].args, vec![1, 0]);
        assert_eq!(q.constraints[0].label, ">");
    }

    #[test]
    fn rel_and_csp() {
        let text = "# U from the min examples\n\
                    rel U(x,y,z) := (x = y & y < z) | (x = z & z < y) | (x = y & y = z)\n\
                    \n\
                    csp U(a,b,c) & b > c   # trailing comment\n";
        let doc = parse_document(text).unwrap();
        assert_eq!(doc.relations.len(), 1);
        assert_eq!(doc.relation("U").unwrap().relation.len(), 3);
        let Some(Instance::Csp(c)) = doc.problem else {
            panic!()
        };
        assert_eq!(c.variables, vec!["a", "b", "c"]);
        assert_eq!(c.constraints.len(), 2);
    }

    #[test]
    fn undeclared_relation() {
        assert_eq!(
            parse_instance("csp V(a)").unwrap_err(),
            Error::UndeclaredRelation("V".into())
        );
    }

    #[test]
    fn arity_mismatch() {
        let err = parse_instance("rel L(x,y) := x < y\ncsp L(a,b,c)").unwrap_err();
        assert!(matches!(
            err,
            Error::WrongArgumentCount {
                expected: 2,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_prefix_variable() {
        let err = parse_instance("qcsp forall x exists x : x < x").unwrap_err();
        assert_eq!(err, Error::DuplicatePrefixVariable("x".into()));
    }

    #[test]
    fn unquantified_variable() {
        let err = parse_instance("qcsp forall x : x < y").unwrap_err();
        assert_eq!(err, Error::UnquantifiedVariable("y".into()));
    }

    #[test]
    fn repeated_arguments_are_kept() {
        let inst = parse_instance("rel L(x,y) := x <= y\ncsp L(a,a)").unwrap();
        assert_eq!(inst.constraints()[0].args, vec![0, 0]);
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_document("rel R(x,y) = x < y").is_err());
        assert!(parse_document("rel R(x,y) := x < z").is_err());
        assert!(parse_document("rel R(x,x) := x < x").is_err());
        assert!(parse_document("rel R(x) := x = x\nrel R(y) := y = y").is_err());
        assert!(parse_document("solve x < y").is_err());
        assert!(parse_document("csp x < y\ncsp y < x").is_err());
        assert!(parse_document("qcsp : x < y").is_err());
        assert!(parse_instance("rel R(x) := x = x").is_err());
        let e = parse_document("csp x < y &").unwrap_err();
        assert!(matches!(e, Error::Parse(p) if p.line == 1));
    }
}
