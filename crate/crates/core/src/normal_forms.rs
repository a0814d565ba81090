//! Clausal and min-affine normal forms: synthesis from a relation and
//! evaluation back to one.
//!
//! Synthesis collects every entailed formula of the restricted syntactic
//! shape, checks that their conjunction defines the relation exactly, and
//! then greedily drops redundant conjuncts. Conjuncts refer to variables by
//! index; printing takes a slice of names.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2::{is_near_affine, min_tuple_of_ranks, near_affine_closure, BitTuple, BoolRelation};
use crate::order::{OrbitSpace, WeakOrder, INDEXED_ARITY};
use crate::poly::Operation;
use crate::relation::TemporalRelation;

/// A formula evaluated on values indexed by variable.
pub trait Conjunct {
    fn holds<V: Ord>(&self, values: &[V]) -> bool;

    /// Variables mentioned, ascending and without repeats.
    fn variables(&self) -> Vec<usize>;

    fn render<S: AsRef<str>>(&self, names: &[S]) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MinLiteral {
    pub body: usize,
    /// `head > body` when set, `head >= body` otherwise.
    pub strict: bool,
}

/// `head ∘ z_1 ∨ … ∨ head ∘ z_l` with `∘ ∈ {≥, >}`; no literals means false.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MinClause {
    pub head: usize,
    pub literals: Vec<MinLiteral>,
}

impl MinClause {
    /// Normalizes literals; `None` when the clause is a tautology.
    pub fn new(head: usize, literals: impl IntoIterator<Item = MinLiteral>) -> Option<MinClause> {
        let mut lits: Vec<MinLiteral> = Vec::new();
        for lit in literals {
            if lit.body == head {
                if lit.strict {
                    continue;
                }
                return None;
            }
            lits.push(lit);
        }
        lits.sort();
        lits.dedup();
        // head >= z subsumes head > z
        let weak: Vec<usize> = lits.iter().filter(|l| !l.strict).map(|l| l.body).collect();
        lits.retain(|l| !l.strict || !weak.contains(&l.body));
        Some(MinClause {
            head,
            literals: lits,
        })
    }

    pub fn is_false(&self) -> bool {
        self.literals.is_empty()
    }
}

impl Conjunct for MinClause {
    fn holds<V: Ord>(&self, values: &[V]) -> bool {
        let h = &values[self.head];
        self.literals.iter().any(|l| {
            let b = &values[l.body];
            if l.strict {
                h > b
            } else {
                h >= b
            }
        })
    }

    fn variables(&self) -> Vec<usize> {
        sorted_vars(std::iter::once(self.head).chain(self.literals.iter().map(|l| l.body)))
    }

    fn render<S: AsRef<str>>(&self, names: &[S]) -> String {
        if self.is_false() {
            return "false".into();
        }
        let head = names[self.head].as_ref();
        let parts: Vec<String> = self
            .literals
            .iter()
            .map(|l| {
                format!(
                    "{head} {} {}",
                    if l.strict { ">" } else { ">=" },
                    names[l.body].as_ref()
                )
            })
            .collect();
        parts.join(" | ")
    }
}

/// `head ≠ y_1 ∨ … ∨ head ≠ y_k ∨ head ≥ z_1 ∨ … ∨ head ≥ z_l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PPClause {
    pub head: usize,
    pub diseq_bodies: Vec<usize>,
    pub geq_bodies: Vec<usize>,
}

impl PPClause {
    /// Normalizes bodies; `None` when the clause is a tautology.
    pub fn new(
        head: usize,
        mut diseq_bodies: Vec<usize>,
        mut geq_bodies: Vec<usize>,
    ) -> Option<PPClause> {
        if geq_bodies.contains(&head) || diseq_bodies.iter().any(|y| geq_bodies.contains(y)) {
            return None;
        }
        diseq_bodies.retain(|&y| y != head);
        diseq_bodies.sort_unstable();
        diseq_bodies.dedup();
        geq_bodies.sort_unstable();
        geq_bodies.dedup();
        Some(PPClause {
            head,
            diseq_bodies,
            geq_bodies,
        })
    }

    pub fn is_false(&self) -> bool {
        self.diseq_bodies.is_empty() && self.geq_bodies.is_empty()
    }

    fn literal_count(&self) -> usize {
        self.diseq_bodies.len() + self.geq_bodies.len()
    }
}

impl Conjunct for PPClause {
    fn holds<V: Ord>(&self, values: &[V]) -> bool {
        let h = &values[self.head];
        self.diseq_bodies.iter().any(|&y| *h != values[y])
            || self.geq_bodies.iter().any(|&z| *h >= values[z])
    }

    fn variables(&self) -> Vec<usize> {
        sorted_vars(
            std::iter::once(self.head)
                .chain(self.diseq_bodies.iter().copied())
                .chain(self.geq_bodies.iter().copied()),
        )
    }

    fn render<S: AsRef<str>>(&self, names: &[S]) -> String {
        if self.is_false() {
            return "false".into();
        }
        let head = names[self.head].as_ref();
        let mut parts: Vec<String> = Vec::new();
        for &y in &self.diseq_bodies {
            parts.push(format!("{head} != {}", names[y].as_ref()));
        }
        for &z in &self.geq_bodies {
            parts.push(format!("{head} >= {}", names[z].as_ref()));
        }
        parts.join(" | ")
    }
}

/// Holds on `b` iff the min-tuple of `b` restricted to `scope` lies in `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MinAffineForm {
    scope: Vec<usize>,
    t: BoolRelation,
}

impl MinAffineForm {
    /// Checks near-affinity and drops `1̄` from `t`.
    pub fn new(scope: Vec<usize>, t: BoolRelation) -> Result<MinAffineForm> {
        if t.width() != scope.len() {
            return Err(Error::WidthMismatch {
                expected: scope.len(),
                found: t.width(),
            });
        }
        if !is_near_affine(&t) {
            return Err(Error::NotNearAffine);
        }
        Ok(MinAffineForm {
            scope,
            t: t.without_ones(),
        })
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn tuples(&self) -> &BoolRelation {
        &self.t
    }

    /// Same form over renamed variables.
    pub fn remap(&self, map: &[usize]) -> MinAffineForm {
        MinAffineForm {
            scope: self.scope.iter().map(|&v| map[v]).collect(),
            t: self.t.clone(),
        }
    }

    /// Zeros at the scope positions holding the scope's minimum.
    pub fn min_tuple_on_scope<V: Ord>(&self, values: &[V]) -> BitTuple {
        let mut t = BitTuple::zeros(self.scope.len());
        if let Some(min) = self.scope.iter().map(|&v| &values[v]).min() {
            for (i, &v) in self.scope.iter().enumerate() {
                t.set(i, values[v] != *min);
            }
        }
        t
    }
}

impl Conjunct for MinAffineForm {
    fn holds<V: Ord>(&self, values: &[V]) -> bool {
        !self.scope.is_empty() && self.t.contains(&self.min_tuple_on_scope(values))
    }

    fn variables(&self) -> Vec<usize> {
        sorted_vars(self.scope.iter().copied())
    }

    fn render<S: AsRef<str>>(&self, names: &[S]) -> String {
        if self.t.is_empty() {
            return "false".into();
        }
        let name = |i: usize| names[self.scope[i]].as_ref();
        let disjuncts: Vec<String> = self
            .t
            .members()
            .iter()
            .map(|t| {
                let zeros: Vec<usize> = (0..t.width()).filter(|&i| !t.get(i)).collect();
                let mut parts: Vec<String> = zeros
                    .windows(2)
                    .map(|w| format!("{} = {}", name(w[0]), name(w[1])))
                    .collect();
                for i in t.ones_indices() {
                    parts.push(format!("{} > {}", name(i), name(zeros[0])));
                }
                if parts.is_empty() {
                    parts.push(format!("{0} = {0}", name(zeros[0])));
                }
                if parts.len() > 1 && self.t.len() > 1 {
                    format!("({})", parts.join(" & "))
                } else {
                    parts.join(" & ")
                }
            })
            .collect();
        disjuncts.join(" | ")
    }
}

fn sorted_vars(vars: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = vars.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// One of the three normal-form shapes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NormalForm {
    MinClauses(Vec<MinClause>),
    PpClauses(Vec<PPClause>),
    MinAffine(Vec<MinAffineForm>),
}

impl NormalForm {
    pub fn len(&self) -> usize {
        match self {
            NormalForm::MinClauses(c) => c.len(),
            NormalForm::PpClauses(c) => c.len(),
            NormalForm::MinAffine(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn holds<V: Ord>(&self, values: &[V]) -> bool {
        match self {
            NormalForm::MinClauses(c) => c.iter().all(|x| x.holds(values)),
            NormalForm::PpClauses(c) => c.iter().all(|x| x.holds(values)),
            NormalForm::MinAffine(c) => c.iter().all(|x| x.holds(values)),
        }
    }

    /// Conjunction in formula syntax; each conjunct is parenthesized.
    pub fn render<S: AsRef<str>>(&self, names: &[S]) -> String {
        match self {
            NormalForm::MinClauses(c) => render_conjunction(c, names),
            NormalForm::PpClauses(c) => render_conjunction(c, names),
            NormalForm::MinAffine(c) => render_conjunction(c, names),
        }
    }
}

pub fn render_conjunction<C: Conjunct, S: AsRef<str>>(conjuncts: &[C], names: &[S]) -> String {
    if conjuncts.is_empty() {
        return "true".into();
    }
    let mut out = String::new();
    for (i, c) in conjuncts.iter().enumerate() {
        if i > 0 {
            out.push_str(" & ");
        }
        let _ = write!(out, "({})", c.render(names));
    }
    out
}

/// The relation defined by a conjunction over variables `0..arity`.
pub fn relation_of_conjunction<C: Conjunct>(arity: usize, conjuncts: &[C]) -> TemporalRelation {
    TemporalRelation::from_predicate(arity, |w| conjuncts.iter().all(|c| c.holds(w.ranks())))
}

pub fn relation_of_normal_form(form: &NormalForm, arity: usize) -> TemporalRelation {
    TemporalRelation::from_predicate(arity, |w| form.holds(w.ranks()))
}

fn synthesis_space(relation: &TemporalRelation) -> Result<&'static OrbitSpace> {
    let arity = relation.arity();
    if arity > INDEXED_ARITY {
        return Err(Error::ArityCap {
            arity,
            cap: INDEXED_ARITY,
        });
    }
    Ok(OrbitSpace::get(arity).expect("indexed arity"))
}

/// Keeps entailed candidates, checks they define `relation`, and prunes.
/// Candidates must arrive in pruning order; `None` when the entailed
/// conjunction is strictly larger than `relation`.
fn synthesize<C: Conjunct>(
    relation: &TemporalRelation,
    space: &OrbitSpace,
    candidates: Vec<C>,
) -> Option<Vec<C>> {
    let orbits = space.orbits();
    let outside: Vec<&WeakOrder> = orbits
        .iter()
        .filter(|w| !relation.contains_orbit(w))
        .collect();
    let mut kept: Vec<(C, Vec<u32>)> = Vec::new();
    let mut cover = vec![0u32; outside.len()];
    for c in candidates {
        if !relation.orbits().iter().all(|w| c.holds(w.ranks())) {
            continue;
        }
        let kills: Vec<u32> = (0..outside.len() as u32)
            .filter(|&i| !c.holds(outside[i as usize].ranks()))
            .collect();
        if kills.is_empty() {
            continue;
        }
        for &i in &kills {
            cover[i as usize] += 1;
        }
        kept.push((c, kills));
    }
    if cover.contains(&0) {
        return None;
    }
    let mut out = Vec::new();
    for (c, kills) in kept {
        if kills.iter().all(|&i| cover[i as usize] >= 2) {
            for &i in &kills {
                cover[i as usize] -= 1;
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Per-body choices, encoded in base 3 over the non-head variables.
fn body_choices(arity: usize, head: usize) -> impl Iterator<Item = Vec<(usize, u8)>> {
    let others: Vec<usize> = (0..arity).filter(|&v| v != head).collect();
    let total = 3usize.pow(others.len() as u32);
    (0..total).map(move |mut code| {
        let mut out = Vec::new();
        for &v in &others {
            let choice = (code % 3) as u8;
            code /= 3;
            if choice != 0 {
                out.push((v, choice));
            }
        }
        out
    })
}

fn nullary_false(relation: &TemporalRelation) -> Error {
    Error::Invalid(format!(
        "the empty nullary relation {relation} has no clausal form"
    ))
}

/// A conjunction of min-clauses defining `relation`, or
/// [`Error::NotClosed`] when the relation is not min-closed.
pub fn min_clause_form(relation: &TemporalRelation) -> Result<Vec<MinClause>> {
    let space = synthesis_space(relation)?;
    let k = relation.arity();
    if relation.is_empty() {
        return match k {
            0 => Err(nullary_false(relation)),
            _ => Ok(vec![MinClause {
                head: 0,
                literals: Vec::new(),
            }]),
        };
    }
    let mut candidates: Vec<MinClause> = (0..k)
        .flat_map(|head| {
            body_choices(k, head)
                .filter(|b| !b.is_empty())
                .map(move |bodies| MinClause {
                    head,
                    literals: bodies
                        .into_iter()
                        .map(|(body, c)| MinLiteral {
                            body,
                            strict: c == 2,
                        })
                        .collect(),
                })
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.literals
            .len()
            .cmp(&a.literals.len())
            .then_with(|| a.cmp(b))
    });
    let mut out =
        synthesize(relation, space, candidates).ok_or(Error::NotClosed(Operation::Min))?;
    out.sort();
    Ok(out)
}

/// A conjunction of pp-clauses defining `relation`, or
/// [`Error::NotClosed`] when the relation is not pp-closed.
pub fn pp_clause_form(relation: &TemporalRelation) -> Result<Vec<PPClause>> {
    let space = synthesis_space(relation)?;
    let k = relation.arity();
    if relation.is_empty() {
        return match k {
            0 => Err(nullary_false(relation)),
            _ => Ok(vec![PPClause {
                head: 0,
                diseq_bodies: Vec::new(),
                geq_bodies: Vec::new(),
            }]),
        };
    }
    let mut candidates: Vec<PPClause> = (0..k)
        .flat_map(|head| {
            body_choices(k, head)
                .filter(|b| !b.is_empty())
                .map(move |bodies| PPClause {
                    head,
                    diseq_bodies: bodies
                        .iter()
                        .filter(|(_, c)| *c == 1)
                        .map(|(v, _)| *v)
                        .collect(),
                    geq_bodies: bodies
                        .iter()
                        .filter(|(_, c)| *c == 2)
                        .map(|(v, _)| *v)
                        .collect(),
                })
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.literal_count()
            .cmp(&a.literal_count())
            .then_with(|| a.cmp(b))
    });
    let mut out = synthesize(relation, space, candidates).ok_or(Error::NotClosed(Operation::Pp))?;
    out.sort();
    Ok(out)
}

/// A conjunction of min-affine formulas defining `relation`, or
/// [`Error::NotClosed`] when the relation is not mx-closed.
pub fn min_affine_form(relation: &TemporalRelation) -> Result<Vec<MinAffineForm>> {
    let space = synthesis_space(relation)?;
    let k = relation.arity();
    if k == 0 {
        return Ok(if relation.is_empty() {
            vec![MinAffineForm {
                scope: Vec::new(),
                t: BoolRelation::empty(0),
            }]
        } else {
            Vec::new()
        });
    }
    let mut subsets: Vec<Vec<usize>> = (1u32..1 << k)
        .map(|mask| (0..k).filter(|&i| mask >> i & 1 == 1).collect())
        .collect();
    subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let candidates: Vec<MinAffineForm> = subsets
        .into_iter()
        .filter_map(|scope| {
            let tw = BoolRelation::new(
                scope.len(),
                relation.orbits().iter().map(|w| {
                    let r: Vec<u8> = scope.iter().map(|&i| w.rank(i)).collect();
                    min_tuple_of_ranks(&r)
                }),
            )
            .expect("uniform width");
            let closure = near_affine_closure(&tw);
            (closure.len() + 1 < 1 << scope.len()).then_some(MinAffineForm { scope, t: closure })
        })
        .collect();
    let mut out = synthesize(relation, space, candidates).ok_or(Error::NotClosed(Operation::Mx))?;
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_formula_with_vars, relation_of_formula};
    use crate::poly::is_preserved;

    const U: &str = "(x = y & y < z) | (x = z & z < y) | (x = y & y = z)";
    const X: &str = "(x = y & y < z) | (x = z & z < y) | (y = z & z < x)";

    fn rel(text: &str) -> TemporalRelation {
        let f = parse_formula(text).unwrap();
        relation_of_formula(&f, f.vars()).unwrap()
    }

    fn reparse(text: &str, vars: &[&str]) -> TemporalRelation {
        let f = parse_formula_with_vars(text, vars).unwrap();
        relation_of_formula(&f, vars).unwrap()
    }

    #[test]
    fn min_clause_form_of_u() {
        let u = rel(U);
        let form = min_clause_form(&u).unwrap();
        assert_eq!(
            render_conjunction(&form, &["x", "y", "z"]),
            "(x >= y | x >= z) & (y >= x) & (z >= x)"
        );
        assert_eq!(relation_of_conjunction(3, &form), u);
        let stated = reparse("(x >= y | x >= z) & y >= x & z >= x", &["x", "y", "z"]);
        assert_eq!(stated, u);
    }

    #[test]
    fn min_clause_simple_relations() {
        let less = rel("x < y");
        let form = min_clause_form(&less).unwrap();
        assert_eq!(render_conjunction(&form, &["x", "y"]), "(y > x)");
        assert_eq!(
            min_clause_form(&rel("x != y")),
            Err(Error::NotClosed(Operation::Min))
        );
        let empty = TemporalRelation::empty(2);
        let form = min_clause_form(&empty).unwrap();
        assert_eq!(render_conjunction(&form, &["x", "y"]), "(false)");
        assert_eq!(relation_of_conjunction(2, &form), empty);
        assert!(min_clause_form(&TemporalRelation::full(3))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pp_clause_simple_relations() {
        let leq = rel("x <= y");
        let form = pp_clause_form(&leq).unwrap();
        assert_eq!(render_conjunction(&form, &["x", "y"]), "(y >= x)");
        let neq = rel("x != y");
        let form = pp_clause_form(&neq).unwrap();
        assert_eq!(form.len(), 1);
        assert_eq!(relation_of_conjunction(2, &form), neq);
        assert!(form[0].geq_bodies.is_empty());
        let r = rel("(x = y & y < z) | (x > y & y = z)");
        let form = pp_clause_form(&r).unwrap();
        assert_eq!(relation_of_conjunction(3, &form), r);
    }

    #[test]
    fn min_affine_simple_relations() {
        let x = rel(X);
        let form = min_affine_form(&x).unwrap();
        assert_eq!(form.len(), 1);
        assert_eq!(form[0].scope(), &[0, 1, 2]);
        assert_eq!(
            form[0].tuples(),
            &BoolRelation::parse(3, &["001", "010", "100"])
        );
        assert_eq!(
            min_affine_form(&rel("x <= y")),
            Err(Error::NotClosed(Operation::Mx))
        );
        let less = rel("x < y");
        let form = min_affine_form(&less).unwrap();
        assert_eq!(form.len(), 1);
        assert_eq!(form[0].tuples(), &BoolRelation::parse(2, &["01"]));
    }

    #[test]
    fn rendered_forms_reparse() {
        let names = ["x", "y", "z"];
        for text in [U, X, "x < y & y < z", "x != y | y >= z", "x = y & y = z"] {
            let r = rel(text);
            for (op, form) in [
                (
                    Operation::Min,
                    min_clause_form(&r).map(NormalForm::MinClauses),
                ),
                (Operation::Pp, pp_clause_form(&r).map(NormalForm::PpClauses)),
                (
                    Operation::Mx,
                    min_affine_form(&r).map(NormalForm::MinAffine),
                ),
            ] {
                assert_eq!(form.is_ok(), is_preserved(op, &r), "{op} on {text}");
                if let Ok(form) = form {
                    assert_eq!(reparse(&form.render(&names), &names), r, "{op} on {text}");
                    assert_eq!(relation_of_normal_form(&form, 3), r);
                }
            }
        }
    }

    #[test]
    fn normal_form_semantics_edge_cases() {
        assert_eq!(
            relation_of_normal_form(&NormalForm::MinClauses(Vec::new()), 2),
            TemporalRelation::full(2)
        );
        let never = MinAffineForm::new(vec![0, 1], BoolRelation::empty(2)).unwrap();
        assert!(relation_of_conjunction(2, &[never]).is_empty());
        let dropped =
            MinAffineForm::new(vec![0, 1], BoolRelation::parse(2, &["01", "11"])).unwrap();
        assert_eq!(dropped.tuples(), &BoolRelation::parse(2, &["01"]));
        assert!(MinAffineForm::new(vec![0, 1], BoolRelation::parse(2, &["01", "10"])).is_err());
    }

    #[test]
    fn nullary_relations() {
        assert!(min_affine_form(&TemporalRelation::full(0))
            .unwrap()
            .is_empty());
        let f = min_affine_form(&TemporalRelation::empty(0)).unwrap();
        assert_eq!(relation_of_conjunction(0, &f), TemporalRelation::empty(0));
        assert!(min_clause_form(&TemporalRelation::full(0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn clause_normalization() {
        let lit = |body, strict| MinLiteral { body, strict };
        assert_eq!(MinClause::new(0, [lit(0, false), lit(1, true)]), None);
        let c =
            MinClause::new(0, [lit(0, true), lit(2, true), lit(2, false), lit(1, true)]).unwrap();
        assert_eq!(c.literals, vec![lit(1, true), lit(2, false)]);
        assert_eq!(PPClause::new(0, vec![1], vec![1]), None);
        assert_eq!(
            PPClause::new(0, vec![0, 2], vec![]).unwrap().diseq_bodies,
            vec![2]
        );
    }

    #[test]
    fn arity_two_equivalences() {
        let space = OrbitSpace::get(2).unwrap();
        for mask in 0u32..8 {
            let r = TemporalRelation::from_predicate(2, |w| {
                mask >> space.index_of(w).unwrap() & 1 == 1
            });
            assert_eq!(
                min_clause_form(&r).is_ok(),
                is_preserved(Operation::Min, &r),
                "{r}"
            );
            assert_eq!(
                pp_clause_form(&r).is_ok(),
                is_preserved(Operation::Pp, &r),
                "{r}"
            );
            assert_eq!(
                min_affine_form(&r).is_ok(),
                is_preserved(Operation::Mx, &r),
                "{r}"
            );
        }
    }
}
