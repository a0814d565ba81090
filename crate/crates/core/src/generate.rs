//! Seeded random instances in the min-closed and mx-closed languages.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::csp::{Engine, MinCsp, MxCsp, PinnedOrder};
use crate::gf2::{near_affine_closure, BitTuple, BoolRelation};
use crate::instance::{Constraint, QcspInstance, Quantifier};
use crate::normal_forms::{relation_of_conjunction, MinAffineForm, MinClause, MinLiteral};
use crate::order::{OrbitSpace, WeakOrder};
use crate::relation::TemporalRelation;

/// `count` distinct variables from `0..num_vars`.
fn pick_distinct<R: Rng>(rng: &mut R, num_vars: usize, count: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..num_vars).collect();
    all.shuffle(rng);
    all.truncate(count);
    all
}

/// A non-tautological clause with head and bodies among `vars`.
pub fn random_min_clause<R: Rng>(rng: &mut R, vars: &[usize], max_literals: usize) -> MinClause {
    let head = vars[rng.gen_range(0..vars.len())];
    let others: Vec<usize> = vars.iter().copied().filter(|&v| v != head).collect();
    let count = if others.is_empty() {
        0
    } else {
        rng.gen_range(1..=others.len().min(max_literals))
    };
    let bodies = others.choose_multiple(rng, count);
    let literals: Vec<MinLiteral> = bodies
        .map(|&body| MinLiteral {
            body,
            strict: rng.gen_bool(0.5),
        })
        .collect();
    MinClause::new(head, literals).expect("bodies differ from the head")
}

pub fn random_min_csp<R: Rng>(rng: &mut R, max_vars: usize, max_clauses: usize) -> MinCsp {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(0..=max_clauses);
    let vars: Vec<usize> = (0..n).collect();
    let clauses = (0..m).map(|_| random_min_clause(rng, &vars, 3)).collect();
    MinCsp::new(n, clauses)
}

/// `(L ⊕ 1̄) \ {1̄}` for a random subspace `L`; empty with small probability.
pub fn random_near_affine<R: Rng>(rng: &mut R, width: usize) -> BoolRelation {
    let dim = if rng.gen_bool(0.1) {
        0
    } else {
        rng.gen_range(1..=width)
    };
    let generators = (0..dim).map(|_| {
        let bits: Vec<bool> = (0..width).map(|_| rng.gen_bool(0.5)).collect();
        BitTuple::from_bools(&bits).flipped()
    });
    near_affine_closure(&BoolRelation::new(width, generators).expect("uniform width"))
}

pub fn random_min_affine_form<R: Rng>(
    rng: &mut R,
    num_vars: usize,
    max_scope: usize,
) -> MinAffineForm {
    let width = rng.gen_range(1..=num_vars.min(max_scope));
    let scope = pick_distinct(rng, num_vars, width);
    MinAffineForm::new(scope, random_near_affine(rng, width)).expect("near-affine by construction")
}

pub fn random_mx_csp<R: Rng>(
    rng: &mut R,
    max_vars: usize,
    max_conjuncts: usize,
    max_scope: usize,
) -> MxCsp {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(0..=max_conjuncts);
    let conjuncts = (0..m)
        .map(|_| random_min_affine_form(rng, n, max_scope))
        .collect();
    MxCsp::new(n, conjuncts)
}

pub fn random_weak_order<R: Rng>(rng: &mut R, arity: usize) -> WeakOrder {
    let keys: Vec<usize> = (0..arity).map(|_| rng.gen_range(0..arity.max(1))).collect();
    WeakOrder::from_keys(&keys)
}

/// A pin on a random non-empty subset of `0..num_vars`.
pub fn random_pin<R: Rng>(rng: &mut R, num_vars: usize) -> PinnedOrder {
    let size = rng.gen_range(1..=num_vars);
    let vars = pick_distinct(rng, num_vars, size);
    let order = random_weak_order(rng, size);
    let levels = order
        .level_members()
        .into_iter()
        .map(|level| level.into_iter().map(|i| vars[i]).collect())
        .collect();
    PinnedOrder::new(levels).expect("distinct variables")
}

/// A relation-level constraint in `engine`'s language over up to
/// `max_arity` argument positions; arguments may repeat.
pub fn random_constraint<R: Rng>(
    rng: &mut R,
    engine: Engine,
    num_vars: usize,
    max_arity: usize,
) -> Constraint {
    let arity = rng.gen_range(2.min(max_arity)..=max_arity);
    let local: Vec<usize> = (0..arity).collect();
    let (label, relation) = match engine {
        Engine::Mx => {
            let form = random_min_affine_form(rng, arity, arity);
            ("A", relation_of_conjunction(arity, &[form]))
        }
        _ => {
            let count = rng.gen_range(1..=2);
            let clauses: Vec<MinClause> = (0..count)
                .map(|_| random_min_clause(rng, &local, 3))
                .collect();
            ("C", relation_of_conjunction(arity, &clauses))
        }
    };
    let args = (0..arity).map(|_| rng.gen_range(0..num_vars)).collect();
    Constraint::new(label, relation, args).expect("arity matches")
}

/// A QCSP instance with a random quantifier prefix over all of its
/// variables and constraints in `engine`'s language (`Auto` picks one).
pub fn random_qcsp<R: Rng>(
    rng: &mut R,
    engine: Engine,
    max_vars: usize,
    max_constraints: usize,
) -> QcspInstance {
    let engine = match engine {
        Engine::Auto => {
            if rng.gen_bool(0.5) {
                Engine::Min
            } else {
                Engine::Mx
            }
        }
        e => e,
    };
    let n = rng.gen_range(1..=max_vars);
    let variables: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let prefix = order
        .into_iter()
        .map(|v| {
            let q = if rng.gen_bool(0.5) {
                Quantifier::Forall
            } else {
                Quantifier::Exists
            };
            (q, v)
        })
        .collect();
    let m = rng.gen_range(1..=max_constraints);
    let constraints = (0..m)
        .map(|_| random_constraint(rng, engine, n, 3.min(n).max(1)))
        .collect();
    QcspInstance {
        variables,
        prefix,
        constraints,
    }
}

/// A random subset of the orbits of `arity`.
pub fn random_relation<R: Rng>(rng: &mut R, arity: usize) -> TemporalRelation {
    let density: f64 = rng.gen_range(0.05..0.95);
    let space = OrbitSpace::get(arity).expect("indexed arity");
    TemporalRelation::new(
        arity,
        space
            .orbits()
            .iter()
            .filter(|_| rng.gen_bool(density))
            .cloned(),
    )
    .expect("uniform arity")
}

/// A true min-closed sentence `∀y_1 ∃x_1 … ∀y_b ∃x_b`: every clause has an
/// existential head and some body quantified before it, so choosing each
/// `x_i` above everything earlier satisfies all clauses.
pub fn smoke_qcsp<R: Rng>(rng: &mut R, blocks: usize, clauses: usize) -> QcspInstance {
    let n = 2 * blocks;
    let variables: Vec<String> = (0..blocks)
        .flat_map(|i| [format!("y{}", i + 1), format!("x{}", i + 1)])
        .collect();
    let prefix = (0..n)
        .map(|v| {
            (
                if v % 2 == 0 {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                },
                v,
            )
        })
        .collect();
    let constraints = (0..clauses)
        .map(|_| {
            let head = 2 * rng.gen_range(0..blocks) + 1;
            let earlier = rng.gen_range(0..head);
            let mut args = vec![head, earlier];
            for _ in 0..rng.gen_range(0..=2) {
                let v = rng.gen_range(0..n);
                if !args.contains(&v) {
                    args.push(v);
                }
            }
            let literals: Vec<MinLiteral> = (1..args.len())
                .map(|body| MinLiteral {
                    body,
                    strict: rng.gen_bool(0.5),
                })
                .collect();
            let clause = MinClause::new(0, literals).expect("distinct arguments");
            let relation = relation_of_conjunction(args.len(), &[clause]);
            Constraint::new("C", relation, args).expect("arity matches")
        })
        .collect();
    QcspInstance {
        variables,
        prefix,
        constraints,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::is_near_affine;
    use crate::poly::{is_preserved, Operation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_languages_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            assert!(is_near_affine(&random_near_affine(&mut rng, 4)));
            let c = random_constraint(&mut rng, Engine::Min, 5, 3);
            assert!(is_preserved(Operation::Min, &c.relation));
            let c = random_constraint(&mut rng, Engine::Mx, 5, 3);
            assert!(is_preserved(Operation::Mx, &c.relation));
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = random_qcsp(&mut ChaCha8Rng::seed_from_u64(3), Engine::Auto, 6, 5);
        let b = random_qcsp(&mut ChaCha8Rng::seed_from_u64(3), Engine::Auto, 6, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn pins_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pin = random_pin(&mut rng, 5);
            let total: usize = pin.levels().iter().map(Vec::len).sum();
            assert!((1..=5).contains(&total));
        }
    }
}
