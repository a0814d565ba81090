//! Brute-force reference deciders over orbits.

use std::ops::ControlFlow;

use crate::csp::{CompiledCsp, PinnedOrder};
use crate::error::{Error, Result};
use crate::instance::{Constraint, CspInstance};
use crate::order::{enumerate_weak_orders, orbit_of_tuple, WeakOrder};
use crate::poly::{for_each_shuffle, Operation};
use crate::rational::Rational;
use crate::relation::TemporalRelation;

/// Largest variable count the CSP oracle enumerates (545,835 weak orders).
pub const BRUTE_CSP_CAP: usize = 8;

/// First weak order on `num_vars` variables (in enumeration order) that
/// realizes `pin` and satisfies `pred`.
pub fn brute_csp(
    num_vars: usize,
    pin: Option<&PinnedOrder>,
    mut pred: impl FnMut(&[u8]) -> bool,
) -> Result<Option<WeakOrder>> {
    if num_vars > BRUTE_CSP_CAP {
        return Err(Error::SizeCap {
            found: num_vars,
            cap: BRUTE_CSP_CAP,
        });
    }
    Ok(enumerate_weak_orders(num_vars)
        .find(|w| pin.is_none_or(|p| p.is_realized_by(w.ranks())) && pred(w.ranks())))
}

/// Evaluates each constraint's relation on the orbit of its arguments.
pub fn constraints_hold_on(constraints: &[Constraint], ranks: &[u8]) -> bool {
    constraints.iter().all(|c| {
        let keys: Vec<u8> = c.args.iter().map(|&a| ranks[a]).collect();
        c.relation.contains_orbit(&WeakOrder::from_keys(&keys))
    })
}

pub fn brute_constraints(
    num_vars: usize,
    constraints: &[Constraint],
    pin: Option<&PinnedOrder>,
) -> Result<Option<WeakOrder>> {
    brute_csp(num_vars, pin, |r| constraints_hold_on(constraints, r))
}

pub fn brute_instance(instance: &CspInstance) -> Result<Option<WeakOrder>> {
    brute_constraints(instance.variables.len(), &instance.constraints, None)
}

pub fn brute_compiled(csp: &CompiledCsp, pin: Option<&PinnedOrder>) -> Result<Option<WeakOrder>> {
    brute_csp(csp.num_vars(), pin, |r| csp.holds(r))
}

fn mx_value(x: Rational, y: Rational) -> Rational {
    // alpha(v) = 2v, beta(v) = 2v + 1; valid on values at least 1 apart
    let two = Rational::from_int(2);
    if x == y {
        two * x + Rational::from_int(1)
    } else {
        two * x.min(y)
    }
}

/// Concrete realizations of each operation, valid on integer-valued inputs.
pub fn numeric_apply(op: Operation, t: &[Rational], u: &[Rational]) -> Vec<Rational> {
    let neg = |v: &[Rational]| v.iter().map(|&x| -x).collect::<Vec<_>>();
    match op {
        Operation::Min => t.iter().zip(u).map(|(&a, &b)| a.min(b)).collect(),
        Operation::Mx => t.iter().zip(u).map(|(&a, &b)| mx_value(a, b)).collect(),
        Operation::Pp => {
            let bound = t
                .iter()
                .chain(u)
                .map(|&v| if v < Rational::ZERO { -v } else { v })
                .max()
                .unwrap_or(Rational::ZERO);
            let shift = bound + Rational::from_int(1);
            t.iter()
                .zip(u)
                .map(|(&a, &b)| if a <= Rational::ZERO { a } else { b + shift })
                .collect()
        }
        Operation::Max => neg(&numeric_apply(Operation::Min, &neg(t), &neg(u))),
        Operation::DualMx => neg(&numeric_apply(Operation::Mx, &neg(t), &neg(u))),
        Operation::DualPp => neg(&numeric_apply(Operation::Pp, &neg(t), &neg(u))),
    }
}

/// Preservation decided by applying [`numeric_apply`] to integer witnesses
/// of every interleaving of every pair of orbits.
pub fn preserves_numeric(op: Operation, relation: &TemporalRelation) -> bool {
    relation.orbits().iter().all(|p| {
        relation.orbits().iter().all(|q| {
            for_each_shuffle(p, q, op.uses_zero(), |c| {
                let (t, u) = c.witness_tuples();
                if relation.contains_orbit(&orbit_of_tuple(&numeric_apply(op, &t, &u))) {
                    ControlFlow::Continue(())
                } else {
                    ControlFlow::Break(())
                }
            })
            .is_none()
        })
    })
}
