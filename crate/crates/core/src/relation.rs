//! Temporal relations as finite unions of orbits.

use std::fmt;

use crate::error::{Error, Result};
use crate::order::{for_each_weak_order, orbit_of_tuple, OrbitSpace, WeakOrder, MAX_ARITY};
use crate::rational::Rational;

/// A `k`-ary temporal relation, stored as its sorted set of orbits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalRelation {
    arity: usize,
    orbits: Vec<WeakOrder>,
}

impl TemporalRelation {
    pub fn new(arity: usize, orbits: impl IntoIterator<Item = WeakOrder>) -> Result<Self> {
        let mut orbits: Vec<WeakOrder> = orbits.into_iter().collect();
        if let Some(bad) = orbits.iter().find(|w| w.arity() != arity) {
            return Err(Error::ArityMismatch {
                expected: arity,
                found: bad.arity(),
            });
        }
        orbits.sort();
        orbits.dedup();
        Ok(TemporalRelation { arity, orbits })
    }

    /// Shorthand for literal rank arrays; panics on malformed input.
    pub fn from_ranks(arity: usize, ranks: &[&[u8]]) -> Self {
        let orbits = ranks
            .iter()
            .map(|r| WeakOrder::new(r).expect("canonical rank array"));
        TemporalRelation::new(arity, orbits).expect("uniform arity")
    }

    pub fn empty(arity: usize) -> Self {
        TemporalRelation {
            arity,
            orbits: Vec::new(),
        }
    }

    /// The full relation `Q^k`.
    pub fn full(arity: usize) -> Self {
        let mut orbits = Vec::new();
        for_each_weak_order(arity, |w| orbits.push(w.clone()));
        TemporalRelation { arity, orbits }
    }

    pub(crate) fn from_sorted(arity: usize, orbits: Vec<WeakOrder>) -> Self {
        debug_assert!(orbits.windows(2).all(|p| p[0] < p[1]));
        TemporalRelation { arity, orbits }
    }

    /// All orbits of arity `k` accepted by `pred`.
    pub fn from_predicate(arity: usize, mut pred: impl FnMut(&WeakOrder) -> bool) -> Self {
        let mut orbits = Vec::new();
        for_each_weak_order(arity, |w| {
            if pred(w) {
                orbits.push(w.clone());
            }
        });
        TemporalRelation { arity, orbits }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn orbits(&self) -> &[WeakOrder] {
        &self.orbits
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn contains_orbit(&self, orbit: &WeakOrder) -> bool {
        self.orbits.binary_search(orbit).is_ok()
    }

    pub fn contains_tuple(&self, tuple: &[Rational]) -> bool {
        tuple.len() == self.arity && self.contains_orbit(&orbit_of_tuple(tuple))
    }

    /// Bitmask over the orbit space of this arity; `None` when the arity has
    /// more than 128 orbits.
    pub(crate) fn orbit_mask(&self) -> Option<u128> {
        let space = OrbitSpace::get(self.arity).filter(|s| s.len() <= 128)?;
        Some(
            self.orbits
                .iter()
                .map(|w| 1u128 << space.index_of(w).expect("indexed orbit"))
                .fold(0, |a, b| a | b),
        )
    }

    pub fn complement(&self) -> Self {
        TemporalRelation::from_predicate(self.arity, |w| !self.contains_orbit(w))
    }

    /// Image under `x -> -x`: every orbit's ranks are reversed.
    pub fn dualize(&self) -> Self {
        let orbits = self.orbits.iter().map(WeakOrder::reversed);
        TemporalRelation::new(self.arity, orbits).expect("same arity")
    }

    /// `{ t' : t' ∘ map ∈ R }` for a surjection `map: [k] -> [k']`.
    pub fn identify_coordinates(&self, map: &[usize], target_arity: usize) -> Result<Self> {
        if map.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: map.len(),
            });
        }
        let mut hit = vec![false; target_arity];
        for &m in map {
            match hit.get_mut(m) {
                Some(h) => *h = true,
                None => return Err(Error::NotSurjective(target_arity)),
            }
        }
        if hit.iter().any(|h| !h) {
            return Err(Error::NotSurjective(target_arity));
        }
        let mut out = Vec::new();
        'orbit: for w in &self.orbits {
            let mut keys = vec![u8::MAX; target_arity];
            for (i, &m) in map.iter().enumerate() {
                let r = w.rank(i);
                if keys[m] == u8::MAX {
                    keys[m] = r;
                } else if keys[m] != r {
                    continue 'orbit;
                }
            }
            out.push(WeakOrder::from_keys(&keys));
        }
        TemporalRelation::new(target_arity, out)
    }

    /// Existential projection onto `coords` (in the given order).
    pub fn project(&self, coords: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.arity];
        for &c in coords {
            match seen.get_mut(c) {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::Invalid(format!(
                        "projection coordinates {coords:?} must be distinct and below {}",
                        self.arity
                    )))
                }
            }
        }
        let orbits = self.orbits.iter().map(|w| w.restrict(coords));
        TemporalRelation::new(coords.len(), orbits)
    }

    pub fn intersect(&self, other: &TemporalRelation) -> Self {
        debug_assert_eq!(self.arity, other.arity);
        let orbits = self
            .orbits
            .iter()
            .filter(|w| other.contains_orbit(w))
            .cloned()
            .collect();
        TemporalRelation::from_sorted(self.arity, orbits)
    }
}

/// Rejects arities above [`MAX_ARITY`].
pub fn check_arity(arity: usize) -> Result<()> {
    if arity > MAX_ARITY {
        Err(Error::ArityCap {
            arity,
            cap: MAX_ARITY,
        })
    } else {
        Ok(())
    }
}

impl fmt::Debug for TemporalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TemporalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.orbits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "}}")
    }
}

pub fn dualize(relation: &TemporalRelation) -> TemporalRelation {
    relation.dualize()
}

pub fn identify_coordinates(
    relation: &TemporalRelation,
    map: &[usize],
    target_arity: usize,
) -> Result<TemporalRelation> {
    relation.identify_coordinates(map, target_arity)
}

pub fn project(relation: &TemporalRelation, coords: &[usize]) -> Result<TemporalRelation> {
    relation.project(coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(arity: usize, ranks: &[&[u8]]) -> TemporalRelation {
        TemporalRelation::from_ranks(arity, ranks)
    }

    fn u() -> TemporalRelation {
        rel(3, &[&[0, 0, 1], &[0, 1, 0], &[0, 0, 0]])
    }

    fn x() -> TemporalRelation {
        rel(3, &[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]])
    }

    #[test]
    fn dualize_examples() {
        assert_eq!(rel(2, &[&[0, 1]]).dualize(), rel(2, &[&[1, 0]]));
        assert_eq!(rel(2, &[&[0, 0]]).dualize(), rel(2, &[&[0, 0]]));
        let expected = rel(3, &[&[1, 1, 0], &[1, 0, 1], &[0, 0, 0]]);
        assert_eq!(u().dualize(), expected);
        // brute force: negate representatives and re-take orbits
        let base = u();
        let negated = base.orbits().iter().map(|w| {
            orbit_of_tuple(
                &w.representative()
                    .into_iter()
                    .map(|v| -v)
                    .collect::<Vec<_>>(),
            )
        });
        assert_eq!(TemporalRelation::new(3, negated).unwrap(), expected);
    }

    #[test]
    fn identify_examples() {
        let neq = rel(2, &[&[0, 1], &[1, 0]]);
        assert!(neq.identify_coordinates(&[0, 0], 1).unwrap().is_empty());
        let leq = rel(2, &[&[0, 0], &[0, 1]]);
        assert_eq!(
            leq.identify_coordinates(&[0, 0], 1).unwrap(),
            TemporalRelation::full(1)
        );
        // X with its first two coordinates identified: only x=y<z survives
        let collapsed = x().identify_coordinates(&[0, 0, 1], 2).unwrap();
        assert_eq!(collapsed, rel(2, &[&[0, 1]]));
        assert!(x().identify_coordinates(&[0, 0, 0], 2).is_err());
    }

    #[test]
    fn project_examples() {
        let less = rel(2, &[&[0, 1]]);
        assert_eq!(less.project(&[0]).unwrap(), TemporalRelation::full(1));
        assert_eq!(u().project(&[0, 1]).unwrap(), rel(2, &[&[0, 0], &[0, 1]]));
        assert_eq!(
            TemporalRelation::empty(3).project(&[0, 1]).unwrap(),
            TemporalRelation::empty(2)
        );
        assert!(u().project(&[0, 0]).is_err());
    }

    #[test]
    fn identity_identification_roundtrip() {
        let ident = [0, 1, 2];
        assert_eq!(
            u().identify_coordinates(&ident, 3)
                .unwrap()
                .project(&ident)
                .unwrap(),
            u()
        );
    }

    #[test]
    fn complement_and_full() {
        assert_eq!(TemporalRelation::full(3).len(), 13);
        assert_eq!(u().complement().len(), 10);
        assert_eq!(u().complement().complement(), u());
        assert!(check_arity(MAX_ARITY).is_ok());
        assert!(check_arity(MAX_ARITY + 1).is_err());
    }

    #[test]
    fn arity_mismatch_rejected() {
        let w = WeakOrder::new(&[0, 1]).unwrap();
        assert!(TemporalRelation::new(3, [w]).is_err());
    }
}
