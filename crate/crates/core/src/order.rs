//! Weak orders: the canonical encoding of an orbit of k-tuples of rationals.
//!
//! A weak order of arity `k` stores one rank per coordinate. Ranks are
//! contiguous from 0, so two tuples lie in the same orbit under order
//! automorphisms exactly when their rank arrays coincide.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest relation arity accepted by the public API.
pub const MAX_ARITY: usize = 10;

/// Arities up to this bound get a cached, indexed orbit list.
pub const INDEXED_ARITY: usize = 6;

pub(crate) type Ranks = SmallVec<[u8; 16]>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeakOrder {
    ranks: Ranks,
}

impl WeakOrder {
    /// Validates that `ranks` occupy every level from 0 to their maximum.
    pub fn new(ranks: &[u8]) -> Result<Self> {
        let mut seen = vec![false; ranks.len()];
        for &r in ranks {
            match seen.get_mut(r as usize) {
                Some(slot) => *slot = true,
                None => return Err(Error::NotCanonical(ranks.to_vec())),
            }
        }
        let levels = seen.iter().take_while(|s| **s).count();
        if seen[levels..].iter().any(|s| *s) {
            return Err(Error::NotCanonical(ranks.to_vec()));
        }
        Ok(WeakOrder {
            ranks: ranks.iter().copied().collect(),
        })
    }

    pub(crate) fn from_canonical(ranks: Ranks) -> Self {
        debug_assert!(WeakOrder::new(&ranks).is_ok(), "{ranks:?}");
        WeakOrder { ranks }
    }

    /// Canonical ranking of arbitrary ordered keys: equal keys share a
    /// level, smaller keys get lower levels.
    pub fn from_keys<K: Ord>(keys: &[K]) -> Self {
        let mut sorted: SmallVec<[&K; 16]> = keys.iter().collect();
        sorted.sort();
        sorted.dedup();
        let ranks = keys
            .iter()
            .map(|k| sorted.binary_search(&k).expect("key present") as u8)
            .collect();
        WeakOrder { ranks }
    }

    pub fn constant(arity: usize) -> Self {
        WeakOrder {
            ranks: SmallVec::from_elem(0, arity),
        }
    }

    pub fn arity(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[u8] {
        &self.ranks
    }

    pub fn rank(&self, coord: usize) -> u8 {
        self.ranks[coord]
    }

    /// Number of distinct levels.
    pub fn levels(&self) -> usize {
        self.ranks.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Order reversal: rank `r` becomes `levels - 1 - r`.
    pub fn reversed(&self) -> Self {
        let top = self.levels().saturating_sub(1) as u8;
        WeakOrder {
            ranks: self.ranks.iter().map(|&r| top - r).collect(),
        }
    }

    /// Restriction to the given coordinates, re-canonicalized.
    pub fn restrict(&self, coords: &[usize]) -> Self {
        let keys: SmallVec<[u8; 16]> = coords.iter().map(|&c| self.ranks[c]).collect();
        WeakOrder::from_keys(&keys)
    }

    /// Coordinates grouped by level, lowest level first.
    pub fn level_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.levels()];
        for (i, &r) in self.ranks.iter().enumerate() {
            out[r as usize].push(i);
        }
        out
    }

    pub fn representative(&self) -> Vec<Rational> {
        representative(self)
    }
}

impl fmt::Debug for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for WeakOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// The orbit of a tuple: `rank[i]` counts the distinct values below `t[i]`.
pub fn orbit_of_tuple(tuple: &[Rational]) -> WeakOrder {
    WeakOrder::from_keys(tuple)
}

/// The integer tuple whose entries are the ranks themselves.
pub fn representative(order: &WeakOrder) -> Vec<Rational> {
    order
        .ranks
        .iter()
        .map(|&r| Rational::from_int(r as i64))
        .collect()
}

/// Ordered Bell (Fubini) number: the count of weak orders on `k` points.
pub fn ordered_bell(k: usize) -> u64 {
    let mut binom = vec![vec![0u64; k + 1]; k + 1];
    for n in 0..=k {
        binom[n][0] = 1;
        for j in 1..=n {
            binom[n][j] = binom[n - 1][j - 1] + if j < n { binom[n - 1][j] } else { 0 };
        }
    }
    let mut a = vec![0u64; k + 1];
    a[0] = 1;
    for n in 1..=k {
        a[n] = (1..=n).map(|j| binom[n][j] * a[n - j]).sum();
    }
    a[k]
}

/// Every weak order of arity `k`, each once, in lexicographic order of
/// rank arrays.
pub fn enumerate_weak_orders(k: usize) -> WeakOrders {
    WeakOrders {
        k,
        current: Some(SmallVec::from_elem(0, k)),
    }
}

pub struct WeakOrders {
    k: usize,
    current: Option<Ranks>,
}

impl WeakOrders {
    fn advance(k: usize, ranks: &mut Ranks) -> bool {
        for i in (0..k).rev() {
            let mut prefix_mask: u32 = 0;
            let mut prefix_max = 0usize;
            for &r in &ranks[..i] {
                prefix_mask |= 1 << r;
                prefix_max = prefix_max.max(r as usize);
            }
            let remaining = k - 1 - i;
            for v in (ranks[i] as usize + 1)..k {
                let mask = prefix_mask | (1 << v);
                let top = if i == 0 { v } else { prefix_max.max(v) };
                let missing = (top + 1) - mask.count_ones() as usize;
                if missing > remaining {
                    continue;
                }
                ranks[i] = v as u8;
                let gaps: SmallVec<[u8; 16]> = (1..=top)
                    .filter(|&x| mask & (1 << x) == 0)
                    .map(|x| x as u8)
                    .collect();
                let zeros = remaining - gaps.len();
                for slot in &mut ranks[i + 1..i + 1 + zeros] {
                    *slot = 0;
                }
                ranks[i + 1 + zeros..].copy_from_slice(&gaps);
                return true;
            }
        }
        false
    }
}

impl Iterator for WeakOrders {
    type Item = WeakOrder;

    fn next(&mut self) -> Option<WeakOrder> {
        let cur = self.current.take()?;
        let out = WeakOrder::from_canonical(cur.clone());
        let mut next = cur;
        if Self::advance(self.k, &mut next) {
            self.current = Some(next);
        }
        Some(out)
    }
}

/// All orbits of one arity with a reverse index, cached per arity.
pub struct OrbitSpace {
    orbits: Vec<WeakOrder>,
    index: HashMap<WeakOrder, u32>,
}

impl OrbitSpace {
    /// Cached space for `arity <= INDEXED_ARITY`, `None` above that.
    pub fn get(arity: usize) -> Option<&'static OrbitSpace> {
        static SPACES: [OnceLock<OrbitSpace>; INDEXED_ARITY + 1] =
            [const { OnceLock::new() }; INDEXED_ARITY + 1];
        SPACES.get(arity).map(|cell| {
            cell.get_or_init(|| {
                let orbits: Vec<WeakOrder> = enumerate_weak_orders(arity).collect();
                let index = orbits
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.clone(), i as u32))
                    .collect();
                OrbitSpace { orbits, index }
            })
        })
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

    pub fn index_of(&self, order: &WeakOrder) -> Option<usize> {
        self.index.get(order).map(|&i| i as usize)
    }
}

/// Calls `f` on every weak order of arity `k`, using the cache when present.
pub(crate) fn for_each_weak_order(k: usize, mut f: impl FnMut(&WeakOrder)) {
    match OrbitSpace::get(k) {
        Some(space) => space.orbits().iter().for_each(&mut f),
        None => enumerate_weak_orders(k).for_each(|w| f(&w)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_int(x)).collect()
    }

    #[test]
    fn orbit_examples() {
        assert_eq!(orbit_of_tuple(&q(&[1, 0])).ranks(), &[1, 0]);
        assert_eq!(orbit_of_tuple(&q(&[7, 7])).ranks(), &[0, 0]);
        assert_eq!(orbit_of_tuple(&q(&[3, 3, 5])).ranks(), &[0, 0, 1]);
        assert_eq!(orbit_of_tuple(&[]).arity(), 0);
    }

    #[test]
    fn representative_examples() {
        let w = WeakOrder::new(&[0, 1]).unwrap();
        assert_eq!(representative(&w), q(&[0, 1]));
        let w = WeakOrder::new(&[0, 0, 1]).unwrap();
        assert_eq!(representative(&w), q(&[0, 0, 1]));
        assert!(representative(&WeakOrder::constant(0)).is_empty());
    }

    #[test]
    fn rejects_gapped_ranks() {
        assert!(WeakOrder::new(&[0, 2]).is_err());
        assert!(WeakOrder::new(&[1, 1]).is_err());
        assert!(WeakOrder::new(&[3]).is_err());
        assert!(WeakOrder::new(&[1, 0, 2, 0]).is_ok());
    }

    #[test]
    fn enumeration_small_cases() {
        let one: Vec<_> = enumerate_weak_orders(1).collect();
        assert_eq!(one.len(), 1);
        let two: Vec<Vec<u8>> = enumerate_weak_orders(2)
            .map(|w| w.ranks().to_vec())
            .collect();
        assert_eq!(two, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(enumerate_weak_orders(3).count(), 13);
        assert_eq!(enumerate_weak_orders(0).count(), 1);
    }

    #[test]
    fn enumeration_matches_brute_force_and_fubini() {
        for k in 0..=6usize {
            // brute force: every rank array in [0,k)^k that is canonical
            let mut brute = Vec::new();
            let total = (k as u64).pow(k as u32).max(1);
            for code in 0..total {
                let mut c = code;
                let ranks: Vec<u8> = (0..k)
                    .map(|_| {
                        let d = (c % k as u64) as u8;
                        c /= k as u64;
                        d
                    })
                    .collect();
                if let Ok(w) = WeakOrder::new(&ranks) {
                    brute.push(w);
                }
            }
            brute.sort();
            let listed: Vec<_> = enumerate_weak_orders(k).collect();
            assert_eq!(listed, brute, "arity {k}");
            assert_eq!(listed.len() as u64, ordered_bell(k));
        }
        assert_eq!(ordered_bell(7), 47293);
        assert_eq!(ordered_bell(10), 102_247_563);
    }

    #[test]
    fn reversal_and_restriction() {
        let w = WeakOrder::new(&[0, 0, 1]).unwrap();
        assert_eq!(w.reversed().ranks(), &[1, 1, 0]);
        assert_eq!(w.reversed().reversed(), w);
        assert_eq!(w.restrict(&[2, 0]).ranks(), &[1, 0]);
        assert_eq!(w.restrict(&[0, 1]).ranks(), &[0, 0]);
    }

    #[test]
    fn orbit_space_indexes_every_orbit() {
        let space = OrbitSpace::get(4).unwrap();
        assert_eq!(space.len(), 75);
        for (i, w) in space.orbits().iter().enumerate() {
            assert_eq!(space.index_of(w), Some(i));
        }
        assert!(OrbitSpace::get(INDEXED_ARITY + 1).is_none());
    }
}
