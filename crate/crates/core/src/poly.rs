//! Symbolic application of min, max, mx, its dual, pp and its dual to
//! pairs of orbits, and exact preservation tests.
//!
//! The image of a binary order operation on two concrete tuples depends
//! only on how their values interleave (and, for pp, where 0 sits among the
//! first tuple's values). A [`CombinedPattern`] records exactly that, so
//! enumerating patterns finitizes preservation over the rationals.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::order::{OrbitSpace, Ranks, WeakOrder};
use crate::rational::Rational;
use crate::relation::TemporalRelation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operation {
    Min,
    Max,
    Mx,
    DualMx,
    Pp,
    DualPp,
}

impl Operation {
    pub const ALL: [Operation; 6] = [
        Operation::Min,
        Operation::Max,
        Operation::Mx,
        Operation::DualMx,
        Operation::Pp,
        Operation::DualPp,
    ];

    /// Whether patterns must carry a zero placement.
    pub fn uses_zero(self) -> bool {
        matches!(self, Operation::Pp | Operation::DualPp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Operation::Min => "min",
            Operation::Max => "max",
            Operation::Mx => "mx",
            Operation::DualMx => "dual-mx",
            Operation::Pp => "pp",
            Operation::DualPp => "dual-pp",
        }
    }

    pub fn parse(name: &str) -> Option<Operation> {
        Operation::ALL.into_iter().find(|op| op.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the constant 0 sits relative to the first argument's levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZeroPosition {
    /// Strictly between level `j - 1` and level `j`; `Gap(0)` is below
    /// everything and `Gap(levels)` above everything.
    Gap(usize),
    /// Equal to level `j`.
    Level(usize),
}

impl ZeroPosition {
    fn reversed(self, levels: usize) -> ZeroPosition {
        match self {
            ZeroPosition::Gap(j) => ZeroPosition::Gap(levels - j),
            ZeroPosition::Level(j) => ZeroPosition::Level(levels - 1 - j),
        }
    }

    /// Whether a value at level `level` of the first argument is `<= 0`.
    fn non_positive(self, level: usize) -> bool {
        match self {
            ZeroPosition::Gap(j) => level < j,
            ZeroPosition::Level(j) => level <= j,
        }
    }
}

/// Interleaving of two orbits `p`, `q` of equal arity `k`: a weak order on
/// `2k` coordinates whose first half restricts to `p` and second half to `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CombinedPattern {
    pub first: WeakOrder,
    pub second: WeakOrder,
    pub combined: WeakOrder,
    pub zero: Option<ZeroPosition>,
}

impl CombinedPattern {
    pub fn arity(&self) -> usize {
        self.first.arity()
    }

    fn reversed(&self) -> CombinedPattern {
        CombinedPattern {
            first: self.first.reversed(),
            second: self.second.reversed(),
            combined: self.combined.reversed(),
            zero: self.zero.map(|z| z.reversed(self.first.levels())),
        }
    }

    /// Concrete integer tuples realizing the pattern; when a zero placement
    /// is present the values are shifted so that 0 lands there.
    pub fn witness_tuples(&self) -> (Vec<Rational>, Vec<Rational>) {
        let k = self.arity();
        let value = |coord: usize| 2 * self.combined.rank(coord) as i64;
        let shift = match self.zero {
            None => 0,
            Some(z) => {
                let level_value = |j: usize| {
                    let c = (0..k)
                        .find(|&i| self.first.rank(i) as usize == j)
                        .expect("occupied level");
                    value(c)
                };
                let top = self.first.levels();
                match z {
                    ZeroPosition::Level(j) => level_value(j),
                    ZeroPosition::Gap(0) => level_value(0) - 1,
                    ZeroPosition::Gap(j) if j == top => level_value(top - 1) + 1,
                    ZeroPosition::Gap(j) => level_value(j - 1) + 1,
                }
            }
        };
        let t = (0..k)
            .map(|i| Rational::from_int(value(i) - shift))
            .collect();
        let u = (k..2 * k)
            .map(|i| Rational::from_int(value(i) - shift))
            .collect();
        (t, u)
    }
}

/// Calls `f` on every interleaving of `p` with `q` (and, when `with_zero`,
/// every zero placement), in a fixed order, stopping on `Break`.
pub fn for_each_shuffle<B>(
    p: &WeakOrder,
    q: &WeakOrder,
    with_zero: bool,
    mut f: impl FnMut(&CombinedPattern) -> ControlFlow<B>,
) -> Option<B> {
    assert_eq!(p.arity(), q.arity(), "shuffled orbits must share an arity");
    let (lp, lq) = (p.levels(), q.levels());
    let mut pos_p: Ranks = SmallVec::from_elem(0, lp);
    let mut pos_q: Ranks = SmallVec::from_elem(0, lq);
    let mut emit = |pos_p: &Ranks, pos_q: &Ranks| -> ControlFlow<B> {
        let k = p.arity();
        let mut ranks: Ranks = SmallVec::with_capacity(2 * k);
        ranks.extend(p.ranks().iter().map(|&r| pos_p[r as usize]));
        ranks.extend(q.ranks().iter().map(|&r| pos_q[r as usize]));
        let mut pattern = CombinedPattern {
            first: p.clone(),
            second: q.clone(),
            combined: WeakOrder::from_canonical(ranks),
            zero: None,
        };
        if with_zero {
            for j in 0..=lp {
                pattern.zero = Some(ZeroPosition::Gap(j));
                f(&pattern)?;
                if j < lp {
                    pattern.zero = Some(ZeroPosition::Level(j));
                    f(&pattern)?;
                }
            }
            ControlFlow::Continue(())
        } else {
            f(&pattern)
        }
    };
    match shuffle_rec(0, 0, 0, lp, lq, &mut pos_p, &mut pos_q, &mut emit) {
        ControlFlow::Break(b) => Some(b),
        ControlFlow::Continue(()) => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn shuffle_rec<B>(
    a: usize,
    b: usize,
    rank: u8,
    lp: usize,
    lq: usize,
    pos_p: &mut Ranks,
    pos_q: &mut Ranks,
    emit: &mut impl FnMut(&Ranks, &Ranks) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if a == lp && b == lq {
        return emit(pos_p, pos_q);
    }
    if a < lp {
        pos_p[a] = rank;
        shuffle_rec(a + 1, b, rank + 1, lp, lq, pos_p, pos_q, emit)?;
    }
    if b < lq {
        pos_q[b] = rank;
        shuffle_rec(a, b + 1, rank + 1, lp, lq, pos_p, pos_q, emit)?;
    }
    if a < lp && b < lq {
        pos_p[a] = rank;
        pos_q[b] = rank;
        shuffle_rec(a + 1, b + 1, rank + 1, lp, lq, pos_p, pos_q, emit)?;
    }
    ControlFlow::Continue(())
}

/// Every combined pattern of `p` and `q`, collected.
pub fn shuffles(p: &WeakOrder, q: &WeakOrder, with_zero: bool) -> Vec<CombinedPattern> {
    let mut out = Vec::new();
    for_each_shuffle::<()>(p, q, with_zero, |c| {
        out.push(c.clone());
        ControlFlow::Continue(())
    });
    out
}

pub fn apply_min(c: &CombinedPattern) -> WeakOrder {
    let k = c.arity();
    let r = c.combined.ranks();
    let keys: SmallVec<[u8; 16]> = (0..k).map(|i| r[i].min(r[k + i])).collect();
    WeakOrder::from_keys(&keys)
}

/// mx via keys `(rank of the minimum, tie flag)`: mx(x, y) is alpha(min) off
/// the diagonal and beta(x) on it, with alpha(x) < beta(x) < alpha(x') for
/// every x' > x.
pub fn apply_mx(c: &CombinedPattern) -> WeakOrder {
    let k = c.arity();
    let r = c.combined.ranks();
    let keys: SmallVec<[(u8, bool); 16]> = (0..k)
        .map(|i| (r[i].min(r[k + i]), r[i] == r[k + i]))
        .collect();
    WeakOrder::from_keys(&keys)
}

/// pp via keys `(0, rank of t_i)` when `t_i <= 0` and `(1, rank of t'_i)`
/// otherwise.
///
/// Panics if the pattern has no zero placement.
pub fn apply_pp(c: &CombinedPattern) -> WeakOrder {
    let zero = c.zero.expect("pp needs a zero placement");
    let k = c.arity();
    let r = c.combined.ranks();
    let keys: SmallVec<[(u8, u8); 16]> = (0..k)
        .map(|i| {
            if zero.non_positive(c.first.rank(i) as usize) {
                (0, r[i])
            } else {
                (1, r[k + i])
            }
        })
        .collect();
    WeakOrder::from_keys(&keys)
}

/// Conjugation by negation: `(x, y) -> -op(-x, -y)`. `base` must be one of
/// min, mx, pp.
pub fn apply_dual(base: Operation, c: &CombinedPattern) -> WeakOrder {
    let flipped = c.reversed();
    let image = match base {
        Operation::Min => apply_min(&flipped),
        Operation::Mx => apply_mx(&flipped),
        Operation::Pp => apply_pp(&flipped),
        other => panic!("apply_dual expects min, mx or pp, got {other}"),
    };
    image.reversed()
}

pub fn apply(op: Operation, c: &CombinedPattern) -> WeakOrder {
    match op {
        Operation::Min => apply_min(c),
        Operation::Max => apply_dual(Operation::Min, c),
        Operation::Mx => apply_mx(c),
        Operation::DualMx => apply_dual(Operation::Mx, c),
        Operation::Pp => apply_pp(c),
        Operation::DualPp => apply_dual(Operation::Pp, c),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub first: WeakOrder,
    pub second: WeakOrder,
    pub pattern: CombinedPattern,
    pub image: WeakOrder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreservationReport {
    pub op: Operation,
    pub closed: bool,
    pub counterexample: Option<Counterexample>,
}

impl fmt::Display for PreservationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.counterexample {
            None => write!(f, "CLOSED"),
            Some(cx) => {
                let (t, u) = cx.pattern.witness_tuples();
                let show = |v: &[Rational]| {
                    v.iter()
                        .map(Rational::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                };
                write!(
                    f,
                    "NOT CLOSED: {}(({}), ({})) has orbit {} outside the relation",
                    self.op,
                    show(&t),
                    show(&u),
                    cx.image
                )
            }
        }
    }
}

/// Orbit-pair image tables are kept for arities up to this bound.
const TABLE_ARITY: usize = 4;

struct ImageTable {
    n: usize,
    cells: Vec<OnceLock<u128>>,
}

fn image_table(op: Operation, arity: usize) -> Option<(&'static OrbitSpace, &'static ImageTable)> {
    static TABLES: [OnceLock<ImageTable>; 6 * (TABLE_ARITY + 1)] =
        [const { OnceLock::new() }; 6 * (TABLE_ARITY + 1)];
    if arity > TABLE_ARITY {
        return None;
    }
    let space = OrbitSpace::get(arity)?;
    let table = TABLES[op.index() * (TABLE_ARITY + 1) + arity].get_or_init(|| {
        let n = space.len();
        ImageTable {
            n,
            cells: (0..n * n).map(|_| OnceLock::new()).collect(),
        }
    });
    Some((space, table))
}

fn image_mask(op: Operation, space: &OrbitSpace, table: &ImageTable, p: usize, q: usize) -> u128 {
    *table.cells[p * table.n + q].get_or_init(|| {
        let orbits = space.orbits();
        let mut mask = 0u128;
        for_each_shuffle::<()>(&orbits[p], &orbits[q], op.uses_zero(), |c| {
            let image = apply(op, c);
            mask |= 1u128 << space.index_of(&image).expect("image has the same arity");
            ControlFlow::Continue(())
        });
        mask
    })
}

fn first_failure(
    op: Operation,
    relation: &TemporalRelation,
    p: &WeakOrder,
    q: &WeakOrder,
) -> Option<Counterexample> {
    for_each_shuffle(p, q, op.uses_zero(), |c| {
        let image = apply(op, c);
        if relation.contains_orbit(&image) {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break(Counterexample {
                first: p.clone(),
                second: q.clone(),
                pattern: c.clone(),
                image,
            })
        }
    })
}

/// Exact preservation test. The counterexample, if any, is the first
/// failure in (first orbit, second orbit, pattern) order.
pub fn preserves(op: Operation, relation: &TemporalRelation) -> PreservationReport {
    let orbits = relation.orbits();
    let tabled = image_table(op, relation.arity()).zip(relation.orbit_mask());
    for p in orbits {
        for q in orbits {
            let suspect = match tabled {
                Some(((space, table), mask)) => {
                    let pi = space.index_of(p).expect("indexed");
                    let qi = space.index_of(q).expect("indexed");
                    image_mask(op, space, table, pi, qi) & !mask != 0
                }
                None => true,
            };
            if suspect {
                if let Some(cx) = first_failure(op, relation, p, q) {
                    return PreservationReport {
                        op,
                        closed: false,
                        counterexample: Some(cx),
                    };
                }
            }
        }
    }
    PreservationReport {
        op,
        closed: true,
        counterexample: None,
    }
}

pub fn is_preserved(op: Operation, relation: &TemporalRelation) -> bool {
    preserves(op, relation).closed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, relation_of_formula};
    use crate::order::orbit_of_tuple;

    fn w(r: &[u8]) -> WeakOrder {
        WeakOrder::new(r).unwrap()
    }

    fn rel(text: &str) -> TemporalRelation {
        let f = parse_formula(text).unwrap();
        relation_of_formula(&f, f.vars()).unwrap()
    }

    fn pattern(t: &[u8], u: &[u8], combined: &[u8], zero: Option<ZeroPosition>) -> CombinedPattern {
        CombinedPattern {
            first: w(t),
            second: w(u),
            combined: w(combined),
            zero,
        }
    }

    /// Brute-force count: weak orders on 2k points restricting to p and q.
    fn brute_shuffle_count(p: &WeakOrder, q: &WeakOrder) -> usize {
        let k = p.arity();
        let first: Vec<usize> = (0..k).collect();
        let second: Vec<usize> = (k..2 * k).collect();
        crate::order::enumerate_weak_orders(2 * k)
            .filter(|c| c.restrict(&first) == *p && c.restrict(&second) == *q)
            .count()
    }

    #[test]
    fn shuffle_counts() {
        assert_eq!(shuffles(&w(&[0, 1]), &w(&[0, 1]), false).len(), 13);
        assert_eq!(shuffles(&w(&[0]), &w(&[0]), false).len(), 3);
        assert_eq!(shuffles(&w(&[0, 0]), &w(&[0, 0]), false).len(), 3);
        assert_eq!(shuffles(&w(&[0, 1]), &w(&[0, 0]), true).len(), 5 * 5);
        for p in crate::order::enumerate_weak_orders(3) {
            for q in crate::order::enumerate_weak_orders(3) {
                let listed = shuffles(&p, &q, false);
                assert_eq!(listed.len(), brute_shuffle_count(&p, &q));
                let mut dedup = listed.clone();
                dedup.dedup();
                assert_eq!(dedup.len(), listed.len());
                for c in &listed {
                    assert_eq!(c.combined.restrict(&[0, 1, 2]), p);
                    assert_eq!(c.combined.restrict(&[3, 4, 5]), q);
                }
            }
        }
    }

    #[test]
    fn min_examples() {
        // (1,0) and (0,1) with aligned levels
        let c = pattern(&[1, 0], &[0, 1], &[1, 0, 0, 1], None);
        assert_eq!(apply_min(&c), w(&[0, 0]));
        let c = pattern(&[1, 0, 1], &[1, 0, 1], &[1, 0, 1, 1, 0, 1], None);
        assert_eq!(apply_min(&c), w(&[1, 0, 1]));
        // t' constant and below t
        let c = pattern(&[0, 1], &[0, 0], &[1, 2, 0, 0], None);
        assert_eq!(apply_min(&c), w(&[0, 0]));
    }

    #[test]
    fn mx_examples() {
        let c = pattern(&[1, 0], &[0, 1], &[1, 0, 0, 1], None);
        assert_eq!(apply_mx(&c), w(&[0, 0]));
        let c = pattern(&[0, 0], &[0, 1], &[0, 0, 0, 1], None);
        assert_eq!(apply_mx(&c), w(&[1, 0]));
        let c = pattern(&[0, 1], &[0, 1], &[0, 1, 0, 1], None);
        assert_eq!(apply_mx(&c), w(&[0, 1]));
    }

    #[test]
    fn pp_examples() {
        // t = (-1, 2), t' = (7, 0): combined order -1 < 0' < 2 < 7
        let c = pattern(&[0, 1], &[1, 0], &[0, 2, 3, 1], Some(ZeroPosition::Gap(1)));
        assert_eq!(apply_pp(&c), w(&[0, 1]));
        let t = w(&[0, 1, 1]);
        let u = w(&[1, 0, 2]);
        for c in shuffles(&t, &u, true) {
            match c.zero.unwrap() {
                ZeroPosition::Gap(0) => assert_eq!(apply_pp(&c), u),
                ZeroPosition::Gap(2) | ZeroPosition::Level(1) => assert_eq!(apply_pp(&c), t),
                _ => {}
            }
        }
    }

    #[test]
    fn dual_examples() {
        let c = pattern(&[1, 0], &[0, 1], &[1, 0, 0, 1], None);
        assert_eq!(apply_dual(Operation::Min, &c), w(&[0, 0]));
        for p in crate::order::enumerate_weak_orders(2) {
            for q in crate::order::enumerate_weak_orders(2) {
                for c in shuffles(&p, &q, true) {
                    assert_eq!(c.reversed().reversed(), c);
                    for base in [Operation::Min, Operation::Mx, Operation::Pp] {
                        let twice = apply_dual(base, &c.reversed()).reversed();
                        assert_eq!(twice, apply(base, &c));
                    }
                }
            }
        }
        // dual-mx on equal arguments reverses mx on the reversed orbit
        for p in crate::order::enumerate_weak_orders(3) {
            for c in shuffles(&p, &p, false)
                .into_iter()
                .filter(|c| (0..3).all(|i| c.combined.rank(i) == c.combined.rank(3 + i)))
            {
                assert_eq!(apply_dual(Operation::Mx, &c), p);
                assert_eq!(apply_mx(&c), p);
            }
        }
    }

    #[test]
    fn witness_tuples_realize_pattern() {
        for p in crate::order::enumerate_weak_orders(2) {
            for q in crate::order::enumerate_weak_orders(2) {
                for c in shuffles(&p, &q, true) {
                    let (t, u) = c.witness_tuples();
                    let mut all = t.clone();
                    all.extend(u.iter().copied());
                    assert_eq!(orbit_of_tuple(&all), c.combined);
                    let zero = Rational::ZERO;
                    let expected_sign: Vec<bool> = (0..2)
                        .map(|i| c.zero.unwrap().non_positive(c.first.rank(i) as usize))
                        .collect();
                    let sign: Vec<bool> = t.iter().map(|v| *v <= zero).collect();
                    assert_eq!(sign, expected_sign);
                }
            }
        }
    }

    #[test]
    fn preservation_examples() {
        assert!(is_preserved(Operation::Min, &rel("x1 > x2 | x1 > x3")));
        let u = rel("(x = y & y < z) | (x = z & z < y) | (x = y & y = z)");
        assert!(!is_preserved(Operation::Mx, &u));
        let pp_only = rel("(x = y & y < z) | (x > y & y = z)");
        assert!(is_preserved(Operation::Pp, &pp_only));
        assert!(!is_preserved(Operation::Min, &pp_only));
        assert!(!is_preserved(Operation::Mx, &pp_only));
    }

    #[test]
    fn min_fails_disequality_with_counterexample() {
        let neq = rel("x != y");
        let report = preserves(Operation::Min, &neq);
        let cx = report.counterexample.expect("min does not preserve !=");
        assert_eq!(cx.image, w(&[0, 0]));
        assert!(!neq.contains_orbit(&cx.image));
        assert_eq!(apply(Operation::Min, &cx.pattern), cx.image);
    }

    #[test]
    fn table_and_direct_scan_agree() {
        // Arity 3 uses the table; compare against an unconditional scan.
        let space = OrbitSpace::get(3).unwrap();
        for mask in [0b1011u32, 0x1fff, 0x0a5a, 0x1234, 0x0f0f] {
            let rel = TemporalRelation::from_predicate(3, |w| {
                mask & (1 << space.index_of(w).unwrap()) != 0
            });
            for op in Operation::ALL {
                let direct = rel.orbits().iter().all(|p| {
                    rel.orbits()
                        .iter()
                        .all(|q| first_failure(op, &rel, p, q).is_none())
                });
                assert_eq!(is_preserved(op, &rel), direct, "{op} on {rel}");
            }
        }
    }
}
