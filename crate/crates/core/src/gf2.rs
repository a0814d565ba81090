//! Boolean min-tuples and GF(2) linear algebra.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A fixed-width bit vector; coordinate `i` is bit `i % 64` of word `i / 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitTuple {
    width: usize,
    words: SmallVec<[u64; 1]>,
}

impl BitTuple {
    pub fn zeros(width: usize) -> Self {
        BitTuple {
            width,
            words: SmallVec::from_elem(0, width.div_ceil(64)),
        }
    }

    pub fn ones(width: usize) -> Self {
        let mut t = BitTuple::zeros(width);
        for i in 0..width {
            t.set(i, true);
        }
        t
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut t = BitTuple::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            t.set(i, b);
        }
        t
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(text: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = text
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| BitTuple::from_bools(&b))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.width, "bit {i} out of width {}", self.width);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.width, "bit {i} out of width {}", self.width);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitTuple) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitTuple) -> BitTuple {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Bitwise complement, i.e. `self ⊕ 1̄`.
    pub fn flipped(&self) -> BitTuple {
        let mut out = self.clone();
        out.xor_assign(&BitTuple::ones(self.width));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_ones(&self) -> bool {
        *self == BitTuple::ones(self.width)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitTuple) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(|i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&i| self.get(i))
    }

    /// The coordinates `coords` of `self`, in that order.
    pub fn restrict(&self, coords: &[usize]) -> BitTuple {
        let mut out = BitTuple::zeros(coords.len());
        for (j, &c) in coords.iter().enumerate() {
            out.set(j, self.get(c));
        }
        out
    }

    fn first_difference(&self, other: &BitTuple) -> Option<usize> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find(|(_, (a, b))| a != b)
            .map(|(w, (a, b))| w * 64 + (a ^ b).trailing_zeros() as usize)
    }
}

/// Coordinate-lexicographic: the first differing coordinate decides.
impl Ord for BitTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .cmp(&other.width)
            .then_with(|| match self.first_difference(other) {
                None => Ordering::Equal,
                Some(i) => self.get(i).cmp(&other.get(i)),
            })
    }
}

impl PartialOrd for BitTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A sorted, duplicate-free set of bit tuples of one width.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolRelation {
    width: usize,
    members: Vec<BitTuple>,
}

impl BoolRelation {
    pub fn new(width: usize, members: impl IntoIterator<Item = BitTuple>) -> Result<Self> {
        let mut members: Vec<BitTuple> = members.into_iter().collect();
        if let Some(bad) = members.iter().find(|t| t.width() != width) {
            return Err(Error::WidthMismatch {
                expected: width,
                found: bad.width(),
            });
        }
        members.sort();
        members.dedup();
        Ok(BoolRelation { width, members })
    }

    /// Shorthand for `0`/`1` strings; panics on malformed input.
    pub fn parse(width: usize, members: &[&str]) -> Self {
        let tuples = members
            .iter()
            .map(|s| BitTuple::parse(s).expect("0/1 string"));
        BoolRelation::new(width, tuples).expect("uniform width")
    }

    pub fn empty(width: usize) -> Self {
        BoolRelation {
            width,
            members: Vec::new(),
        }
    }

    /// Every tuple of the width except `1̄`.
    pub fn all_but_ones(width: usize) -> Self {
        assert!(width < 32, "width {width} too large to enumerate");
        let members = (0..(1u64 << width) - 1).map(|m| from_mask(width, m));
        BoolRelation::new(width, members).expect("uniform width")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn members(&self) -> &[BitTuple] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, t: &BitTuple) -> bool {
        self.members.binary_search(t).is_ok()
    }

    /// The relation with `1̄` removed.
    pub fn without_ones(&self) -> Self {
        BoolRelation {
            width: self.width,
            members: self
                .members
                .iter()
                .filter(|t| !t.is_ones())
                .cloned()
                .collect(),
        }
    }

    /// `T ∪ {1̄}`.
    fn with_ones(&self) -> Vec<BitTuple> {
        let mut out = self.members.clone();
        let ones = BitTuple::ones(self.width);
        if !self.contains(&ones) {
            out.push(ones);
        }
        out
    }

    pub fn is_subset(&self, other: &BoolRelation) -> bool {
        self.members.iter().all(|t| other.contains(t))
    }
}

impl fmt::Display for BoolRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for BoolRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn from_mask(width: usize, mask: u64) -> BitTuple {
    let mut t = BitTuple::zeros(width);
    for i in 0..width {
        t.set(i, mask >> i & 1 == 1);
    }
    t
}

/// Zeros exactly at the positions holding the minimum value.
pub fn min_tuple(values: &[Rational]) -> Result<BitTuple> {
    let min = values
        .iter()
        .min()
        .ok_or_else(|| Error::Invalid("min-tuple of an empty tuple".into()))?;
    Ok(BitTuple::from_bools(
        &values.iter().map(|v| v != min).collect::<Vec<_>>(),
    ))
}

/// Min-tuple of a rank array: zeros at rank 0.
pub(crate) fn min_tuple_of_ranks(ranks: &[u8]) -> BitTuple {
    let min = ranks.iter().copied().min().unwrap_or(0);
    BitTuple::from_bools(&ranks.iter().map(|&r| r != min).collect::<Vec<_>>())
}

/// A witness `a(s, s') = s ⊕ s' ⊕ 1̄` that leaves `T ∪ {1̄}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearAffineViolation {
    pub first: BitTuple,
    pub second: BitTuple,
    pub image: BitTuple,
}

/// First failing pair in member order, scanning `T ∪ {1̄}`.
pub fn near_affine_violation(t: &BoolRelation) -> Option<NearAffineViolation> {
    let extended = t.with_ones();
    let ones = BitTuple::ones(t.width());
    for s in &extended {
        for s2 in &extended {
            let image = s.xor(s2).xor(&ones);
            if !image.is_ones() && !t.contains(&image) {
                return Some(NearAffineViolation {
                    first: s.clone(),
                    second: s2.clone(),
                    image,
                });
            }
        }
    }
    None
}

pub fn is_near_affine(t: &BoolRelation) -> bool {
    near_affine_violation(t).is_none()
}

/// Row-reduced basis of the span of `vectors`.
fn span_basis(width: usize, vectors: impl IntoIterator<Item = BitTuple>) -> Vec<BitTuple> {
    let mut basis: Vec<(usize, BitTuple)> = Vec::new();
    for mut v in vectors {
        for (pivot, b) in &basis {
            if v.get(*pivot) {
                v.xor_assign(b);
            }
        }
        let lead = v.ones_indices().next();
        if let Some(pivot) = lead {
            for (_, b) in basis.iter_mut() {
                if b.get(pivot) {
                    b.xor_assign(&v);
                }
            }
            basis.push((pivot, v));
        }
    }
    debug_assert!(basis.iter().all(|(_, b)| b.width() == width));
    basis.sort_by_key(|(p, _)| *p);
    basis.into_iter().map(|(_, b)| b).collect()
}

fn span_members(width: usize, basis: &[BitTuple]) -> Vec<BitTuple> {
    assert!(
        basis.len() < 32,
        "span of dimension {} too large",
        basis.len()
    );
    (0..1u64 << basis.len())
        .map(|mask| {
            let mut v = BitTuple::zeros(width);
            for (i, b) in basis.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    v.xor_assign(b);
                }
            }
            v
        })
        .collect()
}

/// Smallest near-affine superset of `T`, without `1̄`.
pub fn near_affine_closure(t: &BoolRelation) -> BoolRelation {
    let n = t.width();
    let basis = span_basis(n, t.members().iter().map(BitTuple::flipped));
    let members = span_members(n, &basis)
        .into_iter()
        .map(|v| v.flipped())
        .filter(|v| !v.is_ones());
    BoolRelation::new(n, members).expect("uniform width")
}

/// Rows over GF(2), optionally with a right-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GF2System {
    pub width: usize,
    pub rows: Vec<BitTuple>,
    pub rhs: Option<Vec<bool>>,
}

impl GF2System {
    pub fn homogeneous(width: usize, rows: Vec<BitTuple>) -> Self {
        GF2System {
            width,
            rows,
            rhs: None,
        }
    }

    pub fn is_solution(&self, c: &BitTuple) -> bool {
        self.rows.iter().enumerate().all(|(i, row)| {
            let target = self.rhs.as_ref().is_some_and(|r| r[i]);
            row.dot(c) == target
        })
    }
}

/// A basis of `L = {t ⊕ 1̄ : t ∈ T ∪ {1̄}}^⊥`, so that `H·c = 0` iff
/// `c ⊕ 1̄ ∈ T ∪ {1̄}`.
pub fn parity_check(t: &BoolRelation) -> Result<GF2System> {
    if !is_near_affine(t) {
        return Err(Error::NotNearAffine);
    }
    let n = t.width();
    let basis = span_basis(n, t.members().iter().map(BitTuple::flipped));
    let solution = solve_gf2(&GF2System::homogeneous(n, basis), &[])
        .expect("homogeneous systems are feasible");
    Ok(GF2System::homogeneous(n, solution.kernel))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Solution {
    /// Free coordinates set to 0.
    pub particular: BitTuple,
    /// One vector per free coordinate, in ascending coordinate order.
    pub kernel: Vec<BitTuple>,
}

/// Gaussian elimination, lowest pivot column first. `forced` fixes
/// individual coordinates; `None` means infeasible.
pub fn solve_gf2(sys: &GF2System, forced: &[(usize, bool)]) -> Option<Gf2Solution> {
    let n = sys.width;
    let mut rows: Vec<(BitTuple, bool)> = sys
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), sys.rhs.as_ref().is_some_and(|rhs| rhs[i])))
        .collect();
    for &(coord, value) in forced {
        let mut unit = BitTuple::zeros(n);
        unit.set(coord, true);
        rows.push((unit, value));
    }
    let mut pivots: Vec<usize> = Vec::new();
    let mut next = 0;
    for col in 0..n {
        let Some(found) = (next..rows.len()).find(|&r| rows[r].0.get(col)) else {
            continue;
        };
        rows.swap(next, found);
        let (pivot_row, pivot_rhs) = rows[next].clone();
        for (r, (row, rhs)) in rows.iter_mut().enumerate() {
            if r != next && row.get(col) {
                row.xor_assign(&pivot_row);
                *rhs ^= pivot_rhs;
            }
        }
        pivots.push(col);
        next += 1;
    }
    if rows[next..].iter().any(|(_, rhs)| *rhs) {
        return None;
    }
    let mut particular = BitTuple::zeros(n);
    for (r, &col) in pivots.iter().enumerate() {
        particular.set(col, rows[r].1);
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let kernel = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = BitTuple::zeros(n);
            v.set(f, true);
            for (r, &col) in pivots.iter().enumerate() {
                if rows[r].0.get(f) {
                    v.set(col, true);
                }
            }
            v
        })
        .collect();
    Some(Gf2Solution { particular, kernel })
}
