//! Deciding quantified instances over min- or mx-closed languages by
//! eliminating universal quantifiers from the innermost block outwards.
//!
//! After prefix normalization the sentence reads
//! `∀y_1 ∃x_1 … ∀y_n ∃x_n Ψ_n`. For `i = n, …, 1` the engine forms
//! `Φ'_i = Ψ_i ∧ ⋀_{j<i} (x_j < y_i ∧ y_j < y_i)`, solves it as a CSP, and
//! checks that the witness `w` on the outer variables satisfies
//! `Φ_i = ∀y_i ∃x_i Ψ_i` by one pinned solve per position of `y_i`
//! relative to `w`. Then `Ψ_{i-1} = Φ'_i`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::csp::{compile, CompiledCsp, Engine, PinnedOrder};
use crate::error::{Error, Result};
use crate::instance::{QcspInstance, Quantifier};
use crate::oracle::constraints_hold_on;
use crate::rational::Rational;

/// Inserts fresh dummy variables so the prefix strictly alternates
/// `∀ ∃ ∀ ∃ …` and ends with `∃`.
pub fn normalize_prefix(q: &QcspInstance) -> QcspInstance {
    let mut out = q.clone();
    let mut taken: HashSet<String> = q.variables.iter().cloned().collect();
    let mut counter = 0;
    let mut fresh = |vars: &mut Vec<String>| loop {
        let name = format!("_d{counter}");
        counter += 1;
        if taken.insert(name.clone()) {
            vars.push(name);
            return vars.len() - 1;
        }
    };
    let mut prefix = Vec::with_capacity(2 * q.prefix.len());
    let mut expect = Quantifier::Forall;
    for &(quant, v) in &q.prefix {
        if quant != expect {
            prefix.push((expect, fresh(&mut out.variables)));
        }
        prefix.push((quant, v));
        expect = flip(quant);
    }
    if expect == Quantifier::Exists {
        prefix.push((Quantifier::Exists, fresh(&mut out.variables)));
    }
    out.prefix = prefix;
    out
}

fn flip(q: Quantifier) -> Quantifier {
    match q {
        Quantifier::Forall => Quantifier::Exists,
        Quantifier::Exists => Quantifier::Forall,
    }
}

/// `(y_i, x_i)` pairs of an alternating prefix.
fn level_pairs(q: &QcspInstance) -> Vec<(usize, usize)> {
    debug_assert!(q.prefix.len().is_multiple_of(2));
    q.prefix
        .chunks(2)
        .map(|pair| {
            debug_assert!(pair[0].0 == Quantifier::Forall && pair[1].0 == Quantifier::Exists);
            (pair[0].1, pair[1].1)
        })
        .collect()
}

/// `Ψ ∧ ⋀_{j<i} (x_j < y_i ∧ y_j < y_i)` for 1-based level `i`.
pub fn build_phi_prime(psi: &CompiledCsp, levels: &[(usize, usize)], i: usize) -> CompiledCsp {
    let mut phi = psi.clone();
    let (y, _) = levels[i - 1];
    for &(yj, xj) in &levels[..i - 1] {
        phi.push_less(xj, y);
        phi.push_less(yj, y);
    }
    phi
}

/// One pin on `dom(w) ∪ {y}` per position of `y` relative to the values of
/// `w`: region `2j` is the gap below the `j`-th distinct value (the last one
/// being above all values) and region `2j + 1` equals it.
pub fn region_representatives(w: &BTreeMap<usize, Rational>, y: usize) -> Vec<PinnedOrder> {
    let mut by_value: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
    for (&v, &value) in w {
        by_value.entry(value).or_default().push(v);
    }
    let groups: Vec<Vec<usize>> = by_value.into_values().collect();
    let d = groups.len();
    (0..=2 * d)
        .map(|r| {
            let mut levels = groups.clone();
            if r % 2 == 0 {
                levels.insert(r / 2, vec![y]);
            } else {
                levels[r / 2].push(y);
            }
            PinnedOrder::new(levels).expect("disjoint levels")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniversalCheck {
    pub failing_region: Option<usize>,
    pub pinned_solves: usize,
}

impl UniversalCheck {
    pub fn holds(&self) -> bool {
        self.failing_region.is_none()
    }
}

/// Whether `w` extends, for every position of `y`, to a solution of `psi`.
/// Stops at the first failing region.
pub fn universal_check(
    w: &BTreeMap<usize, Rational>,
    psi: &CompiledCsp,
    y: usize,
) -> UniversalCheck {
    let mut pinned_solves = 0;
    for (r, pin) in region_representatives(w, y).iter().enumerate() {
        pinned_solves += 1;
        if psi.solve(Some(pin)).is_none() {
            return UniversalCheck {
                failing_region: Some(r),
                pinned_solves,
            };
        }
    }
    UniversalCheck {
        failing_region: None,
        pinned_solves,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    /// 1-based level index.
    pub level: usize,
    /// Constraint count of `Φ'_i` in the engine's native form.
    pub constraints: usize,
    pub sat: bool,
    /// Number of distinct values in `w`; `None` when `Φ'_i` is unsatisfiable.
    pub distinct: Option<usize>,
    pub check: Option<UniversalCheck>,
}

impl fmt::Display for LevelTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "level {}: sat={}",
            self.level,
            if self.sat { "YES" } else { "NO" }
        )?;
        match self.distinct {
            Some(d) => write!(f, ", |w|={d}")?,
            None => write!(f, ", |w|=-")?,
        }
        match self.check.map(|c| c.failing_region) {
            None => write!(f, ", forall=-"),
            Some(None) => write!(f, ", forall=OK"),
            Some(Some(r)) => write!(f, ", forall=FAIL[region {r}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolveTrace {
    /// Levels in processing order, `n` down to the first failure or 1.
    pub levels: Vec<LevelTrace>,
}

impl fmt::Display for SolveTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for level in &self.levels {
            writeln!(f, "{level}")?;
        }
        Ok(())
    }
}

/// Decides `q` with the given engine.
pub fn solve_qcsp(q: &QcspInstance, engine: Engine) -> Result<(bool, SolveTrace)> {
    q.validate()?;
    let nq = normalize_prefix(q);
    let compiled = compile(nq.variables.len(), &nq.constraints, engine)?;
    Ok(solve_compiled_qcsp(&compiled, &level_pairs(&nq)))
}

/// The level loop on an already compiled kernel and `(y_i, x_i)` pairs.
pub fn solve_compiled_qcsp(kernel: &CompiledCsp, levels: &[(usize, usize)]) -> (bool, SolveTrace) {
    let mut trace = SolveTrace::default();
    let mut psi = kernel.clone();
    for i in (1..=levels.len()).rev() {
        let phi = build_phi_prime(&psi, levels, i);
        let mut entry = LevelTrace {
            level: i,
            constraints: phi.constraint_count(),
            sat: false,
            distinct: None,
            check: None,
        };
        let Some(solution) = phi.solve(None) else {
            trace.levels.push(entry);
            return (false, trace);
        };
        let values = solution.values(phi.num_vars());
        let w: BTreeMap<usize, Rational> = levels[..i - 1]
            .iter()
            .flat_map(|&(y, x)| [(y, values[y]), (x, values[x])])
            .collect();
        let distinct: HashSet<Rational> = w.values().copied().collect();
        let check = universal_check(&w, &psi, levels[i - 1].0);
        entry.sat = true;
        entry.distinct = Some(distinct.len());
        entry.check = Some(check);
        trace.levels.push(entry);
        if !check.holds() {
            return (false, trace);
        }
        psi = phi;
    }
    (true, trace)
}

/// Largest prefix length the game-tree oracle accepts.
pub const BRUTE_QCSP_CAP: usize = 7;

/// Game-tree evaluation over one representative per region, evaluating the
/// original relations at the leaves.
pub fn brute_qcsp(q: &QcspInstance) -> Result<bool> {
    q.validate()?;
    if q.prefix.len() > BRUTE_QCSP_CAP {
        return Err(Error::SizeCap {
            found: q.prefix.len(),
            cap: BRUTE_QCSP_CAP,
        });
    }
    let mut values = vec![Rational::ZERO; q.variables.len()];
    Ok(game(q, 0, &mut Vec::new(), &mut values))
}

fn game(
    q: &QcspInstance,
    step: usize,
    placed: &mut Vec<Rational>,
    values: &mut [Rational],
) -> bool {
    let Some(&(quant, v)) = q.prefix.get(step) else {
        let ranks: Vec<u8> = {
            let mut sorted = placed.clone();
            sorted.sort();
            sorted.dedup();
            values
                .iter()
                .map(|x| sorted.binary_search(x).unwrap_or(0) as u8)
                .collect()
        };
        return constraints_hold_on(&q.constraints, &ranks);
    };
    let mut sorted = placed.clone();
    sorted.sort();
    sorted.dedup();
    let mut candidates = Vec::with_capacity(2 * sorted.len() + 1);
    match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) => {
            candidates.push(lo - Rational::from_int(1));
            for (i, &value) in sorted.iter().enumerate() {
                candidates.push(value);
                if let Some(&next) = sorted.get(i + 1) {
                    candidates.push(Rational::midpoint(value, next));
                }
            }
            candidates.push(hi + Rational::from_int(1));
        }
        _ => candidates.push(Rational::ZERO),
    }
    let mut branch = |c: Rational| {
        values[v] = c;
        placed.push(c);
        let result = game(q, step + 1, placed, values);
        placed.pop();
        result
    };
    match quant {
        Quantifier::Exists => candidates.into_iter().any(&mut branch),
        Quantifier::Forall => candidates.into_iter().all(&mut branch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_instance, Instance};

    fn qcsp(text: &str) -> QcspInstance {
        match parse_instance(text).unwrap() {
            Instance::Qcsp(q) => q,
            Instance::Csp(_) => panic!("expected a qcsp line"),
        }
    }

    fn prefix_names(q: &QcspInstance) -> Vec<String> {
        q.prefix
            .iter()
            .map(|&(quant, v)| format!("{quant} {}", q.variables[v]))
            .collect()
    }

    #[test]
    fn normalize_examples() {
        let q = normalize_prefix(&qcsp("qcsp exists x : x > x"));
        assert_eq!(prefix_names(&q), ["forall _d0", "exists x"]);
        let q = normalize_prefix(&qcsp("qcsp forall y : y >= y"));
        assert_eq!(prefix_names(&q), ["forall y", "exists _d0"]);
        let q = normalize_prefix(&qcsp("qcsp forall y1 forall y2 exists x : x > y1 & x > y2"));
        assert_eq!(
            prefix_names(&q),
            ["forall y1", "exists _d0", "forall y2", "exists x"]
        );
        let q = normalize_prefix(&qcsp("qcsp exists _d0 exists b : _d0 < b"));
        assert_eq!(
            prefix_names(&q),
            ["forall _d1", "exists _d0", "forall _d2", "exists b"]
        );
    }

    #[test]
    fn region_examples() {
        let w: BTreeMap<usize, Rational> = [(0, Rational::ZERO)].into_iter().collect();
        let regions = region_representatives(&w, 1);
        assert_eq!(regions.len(), 3);
        assert_eq!(regions[0].levels(), &[vec![1], vec![0]]);
        assert_eq!(regions[1].levels(), &[vec![0, 1]]);
        assert_eq!(regions[2].levels(), &[vec![0], vec![1]]);
        let w: BTreeMap<usize, Rational> = [
            (0, Rational::ZERO),
            (2, Rational::from_int(2)),
            (3, Rational::ZERO),
        ]
        .into_iter()
        .collect();
        assert_eq!(region_representatives(&w, 1).len(), 5);
        assert_eq!(region_representatives(&BTreeMap::new(), 1).len(), 1);
    }

    #[test]
    fn universal_check_examples() {
        // kernel {z < x, x < y} over z=0, y=1, x=2
        let q = qcsp("qcsp exists z forall y exists x : z < x & x < y");
        let kernel = compile(3, &q.constraints, Engine::Min).unwrap();
        let w: BTreeMap<usize, Rational> = [(0, Rational::ZERO)].into_iter().collect();
        let check = universal_check(&w, &kernel, 1);
        assert_eq!(check.failing_region, Some(0));

        let q = qcsp("qcsp forall y exists x : x > y");
        let kernel = compile(2, &q.constraints, Engine::Min).unwrap();
        assert!(universal_check(&BTreeMap::new(), &kernel, 0).holds());

        let q = qcsp("qcsp exists x forall y : x >= y");
        let kernel = compile(2, &q.constraints, Engine::Min).unwrap();
        let w: BTreeMap<usize, Rational> = [(0, Rational::ZERO)].into_iter().collect();
        assert_eq!(universal_check(&w, &kernel, 1).failing_region, Some(2));
    }

    #[test]
    fn phi_prime_shape() {
        let q = normalize_prefix(&qcsp(
            "qcsp forall y1 exists x1 forall y2 exists x2 : x1 > y1 & x2 > x1",
        ));
        let kernel = compile(q.variables.len(), &q.constraints, Engine::Min).unwrap();
        let levels = level_pairs(&q);
        assert_eq!(build_phi_prime(&kernel, &levels, 1), kernel);
        let phi = build_phi_prime(&kernel, &levels, 2);
        assert_eq!(phi.constraint_count(), kernel.constraint_count() + 2);
    }

    #[test]
    fn solve_examples() {
        for engine in [Engine::Min, Engine::Auto] {
            let (v, trace) = solve_qcsp(&qcsp("qcsp forall y exists x : x > y"), engine).unwrap();
            assert!(v);
            assert_eq!(trace.to_string(), "level 1: sat=YES, |w|=0, forall=OK\n");
            let (v, trace) = solve_qcsp(&qcsp("qcsp exists x forall y : x >= y"), engine).unwrap();
            assert!(!v);
            // y is placed above every outer value at level 2, contradicting x >= y
            assert_eq!(trace.to_string(), "level 2: sat=NO, |w|=-, forall=-\n");
            let text = "qcsp forall y1 exists x1 forall y2 exists x2 : x1 > y1 & x2 > x1 & x2 > y2";
            assert!(solve_qcsp(&qcsp(text), engine).unwrap().0);
        }
    }

    #[test]
    fn brute_examples() {
        assert!(brute_qcsp(&qcsp("qcsp forall y exists x : x > y")).unwrap());
        assert!(!brute_qcsp(&qcsp("qcsp exists x forall y : x >= y")).unwrap());
        assert!(brute_qcsp(&qcsp(
            "qcsp forall y1 exists x1 forall y2 exists x2 : x1 > y1 & x2 > x1 & x2 > y2"
        ))
        .unwrap());
        assert!(!brute_qcsp(&qcsp("qcsp exists z forall y exists x : z < x & x < y")).unwrap());
        assert!(brute_qcsp(&qcsp("qcsp forall a forall b exists c : c > a & c > b")).unwrap());
        assert!(!brute_qcsp(&qcsp("qcsp forall a exists c forall b : c > a & c > b")).unwrap());
    }
}
