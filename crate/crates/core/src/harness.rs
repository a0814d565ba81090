//! Seeded differential fuzzing against the oracles, and the regression
//! suite of known facts about concrete relations.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csp::{
    compile, solve_min_csp, solve_mx_csp, CompiledCsp, Engine, LayeredSolution, PinnedOrder,
};
use crate::error::Result;
use crate::formula::{parse_formula, parse_formula_with_vars, relation_of_formula};
use crate::generate::{
    random_constraint, random_min_csp, random_mx_csp, random_pin, random_qcsp, random_relation,
};
use crate::normal_forms::{
    min_affine_form, min_clause_form, pp_clause_form, relation_of_conjunction, render_conjunction,
};
use crate::oracle::{brute_compiled, brute_constraints, preserves_numeric, BRUTE_CSP_CAP};
use crate::order::WeakOrder;
use crate::poly::{apply, is_preserved, preserves, Operation};
use crate::qcsp::{brute_qcsp, solve_qcsp, BRUTE_QCSP_CAP};
use crate::relation::TemporalRelation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FuzzMode {
    Csp,
    Qcsp,
    NormalForm,
    Preserve,
}

impl FuzzMode {
    pub fn name(self) -> &'static str {
        match self {
            FuzzMode::Csp => "csp",
            FuzzMode::Qcsp => "qcsp",
            FuzzMode::NormalForm => "normal-form",
            FuzzMode::Preserve => "preserve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: u64,
    pub max_vars: usize,
    pub max_constraints: usize,
    pub engine: Engine,
    pub mode: FuzzMode,
}

impl FuzzConfig {
    pub fn new(mode: FuzzMode, engine: Engine, seed: u64, trials: u64) -> FuzzConfig {
        let (max_vars, max_constraints) = match mode {
            FuzzMode::Csp => (6, 12),
            FuzzMode::Qcsp => (6, 5),
            FuzzMode::NormalForm => (4, 0),
            FuzzMode::Preserve => (3, 0),
        };
        FuzzConfig {
            seed,
            trials,
            max_vars,
            max_constraints,
            engine,
            mode,
        }
    }

    /// Variable bound clamped to what the mode's oracle can enumerate.
    fn var_cap(&self) -> usize {
        let cap = match self.mode {
            FuzzMode::Csp => BRUTE_CSP_CAP,
            FuzzMode::Qcsp => BRUTE_QCSP_CAP,
            FuzzMode::NormalForm => 4,
            FuzzMode::Preserve => 3,
        };
        self.max_vars.clamp(1, cap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzReport {
    pub mode: FuzzMode,
    pub trials: u64,
    pub agreements: u64,
    pub mismatches: Vec<Mismatch>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// `key=value` records, one per line.
    pub fn structured(&self) -> String {
        let mut out = format!(
            "mode={} trials={} agree={} mismatches={}\n",
            self.mode.name(),
            self.trials,
            self.agreements,
            self.mismatches.len()
        );
        for m in &self.mismatches {
            out.push_str(&format!("mismatch seed={} detail={:?}\n", m.seed, m.detail));
        }
        out
    }
}

impl fmt::Display for FuzzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}/{} agree", self.agreements, self.trials)?;
        for m in &self.mismatches {
            writeln!(
                f,
                "mismatch (replay with --seed {} --trials 1): {}",
                m.seed, m.detail
            )?;
        }
        Ok(())
    }
}

/// Runs every trial on its own generator seeded with `seed + index`, in
/// parallel, and reports in index order.
pub fn run_fuzz(config: &FuzzConfig) -> FuzzReport {
    let outcomes: Vec<(u64, Option<String>)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let seed = config.seed.wrapping_add(i);
            (seed, run_trial(config, seed))
        })
        .collect();
    let mismatches: Vec<Mismatch> = outcomes
        .into_iter()
        .filter_map(|(seed, m)| m.map(|detail| Mismatch { seed, detail }))
        .collect();
    FuzzReport {
        mode: config.mode,
        trials: config.trials,
        agreements: config.trials - mismatches.len() as u64,
        mismatches,
    }
}

/// One trial; `Some(description)` on disagreement.
pub fn run_trial(config: &FuzzConfig, seed: u64) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engine = match config.engine {
        Engine::Auto => {
            if rng.gen_bool(0.5) {
                Engine::Min
            } else {
                Engine::Mx
            }
        }
        e => e,
    };
    let max_vars = config.var_cap();
    match config.mode {
        FuzzMode::Csp => csp_trial(&mut rng, engine, max_vars, config.max_constraints),
        FuzzMode::Qcsp => qcsp_trial(&mut rng, config.engine, max_vars, config.max_constraints),
        FuzzMode::NormalForm => normal_form_trial(&mut rng, max_vars),
        FuzzMode::Preserve => preserve_trial(&mut rng, max_vars),
    }
}

/// Checks a solver answer against the oracle and re-verifies witnesses.
pub fn check_csp_answer(
    csp: &CompiledCsp,
    pin: Option<&PinnedOrder>,
    answer: Option<&LayeredSolution>,
    oracle: Option<&WeakOrder>,
) -> Option<String> {
    match (answer, oracle) {
        (None, None) => None,
        (Some(sol), Some(_)) => {
            let levels = sol.levels(csp.num_vars());
            if !csp.holds(&levels) {
                Some(format!("witness {:?} violates a constraint", sol.layers))
            } else if pin.is_some_and(|p| !p.is_realized_by(&levels)) {
                Some(format!("witness {:?} does not realize the pin", sol.layers))
            } else {
                None
            }
        }
        (Some(sol), None) => Some(format!("solver SAT {:?}, oracle UNSAT", sol.layers)),
        (None, Some(w)) => Some(format!("solver UNSAT, oracle SAT {w}")),
    }
}

fn csp_trial(
    rng: &mut ChaCha8Rng,
    engine: Engine,
    max_vars: usize,
    max_constraints: usize,
) -> Option<String> {
    let csp = if rng.gen_bool(0.5) {
        // native form
        match engine {
            Engine::Mx => CompiledCsp::Mx(random_mx_csp(rng, max_vars, max_constraints.min(8), 4)),
            _ => CompiledCsp::Min(random_min_csp(rng, max_vars, max_constraints)),
        }
    } else {
        // relation-level constraints with repeated arguments, compiled
        let n = rng.gen_range(1..=max_vars);
        let m = rng.gen_range(0..=max_constraints.min(8));
        let constraints: Vec<_> = (0..m)
            .map(|_| random_constraint(rng, engine, n, 4))
            .collect();
        let csp = match compile(n, &constraints, engine) {
            Ok(c) => c,
            Err(e) => return Some(format!("compile failed: {e}")),
        };
        let pin = rng.gen_bool(0.5).then(|| random_pin(rng, n));
        let oracle = brute_constraints(n, &constraints, pin.as_ref()).expect("within cap");
        let answer = csp.solve(pin.as_ref());
        let verdict_differs = answer.is_some() != oracle.is_some();
        let witness_bad = answer.as_ref().is_some_and(|s| {
            let values = s.values(n);
            !crate::csp::constraints_hold(&constraints, &values)
        });
        let pin_bad = answer
            .as_ref()
            .zip(pin.as_ref())
            .is_some_and(|(s, p)| !p.is_realized_by(&s.levels(n)));
        return (verdict_differs || witness_bad || pin_bad).then(|| {
            format!(
                "compiled instance: solver {:?}, oracle {:?}",
                answer.map(|s| s.layers),
                oracle.map(|w| w.to_string())
            )
        });
    };
    let pin = rng.gen_bool(0.5).then(|| random_pin(rng, csp.num_vars()));
    let answer = match &csp {
        CompiledCsp::Min(c) => solve_min_csp(c, pin.as_ref()),
        CompiledCsp::Mx(c) => solve_mx_csp(c, pin.as_ref()),
    };
    let oracle = brute_compiled(&csp, pin.as_ref()).expect("within cap");
    check_csp_answer(&csp, pin.as_ref(), answer.as_ref(), oracle.as_ref())
}

fn qcsp_trial(
    rng: &mut ChaCha8Rng,
    engine: Engine,
    max_vars: usize,
    max_constraints: usize,
) -> Option<String> {
    let q = random_qcsp(rng, engine, max_vars, max_constraints.max(1));
    let expected = match brute_qcsp(&q) {
        Ok(v) => v,
        Err(e) => return Some(format!("oracle failed: {e}")),
    };
    match solve_qcsp(&q, engine) {
        Ok((got, _)) if got == expected => None,
        Ok((got, trace)) => Some(format!(
            "solver {got}, oracle {expected}; trace {}",
            trace.to_string().trim_end()
        )),
        Err(e) => Some(format!("solver failed: {e}")),
    }
}

/// The three closure/normal-form equivalences, plus soundness of every
/// synthesized form.
pub fn check_normal_forms(relation: &TemporalRelation) -> Option<String> {
    let k = relation.arity();
    let checks = [
        (
            Operation::Min,
            min_clause_form(relation).map(|f| relation_of_conjunction(k, &f)),
        ),
        (
            Operation::Pp,
            pp_clause_form(relation).map(|f| relation_of_conjunction(k, &f)),
        ),
        (
            Operation::Mx,
            min_affine_form(relation).map(|f| relation_of_conjunction(k, &f)),
        ),
    ];
    for (op, result) in checks {
        let closed = is_preserved(op, relation);
        match result {
            Ok(defined) if !closed => {
                return Some(format!(
                    "{op}: form found for non-closed {relation}, defines {defined}"
                ))
            }
            Ok(defined) if defined != *relation => {
                return Some(format!("{op}: form defines {defined}, not {relation}"))
            }
            Err(e) if closed => {
                return Some(format!("{op}: closed {relation} but synthesis failed: {e}"))
            }
            _ => {}
        }
    }
    None
}

fn normal_form_trial(rng: &mut ChaCha8Rng, max_vars: usize) -> Option<String> {
    let arity = rng.gen_range(1..=max_vars);
    check_normal_forms(&random_relation(rng, arity))
}

fn preserve_trial(rng: &mut ChaCha8Rng, max_vars: usize) -> Option<String> {
    let arity = rng.gen_range(1..=max_vars);
    let relation = random_relation(rng, arity);
    for op in Operation::ALL {
        let symbolic = is_preserved(op, &relation);
        if symbolic != preserves_numeric(op, &relation) {
            return Some(format!(
                "{op} on {relation}: symbolic {symbolic}, numeric {}",
                !symbolic
            ));
        }
    }
    None
}

/// Formula texts for the fixture relations; tests may corrupt them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixtures {
    pub le: String,
    pub lt: String,
    pub ne: String,
    pub u: String,
    pub x: String,
    pub disjunction: String,
    pub pp_only: String,
    pub u_clauses: String,
}

impl Default for Fixtures {
    fn default() -> Self {
        Fixtures {
            le: "x <= y".into(),
            lt: "x < y".into(),
            ne: "x != y".into(),
            u: "(x = y & y < z) | (x = z & z < y) | (x = y & y = z)".into(),
            x: "(x = y & y < z) | (x = z & z < y) | (y = z & y < x)".into(),
            disjunction: "x1 > x2 | x1 > x3".into(),
            pp_only: "(x = y & y < z) | (x > y & y = z)".into(),
            u_clauses: "(x >= y | x >= z) & (y >= x) & (z >= x)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for FactResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        )?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

fn fixture_relation(text: &str) -> Result<TemporalRelation> {
    let f = parse_formula(text)?;
    relation_of_formula(&f, f.vars())
}

/// Names of every fact, in run order.
pub const FACT_NAMES: [&str; 13] = [
    "min preserves <=",
    "min preserves <",
    "min preserves U",
    "min preserves x1>x2 | x1>x3",
    "min fails != via (1,0),(0,1) -> (0,0)",
    "mx fails <=",
    "mx fails U",
    "mx preserves X",
    "mx preserves <",
    "pp preserves the pp-only relation",
    "min fails the pp-only relation",
    "mx fails the pp-only relation",
    "min-clause form of U defines U",
];

fn evaluate_fact(name: &str, fx: &Fixtures) -> Result<(bool, String)> {
    let closed = |op: Operation, text: &str| -> Result<(bool, String)> {
        let report = preserves(op, &fixture_relation(text)?);
        Ok((report.closed, report.to_string()))
    };
    let fails = |op: Operation, text: &str| -> Result<(bool, String)> {
        let report = preserves(op, &fixture_relation(text)?);
        Ok((!report.closed, report.to_string()))
    };
    match name {
        "min preserves <=" => closed(Operation::Min, &fx.le),
        "min preserves <" => closed(Operation::Min, &fx.lt),
        "min preserves U" => closed(Operation::Min, &fx.u),
        "min preserves x1>x2 | x1>x3" => closed(Operation::Min, &fx.disjunction),
        "min fails != via (1,0),(0,1) -> (0,0)" => {
            let ne = fixture_relation(&fx.ne)?;
            let report = preserves(Operation::Min, &ne);
            let w = |r: &[u8]| WeakOrder::new(r).expect("canonical");
            let pair_ok = report.counterexample.as_ref().is_some_and(|cx| {
                let pair = [cx.first.clone(), cx.second.clone()];
                pair.contains(&w(&[1, 0])) && pair.contains(&w(&[0, 1])) && cx.image == w(&[0, 0])
            });
            // the aligned interleaving of (1,0) and (0,1) maps to (0,0) outside the relation
            let aligned = crate::poly::shuffles(&w(&[1, 0]), &w(&[0, 1]), false)
                .into_iter()
                .find(|c| c.combined == w(&[1, 0, 0, 1]))
                .map(|c| apply(Operation::Min, &c));
            let passed = pair_ok && aligned == Some(w(&[0, 0])) && !ne.contains_orbit(&w(&[0, 0]));
            Ok((passed, report.to_string()))
        }
        "mx fails <=" => fails(Operation::Mx, &fx.le),
        "mx fails U" => fails(Operation::Mx, &fx.u),
        "mx preserves X" => closed(Operation::Mx, &fx.x),
        "mx preserves <" => closed(Operation::Mx, &fx.lt),
        "pp preserves the pp-only relation" => closed(Operation::Pp, &fx.pp_only),
        "min fails the pp-only relation" => fails(Operation::Min, &fx.pp_only),
        "mx fails the pp-only relation" => fails(Operation::Mx, &fx.pp_only),
        "min-clause form of U defines U" => {
            let u = fixture_relation(&fx.u)?;
            let vars = ["x", "y", "z"];
            let stated =
                relation_of_formula(&parse_formula_with_vars(&fx.u_clauses, &vars)?, &vars)?;
            let form = min_clause_form(&u)?;
            let rendered = render_conjunction(&form, &vars);
            let passed = stated == u && relation_of_conjunction(3, &form) == u;
            Ok((passed, rendered))
        }
        other => Ok((false, format!("unknown fact `{other}`"))),
    }
}

/// Runs the facts whose names appear in `only` (all when `None`).
pub fn run_known_facts(fixtures: &Fixtures, only: Option<&[String]>) -> Vec<FactResult> {
    FACT_NAMES
        .iter()
        .filter(|name| only.is_none_or(|sel| sel.iter().any(|s| s == *name)))
        .map(|&name| match evaluate_fact(name, fixtures) {
            Ok((passed, detail)) => FactResult {
                name,
                passed,
                detail,
            },
            Err(e) => FactResult {
                name,
                passed: false,
                detail: format!("fixture error: {e}"),
            },
        })
        .collect()
}
