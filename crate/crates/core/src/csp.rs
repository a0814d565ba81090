//! Polynomial-time solvers for min-closed and mx-closed CSPs, optionally
//! with a prescribed order type on some variables.
//!
//! Both solvers build a satisfying weak order bottom-up: each round picks a
//! set of remaining variables that can all take the smallest remaining
//! value, deletes the constraints this settles, and repeats.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::gf2::{parity_check, solve_gf2, BitTuple, BoolRelation, GF2System};
use crate::instance::Constraint;
use crate::normal_forms::{
    min_affine_form, min_clause_form, Conjunct, MinAffineForm, MinClause, MinLiteral,
};
use crate::poly::{is_preserved, Operation};
use crate::rational::Rational;
use crate::relation::TemporalRelation;

/// Which tractable language an instance is solved in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Min,
    Mx,
    /// Min when every relation is min-closed, else mx when every relation
    /// is mx-closed.
    Auto,
}

impl Engine {
    /// Resolves [`Engine::Auto`] against the relations in `constraints`.
    pub fn resolve(self, constraints: &[Constraint]) -> Result<Engine> {
        match self {
            Engine::Auto => {
                let mut relations: Vec<&TemporalRelation> =
                    constraints.iter().map(|c| &c.relation).collect();
                relations.sort();
                relations.dedup();
                if relations.iter().all(|r| is_preserved(Operation::Min, r)) {
                    Ok(Engine::Min)
                } else if relations.iter().all(|r| is_preserved(Operation::Mx, r)) {
                    Ok(Engine::Mx)
                } else {
                    Err(Error::LanguageNotSupported)
                }
            }
            other => Ok(other),
        }
    }
}

/// Disjoint non-empty variable sets `P_1 < P_2 < …`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PinnedOrder {
    levels: Vec<Vec<usize>>,
}

impl PinnedOrder {
    pub fn new(levels: Vec<Vec<usize>>) -> Result<PinnedOrder> {
        let mut seen = std::collections::HashSet::new();
        for level in &levels {
            if level.is_empty() {
                return Err(Error::Invalid("pinned levels must be non-empty".into()));
            }
            for &v in level {
                if !seen.insert(v) {
                    return Err(Error::Invalid(format!("variable #{v} pinned twice")));
                }
            }
        }
        Ok(PinnedOrder { levels })
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level of each variable among `0..num_vars`, if pinned.
    pub fn level_map(&self, num_vars: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; num_vars];
        for (i, level) in self.levels.iter().enumerate() {
            for &v in level {
                out[v] = Some(i);
            }
        }
        out
    }

    /// Whether `values` realize the pin exactly.
    pub fn is_realized_by<V: Ord>(&self, values: &[V]) -> bool {
        let mut reps: Vec<&V> = Vec::new();
        for level in &self.levels {
            let first = &values[level[0]];
            if level.iter().any(|&v| values[v] != *first) {
                return false;
            }
            reps.push(first);
        }
        reps.windows(2).all(|w| w[0] < w[1])
    }
}

/// Variables grouped into strictly increasing levels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LayeredSolution {
    pub layers: Vec<Vec<usize>>,
}

impl LayeredSolution {
    /// Layer index of each variable; panics if some variable is unassigned.
    pub fn levels(&self, num_vars: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; num_vars];
        for (j, layer) in self.layers.iter().enumerate() {
            for &v in layer {
                out[v] = j;
            }
        }
        assert!(
            out.iter().all(|&l| l != usize::MAX),
            "solution leaves a variable unassigned"
        );
        out
    }

    pub fn values(&self, num_vars: usize) -> Vec<Rational> {
        self.levels(num_vars)
            .into_iter()
            .map(|l| Rational::from_int(l as i64))
            .collect()
    }
}

/// Layer `j` gets the value `j`.
pub fn assignment_of(solution: &LayeredSolution) -> BTreeMap<usize, Rational> {
    let mut out = BTreeMap::new();
    for (j, layer) in solution.layers.iter().enumerate() {
        for &v in layer {
            out.insert(v, Rational::from_int(j as i64));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MinCsp {
    pub num_vars: usize,
    pub clauses: Vec<MinClause>,
}

impl MinCsp {
    pub fn new(num_vars: usize, clauses: Vec<MinClause>) -> MinCsp {
        MinCsp { num_vars, clauses }
    }

    pub fn holds<V: Ord>(&self, values: &[V]) -> bool {
        self.clauses.iter().all(|c| c.holds(values))
    }
}

/// The unique largest `S ⊆ allowed` in which every active clause with head
/// in `S` has a `≥`-literal with body in `S`.
pub fn max_free_set(clauses: &[MinClause], active: &[bool], allowed: &[bool]) -> Vec<bool> {
    let mut in_set = allowed.to_vec();
    loop {
        let mut changed = false;
        for (c, _) in clauses.iter().zip(active).filter(|(_, a)| **a) {
            if in_set[c.head] && !c.literals.iter().any(|l| !l.strict && in_set[l.body]) {
                in_set[c.head] = false;
                changed = true;
            }
        }
        if !changed {
            return in_set;
        }
    }
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(i, _)| i)
        .collect()
}

/// Layered greedy; `None` when no assignment extending `pin` satisfies the
/// clauses.
pub fn solve_min_csp(csp: &MinCsp, pin: Option<&PinnedOrder>) -> Option<LayeredSolution> {
    let n = csp.num_vars;
    let empty = PinnedOrder::default();
    let pin = pin.unwrap_or(&empty);
    let pinned = pin.level_map(n);
    let mut remaining = vec![true; n];
    let mut active = vec![true; csp.clauses.len()];
    let mut next_level = 0;
    let mut layers = Vec::new();
    while remaining.iter().any(|&r| r) {
        let unpinned: Vec<bool> = (0..n)
            .map(|v| remaining[v] && pinned[v].is_none())
            .collect();
        let mut layer = max_free_set(&csp.clauses, &active, &unpinned);
        if !layer.iter().any(|&b| b) {
            let p1 = pin.levels().get(next_level)?;
            let mut allowed = unpinned;
            for &v in p1 {
                allowed[v] = true;
            }
            layer = max_free_set(&csp.clauses, &active, &allowed);
            if !p1.iter().all(|&v| layer[v]) {
                return None;
            }
            next_level += 1;
        }
        for (c, a) in csp.clauses.iter().zip(active.iter_mut()) {
            if *a && (layer[c.head] || c.literals.iter().any(|l| layer[l.body])) {
                debug_assert!(
                    !layer[c.head] || c.literals.iter().any(|l| !l.strict && layer[l.body])
                );
                *a = false;
            }
        }
        for v in 0..n {
            if layer[v] {
                remaining[v] = false;
            }
        }
        layers.push(members(&layer));
    }
    Some(LayeredSolution { layers })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MxCsp {
    pub num_vars: usize,
    conjuncts: Vec<MinAffineForm>,
    checks: Vec<GF2System>,
}

impl MxCsp {
    pub fn new(num_vars: usize, conjuncts: Vec<MinAffineForm>) -> MxCsp {
        let mut csp = MxCsp {
            num_vars,
            conjuncts: Vec::new(),
            checks: Vec::new(),
        };
        for c in conjuncts {
            csp.push(c);
        }
        csp
    }

    pub fn push(&mut self, conjunct: MinAffineForm) {
        let h = parity_check(conjunct.tuples()).expect("min-affine forms are near-affine");
        self.conjuncts.push(conjunct);
        self.checks.push(h);
    }

    pub fn conjuncts(&self) -> &[MinAffineForm] {
        &self.conjuncts
    }

    pub fn holds<V: Ord>(&self, values: &[V]) -> bool {
        self.conjuncts.iter().all(|c| c.holds(values))
    }
}

/// Which bottom-layer shape [`layer_system`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerCase {
    /// No pinned variable in the layer.
    FreeOnly,
    /// The lowest remaining pinned level and no other pinned variable.
    IncludeLowest,
}

/// A system over the indicator bits of the remaining variables (in
/// ascending order) whose solutions are exactly the valid bottom layers.
/// Forced bits are returned separately.
pub fn layer_system(
    csp: &MxCsp,
    remaining: &[usize],
    active: &[bool],
    pin: &PinnedOrder,
    next_level: usize,
    case: LayerCase,
) -> (GF2System, Vec<(usize, bool)>) {
    let mut column = vec![usize::MAX; csp.num_vars];
    for (j, &v) in remaining.iter().enumerate() {
        column[v] = j;
    }
    let width = remaining.len();
    let mut rows = Vec::new();
    for ((c, h), _) in csp
        .conjuncts
        .iter()
        .zip(&csp.checks)
        .zip(active)
        .filter(|(_, a)| **a)
    {
        for row in &h.rows {
            let mut full = BitTuple::zeros(width);
            for i in row.ones_indices() {
                full.set(column[c.scope()[i]], true);
            }
            rows.push(full);
        }
    }
    let mut forced = Vec::new();
    for (i, level) in pin.levels().iter().enumerate().skip(next_level) {
        let value = case == LayerCase::IncludeLowest && i == next_level;
        forced.extend(level.iter().map(|&v| (column[v], value)));
    }
    (GF2System::homogeneous(width, rows), forced)
}

/// Layered GF(2) method; `None` when no assignment extending `pin`
/// satisfies the conjuncts.
pub fn solve_mx_csp(csp: &MxCsp, pin: Option<&PinnedOrder>) -> Option<LayeredSolution> {
    let n = csp.num_vars;
    let empty = PinnedOrder::default();
    let pin = pin.unwrap_or(&empty);
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut active = vec![true; csp.conjuncts.len()];
    let mut next_level = 0;
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let (sys, forced) = layer_system(
            csp,
            &remaining,
            &active,
            pin,
            next_level,
            LayerCase::FreeOnly,
        );
        let indicator = match solve_gf2(&sys, &forced).and_then(|s| s.kernel.into_iter().next()) {
            Some(k) => k,
            None => {
                if next_level >= pin.levels().len() {
                    return None;
                }
                let (sys, forced) = layer_system(
                    csp,
                    &remaining,
                    &active,
                    pin,
                    next_level,
                    LayerCase::IncludeLowest,
                );
                next_level += 1;
                solve_gf2(&sys, &forced)?.particular
            }
        };
        let mut in_layer = vec![false; n];
        for j in indicator.ones_indices() {
            in_layer[remaining[j]] = true;
        }
        for (c, a) in csp.conjuncts.iter().zip(active.iter_mut()) {
            if *a && c.scope().iter().any(|&v| in_layer[v]) {
                *a = false;
            }
        }
        remaining.retain(|&v| !in_layer[v]);
        layers.push(members(&in_layer));
    }
    Some(LayeredSolution { layers })
}

/// An instance compiled into one engine's native constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompiledCsp {
    Min(MinCsp),
    Mx(MxCsp),
}

impl CompiledCsp {
    pub fn num_vars(&self) -> usize {
        match self {
            CompiledCsp::Min(c) => c.num_vars,
            CompiledCsp::Mx(c) => c.num_vars,
        }
    }

    pub fn engine(&self) -> Engine {
        match self {
            CompiledCsp::Min(_) => Engine::Min,
            CompiledCsp::Mx(_) => Engine::Mx,
        }
    }

    pub fn constraint_count(&self) -> usize {
        match self {
            CompiledCsp::Min(c) => c.clauses.len(),
            CompiledCsp::Mx(c) => c.conjuncts.len(),
        }
    }

    pub fn solve(&self, pin: Option<&PinnedOrder>) -> Option<LayeredSolution> {
        match self {
            CompiledCsp::Min(c) => solve_min_csp(c, pin),
            CompiledCsp::Mx(c) => solve_mx_csp(c, pin),
        }
    }

    pub fn holds<V: Ord>(&self, values: &[V]) -> bool {
        match self {
            CompiledCsp::Min(c) => c.holds(values),
            CompiledCsp::Mx(c) => c.holds(values),
        }
    }

    /// Adds `upper > lower` in native form.
    pub fn push_less(&mut self, lower: usize, upper: usize) {
        match self {
            CompiledCsp::Min(c) => c.clauses.push(MinClause {
                head: upper,
                literals: vec![MinLiteral {
                    body: lower,
                    strict: true,
                }],
            }),
            CompiledCsp::Mx(c) => c.push(
                MinAffineForm::new(vec![lower, upper], BoolRelation::parse(2, &["01"]))
                    .expect("near-affine"),
            ),
        }
    }
}

/// Distinct arguments in first-appearance order and the map from argument
/// positions to them.
fn collapse_args(args: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut distinct: Vec<usize> = Vec::new();
    let map = args
        .iter()
        .map(|a| match distinct.iter().position(|d| d == a) {
            Some(i) => i,
            None => {
                distinct.push(*a);
                distinct.len() - 1
            }
        })
        .collect();
    (distinct, map)
}

/// Rewrites every constraint into `engine`'s normal form over the instance
/// variables `0..num_vars`. Repeated arguments are identified first.
pub fn compile(num_vars: usize, constraints: &[Constraint], engine: Engine) -> Result<CompiledCsp> {
    let engine = engine.resolve(constraints)?;
    let mut collapsed = Vec::with_capacity(constraints.len());
    for c in constraints {
        let (distinct, map) = collapse_args(&c.args);
        let relation = c.relation.identify_coordinates(&map, distinct.len())?;
        collapsed.push((relation, distinct));
    }
    match engine {
        Engine::Min => {
            let mut cache: HashMap<&TemporalRelation, Vec<MinClause>> = HashMap::new();
            let mut clauses = Vec::new();
            for (relation, vars) in &collapsed {
                if !cache.contains_key(relation) {
                    cache.insert(relation, min_clause_form(relation)?);
                }
                for cl in &cache[relation] {
                    clauses.push(MinClause {
                        head: vars[cl.head],
                        literals: cl
                            .literals
                            .iter()
                            .map(|l| MinLiteral {
                                body: vars[l.body],
                                strict: l.strict,
                            })
                            .collect(),
                    });
                }
            }
            Ok(CompiledCsp::Min(MinCsp::new(num_vars, clauses)))
        }
        Engine::Mx => {
            let mut cache: HashMap<&TemporalRelation, Vec<MinAffineForm>> = HashMap::new();
            let mut csp = MxCsp::new(num_vars, Vec::new());
            for (relation, vars) in &collapsed {
                if !cache.contains_key(relation) {
                    cache.insert(relation, min_affine_form(relation)?);
                }
                for form in &cache[relation] {
                    csp.push(form.remap(vars));
                }
            }
            Ok(CompiledCsp::Mx(csp))
        }
        Engine::Auto => unreachable!("resolved above"),
    }
}

/// Direct evaluation of the original constraints on `values`.
pub fn constraints_hold(constraints: &[Constraint], values: &[Rational]) -> bool {
    constraints.iter().all(|c| {
        let tuple: Vec<Rational> = c.args.iter().map(|&a| values[a]).collect();
        c.relation.contains_tuple(&tuple)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula_with_vars, relation_of_formula};

    fn ge(body: usize) -> MinLiteral {
        MinLiteral {
            body,
            strict: false,
        }
    }

    fn gt(body: usize) -> MinLiteral {
        MinLiteral { body, strict: true }
    }

    fn clause(head: usize, literals: Vec<MinLiteral>) -> MinClause {
        MinClause { head, literals }
    }

    /// (x≥y ∨ x≥z), y≥x, z≥x, y>z over x=0, y=1, z=2.
    fn sample() -> MinCsp {
        MinCsp::new(
            3,
            vec![
                clause(0, vec![ge(1), ge(2)]),
                clause(1, vec![ge(0)]),
                clause(2, vec![ge(0)]),
                clause(1, vec![gt(2)]),
            ],
        )
    }

    fn form(scope: Vec<usize>, t: &[&str]) -> MinAffineForm {
        MinAffineForm::new(scope.clone(), BoolRelation::parse(scope.len(), t)).unwrap()
    }

    fn x_form() -> MinAffineForm {
        form(vec![0, 1, 2], &["001", "010", "100"])
    }

    #[test]
    fn max_free_set_examples() {
        let all = vec![true; 2];
        let cyc = [clause(0, vec![gt(1)]), clause(1, vec![gt(0)])];
        assert_eq!(max_free_set(&cyc, &[true, true], &all), vec![false, false]);
        let eq = [clause(0, vec![ge(1)]), clause(1, vec![ge(0)])];
        assert_eq!(max_free_set(&eq, &[true, true], &all), vec![true, true]);
        let s = sample();
        assert_eq!(
            max_free_set(&s.clauses, &[true; 4], &[true; 3]),
            vec![true, false, true]
        );
    }

    #[test]
    fn min_solver_examples() {
        let cyc = MinCsp::new(2, vec![clause(0, vec![gt(1)]), clause(1, vec![gt(0)])]);
        assert_eq!(solve_min_csp(&cyc, None), None);
        let sol = solve_min_csp(&sample(), None).unwrap();
        assert_eq!(sol.layers, vec![vec![0, 2], vec![1]]);
        let values = assignment_of(&sol);
        assert_eq!(values[&0], Rational::from_int(0));
        assert_eq!(values[&2], Rational::from_int(0));
        assert_eq!(values[&1], Rational::from_int(1));
        let less = MinCsp::new(2, vec![clause(1, vec![gt(0)])]);
        let pin = PinnedOrder::new(vec![vec![0, 1]]).unwrap();
        assert_eq!(solve_min_csp(&less, Some(&pin)), None);
        let pin = PinnedOrder::new(vec![vec![1], vec![0]]).unwrap();
        assert_eq!(solve_min_csp(&less, Some(&pin)), None);
        let pin = PinnedOrder::new(vec![vec![0], vec![1]]).unwrap();
        let sol = solve_min_csp(&less, Some(&pin)).unwrap();
        assert!(pin.is_realized_by(&sol.levels(2)));
    }

    #[test]
    fn layer_system_examples() {
        let csp = MxCsp::new(3, vec![x_form()]);
        let (sys, forced) = layer_system(
            &csp,
            &[0, 1, 2],
            &[true],
            &PinnedOrder::default(),
            0,
            LayerCase::FreeOnly,
        );
        assert_eq!(sys.rows, vec![BitTuple::parse("111").unwrap()]);
        assert!(forced.is_empty());
        let both = MxCsp::new(
            2,
            vec![form(vec![0, 1], &["01"]), form(vec![1, 0], &["01"])],
        );
        let (sys, _) = layer_system(
            &both,
            &[0, 1],
            &[true, true],
            &PinnedOrder::default(),
            0,
            LayerCase::FreeOnly,
        );
        let sol = solve_gf2(&sys, &[]).unwrap();
        assert!(sol.kernel.is_empty());
        let none = MxCsp::new(3, Vec::new());
        let (sys, _) = layer_system(
            &none,
            &[0, 1, 2],
            &[],
            &PinnedOrder::default(),
            0,
            LayerCase::FreeOnly,
        );
        assert!(sys.rows.is_empty());
    }

    #[test]
    fn mx_solver_examples() {
        let csp = MxCsp::new(3, vec![x_form()]);
        let sol = solve_mx_csp(&csp, None).unwrap();
        assert_eq!(sol.layers, vec![vec![0, 1], vec![2]]);
        assert!(csp.holds(&sol.levels(3)));
        let both = MxCsp::new(
            2,
            vec![form(vec![0, 1], &["01"]), form(vec![1, 0], &["01"])],
        );
        assert_eq!(solve_mx_csp(&both, None), None);
        let with_less = MxCsp::new(
            3,
            vec![
                x_form(),
                form(vec![0, 2], &["01"]),
                form(vec![1, 2], &["01"]),
            ],
        );
        let sol = solve_mx_csp(&with_less, None).unwrap();
        assert_eq!(sol.layers, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn assignment_edge_cases() {
        assert!(assignment_of(&LayeredSolution::default()).is_empty());
        let one = LayeredSolution {
            layers: vec![vec![0, 1, 2]],
        };
        assert!(assignment_of(&one).values().all(|v| *v == Rational::ZERO));
    }

    #[test]
    fn compile_collapses_repeated_arguments() {
        let vars = ["a", "b", "c"];
        let f = parse_formula_with_vars("a > b | a > c", &vars).unwrap();
        let rel = relation_of_formula(&f, &vars).unwrap();
        // R(x, x, y): x > x | x > y, i.e. x > y
        let c = Constraint::new("R", rel, vec![0, 0, 1]).unwrap();
        for engine in [Engine::Min, Engine::Auto] {
            let compiled = compile(2, std::slice::from_ref(&c), engine).unwrap();
            assert_eq!(compiled.engine(), Engine::Min);
            let sol = compiled.solve(None).unwrap();
            let values = sol.values(2);
            assert!(constraints_hold(std::slice::from_ref(&c), &values));
            assert!(values[0] > values[1]);
        }
        let neq = parse_formula_with_vars("a != b", &vars[..2]).unwrap();
        let neq = relation_of_formula(&neq, &vars[..2]).unwrap();
        let c = Constraint::new("ne", neq, vec![0, 1]).unwrap();
        assert_eq!(
            compile(2, &[c], Engine::Auto),
            Err(Error::LanguageNotSupported)
        );
    }
}
