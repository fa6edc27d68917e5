//! Ground truth at desk scale: exhaustive and branch-and-bound cost,
//! optimal-assignment enumeration, semantic redundancy, and a small DPLL.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Assignment, Clause, Formula, Instance, Lit, Var};
use crate::propagate::Propagator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest variable count searched exhaustively.
    pub exhaustive_limit: u32,
    /// Search-node budget for branch-and-bound and DPLL; `None` is unbounded.
    pub node_budget: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> OracleConfig {
        OracleConfig {
            exhaustive_limit: 20,
            node_budget: None,
        }
    }
}

impl OracleConfig {
    pub fn with_limit(exhaustive_limit: u32) -> OracleConfig {
        OracleConfig {
            exhaustive_limit,
            ..OracleConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{nvars} variables exceed the exhaustive limit of {limit}")]
    LimitExceeded { nvars: u32, limit: u32 },
    #[error("search budget of {0} nodes exhausted")]
    BudgetExhausted(u64),
    #[error("assignments range over different variable sets")]
    MixedUniverses,
}

/// Minimum cost; `Unsatisfiable` compares equal only to itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cost {
    Value(usize),
    Unsatisfiable,
}

impl Cost {
    pub fn value(self) -> Option<usize> {
        match self {
            Cost::Value(k) => Some(k),
            Cost::Unsatisfiable => None,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Value(k) => write!(f, "{k}"),
            Cost::Unsatisfiable => write!(f, "unsatisfiable"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    BranchAndBound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub cost: Cost,
    pub witness: Option<Assignment>,
    pub method: Method,
}

/// Clauses as bit masks over at most 64 variables.
struct Masks {
    clauses: Vec<(u64, u64)>,
    blocking: u64,
    nvars: u32,
}

impl Masks {
    fn new(inst: &Instance) -> Masks {
        assert!(inst.nvars() <= 64);
        let clauses = inst
            .hard()
            .distinct()
            .map(|c| {
                c.lits().iter().fold((0u64, 0u64), |(p, n), l| {
                    let bit = 1u64 << l.var().index();
                    if l.is_positive() {
                        (p | bit, n)
                    } else {
                        (p, n | bit)
                    }
                })
            })
            .collect();
        let blocking = inst.blocking().iter().fold(0, |m, b| m | 1u64 << b.index());
        Masks {
            clauses,
            blocking,
            nvars: inst.nvars(),
        }
    }

    fn satisfies(&self, bits: u64) -> bool {
        self.clauses
            .iter()
            .all(|&(p, n)| bits & p != 0 || !bits & n != 0)
    }

    fn cost(&self, bits: u64) -> usize {
        (bits & self.blocking).count_ones() as usize
    }

    /// Splits `0..2^n` into chunks for parallel scanning.
    fn chunks(&self) -> impl ParallelIterator<Item = std::ops::Range<u64>> {
        let total = 1u64 << self.nvars;
        let size = 1u64 << self.nvars.min(12);
        (0..total / size)
            .into_par_iter()
            .map(move |i| i * size..(i + 1) * size)
    }

    fn min_cost(&self) -> Option<(usize, u64)> {
        self.chunks()
            .filter_map(|range| {
                range
                    .filter(|&bits| self.satisfies(bits))
                    .map(|bits| (self.cost(bits), bits))
                    .min()
            })
            .min()
    }
}

fn check_limit(inst: &Instance, config: &OracleConfig) -> Result<(), OracleError> {
    let limit = config.exhaustive_limit.min(63);
    if inst.nvars() > limit {
        return Err(OracleError::LimitExceeded {
            nvars: inst.nvars(),
            limit: config.exhaustive_limit,
        });
    }
    Ok(())
}

/// Minimum cost over all `2^nvars` assignments.
pub fn exhaustive_cost(inst: &Instance, config: &OracleConfig) -> Result<CostReport, OracleError> {
    check_limit(inst, config)?;
    let masks = Masks::new(inst);
    let n = inst.nvars() as usize;
    Ok(match masks.min_cost() {
        None => CostReport {
            cost: Cost::Unsatisfiable,
            witness: None,
            method: Method::Exhaustive,
        },
        Some((cost, bits)) => CostReport {
            cost: Cost::Value(cost),
            witness: Some(Assignment::from_bits(n, bits)),
            method: Method::Exhaustive,
        },
    })
}

/// Exhaustive below the limit, branch-and-bound above it.
pub fn brute_cost(inst: &Instance, config: &OracleConfig) -> Result<CostReport, OracleError> {
    if inst.nvars() <= config.exhaustive_limit.min(63) {
        exhaustive_cost(inst, config)
    } else {
        branch_and_bound(inst, config.node_budget)
    }
}

/// All satisfying assignments of minimum cost, in increasing bit order.
pub fn optimal_assignments(
    inst: &Instance,
    config: &OracleConfig,
) -> Result<Vec<Assignment>, OracleError> {
    check_limit(inst, config)?;
    let masks = Masks::new(inst);
    let Some((best, _)) = masks.min_cost() else {
        return Ok(Vec::new());
    };
    let n = inst.nvars() as usize;
    let chunks: Vec<Vec<u64>> = masks
        .chunks()
        .map(|range| {
            range
                .filter(|&bits| masks.cost(bits) == best && masks.satisfies(bits))
                .collect()
        })
        .collect();
    Ok(chunks
        .into_iter()
        .flatten()
        .map(|bits| Assignment::from_bits(n, bits))
        .collect())
}

/// Every assignment satisfying the hard clauses, in increasing bit order.
pub fn models(inst: &Instance, config: &OracleConfig) -> Result<Vec<Assignment>, OracleError> {
    check_limit(inst, config)?;
    let masks = Masks::new(inst);
    let n = inst.nvars() as usize;
    let chunks: Vec<Vec<u64>> = masks
        .chunks()
        .map(|range| range.filter(|&bits| masks.satisfies(bits)).collect())
        .collect();
    Ok(chunks
        .into_iter()
        .flatten()
        .map(|bits| Assignment::from_bits(n, bits))
        .collect())
}

/// Adding `clause` leaves the minimum cost unchanged.
pub fn brute_redundant(
    inst: &Instance,
    clause: &Clause,
    config: &OracleConfig,
) -> Result<bool, OracleError> {
    check_limit(inst, config)?;
    let before = exhaustive_cost(inst, config)?.cost;
    let mut hard = inst.hard().clone();
    hard.add(clause.clone());
    let extended = inst
        .with_hard(hard)
        .map_err(|_| OracleError::LimitExceeded {
            nvars: clause.max_var().map_or(0, Var::id),
            limit: inst.nvars(),
        })?;
    let after = exhaustive_cost(&extended, config)?.cost;
    Ok(before == after)
}

/// Variants are ordered so that every finite distance is below `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

pub fn min_pairwise_hamming(assignments: &[Assignment]) -> Result<Distance, OracleError> {
    if assignments.iter().any(|a| a.len() != assignments[0].len()) {
        return Err(OracleError::MixedUniverses);
    }
    let mut best = Distance::Infinite;
    for (i, a) in assignments.iter().enumerate() {
        for b in &assignments[i + 1..] {
            let d = Distance::Finite(a.hamming(b).ok_or(OracleError::MixedUniverses)?);
            best = best.min(d);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

/// Depth-first search over a propagator.
struct Search {
    engine: Propagator,
    order: Vec<Var>,
    blocking: Vec<bool>,
    nvars: usize,
    nodes: u64,
    budget: Option<u64>,
    best: Option<(usize, Assignment)>,
}

impl Search {
    fn new(formula: &Formula, nvars: usize, blocking: &[Var], budget: Option<u64>) -> Search {
        let mut is_blocking = vec![false; nvars];
        for b in blocking {
            is_blocking[b.index()] = true;
        }
        let mut order: Vec<Var> = (0..nvars)
            .map(Var::from_index)
            .filter(|v| !is_blocking[v.index()])
            .collect();
        order.extend(blocking.iter().copied());
        let engine = Propagator::from_formula(formula);
        Search {
            engine,
            order,
            blocking: is_blocking,
            nvars,
            nodes: 0,
            budget,
            best: None,
        }
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        match self.budget {
            Some(b) if self.nodes > b => Err(OracleError::BudgetExhausted(b)),
            _ => Ok(()),
        }
    }

    fn current_cost(&self) -> usize {
        self.engine
            .trail()
            .iter()
            .filter(|l| l.is_positive() && self.blocking[l.var().index()])
            .count()
    }

    fn model(&self) -> Assignment {
        let mut a = Assignment::all_false(self.nvars);
        for &l in self.engine.trail() {
            a.set(l.var(), l.is_positive());
        }
        a
    }

    /// Returns true when the search can stop.
    fn descend(&mut self, optimize: bool) -> Result<bool, OracleError> {
        self.tick()?;
        let cost = self.current_cost();
        if optimize && self.best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            return Ok(false);
        }
        let Some(&var) = self.order.iter().find(|&&v| !self.engine.is_assigned(v)) else {
            self.best = Some((cost, self.model()));
            return Ok(!optimize || cost == 0);
        };
        for lit in [var.neg(), var.pos()] {
            let conflict = self.engine.push_and_propagate([lit]);
            let done = if conflict {
                false
            } else {
                self.descend(optimize)?
            };
            self.engine.pop();
            if done {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn run(&mut self, optimize: bool) -> Result<(), OracleError> {
        if self.engine.root_conflict() {
            return Ok(());
        }
        self.descend(optimize).map(|_| ())
    }
}

/// Exact minimum cost by DPLL branch-and-bound.
///
/// Blocking variables are branched on last; the number of blocking
/// variables already true bounds the search.
pub fn branch_and_bound(inst: &Instance, budget: Option<u64>) -> Result<CostReport, OracleError> {
    let mut search = Search::new(inst.hard(), inst.nvars() as usize, inst.blocking(), budget);
    search.run(true)?;
    Ok(match search.best {
        None => CostReport {
            cost: Cost::Unsatisfiable,
            witness: None,
            method: Method::BranchAndBound,
        },
        Some((cost, witness)) => CostReport {
            cost: Cost::Value(cost),
            witness: Some(witness),
            method: Method::BranchAndBound,
        },
    })
}

/// DPLL with unit propagation. Unconstrained variables are set false.
pub fn sat_solve(
    formula: &Formula,
    nvars: u32,
    budget: Option<u64>,
) -> Result<SatResult, OracleError> {
    let nvars = nvars.max(formula.max_var().map_or(0, Var::id)) as usize;
    let mut search = Search::new(formula, nvars, &[], budget);
    search.run(false)?;
    Ok(match search.best {
        Some((_, a)) => SatResult::Sat(a),
        None => SatResult::Unsat,
    })
}

/// A tree-shaped RUP refutation of `formula ∧ assumptions`, or `None` if
/// that is satisfiable.
///
/// Each emitted clause negates the assumptions plus a branch of the search
/// tree, in post-order, so every clause is RUP with respect to the formula
/// and the clauses before it. The last clause negates the assumptions alone.
pub fn dpll_refutation(
    formula: &Formula,
    assumptions: &[Lit],
    budget: Option<u64>,
) -> Result<Option<Vec<Clause>>, OracleError> {
    let vars: Vec<Var> = formula.vars().into_iter().collect();
    let mut engine = Propagator::from_formula(formula);
    let mut out = Vec::new();
    let mut path = assumptions.to_vec();
    engine.push_and_propagate(assumptions.iter().copied());
    let mut nodes = 0;
    let refuted = refute(&mut engine, &vars, &mut path, &mut out, &mut nodes, budget)?;
    Ok(refuted.then_some(out))
}

fn refute(
    engine: &mut Propagator,
    vars: &[Var],
    path: &mut Vec<Lit>,
    out: &mut Vec<Clause>,
    nodes: &mut u64,
    budget: Option<u64>,
) -> Result<bool, OracleError> {
    *nodes += 1;
    if let Some(b) = budget {
        if *nodes > b {
            return Err(OracleError::BudgetExhausted(b));
        }
    }
    if engine.in_conflict() {
        out.push(Clause::new(path.iter().map(|&l| !l)));
        return Ok(true);
    }
    let Some(&var) = vars.iter().find(|&&v| !engine.is_assigned(v)) else {
        return Ok(false);
    };
    for lit in [var.pos(), var.neg()] {
        engine.push_and_propagate([lit]);
        path.push(lit);
        let refuted = refute(engine, vars, path, out, nodes, budget)?;
        path.pop();
        engine.pop();
        if !refuted {
            return Ok(false);
        }
    }
    out.push(Clause::new(path.iter().map(|&l| !l)));
    Ok(true)
}
