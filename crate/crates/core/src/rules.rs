//! Redundancy rules: the cost condition, the `⊢₁` redundancy condition,
//! witness classification, cost-BC, and the flip diagnostic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{
    negation_of, restrict_clause, Clause, Formula, Image, Instance, Lit, ModelError, Restricted,
    Substitution, Var,
};
use crate::propagate::Propagator;

/// Witness classes, from most specific to most general.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RuleClass {
    Lpr,
    Spr,
    Pr,
    Sr,
}

impl RuleClass {
    pub const ALL: [RuleClass; 4] = [RuleClass::Lpr, RuleClass::Spr, RuleClass::Pr, RuleClass::Sr];

    pub fn tag(self) -> &'static str {
        match self {
            RuleClass::Lpr => "lpr",
            RuleClass::Spr => "spr",
            RuleClass::Pr => "pr",
            RuleClass::Sr => "sr",
        }
    }

    pub fn from_tag(tag: &str) -> Option<RuleClass> {
        RuleClass::ALL.into_iter().find(|c| c.tag() == tag)
    }
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// The closed form of `max_τ cost(τ∘σ) − cost(τ)` over `τ ⊇ ¬C`.
///
/// `constant + Σ coefficients[v]·v` is the difference as a linear form in
/// the free variables; the maximum takes each positive coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CostCheckReport {
    pub fixed_part: i64,
    pub free_var_gains: BTreeMap<Var, i64>,
    pub max_delta: i64,
    pub ok: bool,
    pub constant: i64,
    pub coefficients: BTreeMap<Var, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("clause {0} is tautological")]
    Tautology(Clause),
}

impl From<ModelError> for RuleError {
    fn from(e: ModelError) -> RuleError {
        match e {
            ModelError::Tautology(c) => RuleError::Tautology(c),
            other => unreachable!("negation_of only fails on tautologies: {other}"),
        }
    }
}

pub fn check_cost_condition(
    inst: &Instance,
    clause: &Clause,
    sigma: &Substitution,
) -> Result<CostCheckReport, RuleError> {
    let neg = negation_of(clause)?;
    let fixed_value = |v: Var| neg.get(v).as_constant();
    // Occurrence counts of free variables among the images L = σ(b_i),
    // split by polarity, and among R = b_i.
    let mut l_pos: BTreeMap<Var, i64> = BTreeMap::new();
    let mut l_neg: BTreeMap<Var, i64> = BTreeMap::new();
    let mut r_pos: BTreeMap<Var, i64> = BTreeMap::new();
    let mut fixed = 0i64;
    for &b in inst.blocking() {
        match sigma.get(b) {
            Image::True => fixed += 1,
            Image::False => {}
            Image::Lit(l) => match fixed_value(l.var()) {
                Some(value) => fixed += i64::from(value == l.is_positive()),
                None if l.is_positive() => *l_pos.entry(l.var()).or_default() += 1,
                None => *l_neg.entry(l.var()).or_default() += 1,
            },
        }
        match fixed_value(b) {
            Some(value) => fixed -= i64::from(value),
            None => *r_pos.entry(b).or_default() += 1,
        }
    }
    let free: BTreeSet<Var> = l_pos
        .keys()
        .chain(l_neg.keys())
        .chain(r_pos.keys())
        .copied()
        .collect();
    let mut gains = BTreeMap::new();
    let mut coefficients = BTreeMap::new();
    let mut constant = fixed;
    for v in free {
        let a1 = l_pos.get(&v).copied().unwrap_or(0) - r_pos.get(&v).copied().unwrap_or(0);
        let a0 = l_neg.get(&v).copied().unwrap_or(0);
        gains.insert(v, a1.max(a0));
        // ¬v contributes 1 − v.
        constant += a0;
        let c = a1 - a0;
        if c != 0 {
            coefficients.insert(v, c);
        }
    }
    let max_delta = fixed + gains.values().sum::<i64>();
    debug_assert_eq!(
        max_delta,
        constant + coefficients.values().map(|&c| c.max(0)).sum::<i64>()
    );
    Ok(CostCheckReport {
        fixed_part: fixed,
        free_var_gains: gains,
        max_delta,
        ok: max_delta <= 0,
        constant,
        coefficients,
    })
}

/// Most specific class the witness belongs to.
pub fn classify_witness(clause: &Clause, sigma: &Substitution) -> RuleClass {
    if !sigma.is_assignment() {
        return RuleClass::Sr;
    }
    let clause_vars: Vec<Var> = clause.vars().collect();
    if sigma.len() != clause_vars.len()
        || !clause_vars
            .iter()
            .all(|&v| sigma.get(v).as_constant().is_some())
    {
        return RuleClass::Pr;
    }
    if clause.is_tautology() {
        return RuleClass::Spr;
    }
    // ¬C makes every literal of C false; σ agrees on v iff it does too.
    let flips = clause
        .lits()
        .iter()
        .filter(|&&l| sigma.apply(l) == Image::True)
        .count();
    if flips == 1 {
        RuleClass::Lpr
    } else {
        RuleClass::Spr
    }
}

/// A clause database with a persistent propagation engine, grown one clause
/// at a time.
#[derive(Clone, Debug, Default)]
pub struct ClauseDb {
    formula: Formula,
    engine: Propagator,
}

impl ClauseDb {
    pub fn new(formula: &Formula) -> ClauseDb {
        ClauseDb {
            engine: Propagator::from_formula(formula),
            formula: formula.clone(),
        }
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn add(&mut self, clause: Clause) {
        if !self.formula.contains(&clause) {
            self.engine.add_clause(&clause);
        }
        self.formula.add(clause);
    }

    pub fn root_conflict(&self) -> bool {
        self.engine.root_conflict()
    }

    pub fn contains_unit(&self, lit: Lit) -> bool {
        self.formula.contains(&Clause::unit(lit))
    }

    /// `db ⊢₁ C`.
    pub fn rup(&mut self, clause: &Clause) -> bool {
        self.engine.implies(clause)
    }

    /// First clause of `(db ∪ {C})↾σ` not derived by `db↾¬C`, if any.
    pub fn redundancy_failure(
        &mut self,
        clause: &Clause,
        sigma: &Substitution,
    ) -> Result<Option<Clause>, RuleError> {
        negation_of(clause)?;
        let engine = &mut self.engine;
        let failure = if engine.push_and_propagate(clause.lits().iter().map(|&l| !l)) {
            None
        } else {
            let lhs_vars: BTreeSet<Var> = clause.vars().collect();
            let mut failure = None;
            for d in self.formula.distinct().chain(std::iter::once(clause)) {
                let image = match restrict_clause(d, sigma) {
                    Restricted::Satisfied => continue,
                    Restricted::Clause(image) => image,
                };
                // db↾¬C mentions no variable of C, so the restriction by the
                // negated image ignores those positions.
                let query = if image.vars().any(|v| lhs_vars.contains(&v)) {
                    Clause::new(
                        image
                            .lits()
                            .iter()
                            .copied()
                            .filter(|l| !lhs_vars.contains(&l.var())),
                    )
                } else {
                    image.clone()
                };
                if self.formula.contains(&query) {
                    continue;
                }
                if query.lits().iter().any(|&l| engine.value(l) == Some(true)) {
                    continue;
                }
                if !engine.implies(&query) {
                    failure = Some(image);
                    break;
                }
            }
            failure
        };
        engine.pop();
        Ok(failure)
    }

    /// Checks one redundancy step against the current database.
    pub fn check_redundant(
        &mut self,
        inst: &Instance,
        clause: &Clause,
        sigma: &Substitution,
        claimed: RuleClass,
    ) -> Result<Accepted, Rejection> {
        let nvars = inst.nvars();
        if let Some(v) = clause
            .max_var()
            .into_iter()
            .chain(sigma.max_var())
            .find(|v| v.id() > nvars)
        {
            return Err(Rejection::NewVariable(v));
        }
        if clause.is_tautology() {
            return Err(Rejection::Tautology);
        }
        let class = classify_witness(clause, sigma);
        if class > claimed {
            return Err(Rejection::Class {
                claimed,
                actual: class,
            });
        }
        let cost = check_cost_condition(inst, clause, sigma).map_err(|_| Rejection::Tautology)?;
        if !cost.ok {
            return Err(Rejection::Cost(cost));
        }
        match self.redundancy_failure(clause, sigma) {
            Err(_) => Err(Rejection::Tautology),
            Ok(Some(failed)) => Err(Rejection::Redundancy(failed)),
            Ok(None) => Ok(Accepted { cost, class }),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Accepted {
    pub cost: CostCheckReport,
    pub class: RuleClass,
}

/// Why a redundancy step was rejected.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum Rejection {
    #[error("variable {0} is not a variable of the instance")]
    NewVariable(Var),
    #[error("clause is tautological")]
    Tautology,
    #[error("witness is {actual} but the step claims {claimed}")]
    Class {
        claimed: RuleClass,
        actual: RuleClass,
    },
    #[error("cost condition fails: max delta {}", .0.max_delta)]
    Cost(CostCheckReport),
    #[error("redundancy condition fails on {0:?}")]
    Redundancy(Clause),
}

/// `db↾¬C ⊢₁ (db ∪ {C})↾σ`.
pub fn check_redundancy_condition(
    db: &Formula,
    clause: &Clause,
    sigma: &Substitution,
) -> Result<bool, RuleError> {
    Ok(ClauseDb::new(db)
        .redundancy_failure(clause, sigma)?
        .is_none())
}

pub fn check_redundant_step(
    db: &Formula,
    inst: &Instance,
    clause: &Clause,
    sigma: &Substitution,
    claimed: RuleClass,
) -> Result<Accepted, Rejection> {
    ClauseDb::new(db).check_redundant(inst, clause, sigma, claimed)
}

/// Cost-BC: `C` is blocked on `lit` and `lit` is not a positive blocking
/// literal.
pub fn check_cost_bc(db: &Formula, clause: &Clause, lit: Lit, inst: &Instance) -> bool {
    if !clause.contains(lit) || (lit.is_positive() && inst.is_blocking(lit.var())) {
        return false;
    }
    let rest = clause.without(lit);
    db.distinct()
        .filter(|d| d.contains(!lit))
        .all(|d| rest.or(&d.without(!lit)).is_tautology())
}

/// The cost-LPR witness induced by a blocked clause.
pub fn bc_witness(clause: &Clause, lit: Lit) -> Substitution {
    let mut sigma = Substitution::satisfying(clause.without(lit).lits().iter().map(|&l| !l));
    sigma.set(lit.var(), Image::constant(lit.is_positive()));
    sigma
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FlipDegree {
    Exact(usize),
    UpperBound(usize),
}

impl FlipDegree {
    pub fn value(self) -> usize {
        match self {
            FlipDegree::Exact(n) | FlipDegree::UpperBound(n) => n,
        }
    }
}

/// `max_τ HD(τ, τ∘σ)` over `τ ⊇ ¬C`, exact when at most `limit` relevant
/// variables are free.
pub fn flip_degree(
    clause: &Clause,
    sigma: &Substitution,
    limit: usize,
) -> Result<FlipDegree, RuleError> {
    let neg = negation_of(clause)?;
    let moved: Vec<Var> = sigma.moved().collect();
    let free: Vec<Var> = sigma
        .vars()
        .into_iter()
        .filter(|&v| neg.get(v).as_constant().is_none())
        .collect();
    if free.len() > limit {
        return Ok(FlipDegree::UpperBound(moved.len()));
    }
    let slot: BTreeMap<Var, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let value = |bits: u64, v: Var| match neg.get(v).as_constant() {
        Some(b) => b,
        None => bits >> slot[&v] & 1 == 1,
    };
    let mut best = 0;
    for bits in 0..1u64 << free.len() {
        let hd = moved
            .iter()
            .filter(|&&v| {
                let image = match sigma.get(v) {
                    Image::True => true,
                    Image::False => false,
                    Image::Lit(l) => value(bits, l.var()) == l.is_positive(),
                };
                image != value(bits, v)
            })
            .count();
        best = best.max(hd);
    }
    Ok(FlipDegree::Exact(best))
}
