//! Proofs in the cost-SR calculus: step types, the checker, the MaxSAT
//! resolution checker, file formats, and pseudo-Boolean export.

mod export;
mod format;
mod msr;

use std::fmt;

use thiserror::Error;

use crate::model::{Clause, Instance, Substitution};
use crate::rules::{flip_degree, ClauseDb, CostCheckReport, FlipDegree, Rejection, RuleClass};

pub use export::{
    export_script, export_veripb, parse_pb_script, print_pb_script, ExportError, PbLine, PbScript,
};
pub use format::{
    parse_instance, parse_msr_proof, parse_proof, parse_wcnf, print_instance, print_msr_proof,
    print_proof, ParseError, ParseErrorKind, Wcnf,
};
pub use msr::{check_msr_proof, MsrChecker, MsrProof, MsrStep};

/// A lower bound or exact value for the cost.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Bound {
    Geq(usize),
    Eq(usize),
}

impl Bound {
    pub fn k(self) -> usize {
        match self {
            Bound::Geq(k) | Bound::Eq(k) => k,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Geq(k) => write!(f, "geq {k}"),
            Bound::Eq(k) => write!(f, "eq {k}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProofStep {
    /// Checked by reverse unit propagation.
    Inferred(Clause),
    Redundant {
        clause: Clause,
        witness: Substitution,
        claimed: RuleClass,
    },
    Conclude(Bound),
}

impl ProofStep {
    pub fn clause(&self) -> Option<&Clause> {
        match self {
            ProofStep::Inferred(c) | ProofStep::Redundant { clause: c, .. } => Some(c),
            ProofStep::Conclude(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Proof {
    pub steps: Vec<ProofStep>,
}

impl Proof {
    pub fn new(steps: Vec<ProofStep>) -> Proof {
        Proof { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn conclusion(&self) -> Option<Bound> {
        match self.steps.last() {
            Some(ProofStep::Conclude(b)) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum FailureReason {
    #[error("hard clauses propagate to a conflict; cost is undefined")]
    InitialConflict,
    #[error("clause {0:?} is not implied by unit propagation")]
    NotRup(Clause),
    #[error("redundancy step rejected: {0}")]
    Rejected(Rejection),
    #[error("conclusion not justified: {0}")]
    Conclusion(String),
    #[error("{0}")]
    Rule(String),
}

/// A failing step, 1-based; `step` is `None` for the instance itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Failure {
    pub step: Option<usize>,
    pub reason: FailureReason,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(i) => write!(f, "step {i}: {}", self.reason),
            None => write!(f, "instance: {}", self.reason),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Stats {
    pub inferred: usize,
    pub lpr: usize,
    pub spr: usize,
    pub pr: usize,
    pub sr: usize,
    /// Soft-side MaxSAT resolution steps.
    pub soft: usize,
    pub max_width: usize,
    /// Largest exact flip degree among redundancy steps.
    pub max_flip: Option<usize>,
    /// Redundancy steps whose flip degree was only bounded.
    pub flip_bounded: usize,
}

impl Stats {
    pub fn count(&self, class: RuleClass) -> usize {
        match class {
            RuleClass::Lpr => self.lpr,
            RuleClass::Spr => self.spr,
            RuleClass::Pr => self.pr,
            RuleClass::Sr => self.sr,
        }
    }

    fn record(&mut self, class: RuleClass) {
        *match class {
            RuleClass::Lpr => &mut self.lpr,
            RuleClass::Spr => &mut self.spr,
            RuleClass::Pr => &mut self.pr,
            RuleClass::Sr => &mut self.sr,
        } += 1;
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Verdict {
    pub accepted: bool,
    pub bound: Option<Bound>,
    pub failure: Option<Failure>,
    pub stats: Stats,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CheckOptions {
    /// Compute flip degrees for the statistics.
    pub flip_stats: bool,
    pub flip_limit: usize,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            flip_stats: false,
            flip_limit: 20,
        }
    }
}

/// What the checker learned about one accepted step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StepRecord {
    Inferred,
    Redundant {
        class: RuleClass,
        cost: CostCheckReport,
        flip: Option<FlipDegree>,
    },
    Conclude,
}

/// Incremental checker for cost-SR derivations.
pub struct Checker<'a> {
    inst: &'a Instance,
    db: ClauseDb,
    options: CheckOptions,
    stats: Stats,
    steps: usize,
}

impl<'a> Checker<'a> {
    /// Fails if the hard clauses already propagate to a conflict.
    pub fn new(inst: &'a Instance, options: CheckOptions) -> Result<Checker<'a>, Failure> {
        let db = ClauseDb::new(inst.hard());
        if db.root_conflict() {
            return Err(Failure {
                step: None,
                reason: FailureReason::InitialConflict,
            });
        }
        Ok(Checker::unchecked(inst, db, options))
    }

    /// A checker that does not require the hard part to be consistent.
    pub(crate) fn unchecked(
        inst: &'a Instance,
        db: ClauseDb,
        options: CheckOptions,
    ) -> Checker<'a> {
        Checker {
            inst,
            db,
            options,
            stats: Stats::default(),
            steps: 0,
        }
    }

    pub fn db(&self) -> &ClauseDb {
        &self.db
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    /// Checks and applies the next step.
    pub fn step(&mut self, step: &ProofStep) -> Result<StepRecord, Failure> {
        self.steps += 1;
        let index = self.steps;
        let fail = |reason| Failure {
            step: Some(index),
            reason,
        };
        match step {
            ProofStep::Inferred(clause) => {
                if let Some(v) = clause.max_var().filter(|v| v.id() > self.inst.nvars()) {
                    return Err(fail(FailureReason::Rejected(Rejection::NewVariable(v))));
                }
                if !self.db.rup(clause) {
                    return Err(fail(FailureReason::NotRup(clause.clone())));
                }
                self.stats.inferred += 1;
                self.stats.max_width = self.stats.max_width.max(clause.len());
                self.db.add(clause.clone());
                Ok(StepRecord::Inferred)
            }
            ProofStep::Redundant {
                clause,
                witness,
                claimed,
            } => {
                let accepted = self
                    .db
                    .check_redundant(self.inst, clause, witness, *claimed)
                    .map_err(|r| fail(FailureReason::Rejected(r)))?;
                self.stats.record(accepted.class);
                self.stats.max_width = self.stats.max_width.max(clause.len());
                let flip = if self.options.flip_stats {
                    let flip = flip_degree(clause, witness, self.options.flip_limit)
                        .expect("tautologies were rejected above");
                    match flip {
                        FlipDegree::Exact(n) => {
                            self.stats.max_flip = Some(self.stats.max_flip.unwrap_or(0).max(n))
                        }
                        FlipDegree::UpperBound(_) => self.stats.flip_bounded += 1,
                    }
                    Some(flip)
                } else {
                    None
                };
                self.db.add(clause.clone());
                Ok(StepRecord::Redundant {
                    class: accepted.class,
                    cost: accepted.cost,
                    flip,
                })
            }
            ProofStep::Conclude(bound) => {
                check_conclusion(&self.db, self.inst, *bound)
                    .map_err(|m| fail(FailureReason::Conclusion(m)))?;
                Ok(StepRecord::Conclude)
            }
        }
    }
}

fn check_conclusion(db: &ClauseDb, inst: &Instance, bound: Bound) -> Result<(), String> {
    let positive: Vec<_> = inst
        .blocking()
        .iter()
        .filter(|b| db.contains_unit(b.pos()))
        .collect();
    let k = bound.k();
    if positive.len() < k {
        return Err(format!(
            "{} positive blocking units derived, {} required",
            positive.len(),
            k
        ));
    }
    if let Bound::Eq(_) = bound {
        let open: Vec<_> = inst
            .blocking()
            .iter()
            .filter(|b| !db.contains_unit(b.neg()))
            .collect();
        if let Some(b) = open.iter().find(|b| !db.contains_unit(b.pos())) {
            return Err(format!("blocking variable {b} has no unit"));
        }
        if open.len() > k {
            return Err(format!(
                "{} blocking variables lack a negative unit, at most {k} allowed",
                open.len()
            ));
        }
    }
    Ok(())
}

/// Checks a proof; returns the verdict and a record per accepted step.
pub fn check_proof_detailed(
    inst: &Instance,
    proof: &Proof,
    options: CheckOptions,
) -> (Verdict, Vec<StepRecord>) {
    let mut records = Vec::with_capacity(proof.len());
    let rejected = |failure, stats| Verdict {
        accepted: false,
        bound: None,
        failure: Some(failure),
        stats,
    };
    let mut checker = match Checker::new(inst, options) {
        Ok(c) => c,
        Err(f) => return (rejected(f, Stats::default()), records),
    };
    for (i, step) in proof.steps.iter().enumerate() {
        if matches!(step, ProofStep::Conclude(_)) && i + 1 != proof.len() {
            let failure = Failure {
                step: Some(i + 1),
                reason: FailureReason::Conclusion("conclusion is not the last step".into()),
            };
            return (rejected(failure, checker.stats.clone()), records);
        }
        match checker.step(step) {
            Ok(r) => records.push(r),
            Err(f) => return (rejected(f, checker.stats.clone()), records),
        }
    }
    let verdict = Verdict {
        accepted: true,
        bound: proof.conclusion(),
        failure: None,
        stats: checker.stats.clone(),
    };
    (verdict, records)
}

pub fn check_proof(inst: &Instance, proof: &Proof) -> Verdict {
    check_proof_detailed(inst, proof, CheckOptions::default()).0
}

pub fn check_proof_with(inst: &Instance, proof: &Proof, options: CheckOptions) -> Verdict {
    check_proof_detailed(inst, proof, options).0
}

/// Checks a refutation of the hard clauses, ignoring cost: the result is
/// true iff every step is accepted and some step derives the empty clause.
/// Unlike [`check_proof`], an inconsistent hard part is allowed.
pub fn check_refutation(inst: &Instance, proof: &Proof) -> Result<(), Failure> {
    let mut checker = Checker::unchecked(inst, ClauseDb::new(inst.hard()), CheckOptions::default());
    for step in &proof.steps {
        checker.step(step)?;
        if step.clause().is_some_and(Clause::is_empty) {
            return Ok(());
        }
    }
    Err(Failure {
        step: None,
        reason: FailureReason::Rule("refutation does not derive the empty clause".into()),
    })
}
