//! MaxSAT resolution over a pair (hard database H, soft multiset S), with
//! cost-SR steps allowed on the hard side.

use super::{Bound, Failure, FailureReason, Stats, Verdict};
use crate::model::{Clause, Formula, Instance, Var};
use crate::rules::{ClauseDb, RuleClass};
use crate::Substitution;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MsrStep {
    /// (a) RUP from H.
    HardInfer(Clause),
    /// (a′) cost-SR with respect to H.
    HardRedundant {
        clause: Clause,
        witness: Substitution,
        claimed: RuleClass,
    },
    /// (b) copy a clause of H into S.
    CopyToSoft(Clause),
    /// (c) replace soft `C` by `C ∨ x` and `C ∨ ¬x`.
    Split(Clause, Var),
    /// (d) replace soft `C ∨ x` and `C ∨ ¬x` by `C`.
    Merge(Clause, Var),
    /// S holds at least k copies of the empty clause.
    ConcludeBot(usize),
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MsrProof {
    pub steps: Vec<MsrStep>,
}

/// Incremental checker state: H starts as the hard clauses, S as the
/// negated blocking units.
pub struct MsrChecker<'a> {
    inst: &'a Instance,
    hard: ClauseDb,
    soft: Formula,
    stats: Stats,
    steps: usize,
}

impl<'a> MsrChecker<'a> {
    pub fn new(inst: &'a Instance) -> Result<MsrChecker<'a>, Failure> {
        let hard = ClauseDb::new(inst.hard());
        if hard.root_conflict() {
            return Err(Failure {
                step: None,
                reason: FailureReason::InitialConflict,
            });
        }
        Ok(MsrChecker {
            inst,
            hard,
            soft: inst
                .blocking()
                .iter()
                .map(|b| Clause::unit(b.neg()))
                .collect(),
            stats: Stats::default(),
            steps: 0,
        })
    }

    pub fn hard(&self) -> &Formula {
        self.hard.formula()
    }

    pub fn soft(&self) -> &Formula {
        &self.soft
    }

    fn split_parts(clause: &Clause, var: Var) -> Result<(Clause, Clause), String> {
        if clause.contains_var(var) {
            return Err(format!("variable {var} already occurs in {clause:?}"));
        }
        Ok((clause.with(var.pos()), clause.with(var.neg())))
    }

    pub fn step(&mut self, step: &MsrStep) -> Result<Option<Bound>, Failure> {
        self.steps += 1;
        let index = self.steps;
        let fail = |reason: String| Failure {
            step: Some(index),
            reason: FailureReason::Rule(reason),
        };
        let nvars = self.inst.nvars();
        let out_of_range = |c: &Clause| c.max_var().filter(|v| v.id() > nvars);
        match step {
            MsrStep::HardInfer(clause) => {
                if let Some(v) = out_of_range(clause) {
                    return Err(fail(format!(
                        "variable {v} is not a variable of the instance"
                    )));
                }
                if !self.hard.rup(clause) {
                    return Err(Failure {
                        step: Some(index),
                        reason: FailureReason::NotRup(clause.clone()),
                    });
                }
                self.stats.inferred += 1;
                self.hard.add(clause.clone());
            }
            MsrStep::HardRedundant {
                clause,
                witness,
                claimed,
            } => {
                let accepted = self
                    .hard
                    .check_redundant(self.inst, clause, witness, *claimed)
                    .map_err(|r| Failure {
                        step: Some(index),
                        reason: FailureReason::Rejected(r),
                    })?;
                self.stats.record(accepted.class);
                self.hard.add(clause.clone());
            }
            MsrStep::CopyToSoft(clause) => {
                if !self.hard.formula().contains(clause) {
                    return Err(fail(format!("{clause:?} is not a hard clause")));
                }
                self.stats.soft += 1;
                self.soft.add(clause.clone());
            }
            MsrStep::Split(clause, var) => {
                if var.id() > nvars {
                    return Err(fail(format!(
                        "variable {var} is not a variable of the instance"
                    )));
                }
                let (pos, neg) = Self::split_parts(clause, *var).map_err(fail)?;
                if !self.soft.remove_one(clause) {
                    return Err(fail(format!("{clause:?} is not a soft clause")));
                }
                self.stats.soft += 1;
                self.soft.add(pos);
                self.soft.add(neg);
            }
            MsrStep::Merge(clause, var) => {
                let (pos, neg) = Self::split_parts(clause, *var).map_err(fail)?;
                if !self.soft.contains(&pos) || !self.soft.contains(&neg) {
                    return Err(fail(format!(
                        "merge premises {pos:?} and {neg:?} are not both soft"
                    )));
                }
                self.soft.remove_one(&pos);
                self.soft.remove_one(&neg);
                self.stats.soft += 1;
                self.soft.add(clause.clone());
            }
            MsrStep::ConcludeBot(k) => {
                let have = self.soft.count(&Clause::empty());
                if have < *k {
                    return Err(Failure {
                        step: Some(index),
                        reason: FailureReason::Conclusion(format!(
                            "{have} soft empty clauses, {k} required"
                        )),
                    });
                }
                return Ok(Some(Bound::Geq(*k)));
            }
        }
        let width = step_width(step);
        self.stats.max_width = self.stats.max_width.max(width);
        Ok(None)
    }
}

fn step_width(step: &MsrStep) -> usize {
    match step {
        MsrStep::HardInfer(c)
        | MsrStep::HardRedundant { clause: c, .. }
        | MsrStep::CopyToSoft(c) => c.len(),
        MsrStep::Split(c, _) => c.len() + 1,
        MsrStep::Merge(c, _) => c.len(),
        MsrStep::ConcludeBot(_) => 0,
    }
}

/// Checks a MaxSAT resolution derivation; a final `ConcludeBot(k)` yields
/// the bound `≥ k`.
pub fn check_msr_proof(inst: &Instance, proof: &MsrProof) -> Verdict {
    let rejected = |failure, stats| Verdict {
        accepted: false,
        bound: None,
        failure: Some(failure),
        stats,
    };
    let mut checker = match MsrChecker::new(inst) {
        Ok(c) => c,
        Err(f) => return rejected(f, Stats::default()),
    };
    let mut bound = None;
    for (i, step) in proof.steps.iter().enumerate() {
        if matches!(step, MsrStep::ConcludeBot(_)) && i + 1 != proof.steps.len() {
            let failure = Failure {
                step: Some(i + 1),
                reason: FailureReason::Conclusion("conclusion is not the last step".into()),
            };
            return rejected(failure, checker.stats.clone());
        }
        match checker.step(step) {
            Ok(b) => bound = b.or(bound),
            Err(f) => return rejected(f, checker.stats.clone()),
        }
    }
    Verdict {
        accepted: true,
        bound,
        failure: None,
        stats: checker.stats,
    }
}
