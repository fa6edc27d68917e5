//! Pseudo-Boolean proof export.
//!
//! Every accepted cost-SR step becomes one `rup` or `red` line over the
//! objective `Σ b_i`. A `red` line is followed by structured comments that
//! spell out the cost inequality `f↾σ − f ≤ 0` in the linear form
//! `c + Σ c_v·v`: the `costdiff` line gives `c` and the `c_v`, one
//! `costvar` line bounds each nonzero term by `max(c_v, 0)`, and the
//! `costmax` line states the resulting constant.

use std::fmt::Write as _;

use thiserror::Error;

use super::{check_proof_detailed, Bound, CheckOptions, Failure, Proof, ProofStep, StepRecord};
use crate::model::{Clause, Image, Instance, Lit, Substitution, Var};

pub const PB_HEADER: &str = "pseudo-Boolean proof version 2.0";
pub const PB_FOOTER: &str = "end pseudo-Boolean proof";

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PbLine {
    Header,
    /// Free-form `*` comment.
    Comment(String),
    Objective(Vec<Var>),
    Rup(Clause),
    Red {
        clause: Clause,
        witness: Substitution,
    },
    /// `c + Σ c_v·v`.
    CostDiff {
        constant: i64,
        terms: Vec<(i64, Var)>,
    },
    /// `c_v·v ≤ max(c_v, 0)`.
    CostVar {
        coefficient: i64,
        var: Var,
        max: i64,
    },
    CostMax(i64),
    Output,
    Conclusion(Option<Bound>),
    End,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PbScript {
    pub lines: Vec<PbLine>,
}

impl PbScript {
    /// `costmax` constants in order, one per `red` line.
    pub fn cost_maxima(&self) -> Vec<i64> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                PbLine::CostMax(c) => Some(*c),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ExportError {
    #[error("proof is not accepted: {0}")]
    Rejected(Failure),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn term(lit: Lit) -> String {
    if lit.is_positive() {
        format!("+1 x{}", lit.var().id())
    } else {
        format!("+1 ~x{}", lit.var().id())
    }
}

fn constraint(clause: &Clause) -> String {
    let mut s = String::new();
    for &l in clause.lits() {
        s.push_str(&term(l));
        s.push(' ');
    }
    s.push_str(">= 1 ;");
    s
}

fn image(img: Image) -> String {
    match img {
        Image::True => "1".into(),
        Image::False => "0".into(),
        Image::Lit(l) if l.is_positive() => format!("x{}", l.var().id()),
        Image::Lit(l) => format!("~x{}", l.var().id()),
    }
}

fn print_line(out: &mut String, line: &PbLine) {
    match line {
        PbLine::Header => out.push_str(PB_HEADER),
        PbLine::Comment(text) => {
            out.push('*');
            if !text.is_empty() {
                out.push(' ');
                out.push_str(text);
            }
        }
        PbLine::Objective(vars) => {
            out.push_str("objective");
            for v in vars {
                write!(out, " +1 x{}", v.id()).unwrap();
            }
            out.push_str(" ;");
        }
        PbLine::Rup(clause) => write!(out, "rup {}", constraint(clause)).unwrap(),
        PbLine::Red { clause, witness } => {
            write!(out, "red {}", constraint(clause)).unwrap();
            for (v, img) in witness.entries() {
                write!(out, " x{} -> {}", v.id(), image(img)).unwrap();
            }
        }
        PbLine::CostDiff { constant, terms } => {
            write!(out, "* costdiff {constant}").unwrap();
            for (c, v) in terms {
                write!(out, " {c:+} x{}", v.id()).unwrap();
            }
            out.push_str(" ;");
        }
        PbLine::CostVar {
            coefficient,
            var,
            max,
        } => write!(out, "* costvar {coefficient:+} x{} <= {max} ;", var.id()).unwrap(),
        PbLine::CostMax(c) => write!(out, "* costmax {c} <= 0 ;").unwrap(),
        PbLine::Output => out.push_str("output NONE"),
        PbLine::Conclusion(None) => out.push_str("conclusion NONE"),
        PbLine::Conclusion(Some(Bound::Eq(k))) => write!(out, "conclusion BOUNDS {k} {k}").unwrap(),
        PbLine::Conclusion(Some(Bound::Geq(k))) => {
            write!(out, "conclusion BOUNDS {k} INF").unwrap()
        }
        PbLine::End => out.push_str(PB_FOOTER),
    }
}

pub fn print_pb_script(script: &PbScript) -> String {
    let mut out = String::new();
    for line in &script.lines {
        print_line(&mut out, line);
        out.push('\n');
    }
    out
}

/// Builds the script for an accepted proof.
pub fn export_script(inst: &Instance, proof: &Proof) -> Result<PbScript, ExportError> {
    let (verdict, records) = check_proof_detailed(inst, proof, CheckOptions::default());
    if let Some(failure) = verdict.failure {
        return Err(ExportError::Rejected(failure));
    }
    let mut lines = vec![
        PbLine::Header,
        PbLine::Comment(format!(
            "nvars {} hard {} blocking {}",
            inst.nvars(),
            inst.hard().len(),
            inst.blocking().len()
        )),
        PbLine::Objective(inst.blocking().to_vec()),
    ];
    for (step, record) in proof.steps.iter().zip(&records) {
        match (step, record) {
            (ProofStep::Inferred(clause), _) => lines.push(PbLine::Rup(clause.clone())),
            (
                ProofStep::Redundant {
                    clause, witness, ..
                },
                StepRecord::Redundant { cost, .. },
            ) => {
                lines.push(PbLine::Red {
                    clause: clause.clone(),
                    witness: witness.clone(),
                });
                lines.push(PbLine::CostDiff {
                    constant: cost.constant,
                    terms: cost.coefficients.iter().map(|(&v, &c)| (c, v)).collect(),
                });
                for (&var, &coefficient) in &cost.coefficients {
                    lines.push(PbLine::CostVar {
                        coefficient,
                        var,
                        max: coefficient.max(0),
                    });
                }
                lines.push(PbLine::CostMax(cost.max_delta));
            }
            _ => {}
        }
    }
    lines.push(PbLine::Output);
    lines.push(PbLine::Conclusion(verdict.bound));
    lines.push(PbLine::End);
    Ok(PbScript { lines })
}

/// Exports an accepted proof as a pseudo-Boolean proof script.
pub fn export_veripb(inst: &Instance, proof: &Proof) -> Result<String, ExportError> {
    export_script(inst, proof).map(|s| print_pb_script(&s))
}

struct Tokens<'a> {
    line: usize,
    inner: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExportError> {
        Err(ExportError::Parse {
            line: self.line,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Result<&'a str, ExportError> {
        match self.inner.next() {
            Some(t) => Ok(t),
            None => self.err("unexpected end of line"),
        }
    }

    fn expect(&mut self, want: &str) -> Result<(), ExportError> {
        let t = self.next()?;
        if t == want {
            Ok(())
        } else {
            self.err(format!("expected `{want}`, found `{t}`"))
        }
    }

    fn end(&mut self) -> Result<(), ExportError> {
        match self.inner.next() {
            None => Ok(()),
            Some(t) => self.err(format!("trailing token `{t}`")),
        }
    }

    fn int(&mut self) -> Result<i64, ExportError> {
        let t = self.next()?;
        t.parse()
            .or_else(|_| self.err(format!("bad integer `{t}`")))
    }

    fn lit(&mut self, t: &str) -> Result<Lit, ExportError> {
        let (neg, name) = match t.strip_prefix('~') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let id = name
            .strip_prefix('x')
            .and_then(|n| n.parse::<u32>().ok())
            .and_then(Var::try_new);
        match id {
            Some(v) if neg => Ok(v.neg()),
            Some(v) => Ok(v.pos()),
            None => self.err(format!("bad variable `{t}`")),
        }
    }

    fn var(&mut self) -> Result<Var, ExportError> {
        let t = self.next()?;
        let l = self.lit(t)?;
        if l.is_negative() {
            return self.err(format!("negated variable `{t}`"));
        }
        Ok(l.var())
    }

    /// `+1 l ... >= 1 ;`
    fn clause(&mut self) -> Result<Clause, ExportError> {
        let mut lits = Vec::new();
        loop {
            match self.next()? {
                "+1" => {
                    let t = self.next()?;
                    lits.push(self.lit(t)?);
                }
                ">=" => break,
                t => return self.err(format!("unexpected `{t}` in constraint")),
            }
        }
        self.expect("1")?;
        self.expect(";")?;
        Ok(Clause::new(lits))
    }
}

/// Parses a script produced by [`print_pb_script`].
pub fn parse_pb_script(text: &str) -> Result<PbScript, ExportError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut t = Tokens {
            line: i + 1,
            inner: trimmed.split_whitespace().peekable(),
        };
        if trimmed == PB_HEADER {
            lines.push(PbLine::Header);
            continue;
        }
        if trimmed == PB_FOOTER {
            lines.push(PbLine::End);
            continue;
        }
        let line = match t.next()? {
            "*" => match t.inner.peek().copied() {
                Some("costdiff") => {
                    t.next()?;
                    let constant = t.int()?;
                    let mut terms = Vec::new();
                    loop {
                        if t.inner.peek() == Some(&";") {
                            t.next()?;
                            break;
                        }
                        let c = t.int()?;
                        terms.push((c, t.var()?));
                    }
                    PbLine::CostDiff { constant, terms }
                }
                Some("costvar") => {
                    t.next()?;
                    let coefficient = t.int()?;
                    let var = t.var()?;
                    t.expect("<=")?;
                    let max = t.int()?;
                    t.expect(";")?;
                    PbLine::CostVar {
                        coefficient,
                        var,
                        max,
                    }
                }
                Some("costmax") => {
                    t.next()?;
                    let c = t.int()?;
                    t.expect("<=")?;
                    t.expect("0")?;
                    t.expect(";")?;
                    PbLine::CostMax(c)
                }
                _ => {
                    let rest = trimmed[1..].trim_start();
                    lines.push(PbLine::Comment(rest.to_string()));
                    continue;
                }
            },
            "objective" => {
                let mut vars = Vec::new();
                loop {
                    match t.next()? {
                        ";" => break,
                        "+1" => vars.push(t.var()?),
                        other => return t.err(format!("unexpected `{other}` in objective")),
                    }
                }
                PbLine::Objective(vars)
            }
            "rup" => PbLine::Rup(t.clause()?),
            "red" => {
                let clause = t.clause()?;
                let mut witness = Substitution::identity();
                while let Some(name) = t.inner.next() {
                    let v = t.lit(name)?;
                    if v.is_negative() {
                        return t.err(format!("negated witness variable `{name}`"));
                    }
                    t.expect("->")?;
                    let img = match t.next()? {
                        "1" => Image::True,
                        "0" => Image::False,
                        other => Image::Lit(t.lit(other)?),
                    };
                    witness.set(v.var(), img);
                }
                PbLine::Red { clause, witness }
            }
            "output" => {
                t.expect("NONE")?;
                PbLine::Output
            }
            "conclusion" => match t.next()? {
                "NONE" => PbLine::Conclusion(None),
                "BOUNDS" => {
                    let lo = t.int()?;
                    let lo = usize::try_from(lo).or_else(|_| t.err("negative bound"))?;
                    let bound = match t.next()? {
                        "INF" => Bound::Geq(lo),
                        hi if hi.parse::<usize>() == Ok(lo) => Bound::Eq(lo),
                        hi => return t.err(format!("unsupported upper bound `{hi}`")),
                    };
                    PbLine::Conclusion(Some(bound))
                }
                other => return t.err(format!("unknown conclusion `{other}`")),
            },
            other => return t.err(format!("unknown instruction `{other}`")),
        };
        t.end()?;
        lines.push(line);
    }
    Ok(PbScript { lines })
}
