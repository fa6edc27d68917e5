//! Line-oriented text formats: BCNF instances, cost-SR proofs, MSR proofs
//! and unit-weight WCNF input.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Bound, MsrProof, MsrStep, Proof, ProofStep};
use crate::model::{Clause, Formula, Image, Instance, Lit, ModelError, Substitution, Var};
use crate::rules::RuleClass;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `p bcnf` header")]
    MissingHeader,
    #[error("malformed header `{0}`")]
    BadHeader(String),
    #[error("unexpected token `{0}`")]
    BadToken(String),
    #[error("line is not terminated by 0")]
    Unterminated,
    #[error("variable {var} out of range 1..={nvars}")]
    VarOutOfRange { var: u32, nvars: u32 },
    #[error("blocking variable {0} declared twice")]
    DuplicateBlocking(u32),
    #[error("header declares {declared} {what}, found {found}")]
    CountMismatch {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("witness references variable 0")]
    ZeroWitnessVar,
    #[error("conclusion must be the last line")]
    ConclusionNotLast,
    #[error("soft clause weight {0} is not 1")]
    Weight(String),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && l.split_whitespace().next() != Some("c"))
}

fn parse_int<T: std::str::FromStr>(line: usize, token: &str) -> Result<T, ParseError> {
    token
        .parse()
        .map_err(|_| err(line, ParseErrorKind::BadToken(token.to_string())))
}

/// Reads literals up to the terminating 0.
fn parse_lits<'a, I: Iterator<Item = &'a str>>(
    line: usize,
    tokens: &mut I,
) -> Result<Clause, ParseError> {
    let mut lits = Vec::new();
    loop {
        let token = tokens
            .next()
            .ok_or_else(|| err(line, ParseErrorKind::Unterminated))?;
        let value: i32 = parse_int(line, token)?;
        match Lit::from_dimacs(value) {
            None => return Ok(Clause::new(lits)),
            Some(l) => lits.push(l),
        }
    }
}

fn check_vars(line: usize, clause: &Clause, nvars: u32) -> Result<(), ParseError> {
    match clause.max_var() {
        Some(v) if v.id() > nvars => Err(err(
            line,
            ParseErrorKind::VarOutOfRange { var: v.id(), nvars },
        )),
        _ => Ok(()),
    }
}

fn no_trailing<'a, I: Iterator<Item = &'a str>>(
    line: usize,
    tokens: &mut I,
) -> Result<(), ParseError> {
    match tokens.next() {
        Some(t) => Err(err(line, ParseErrorKind::BadToken(t.to_string()))),
        None => Ok(()),
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(1, ParseErrorKind::MissingHeader))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (nvars, nclauses, nblocking) = match fields.as_slice() {
        ["p", "bcnf", nv, nc, nb] => (nv.parse::<u32>(), nc.parse::<usize>(), nb.parse::<usize>()),
        ["p", ..] => return Err(err(hline, ParseErrorKind::BadHeader(header.to_string()))),
        _ => return Err(err(hline, ParseErrorKind::MissingHeader)),
    };
    let (Ok(nvars), Ok(nclauses), Ok(nblocking)) = (nvars, nclauses, nblocking) else {
        return Err(err(hline, ParseErrorKind::BadHeader(header.to_string())));
    };
    let mut blocking: Option<Vec<Var>> = None;
    let mut hard = Formula::new();
    let mut last_line = hline;
    for (line, content) in lines {
        last_line = line;
        let mut tokens = content.split_whitespace().peekable();
        if tokens.peek() == Some(&"b") {
            tokens.next();
            if blocking.is_some() {
                return Err(err(line, ParseErrorKind::BadToken("b".into())));
            }
            let mut vars = Vec::new();
            loop {
                let token = tokens
                    .next()
                    .ok_or_else(|| err(line, ParseErrorKind::Unterminated))?;
                let id: u32 = parse_int(line, token)?;
                if id == 0 {
                    break;
                }
                if id > nvars {
                    return Err(err(line, ParseErrorKind::VarOutOfRange { var: id, nvars }));
                }
                let v = Var::new(id);
                if vars.contains(&v) {
                    return Err(err(line, ParseErrorKind::DuplicateBlocking(id)));
                }
                vars.push(v);
            }
            no_trailing(line, &mut tokens)?;
            blocking = Some(vars);
        } else {
            let clause = parse_lits(line, &mut tokens)?;
            no_trailing(line, &mut tokens)?;
            check_vars(line, &clause, nvars)?;
            hard.add(clause);
        }
    }
    let blocking = blocking.unwrap_or_default();
    if blocking.len() != nblocking {
        return Err(err(
            last_line,
            ParseErrorKind::CountMismatch {
                what: "blocking variables",
                declared: nblocking,
                found: blocking.len(),
            },
        ));
    }
    if hard.len() != nclauses {
        return Err(err(
            last_line,
            ParseErrorKind::CountMismatch {
                what: "clauses",
                declared: nclauses,
                found: hard.len(),
            },
        ));
    }
    Instance::new(hard, blocking, nvars).map_err(|e| match e {
        ModelError::VarOutOfRange { var, nvars } => {
            err(hline, ParseErrorKind::VarOutOfRange { var, nvars })
        }
        ModelError::DuplicateBlocking(v) => err(hline, ParseErrorKind::DuplicateBlocking(v)),
        other => err(hline, ParseErrorKind::BadHeader(other.to_string())),
    })
}

pub fn print_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "p bcnf {} {} {}",
        inst.nvars(),
        inst.hard().len(),
        inst.blocking().len()
    );
    out.push('b');
    for b in inst.blocking() {
        let _ = write!(out, " {b}");
    }
    out.push_str(" 0\n");
    for c in inst.hard().expanded() {
        let _ = writeln!(out, "{c}");
    }
    out
}

fn parse_witness<'a, I: Iterator<Item = &'a str>>(
    line: usize,
    tokens: &mut I,
) -> Result<Substitution, ParseError> {
    let mut sigma = Substitution::identity();
    loop {
        let token = tokens
            .next()
            .ok_or_else(|| err(line, ParseErrorKind::Unterminated))?;
        let id: u32 = parse_int(line, token)?;
        let Some(var) = Var::try_new(id) else {
            return Ok(sigma);
        };
        let img = tokens
            .next()
            .ok_or_else(|| err(line, ParseErrorKind::Unterminated))?;
        let image = match img {
            "t" => Image::True,
            "f" => Image::False,
            _ => {
                let value: i32 = parse_int(line, img)?;
                Image::Lit(
                    Lit::from_dimacs(value)
                        .ok_or_else(|| err(line, ParseErrorKind::ZeroWitnessVar))?,
                )
            }
        };
        sigma.set(var, image);
    }
}

fn print_witness(out: &mut String, sigma: &Substitution) {
    out.push_str(" w");
    for (v, img) in sigma.entries() {
        let _ = match img {
            Image::True => write!(out, " {v} t"),
            Image::False => write!(out, " {v} f"),
            Image::Lit(l) => write!(out, " {v} {l}"),
        };
    }
    out.push_str(" 0");
}

/// Parses the clause, the optional witness and tag of a step line.
fn parse_step_body<'a, I: Iterator<Item = &'a str>>(
    line: usize,
    tokens: &mut std::iter::Peekable<I>,
) -> Result<(Clause, Option<(Substitution, RuleClass)>), ParseError> {
    let clause = parse_lits(line, tokens)?;
    match tokens.next() {
        None => Ok((clause, None)),
        Some("w") => {
            let sigma = parse_witness(line, tokens)?;
            let class = match tokens.next() {
                None => RuleClass::Sr,
                Some(tag) => tag
                    .strip_prefix('#')
                    .and_then(RuleClass::from_tag)
                    .ok_or_else(|| err(line, ParseErrorKind::BadToken(tag.to_string())))?,
            };
            no_trailing(line, tokens)?;
            Ok((clause, Some((sigma, class))))
        }
        Some(t) => Err(err(line, ParseErrorKind::BadToken(t.to_string()))),
    }
}

fn parse_k(line: usize, token: Option<&str>) -> Result<usize, ParseError> {
    let token = token.ok_or_else(|| err(line, ParseErrorKind::Unterminated))?;
    parse_int(line, token)
}

pub fn parse_proof(text: &str) -> Result<Proof, ParseError> {
    let mut steps = Vec::new();
    let mut concluded = None;
    for (line, content) in content_lines(text) {
        if let Some(at) = concluded {
            return Err(err(at, ParseErrorKind::ConclusionNotLast));
        }
        let mut tokens = content.split_whitespace().peekable();
        if tokens.peek() == Some(&"conclude") {
            tokens.next();
            let bound = match tokens.next() {
                Some("geq") => Bound::Geq(parse_k(line, tokens.next())?),
                Some("eq") => Bound::Eq(parse_k(line, tokens.next())?),
                Some(t) => return Err(err(line, ParseErrorKind::BadToken(t.to_string()))),
                None => return Err(err(line, ParseErrorKind::Unterminated)),
            };
            no_trailing(line, &mut tokens)?;
            steps.push(ProofStep::Conclude(bound));
            concluded = Some(line);
            continue;
        }
        steps.push(match parse_step_body(line, &mut tokens)? {
            (clause, None) => ProofStep::Inferred(clause),
            (clause, Some((witness, claimed))) => ProofStep::Redundant {
                clause,
                witness,
                claimed,
            },
        });
    }
    Ok(Proof { steps })
}

fn print_redundant(out: &mut String, clause: &Clause, witness: &Substitution, claimed: RuleClass) {
    let _ = write!(out, "{clause}");
    print_witness(out, witness);
    let _ = writeln!(out, " #{claimed}");
}

pub fn print_proof(proof: &Proof) -> String {
    let mut out = String::new();
    for step in &proof.steps {
        match step {
            ProofStep::Inferred(c) => {
                let _ = writeln!(out, "{c}");
            }
            ProofStep::Redundant {
                clause,
                witness,
                claimed,
            } => print_redundant(&mut out, clause, witness, *claimed),
            ProofStep::Conclude(b) => {
                let _ = writeln!(out, "conclude {b}");
            }
        }
    }
    out
}

pub fn parse_msr_proof(text: &str) -> Result<MsrProof, ParseError> {
    let mut steps = Vec::new();
    let mut concluded = None;
    for (line, content) in content_lines(text) {
        if let Some(at) = concluded {
            return Err(err(at, ParseErrorKind::ConclusionNotLast));
        }
        let mut tokens = content.split_whitespace().peekable();
        let tag = tokens.next().expect("content lines are non-empty");
        let step = match tag {
            "h" | "s+" => {
                let clause = parse_lits(line, &mut tokens)?;
                no_trailing(line, &mut tokens)?;
                if tag == "h" {
                    MsrStep::HardInfer(clause)
                } else {
                    MsrStep::CopyToSoft(clause)
                }
            }
            "hw" => match parse_step_body(line, &mut tokens)? {
                (clause, Some((witness, claimed))) => MsrStep::HardRedundant {
                    clause,
                    witness,
                    claimed,
                },
                (_, None) => return Err(err(line, ParseErrorKind::Unterminated)),
            },
            "sp" | "sm" => {
                let id: u32 = parse_int(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| err(line, ParseErrorKind::Unterminated))?,
                )?;
                let var = Var::try_new(id)
                    .ok_or_else(|| err(line, ParseErrorKind::BadToken("0".into())))?;
                let clause = parse_lits(line, &mut tokens)?;
                no_trailing(line, &mut tokens)?;
                if tag == "sp" {
                    MsrStep::Split(clause, var)
                } else {
                    MsrStep::Merge(clause, var)
                }
            }
            "conclude" => {
                match tokens.next() {
                    Some("bot") => {}
                    Some(t) => return Err(err(line, ParseErrorKind::BadToken(t.to_string()))),
                    None => return Err(err(line, ParseErrorKind::Unterminated)),
                }
                let k = parse_k(line, tokens.next())?;
                no_trailing(line, &mut tokens)?;
                concluded = Some(line);
                MsrStep::ConcludeBot(k)
            }
            other => return Err(err(line, ParseErrorKind::BadToken(other.to_string()))),
        };
        steps.push(step);
    }
    Ok(MsrProof { steps })
}

pub fn print_msr_proof(proof: &MsrProof) -> String {
    let mut out = String::new();
    for step in &proof.steps {
        match step {
            MsrStep::HardInfer(c) => {
                let _ = writeln!(out, "h {c}");
            }
            MsrStep::HardRedundant {
                clause,
                witness,
                claimed,
            } => {
                out.push_str("hw ");
                print_redundant(&mut out, clause, witness, *claimed);
            }
            MsrStep::CopyToSoft(c) => {
                let _ = writeln!(out, "s+ {c}");
            }
            MsrStep::Split(c, v) => {
                let _ = writeln!(out, "sp {v} {c}");
            }
            MsrStep::Merge(c, v) => {
                let _ = writeln!(out, "sm {v} {c}");
            }
            MsrStep::ConcludeBot(k) => {
                let _ = writeln!(out, "conclude bot {k}");
            }
        }
    }
    out
}

/// Hard and soft clauses of a unit-weight WCNF file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wcnf {
    pub hard: Formula,
    pub soft: Vec<Clause>,
}

/// Parses the headerless WCNF dialect: `h <lits> 0` for hard clauses and
/// `<weight> <lits> 0` for soft ones. Only weight 1 is accepted.
pub fn parse_wcnf(text: &str) -> Result<Wcnf, ParseError> {
    let mut hard = Formula::new();
    let mut soft = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace().peekable();
        let first = tokens.next().expect("content lines are non-empty");
        if first == "h" {
            let clause = parse_lits(line, &mut tokens)?;
            no_trailing(line, &mut tokens)?;
            hard.add(clause);
        } else if first.chars().all(|c| c.is_ascii_digit()) {
            if first != "1" {
                return Err(err(line, ParseErrorKind::Weight(first.to_string())));
            }
            let clause = parse_lits(line, &mut tokens)?;
            no_trailing(line, &mut tokens)?;
            soft.push(clause);
        } else {
            return Err(err(line, ParseErrorKind::BadToken(first.to_string())));
        }
    }
    Ok(Wcnf { hard, soft })
}
