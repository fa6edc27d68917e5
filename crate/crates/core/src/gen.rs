//! Instance and proof generators: blocking-variable transformation, the
//! blocking pigeonhole formulas and their proofs, lifting of refutations of
//! minimally unsatisfiable formulas, enumeration certificates, and the
//! Hamming family.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::model::{
    compose, cost_of, negation_of, restrict_clause, Assignment, Clause, Formula, Image, Instance,
    Lit, Restricted, Substitution, Var,
};
use crate::oracle::{self, dpll_refutation, sat_solve, OracleConfig, OracleError, SatResult};
use crate::proof::{check_refutation, Bound, Failure, Proof, ProofStep};
use crate::rules::{ClauseDb, RuleClass};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("refutation rejected: {0}")]
    Refutation(Failure),
}

/// Soft clause `i` is paid for by `soft_to_blocking[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockifyMapping {
    pub soft_to_blocking: Vec<Var>,
    pub original_nvars: u32,
    pub new_nvars: u32,
}

/// Replaces each soft clause `C_i` by the hard clause `C_i ∨ b_i` with a
/// fresh blocking variable.
pub fn blockify(hard: &Formula, soft: &[Clause]) -> (Instance, BlockifyMapping) {
    let original = hard
        .max_var()
        .into_iter()
        .chain(soft.iter().filter_map(Clause::max_var))
        .map(Var::id)
        .max()
        .unwrap_or(0);
    blockify_with(hard, soft, original)
}

/// As [`blockify`], with the original variable count given explicitly.
pub fn blockify_with(
    hard: &Formula,
    soft: &[Clause],
    original_nvars: u32,
) -> (Instance, BlockifyMapping) {
    let mut formula = hard.clone();
    let mut blocking = Vec::with_capacity(soft.len());
    for (i, c) in soft.iter().enumerate() {
        let b = Var::new(original_nvars + 1 + i as u32);
        formula.add(c.with(b.pos()));
        blocking.push(b);
    }
    let new_nvars = original_nvars + soft.len() as u32;
    let inst =
        Instance::new(formula, blocking.clone(), new_nvars).expect("blocking variables are fresh");
    let mapping = BlockifyMapping {
        soft_to_blocking: blocking,
        original_nvars,
        new_nvars,
    };
    (inst, mapping)
}

/// Variable layout of BPHP(m, n): `p_{i,j}` row-major, then `b_i`, then
/// `b_{i,k,j}` lexicographic in `(i, k, j)` with `i < k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BphpLayout {
    pub m: u32,
    pub n: u32,
}

impl BphpLayout {
    pub fn new(m: u32, n: u32) -> Result<BphpLayout, GenError> {
        if n < 1 || m <= n {
            return Err(GenError::InvalidParams(format!(
                "need m > n >= 1, got m = {m}, n = {n}"
            )));
        }
        Ok(BphpLayout { m, n })
    }

    pub fn p(&self, i: u32, j: u32) -> Var {
        debug_assert!((1..=self.m).contains(&i) && (1..=self.n).contains(&j));
        Var::new((i - 1) * self.n + j)
    }

    pub fn b(&self, i: u32) -> Var {
        Var::new(self.m * self.n + i)
    }

    /// `b_{i,k,j}`; the pigeons may be given in either order.
    pub fn bb(&self, i: u32, k: u32, j: u32) -> Var {
        let (i, k) = (i.min(k), i.max(k));
        debug_assert!(i < k && k <= self.m);
        // Pairs (i', k') before (i, k) in lexicographic order.
        let before = (i - 1) * self.m - (i - 1) * i / 2 + (k - i - 1);
        Var::new(self.m * self.n + self.m + before * self.n + j)
    }

    pub fn nvars(&self) -> u32 {
        self.m * self.n + self.m + self.m * (self.m - 1) / 2 * self.n
    }

    fn pigeon_pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (1..=self.m).flat_map(move |i| (i + 1..=self.m).map(move |k| (i, k)))
    }

    fn pairs(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.pigeon_pairs()
            .flat_map(move |(i, k)| (1..=self.n).map(move |j| (i, k, j)))
    }

    fn totality(&self, i: u32, holes: u32) -> Clause {
        Clause::new(
            (1..=holes)
                .map(|j| self.p(i, j).pos())
                .chain([self.b(i).pos()]),
        )
    }
}

/// The blocking pigeonhole formula: totality clauses `∨_j p_{i,j} ∨ b_i`,
/// then injectivity clauses `¬p_{i,j} ∨ ¬p_{k,j} ∨ b_{i,k,j}`.
pub fn gen_bphp(m: u32, n: u32) -> Result<Instance, GenError> {
    let l = BphpLayout::new(m, n)?;
    let mut hard = Formula::new();
    for i in 1..=m {
        hard.add(l.totality(i, n));
    }
    for (i, k, j) in l.pairs() {
        hard.add(Clause::new([
            l.p(i, j).neg(),
            l.p(k, j).neg(),
            l.bb(i, k, j).pos(),
        ]));
    }
    let blocking = (1..=m)
        .map(|i| l.b(i))
        .chain(l.pairs().map(|(i, k, j)| l.bb(i, k, j)))
        .collect();
    Ok(Instance::new(hard, blocking, l.nvars()).expect("layout is consistent"))
}

/// A variable permutation used as a symmetry witness.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PermutationWitness {
    map: BTreeMap<Var, Var>,
}

impl PermutationWitness {
    pub fn identity() -> PermutationWitness {
        PermutationWitness::default()
    }

    /// Fails unless the pairs describe a bijection.
    pub fn new<I: IntoIterator<Item = (Var, Var)>>(
        pairs: I,
    ) -> Result<PermutationWitness, GenError> {
        let mut map = BTreeMap::new();
        for (from, to) in pairs {
            if from != to && map.insert(from, to).is_some() {
                return Err(GenError::Precondition(format!("{from} is mapped twice")));
            }
        }
        let images: HashSet<Var> = map.values().copied().collect();
        let domain: HashSet<Var> = map.keys().copied().collect();
        if images.len() != map.len() || images != domain {
            return Err(GenError::Precondition(
                "permutation is not a bijection".into(),
            ));
        }
        Ok(PermutationWitness { map })
    }

    /// Adds the transposition `a ↔ b`.
    pub fn swap(&mut self, a: Var, b: Var) {
        if a != b {
            self.map.insert(a, b);
            self.map.insert(b, a);
        }
    }

    pub fn get(&self, v: Var) -> Var {
        self.map.get(&v).copied().unwrap_or(v)
    }

    pub fn as_substitution(&self) -> Substitution {
        Substitution::from_pairs(self.map.iter().map(|(&v, &w)| (v, Image::Lit(w.pos()))))
    }

    /// `¬C ∘ π`.
    pub fn witness_for(&self, clause: &Clause) -> Result<Substitution, GenError> {
        let neg = negation_of(clause).map_err(|e| GenError::Precondition(e.to_string()))?;
        Ok(compose(&neg, &self.as_substitution()))
    }
}

/// A cost-SR step whose witness is `¬C ∘ π`, after checking that `π` maps
/// blocking variables to blocking variables, that the witness satisfies
/// `C`, and that `db↾(¬C∘π) ⊆ db↾¬C`.
pub fn make_symmetry_step(
    db: &Formula,
    inst: &Instance,
    clause: &Clause,
    pi: &PermutationWitness,
) -> Result<ProofStep, GenError> {
    for (&from, &to) in &pi.map {
        if inst.is_blocking(from) != inst.is_blocking(to) {
            return Err(GenError::Precondition(format!(
                "permutation maps {from} to {to} across the blocking set"
            )));
        }
    }
    let witness = pi.witness_for(clause)?;
    if restrict_clause(clause, &witness) != Restricted::Satisfied {
        return Err(GenError::Precondition(format!(
            "¬C∘π does not satisfy {clause}"
        )));
    }
    let neg = negation_of(clause).expect("checked by witness_for");
    let under_neg: HashSet<Clause> = db
        .distinct()
        .filter_map(|d| match restrict_clause(d, &neg) {
            Restricted::Clause(c) => Some(c),
            Restricted::Satisfied => None,
        })
        .collect();
    for d in db.distinct() {
        if let Restricted::Clause(image) = restrict_clause(d, &witness) {
            if !under_neg.contains(&image) {
                return Err(GenError::Precondition(format!(
                    "{d} maps to {image}, which is not in the restriction by ¬C"
                )));
            }
        }
    }
    Ok(ProofStep::Redundant {
        clause: clause.clone(),
        witness,
        claimed: RuleClass::Sr,
    })
}

/// Clauses `¬ℓ ∨ ¬b` for each literal `ℓ` of `C`, making `b ↔ ¬C`.
pub fn derive_extension_clauses(
    db: &Formula,
    b: Var,
    clause: &Clause,
) -> Result<Vec<ProofStep>, GenError> {
    let owner = clause.with(b.pos());
    let occurrences: usize = db
        .iter()
        .filter(|(c, _)| c.contains_var(b))
        .map(|(_, n)| n)
        .sum();
    if occurrences != 1 || !db.contains(&owner) {
        return Err(GenError::Precondition(format!(
            "{b} must occur exactly once in the database, in {owner}"
        )));
    }
    Ok(clause
        .lits()
        .iter()
        .map(|&l| ProofStep::Redundant {
            clause: Clause::new([!l, b.neg()]),
            witness: Substitution::satisfying([l, b.neg()]),
            claimed: RuleClass::Lpr,
        })
        .collect())
}

/// Units `¬b_j` for every blocking variable outside `positives`, via
/// `¬b_{i_1} ∨ … ∨ ¬b_{i_k} ∨ ¬b_j` with witness `α_opt`.
pub fn derive_negative_units(
    inst: &Instance,
    alpha_opt: &Assignment,
    positives: &[Var],
) -> Result<Vec<ProofStep>, GenError> {
    if alpha_opt.len() != inst.nvars() as usize || !alpha_opt.satisfies(inst.hard()) {
        return Err(GenError::Precondition(
            "α_opt does not satisfy the hard clauses".into(),
        ));
    }
    let cost = cost_of(alpha_opt, inst).map_err(|e| GenError::Precondition(e.to_string()))?;
    if cost != positives.len()
        || positives
            .iter()
            .any(|&b| !inst.is_blocking(b) || !alpha_opt.value(b))
    {
        return Err(GenError::Precondition(
            "α_opt must set exactly the given blocking variables true".into(),
        ));
    }
    let prefix = Clause::new(positives.iter().map(|b| b.neg()));
    let witness = alpha_opt.to_substitution();
    let mut steps = Vec::new();
    for &b in inst.blocking() {
        if positives.contains(&b) {
            continue;
        }
        steps.push(ProofStep::Redundant {
            clause: prefix.with(b.neg()),
            witness: witness.clone(),
            claimed: RuleClass::Pr,
        });
        if !positives.is_empty() {
            steps.push(ProofStep::Inferred(Clause::unit(b.neg())));
        }
    }
    Ok(steps)
}

/// Accumulates steps together with the database they build.
struct Emitter {
    db: Formula,
    steps: Vec<ProofStep>,
}

impl Emitter {
    fn new(inst: &Instance) -> Emitter {
        Emitter {
            db: inst.hard().clone(),
            steps: Vec::new(),
        }
    }

    fn push(&mut self, step: ProofStep) {
        if let Some(c) = step.clause() {
            self.db.add(c.clone());
        }
        self.steps.push(step);
    }

    fn inferred(&mut self, clause: Clause) {
        self.push(ProofStep::Inferred(clause));
    }

    fn redundant(&mut self, clause: Clause, witness: Substitution, claimed: RuleClass) {
        self.push(ProofStep::Redundant {
            clause,
            witness,
            claimed,
        });
    }
}

/// A polynomial-size cost-SR proof that BPHP(m, n) has cost exactly `m − n`.
///
/// Pigeon `M` and hole `N` are eliminated per round: pigeon `M` is made the
/// one that flies (`¬b_M ∨ b_i`), is sent to hole `N` (`¬p_{M,j} ∨ p_{M,N}`),
/// hole `N` is closed to everyone else, and the remaining totality clauses
/// shrink by one hole.
pub fn gen_bphp_proof(m: u32, n: u32) -> Result<Proof, GenError> {
    let l = BphpLayout::new(m, n)?;
    let inst = gen_bphp(m, n)?;
    let mut out = Emitter::new(&inst);

    for i in 1..=m {
        let body = l.totality(i, n).without(l.b(i).pos());
        for step in derive_extension_clauses(&out.db, l.b(i), &body)? {
            out.push(step);
        }
    }
    for (i, k, j) in l.pairs() {
        let mut witness = Substitution::satisfying([l.bb(i, k, j).neg(), l.b(k).pos()]);
        for h in 1..=n {
            witness.set(l.p(k, h), Image::False);
        }
        out.redundant(Clause::unit(l.bb(i, k, j).neg()), witness, RuleClass::Pr);
        out.inferred(Clause::new([l.p(i, j).neg(), l.p(k, j).neg()]));
    }

    let (mut big_m, mut big_n) = (m, n);
    while big_n >= 1 {
        for i in 1..big_m {
            let mut pi = PermutationWitness::identity();
            for j in 1..=n {
                pi.swap(l.p(big_m, j), l.p(i, j));
            }
            pi.swap(l.b(big_m), l.b(i));
            for k in (1..=m).filter(|&k| k != i && k != big_m) {
                for j in 1..=n {
                    pi.swap(l.bb(big_m, k, j), l.bb(i, k, j));
                }
            }
            let clause = Clause::new([l.b(big_m).neg(), l.b(i).pos()]);
            let step = make_symmetry_step(&out.db, &inst, &clause, &pi)?;
            out.push(step);
        }
        for j in 1..big_n {
            let mut pi = PermutationWitness::identity();
            for a in 1..=m {
                pi.swap(l.p(a, j), l.p(a, big_n));
            }
            for (a, c) in l.pigeon_pairs() {
                pi.swap(l.bb(a, c, j), l.bb(a, c, big_n));
            }
            let clause = Clause::new([l.p(big_m, j).neg(), l.p(big_m, big_n).pos()]);
            let step = make_symmetry_step(&out.db, &inst, &clause, &pi)?;
            out.push(step);
        }
        for k in 1..big_m {
            out.inferred(Clause::unit(l.p(k, big_n).neg()));
        }
        out.redundant(
            Clause::unit(l.p(big_m, big_n).pos()),
            Substitution::satisfying([l.p(big_m, big_n).pos(), l.b(big_m).neg()]),
            RuleClass::Pr,
        );
        out.inferred(Clause::unit(l.b(big_m).neg()));
        let mut settle = Substitution::satisfying([l.p(big_m, big_n).pos(), l.b(big_m).neg()]);
        for j in 1..big_n {
            settle.set(l.p(big_m, j), Image::False);
        }
        for j in 1..big_n {
            out.redundant(
                Clause::unit(l.p(big_m, j).neg()),
                settle.clone(),
                RuleClass::Pr,
            );
        }
        for k in 1..big_m {
            out.inferred(l.totality(k, big_n - 1));
        }
        big_m -= 1;
        big_n -= 1;
    }
    out.push(ProofStep::Conclude(Bound::Eq((m - n) as usize)));
    Ok(Proof::new(out.steps))
}

/// PHP(m, n) as a plain CNF; `p_{i,j}` is variable `(i−1)·n + j`.
pub fn gen_php_cnf(m: u32, n: u32) -> Result<(Formula, u32), GenError> {
    if n < 1 || m <= n {
        return Err(GenError::InvalidParams(format!(
            "need m > n >= 1, got m = {m}, n = {n}"
        )));
    }
    let p = |i: u32, j: u32| Var::new((i - 1) * n + j);
    let mut f = Formula::new();
    for i in 1..=m {
        f.add(Clause::new((1..=n).map(|j| p(i, j).pos())));
    }
    for j in 1..=n {
        for i in 1..=m {
            for k in i + 1..=m {
                f.add(Clause::new([p(i, j).neg(), p(k, j).neg()]));
            }
        }
    }
    Ok((f, m * n))
}

/// A tree-like RUP refutation of an unsatisfiable formula, ending in `⊥`.
pub fn rup_refutation(formula: &Formula, budget: Option<u64>) -> Result<Option<Proof>, GenError> {
    let Some(clauses) = dpll_refutation(formula, &[], budget)? else {
        return Ok(None);
    };
    Ok(Some(Proof::new(
        clauses.into_iter().map(ProofStep::Inferred).collect(),
    )))
}

/// Lifts a refutation of a minimally unsatisfiable formula to a proof that
/// its blockified version has cost exactly 1.
///
/// `alpha_opt` must satisfy the blockified instance with only the last
/// blocking variable true.
pub fn lift_min_unsat(
    formula: &Formula,
    nvars: u32,
    refutation: &Proof,
    alpha_opt: &Assignment,
) -> Result<(Instance, Proof), GenError> {
    let soft: Vec<Clause> = formula.expanded().cloned().collect();
    if soft.is_empty() {
        return Err(GenError::Precondition("formula has no clauses".into()));
    }
    let plain = Instance::new(formula.clone(), vec![], nvars)
        .map_err(|e| GenError::Precondition(e.to_string()))?;
    check_refutation(&plain, refutation).map_err(GenError::Refutation)?;

    let (inst, mapping) = blockify_with(&Formula::new(), &soft, nvars);
    let blocking = mapping.soft_to_blocking;
    let last = *blocking.last().expect("nonempty");
    if alpha_opt.len() != inst.nvars() as usize
        || !alpha_opt.satisfies(inst.hard())
        || blocking.iter().any(|&b| alpha_opt.value(b) != (b == last))
    {
        return Err(GenError::Precondition(
            "α_opt must satisfy the blockified formula with only the last blocking variable true"
                .into(),
        ));
    }

    let big_b = Clause::new(blocking.iter().map(|b| b.pos()));
    let mut steps = Vec::new();
    for step in &refutation.steps {
        let lifted = match step {
            ProofStep::Inferred(c) => ProofStep::Inferred(c.or(&big_b)),
            ProofStep::Redundant {
                clause,
                witness,
                claimed,
            } => {
                let mut witness = witness.clone();
                for &b in &blocking {
                    witness.set(b, Image::False);
                }
                ProofStep::Redundant {
                    clause: clause.or(&big_b),
                    witness,
                    claimed: *claimed,
                }
            }
            ProofStep::Conclude(_) => continue,
        };
        let done = lifted.clause() == Some(&big_b);
        steps.push(lifted);
        if done {
            break;
        }
    }
    let witness = alpha_opt.to_substitution();
    for &b in &blocking[..blocking.len() - 1] {
        steps.push(ProofStep::Redundant {
            clause: Clause::new([b.neg(), last.pos()]),
            witness: witness.clone(),
            claimed: RuleClass::Pr,
        });
    }
    steps.push(ProofStep::Inferred(Clause::unit(last.pos())));
    steps.extend(derive_negative_units(&inst, alpha_opt, &[last])?);
    steps.push(ProofStep::Conclude(Bound::Eq(1)));
    Ok((inst, Proof::new(steps)))
}

/// [`lift_min_unsat`] with `α_opt` taken from a model of the formula
/// without its last clause.
pub fn lift_min_unsat_auto(
    formula: &Formula,
    nvars: u32,
    refutation: &Proof,
) -> Result<(Instance, Proof), GenError> {
    let clauses: Vec<&Clause> = formula.expanded().collect();
    let Some((_, rest)) = clauses.split_last() else {
        return Err(GenError::Precondition("formula has no clauses".into()));
    };
    let rest: Formula = rest.iter().map(|&c| c.clone()).collect();
    let model = match sat_solve(&rest, nvars, None)? {
        SatResult::Sat(a) => a,
        SatResult::Unsat => {
            return Err(GenError::Precondition(
                "formula without its last clause is unsatisfiable, so it is not minimally unsatisfiable".into(),
            ))
        }
    };
    let m = clauses.len();
    let mut values = model.values().to_vec();
    values.resize(nvars as usize, false);
    values.extend((0..m).map(|i| i + 1 == m));
    let alpha = Assignment::from_values(values);
    lift_min_unsat(formula, nvars, refutation, &alpha)
}

/// A cost-SPR proof found by enumerating every model of the hard clauses:
/// each non-optimal model `γ` is excluded by its blocking clause with the
/// optimum as witness, after which the literals of the optimum are derived.
pub fn certify_by_enumeration(inst: &Instance, limit: u32) -> Result<Proof, GenError> {
    let config = OracleConfig::with_limit(limit);
    let all = oracle::models(inst, &config)?;
    let Some(best) = all.iter().min_by_key(|a| cost_of(a, inst).expect("total")) else {
        return Err(GenError::Precondition(
            "hard clauses are unsatisfiable".into(),
        ));
    };
    let best = best.clone();
    let k = cost_of(&best, inst).expect("total");
    let witness = best.to_substitution();
    let mut db = ClauseDb::new(inst.hard());
    let mut steps = Vec::new();
    for gamma in all.iter().filter(|&g| *g != best) {
        let clause = gamma.blocking_clause();
        db.add(clause.clone());
        steps.push(ProofStep::Redundant {
            clause,
            witness: witness.clone(),
            claimed: RuleClass::Spr,
        });
    }
    for lit in best.lits().collect::<Vec<Lit>>() {
        let unit = Clause::unit(lit);
        if !db.rup(&unit) {
            let branch = dpll_refutation(db.formula(), &[!lit], None)?.ok_or_else(|| {
                GenError::Precondition(format!("{lit} is not implied after enumeration"))
            })?;
            for c in branch {
                if c != unit {
                    db.add(c.clone());
                    steps.push(ProofStep::Inferred(c));
                }
            }
        }
        db.add(unit.clone());
        steps.push(ProofStep::Inferred(unit));
    }
    steps.push(ProofStep::Conclude(Bound::Eq(k)));
    Ok(Proof::new(steps))
}

/// Variable layout of the Hamming family: `x_0..x_n`, `y_0..y_n`, then
/// `b_1..b_{2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HammingLayout {
    pub n: u32,
}

impl HammingLayout {
    pub fn x(&self, i: u32) -> Var {
        Var::new(i + 1)
    }

    pub fn y(&self, i: u32) -> Var {
        Var::new(self.n + 2 + i)
    }

    /// `b_1..b_n` pay for `x_1..x_n`, `b_{n+1}..b_{2n}` for `y_1..y_n`.
    pub fn b(&self, i: u32) -> Var {
        Var::new(2 * self.n + 2 + i)
    }

    pub fn nvars(&self) -> u32 {
        4 * self.n + 2
    }
}

/// `x_0 ≠ y_0`, `x_i = x_0`, `y_i = y_0`, with `¬x_i ∨ b_i` and
/// `¬y_i ∨ b_{i+n}`: every optimum sets exactly one side true.
pub fn gen_hamming_family(n: u32) -> Result<Instance, GenError> {
    if n < 1 {
        return Err(GenError::InvalidParams("need n >= 1".into()));
    }
    let l = HammingLayout { n };
    let mut hard = Formula::new();
    hard.add(Clause::new([l.x(0).pos(), l.y(0).pos()]));
    hard.add(Clause::new([l.x(0).neg(), l.y(0).neg()]));
    for i in 1..=n {
        for (a, b) in [(l.x(0), l.x(i)), (l.y(0), l.y(i))] {
            hard.add(Clause::new([a.neg(), b.pos()]));
            hard.add(Clause::new([a.pos(), b.neg()]));
        }
    }
    for i in 1..=n {
        hard.add(Clause::new([l.x(i).neg(), l.b(i).pos()]));
        hard.add(Clause::new([l.y(i).neg(), l.b(i + n).pos()]));
    }
    let blocking = (1..=2 * n).map(|i| l.b(i)).collect();
    Ok(Instance::new(hard, blocking, l.nvars()).expect("layout is consistent"))
}
