//! Unit propagation with two watched literals, and the `⊢₁` relation.

use std::collections::BTreeSet;

use crate::model::{negation_of, restrict_formula, Clause, Formula, Lit, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Fixpoint,
    Conflict,
}

/// Outcome of running unit propagation to completion.
///
/// On conflict the result is collapsed to `{⊥}` with no implied units, so it
/// does not depend on the order in which units were picked.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PropagationResult {
    pub status: Status,
    pub implied_units: BTreeSet<Lit>,
    pub residual: Formula,
}

const UNASSIGNED: u8 = 2;

/// A growable clause database with an assignment trail.
///
/// Level 0 holds consequences of the database itself and is never undone.
/// Queries open levels with [`Propagator::push`] and close them with
/// [`Propagator::pop`].
#[derive(Clone, Debug, Default)]
pub struct Propagator {
    clauses: Vec<Vec<Lit>>,
    /// Indexed by literal code: clauses currently watching that literal.
    watches: Vec<Vec<u32>>,
    values: Vec<u8>,
    trail: Vec<Lit>,
    levels: Vec<usize>,
    qhead: usize,
    root_conflict: bool,
    conflict: bool,
}

impl Propagator {
    pub fn new() -> Propagator {
        Propagator::default()
    }

    pub fn from_formula(formula: &Formula) -> Propagator {
        let mut p = Propagator::new();
        for c in formula.distinct() {
            p.add_clause(c);
        }
        p
    }

    fn ensure_var(&mut self, var: Var) {
        let n = var.index() + 1;
        if self.values.len() < n {
            self.values.resize(n, UNASSIGNED);
            self.watches.resize(2 * n, Vec::new());
        }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, lit: Lit) -> Option<bool> {
        match self.values.get(lit.var().index()) {
            None | Some(&UNASSIGNED) => None,
            Some(&v) => Some((v == 1) == lit.is_positive()),
        }
    }

    pub fn is_assigned(&self, var: Var) -> bool {
        self.value(var.pos()).is_some()
    }

    pub fn level(&self) -> usize {
        self.levels.len()
    }

    /// The database alone propagates to a conflict.
    pub fn root_conflict(&self) -> bool {
        self.root_conflict
    }

    /// The current level is in conflict.
    pub fn in_conflict(&self) -> bool {
        self.root_conflict || self.conflict
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    /// Literals fixed at level 0.
    pub fn root_trail(&self) -> &[Lit] {
        &self.trail[..self.levels.first().copied().unwrap_or(self.trail.len())]
    }

    fn enqueue(&mut self, lit: Lit) {
        self.values[lit.var().index()] = u8::from(lit.is_positive());
        self.trail.push(lit);
    }

    /// Adds a clause at level 0. Tautologies are ignored.
    pub fn add_clause(&mut self, clause: &Clause) {
        assert_eq!(self.level(), 0, "clauses can only be added at level 0");
        if clause.is_tautology() || self.root_conflict {
            return;
        }
        if let Some(v) = clause.max_var() {
            self.ensure_var(v);
        }
        let mut lits = clause.lits().to_vec();
        // Non-false literals first, a true one in front if any.
        lits.sort_by_key(|&l| match self.value(l) {
            Some(true) => 0,
            None => 1,
            Some(false) => 2,
        });
        let free = lits
            .iter()
            .take_while(|&&l| self.value(l) != Some(false))
            .count();
        match free {
            0 => {
                self.root_conflict = true;
                return;
            }
            1 if self.value(lits[0]).is_none() => {
                self.enqueue(lits[0]);
                if self.propagate() {
                    self.root_conflict = true;
                }
            }
            _ => {}
        }
        if lits.len() >= 2 {
            let idx = self.clauses.len() as u32;
            self.watches[lits[0].code()].push(idx);
            self.watches[lits[1].code()].push(idx);
            self.clauses.push(lits);
        }
    }

    /// Opens a new decision level.
    pub fn push(&mut self) {
        self.levels.push(self.trail.len());
    }

    /// Undoes the most recent level.
    pub fn pop(&mut self) {
        let start = self.levels.pop().expect("no open level");
        for lit in self.trail.drain(start..) {
            self.values[lit.var().index()] = UNASSIGNED;
        }
        self.qhead = self.qhead.min(start);
        self.conflict = false;
    }

    pub fn pop_to_root(&mut self) {
        while self.level() > 0 {
            self.pop();
        }
    }

    /// Makes `lit` true at the current level. Returns false (and marks a
    /// conflict) if it is already false.
    pub fn assume(&mut self, lit: Lit) -> bool {
        self.ensure_var(lit.var());
        match self.value(lit) {
            Some(true) => true,
            Some(false) => {
                self.conflict = true;
                false
            }
            None => {
                self.enqueue(lit);
                true
            }
        }
    }

    /// Propagates pending assignments; returns true on conflict.
    pub fn propagate(&mut self) -> bool {
        if self.in_conflict() {
            return true;
        }
        while self.qhead < self.trail.len() {
            let falsified = !self.trail[self.qhead];
            self.qhead += 1;
            let mut watchers = std::mem::take(&mut self.watches[falsified.code()]);
            let mut i = 0;
            let mut conflict = false;
            while i < watchers.len() {
                let ci = watchers[i] as usize;
                let clause = &mut self.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let other = clause[0];
                if self.values[other.var().index()] == u8::from(other.is_positive()) {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let v = self.values[l.var().index()];
                    if v == UNASSIGNED || v == u8::from(l.is_positive()) {
                        clause.swap(1, k);
                        self.watches[l.code()].push(ci as u32);
                        watchers.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                i += 1;
                if self.values[other.var().index()] == UNASSIGNED {
                    self.enqueue(other);
                } else {
                    conflict = true;
                    break;
                }
            }
            self.watches[falsified.code()] = watchers;
            if conflict {
                self.conflict = true;
                return true;
            }
        }
        false
    }

    /// Assumes all `lits` on a fresh level and propagates; the level stays
    /// open. Returns true on conflict.
    pub fn push_and_propagate<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> bool {
        self.push();
        for lit in lits {
            if !self.assume(lit) {
                return true;
            }
        }
        self.propagate()
    }

    /// `Γ ⊢₁ C` for the current assignment extended by `¬C`.
    pub fn implies(&mut self, clause: &Clause) -> bool {
        if clause.is_tautology() {
            return true;
        }
        let conflict = self.push_and_propagate(clause.lits().iter().map(|&l| !l));
        self.pop();
        conflict
    }
}

/// Runs unit propagation on `formula` to its fixpoint.
pub fn unit_propagate(formula: &Formula) -> PropagationResult {
    let p = Propagator::from_formula(formula);
    if p.root_conflict() {
        return PropagationResult {
            status: Status::Conflict,
            implied_units: BTreeSet::new(),
            residual: std::iter::once(Clause::empty()).collect(),
        };
    }
    let implied_units: BTreeSet<Lit> = p.root_trail().iter().copied().collect();
    let alpha = crate::model::Substitution::satisfying(implied_units.iter().copied());
    PropagationResult {
        status: Status::Fixpoint,
        residual: restrict_formula(formula, &alpha),
        implied_units,
    }
}

/// `Γ ⊢₁ C`: unit propagation on `Γ↾¬C` reaches a conflict.
pub fn derives_by_up(formula: &Formula, clause: &Clause) -> bool {
    if clause.is_tautology() {
        return true;
    }
    Propagator::from_formula(formula).implies(clause)
}

/// The first clause of `delta` (in iteration order) not derived by `gamma`.
pub fn first_underived<'a>(gamma: &Formula, delta: &'a Formula) -> Option<&'a Clause> {
    let mut p = Propagator::from_formula(gamma);
    delta.distinct().find(|c| !p.implies(c))
}

/// `Γ ⊢₁ Δ`.
pub fn derives_all(gamma: &Formula, delta: &Formula) -> bool {
    first_underived(gamma, delta).is_none()
}

/// The literal reading of `Γ ⊢₁ C`, kept for cross-checking the engine.
pub fn derives_by_restriction(formula: &Formula, clause: &Clause) -> bool {
    match negation_of(clause) {
        Err(_) => true,
        Ok(neg) => unit_propagate(&restrict_formula(formula, &neg)).status == Status::Conflict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{restrict_clause, Assignment, Image, Restricted, Substitution};
    use proptest::prelude::*;

    fn cl(v: &[i32]) -> Clause {
        Clause::from_dimacs(v).unwrap()
    }

    fn formula(cs: &[&[i32]]) -> Formula {
        cs.iter().map(|c| cl(c)).collect()
    }

    fn lit(v: i32) -> Lit {
        Lit::from_dimacs(v).unwrap()
    }

    #[test]
    fn unit_propagate_examples() {
        let r = unit_propagate(&formula(&[&[1], &[-1, 2]]));
        assert_eq!(r.status, Status::Fixpoint);
        assert_eq!(r.implied_units, [lit(1), lit(2)].into_iter().collect());
        assert!(r.residual.is_empty());

        assert_eq!(
            unit_propagate(&formula(&[&[1], &[-1]])).status,
            Status::Conflict
        );

        let r = unit_propagate(&formula(&[&[1, 2]]));
        assert_eq!(r.status, Status::Fixpoint);
        assert!(r.implied_units.is_empty());
        assert_eq!(r.residual, formula(&[&[1, 2]]));
    }

    #[test]
    fn empty_clause_is_a_conflict() {
        assert_eq!(unit_propagate(&formula(&[&[]])).status, Status::Conflict);
    }

    #[test]
    fn derives_examples() {
        assert!(derives_by_up(&formula(&[&[1], &[-1, 2]]), &cl(&[2])));
        assert!(!derives_by_up(&formula(&[&[1, 2]]), &cl(&[1])));
        assert!(derives_by_up(&formula(&[&[1, 2, 3]]), &cl(&[3, 2, 1])));
        assert!(derives_by_up(&Formula::new(), &cl(&[1, -1])));

        assert!(derives_all(&formula(&[&[1]]), &Formula::new()));
        let g = formula(&[&[1, 2], &[-3]]);
        assert!(derives_all(&g, &g));
        let delta = formula(&[&[1], &[2]]);
        assert_eq!(first_underived(&formula(&[&[1]]), &delta), Some(&cl(&[2])));
    }

    #[test]
    fn levels_restore_state() {
        let mut p = Propagator::from_formula(&formula(&[&[-1, 2], &[-2, 3], &[-3, -1]]));
        assert!(p.push_and_propagate([lit(1)]));
        p.pop();
        assert!(!p.push_and_propagate([lit(2)]));
        assert_eq!(p.value(lit(3)), Some(true));
        assert_eq!(p.value(lit(1)), Some(false));
        p.pop();
        assert_eq!(p.value(lit(3)), None);
        assert!(p.implies(&cl(&[-1])));
    }

    #[test]
    fn clauses_added_after_root_units() {
        let mut p = Propagator::new();
        p.add_clause(&cl(&[1]));
        p.add_clause(&cl(&[-1, 2, 3]));
        p.add_clause(&cl(&[-2]));
        assert_eq!(p.value(lit(3)), Some(true));
        p.add_clause(&cl(&[-3, -1]));
        assert!(p.root_conflict());
    }

    /// The propagation loop exactly as stated: pick a unit, simplify, repeat.
    fn naive_propagate(formula: &Formula, order_seed: u64) -> PropagationResult {
        // Restriction drops tautologies, so the residual never holds them.
        let mut current = restrict_formula(formula, &Substitution::identity());
        let mut units = BTreeSet::new();
        let mut seed = order_seed;
        loop {
            if current.contains(&Clause::empty()) {
                return PropagationResult {
                    status: Status::Conflict,
                    implied_units: BTreeSet::new(),
                    residual: std::iter::once(Clause::empty()).collect(),
                };
            }
            let candidates: Vec<Lit> = current.distinct().filter_map(Clause::as_unit).collect();
            if candidates.is_empty() {
                return PropagationResult {
                    status: Status::Fixpoint,
                    implied_units: units,
                    residual: current,
                };
            }
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let pick = candidates[(seed >> 33) as usize % candidates.len()];
            units.insert(pick);
            current = restrict_formula(
                &current,
                &Substitution::from_pairs([(pick.var(), Image::constant(pick.is_positive()))]),
            );
        }
    }

    const NVARS: u32 = 7;

    fn arb_clause(max_len: usize) -> impl Strategy<Value = Clause> {
        prop::collection::vec((1..=NVARS, any::<bool>()), 0..=max_len)
            .prop_map(|v| Clause::new(v.into_iter().map(|(x, p)| Var::new(x).lit(p))))
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        prop::collection::vec(prop_oneof![1 => arb_clause(1), 3 => arb_clause(3)], 0..12)
            .prop_map(|cs| cs.into_iter().collect())
    }

    fn arb_subst() -> impl Strategy<Value = Substitution> {
        let image = prop_oneof![
            Just(Image::False),
            Just(Image::True),
            (1..=NVARS, any::<bool>()).prop_map(|(v, p)| Image::Lit(Var::new(v).lit(p))),
        ];
        prop::collection::vec((1..=NVARS, image), 0..5)
            .prop_map(|p| Substitution::from_pairs(p.into_iter().map(|(v, i)| (Var::new(v), i))))
    }

    proptest! {
        #[test]
        fn confluence(f in arb_formula(), s1 in any::<u64>(), s2 in any::<u64>()) {
            let a = naive_propagate(&f, s1);
            let b = naive_propagate(&f, s2);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(unit_propagate(&f), a);
        }

        #[test]
        fn engine_matches_restriction_reading(f in arb_formula(), c in arb_clause(3)) {
            prop_assert_eq!(derives_by_up(&f, &c), derives_by_restriction(&f, &c));
        }

        #[test]
        fn soundness_against_enumeration(f in arb_formula(), c in arb_clause(3)) {
            prop_assume!(derives_by_up(&f, &c));
            for bits in 0..1u64 << NVARS {
                let a = Assignment::from_bits(NVARS as usize, bits);
                if a.satisfies(&f) {
                    prop_assert!(a.satisfies_clause(&c));
                }
            }
        }

        #[test]
        fn restriction_closure(g in arb_formula(), d in arb_formula(), sigma in arb_subst()) {
            prop_assume!(derives_all(&g, &d));
            let g2 = restrict_formula(&g, &sigma);
            for c in d.distinct() {
                if let Restricted::Clause(image) = restrict_clause(c, &sigma) {
                    prop_assert!(derives_by_up(&g2, &image));
                }
            }
        }
    }
}
