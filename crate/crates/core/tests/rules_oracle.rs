//! Redundancy rules against brute-force references.

mod common;

use common::*;
use costsr::model::{Clause, Instance, Substitution, Var};
use costsr::oracle::{brute_redundant, OracleConfig};
use costsr::propagate::derives_by_up;
use costsr::rules::{
    bc_witness, check_cost_bc, check_cost_condition, check_redundant_step, classify_witness,
    flip_degree, FlipDegree,
};
use costsr::RuleClass;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cost_condition_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nvars = r.gen_range(2..=10);
        let nblocking = r.gen_range(0..=nvars);
        let inst = random_instance(&mut r, nvars, 3, nblocking, 3);
        let clause = random_clause(&mut r, nvars, 4);
        let entries = r.gen_range(0..=nvars as usize);
        let sigma = random_substitution(&mut r, nvars, entries);
        let report = check_cost_condition(&inst, &clause, &sigma).unwrap();
        prop_assert_eq!(report.max_delta, brute_max_delta(&inst, &clause, &sigma));
        prop_assert_eq!(report.ok, report.max_delta <= 0);
    }

    #[test]
    fn flip_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nvars = r.gen_range(1..=9);
        let clause = random_clause(&mut r, nvars, 3);
        let entries = r.gen_range(0..=nvars as usize);
        let sigma = random_substitution(&mut r, nvars, entries);
        let FlipDegree::Exact(n) = flip_degree(&clause, &sigma, 20).unwrap() else {
            panic!("limit not reached");
        };
        prop_assert_eq!(n, brute_flip(&clause, &sigma, nvars));
        prop_assert!(flip_degree(&clause, &sigma, 0).unwrap().value() >= n);
    }

    /// Accepted steps never change the optimum.
    #[test]
    fn accepted_steps_are_redundant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nvars = r.gen_range(2..=8);
        let nclauses = r.gen_range(1..=6);
        let nblocking = r.gen_range(1..=nvars);
        let inst = random_instance(&mut r, nvars, nclauses, nblocking, 3);
        let clause = random_clause(&mut r, nvars, 3);
        let entries = r.gen_range(1..=nvars as usize);
        let sigma = random_assignment_subst(&mut r, nvars, entries);
        if check_redundant_step(inst.hard(), &inst, &clause, &sigma, RuleClass::Sr).is_ok() {
            prop_assert!(brute_redundant(&inst, &clause, &OracleConfig::default()).unwrap());
        }
    }

    #[test]
    fn rup_is_identity_witness_sr(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nvars = r.gen_range(2..=8);
        let nclauses = r.gen_range(1..=8);
        let nblocking = r.gen_range(0..=nvars);
        let inst = random_instance(&mut r, nvars, nclauses, nblocking, 3);
        let clause = random_clause(&mut r, nvars, 3);
        let rup = derives_by_up(inst.hard(), &clause);
        let step = check_redundant_step(inst.hard(), &inst, &clause, &Substitution::identity(), RuleClass::Sr);
        prop_assert_eq!(rup, step.is_ok());
    }

    #[test]
    fn cost_bc_implies_cost_lpr(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nvars = r.gen_range(2..=8);
        let nclauses = r.gen_range(1..=6);
        let nblocking = r.gen_range(0..=nvars);
        let inst = random_instance(&mut r, nvars, nclauses, nblocking, 3);
        let clause = random_clause(&mut r, nvars, 3);
        for &lit in clause.lits() {
            if check_cost_bc(inst.hard(), &clause, lit, &inst) {
                let sigma = bc_witness(&clause, lit);
                prop_assert_eq!(classify_witness(&clause, &sigma), RuleClass::Lpr);
                let accepted = check_redundant_step(inst.hard(), &inst, &clause, &sigma, RuleClass::Lpr);
                prop_assert!(accepted.is_ok(), "{:?}", accepted);
            }
        }
    }
}

#[test]
fn cost_condition_over_sixteen_variables() {
    let mut r = rng(16);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 16, 4, 8, 3);
        let clause = random_clause(&mut r, 16, 2);
        let sigma = random_substitution(&mut r, 16, 10);
        let report = check_cost_condition(&inst, &clause, &sigma).unwrap();
        assert_eq!(report.max_delta, brute_max_delta(&inst, &clause, &sigma));
    }
}

#[test]
fn positive_blocking_literal_is_never_cost_bc() {
    let inst = Instance::new([cl(&[1, 2])].into_iter().collect(), vec![Var::new(2)], 2).unwrap();
    let clause = Clause::unit(Var::new(2).pos());
    assert!(!check_cost_bc(
        inst.hard(),
        &clause,
        Var::new(2).pos(),
        &inst
    ));
    let lpr = bc_witness(&clause, Var::new(2).pos());
    assert!(check_redundant_step(inst.hard(), &inst, &clause, &lpr, RuleClass::Lpr).is_err());
}

#[test]
fn random_witnesses_are_sometimes_accepted() {
    let mut r = rng(7);
    let mut accepted = 0;
    for _ in 0..500 {
        let nvars = r.gen_range(2..=6);
        let inst = random_instance(&mut r, nvars, 3, 2.min(nvars), 3);
        let clause = random_clause(&mut r, nvars, 3);
        let sigma = random_assignment_subst(&mut r, nvars, nvars as usize);
        if check_redundant_step(inst.hard(), &inst, &clause, &sigma, RuleClass::Sr).is_ok() {
            assert!(brute_redundant(&inst, &clause, &OracleConfig::default()).unwrap());
            accepted += 1;
        }
    }
    assert!(accepted >= 20, "only {accepted} accepted");
}
