//! Helpers shared by the integration tests: seeded random instances and
//! brute-force reference computations.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use costsr::gen::{
    certify_by_enumeration, gen_bphp, gen_bphp_proof, gen_hamming_family, gen_php_cnf,
    lift_min_unsat_auto, rup_refutation,
};
use costsr::model::{
    negation_of, Assignment, Clause, Formula, Image, Instance, Lit, Substitution, Var,
};
use costsr::oracle::{brute_redundant, OracleConfig};
use costsr::proof::{
    export_veripb, parse_instance, parse_msr_proof, parse_pb_script, parse_proof, print_instance,
    print_msr_proof, print_pb_script, print_proof, CheckOptions, Checker, MsrProof, MsrStep,
};
use costsr::{Proof, ProofStep};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cl(v: &[i32]) -> Clause {
    Clause::from_dimacs(v).unwrap()
}

pub fn random_lit<R: Rng>(rng: &mut R, nvars: u32) -> Lit {
    Var::new(rng.gen_range(1..=nvars)).lit(rng.gen())
}

/// A non-tautological clause of length `1..=max_len` over distinct variables.
pub fn random_clause<R: Rng>(rng: &mut R, nvars: u32, max_len: usize) -> Clause {
    let mut vars: Vec<u32> = (1..=nvars).collect();
    vars.shuffle(rng);
    let len = rng.gen_range(1..=max_len.min(nvars as usize));
    Clause::new(vars[..len].iter().map(|&v| Var::new(v).lit(rng.gen())))
}

/// Random hard clauses over `nvars` variables; the last `nblocking`
/// variables are blocking and, like soft clauses, mostly appear positively.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    nvars: u32,
    nclauses: usize,
    nblocking: u32,
    width: usize,
) -> Instance {
    let mut hard = Formula::new();
    let first_blocking = nvars - nblocking + 1;
    for _ in 0..nclauses {
        let mut c = random_clause(rng, nvars, width);
        if nblocking > 0 && rng.gen_bool(0.5) {
            let b = Var::new(rng.gen_range(first_blocking..=nvars));
            if !c.contains(b.neg()) {
                c = c.with(b.pos());
            }
        }
        hard.add(c);
    }
    let blocking = (first_blocking..=nvars).map(Var::new).collect();
    Instance::new(hard, blocking, nvars).unwrap()
}

pub fn random_substitution<R: Rng>(rng: &mut R, nvars: u32, entries: usize) -> Substitution {
    let mut s = Substitution::identity();
    for _ in 0..entries {
        let v = Var::new(rng.gen_range(1..=nvars));
        let img = match rng.gen_range(0..3) {
            0 => Image::False,
            1 => Image::True,
            _ => Image::Lit(random_lit(rng, nvars)),
        };
        s.set(v, img);
    }
    s
}

/// A random assignment-only substitution.
pub fn random_assignment_subst<R: Rng>(rng: &mut R, nvars: u32, entries: usize) -> Substitution {
    let mut s = Substitution::identity();
    for _ in 0..entries {
        s.set(
            Var::new(rng.gen_range(1..=nvars)),
            Image::constant(rng.gen()),
        );
    }
    s
}

/// `τ∘σ`: the value of `x` is `τ(σ(x))`.
pub fn compose_assignment(tau: &Assignment, sigma: &Substitution) -> Assignment {
    let values = (0..tau.len())
        .map(|i| match sigma.get(Var::from_index(i)) {
            Image::True => true,
            Image::False => false,
            Image::Lit(l) => tau.lit_value(l),
        })
        .collect();
    Assignment::from_values(values)
}

/// Every total assignment extending `¬C`.
pub fn extensions(clause: &Clause, nvars: u32) -> Vec<Assignment> {
    let neg = negation_of(clause).unwrap();
    let free: Vec<Var> = (1..=nvars)
        .map(Var::new)
        .filter(|&v| neg.get(v).as_constant().is_none())
        .collect();
    (0..1u64 << free.len())
        .map(|bits| {
            let mut a = Assignment::all_false(nvars as usize);
            for &l in clause.lits() {
                a.set(l.var(), !l.is_positive());
            }
            for (i, &v) in free.iter().enumerate() {
                a.set(v, bits >> i & 1 == 1);
            }
            a
        })
        .collect()
}

fn cost(inst: &Instance, a: &Assignment) -> i64 {
    inst.blocking().iter().filter(|&&b| a.value(b)).count() as i64
}

/// `max_{τ ⊇ ¬C} cost(τ∘σ) − cost(τ)` by enumeration.
pub fn brute_max_delta(inst: &Instance, clause: &Clause, sigma: &Substitution) -> i64 {
    extensions(clause, inst.nvars())
        .iter()
        .map(|tau| cost(inst, &compose_assignment(tau, sigma)) - cost(inst, tau))
        .max()
        .unwrap()
}

/// `max_{τ ⊇ ¬C} HD(τ, τ∘σ)` by enumeration.
pub fn brute_flip(clause: &Clause, sigma: &Substitution, nvars: u32) -> usize {
    extensions(clause, nvars)
        .iter()
        .map(|tau| tau.hamming(&compose_assignment(tau, sigma)).unwrap())
        .max()
        .unwrap()
}

/// Replays `proof` and, for every accepted redundancy step, asks the oracle
/// whether the clause is redundant for the database at that point. Returns
/// the number of steps checked.
pub fn brute_check_redundant_steps(inst: &Instance, proof: &Proof, limit: u32) -> usize {
    let config = OracleConfig::with_limit(limit);
    let mut checker = Checker::new(inst, CheckOptions::default()).unwrap();
    let mut checked = 0;
    for (i, step) in proof.steps.iter().enumerate() {
        if let ProofStep::Redundant { clause, .. } = step {
            let at = inst.with_hard(checker.db().formula().clone()).unwrap();
            assert!(
                brute_redundant(&at, clause, &config).unwrap(),
                "step {} ({clause}) changes the optimum",
                i + 1
            );
            checked += 1;
        }
        checker.step(step).unwrap();
    }
    checked
}

/// The hand-written MSR example: `x ∨ b`, `¬x ∨ b` with `b` blocking.
pub fn msr_example() -> (Instance, MsrProof) {
    let inst = Instance::new(
        [cl(&[1, 2]), cl(&[-1, 2])].into_iter().collect(),
        vec![Var::new(2)],
        2,
    )
    .unwrap();
    let proof = MsrProof {
        steps: vec![
            MsrStep::HardInfer(cl(&[2])),
            MsrStep::CopyToSoft(cl(&[2])),
            MsrStep::Merge(Clause::empty(), Var::new(2)),
            MsrStep::ConcludeBot(1),
        ],
    };
    (inst, proof)
}

pub fn three_clause_formula() -> Instance {
    let hard: Formula = [cl(&[1, 2, 3]), cl(&[-1, 4]), cl(&[-2, 5])]
        .into_iter()
        .collect();
    Instance::new(hard, vec![Var::new(3), Var::new(4), Var::new(5)], 5).unwrap()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Every artifact kept under `tests/golden`, regenerated from scratch.
pub fn golden_artifacts() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (m, n) in [(2, 1), (3, 2)] {
        out.push((
            format!("bphp-{m}-{n}.bcnf"),
            print_instance(&gen_bphp(m, n).unwrap()),
        ));
        out.push((
            format!("bphp-{m}-{n}.proof"),
            print_proof(&gen_bphp_proof(m, n).unwrap()),
        ));
    }
    let bphp = gen_bphp(3, 2).unwrap();
    out.push((
        "bphp-3-2.pb".into(),
        export_veripb(&bphp, &gen_bphp_proof(3, 2).unwrap()).unwrap(),
    ));
    let hamming = gen_hamming_family(2).unwrap();
    out.push(("hamming-2.bcnf".into(), print_instance(&hamming)));
    out.push((
        "hamming-2.proof".into(),
        print_proof(&certify_by_enumeration(&hamming, 14).unwrap()),
    ));
    let (f, nvars) = gen_php_cnf(3, 2).unwrap();
    let refutation = rup_refutation(&f, None).unwrap().unwrap();
    let (lifted, proof) = lift_min_unsat_auto(&f, nvars, &refutation).unwrap();
    out.push(("minunsat-lift-2.bcnf".into(), print_instance(&lifted)));
    out.push(("minunsat-lift-2.proof".into(), print_proof(&proof)));
    let three = three_clause_formula();
    out.push(("three-clause.bcnf".into(), print_instance(&three)));
    out.push((
        "three-clause.proof".into(),
        print_proof(&certify_by_enumeration(&three, 14).unwrap()),
    ));
    let (inst, proof) = msr_example();
    out.push(("msr-example.bcnf".into(), print_instance(&inst)));
    out.push(("msr-example.msr".into(), print_msr_proof(&proof)));
    out
}

/// Parses `text` in the format given by the file extension and prints it
/// again.
pub fn reprint(name: &str, text: &str) -> String {
    match Path::new(name).extension().and_then(|e| e.to_str()) {
        Some("bcnf") => print_instance(&parse_instance(text).unwrap()),
        Some("proof") => print_proof(&parse_proof(text).unwrap()),
        Some("msr") => print_msr_proof(&parse_msr_proof(text).unwrap()),
        Some("pb") => print_pb_script(&parse_pb_script(text).unwrap()),
        _ => panic!("unknown artifact {name}"),
    }
}

/// Compares `text` with the stored golden file, or rewrites it when
/// `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, text: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, text).unwrap();
        return Ok(());
    }
    let stored = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if stored == text {
        Ok(())
    } else {
        Err(format!("{name} differs from the golden file"))
    }
}
