use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use costsr::gen::{
    certify_by_enumeration, gen_bphp, gen_bphp_proof, gen_hamming_family, gen_php_cnf,
    lift_min_unsat_auto, rup_refutation, GenError,
};
use costsr::oracle::{
    brute_cost, min_pairwise_hamming, optimal_assignments, Cost, Distance, Method, OracleConfig,
    OracleError,
};
use costsr::proof::{
    check_msr_proof, check_proof_with, export_veripb, parse_instance, parse_msr_proof, parse_proof,
    parse_wcnf, print_instance, print_proof, CheckOptions, ExportError, Stats,
};
use costsr::{gen, Instance, Proof, Verdict};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "costsr",
    version,
    about = "Check and generate cost-redundancy proofs for MaxSAT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a proof against an instance.
    Check {
        instance: PathBuf,
        proof: PathBuf,
        /// Read a MaxSAT resolution proof instead of a cost-SR proof.
        #[arg(long)]
        msr: bool,
        /// Also report flip degrees.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        json: bool,
    },
    /// Generate an instance and optionally its proof.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Compute the exact cost of an instance.
    Cost {
        instance: PathBuf,
        #[arg(long)]
        enumerate_optima: bool,
        /// Largest variable count for exhaustive enumeration.
        #[arg(long, default_value_t = 20)]
        limit: u32,
        /// Node budget for branch-and-bound above the limit; 0 disables it.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Turn a unit-weight WCNF file into a BCNF instance.
    Blockify {
        wcnf: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export an accepted proof as a pseudo-Boolean proof script.
    Export {
        instance: PathBuf,
        proof: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenOutput {
    /// Also write the proof.
    #[arg(long)]
    proof: bool,
    /// Output base name; files are BASE.bcnf and BASE.proof.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Family {
    /// Blocking pigeonhole formula with m pigeons and n holes.
    Bphp {
        m: u32,
        n: u32,
        #[command(flatten)]
        output: GenOutput,
    },
    /// Hamming family of size n.
    Hamming {
        n: u32,
        #[command(flatten)]
        output: GenOutput,
    },
    /// Blockified PHP(n+1, n) with its lifted refutation.
    MinunsatLift {
        n: u32,
        #[command(flatten)]
        output: GenOutput,
    },
}

enum Failure {
    /// Rejected proof or refuted query.
    Rejected,
    Usage(String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Rejected => 1,
            Failure::Usage(_) => 2,
            Failure::Limit(_) => 3,
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Failure {
        match e {
            GenError::Oracle(o) => Failure::Limit(o.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Failure {
        Failure::Limit(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_proof(path: &Path) -> Result<Proof, Failure> {
    parse_proof(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct StepCounts {
    inferred: usize,
    lpr: usize,
    spr: usize,
    pr: usize,
    sr: usize,
    soft: usize,
}

#[derive(Serialize)]
struct JsonFailure {
    step: Option<usize>,
    reason: String,
}

#[derive(Serialize)]
struct JsonVerdict {
    schema_version: u32,
    verdict: &'static str,
    bound: Option<&'static str>,
    k: Option<usize>,
    steps: StepCounts,
    max_width: usize,
    max_flip: Option<usize>,
    flip_bounded: usize,
    failure: Option<JsonFailure>,
    timing_ms: f64,
}

fn counts(stats: &Stats) -> StepCounts {
    StepCounts {
        inferred: stats.inferred,
        lpr: stats.lpr,
        spr: stats.spr,
        pr: stats.pr,
        sr: stats.sr,
        soft: stats.soft,
    }
}

fn report(verdict: &Verdict, flip: bool, json: bool, elapsed_ms: f64) {
    let s = &verdict.stats;
    if json {
        let out = JsonVerdict {
            schema_version: 1,
            verdict: if verdict.accepted {
                "accepted"
            } else {
                "rejected"
            },
            bound: verdict.bound.map(|b| match b {
                costsr::Bound::Geq(_) => "geq",
                costsr::Bound::Eq(_) => "eq",
            }),
            k: verdict.bound.map(|b| b.k()),
            steps: counts(s),
            max_width: s.max_width,
            max_flip: s.max_flip,
            flip_bounded: s.flip_bounded,
            failure: verdict.failure.as_ref().map(|f| JsonFailure {
                step: f.step,
                reason: f.reason.to_string(),
            }),
            timing_ms: elapsed_ms,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&out).expect("serializable")
        );
        return;
    }
    if verdict.accepted {
        println!("verdict accepted");
        match verdict.bound {
            Some(b) => println!("bound {b}"),
            None => println!("bound none"),
        }
    } else {
        println!("verdict rejected");
        if let Some(f) = &verdict.failure {
            println!("failure {f}");
        }
    }
    println!(
        "steps inferred {} lpr {} spr {} pr {} sr {} soft {}",
        s.inferred, s.lpr, s.spr, s.pr, s.sr, s.soft
    );
    println!("max_width {}", s.max_width);
    if flip {
        match s.max_flip {
            Some(n) => println!("max_flip {n}"),
            None => println!("max_flip none"),
        }
        println!("flip_bounded {}", s.flip_bounded);
    }
}

fn cmd_check(
    instance: &Path,
    proof: &Path,
    msr: bool,
    stats: bool,
    json: bool,
) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let start = Instant::now();
    let verdict = if msr {
        let proof = parse_msr_proof(&read(proof)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", proof.display())))?;
        check_msr_proof(&inst, &proof)
    } else {
        let proof = load_proof(proof)?;
        let options = CheckOptions {
            flip_stats: stats,
            ..CheckOptions::default()
        };
        check_proof_with(&inst, &proof, options)
    };
    report(
        &verdict,
        stats && !msr,
        json,
        start.elapsed().as_secs_f64() * 1e3,
    );
    if verdict.accepted {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

/// `base` with `.ext` appended, keeping any dots already in the name.
fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_generated(
    output: &GenOutput,
    default_base: String,
    inst: &Instance,
    proof: Option<Proof>,
) -> Result<(), Failure> {
    let base = output
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_base));
    let inst_path = with_suffix(&base, "bcnf");
    write(&inst_path, &print_instance(inst))?;
    println!("wrote {}", inst_path.display());
    if let Some(proof) = proof {
        let proof_path = with_suffix(&base, "proof");
        write(&proof_path, &print_proof(&proof))?;
        println!("wrote {}", proof_path.display());
    }
    Ok(())
}

fn cmd_gen(family: &Family) -> Result<(), Failure> {
    match family {
        Family::Bphp { m, n, output } => {
            let inst = gen_bphp(*m, *n)?;
            let proof = if output.proof {
                Some(gen_bphp_proof(*m, *n)?)
            } else {
                None
            };
            write_generated(output, format!("bphp-{m}-{n}"), &inst, proof)
        }
        Family::Hamming { n, output } => {
            let inst = gen_hamming_family(*n)?;
            let proof = if output.proof {
                Some(certify_by_enumeration(&inst, 14)?)
            } else {
                None
            };
            write_generated(output, format!("hamming-{n}"), &inst, proof)
        }
        Family::MinunsatLift { n, output } => {
            let (formula, nvars) = gen_php_cnf(n + 1, *n)?;
            let refutation = rup_refutation(&formula, None)?
                .ok_or_else(|| Failure::Usage("PHP formula unexpectedly satisfiable".into()))?;
            let (inst, proof) = lift_min_unsat_auto(&formula, nvars, &refutation)?;
            write_generated(
                output,
                format!("minunsat-lift-{n}"),
                &inst,
                output.proof.then_some(proof),
            )
        }
    }
}

fn cmd_cost(instance: &Path, enumerate: bool, limit: u32, budget: u64) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let config = OracleConfig {
        exhaustive_limit: limit,
        node_budget: Some(budget),
    };
    if inst.nvars() > limit.min(63) && budget == 0 {
        return Err(Failure::Limit(format!(
            "{} variables exceed the exhaustive limit {limit} and branch-and-bound is disabled",
            inst.nvars()
        )));
    }
    let report = brute_cost(&inst, &config)?;
    let Cost::Value(k) = report.cost else {
        println!("unsatisfiable");
        return Err(Failure::Rejected);
    };
    println!("cost {k}");
    if let Some(w) = &report.witness {
        println!("witness {w}");
    }
    println!(
        "method {}",
        match report.method {
            Method::Exhaustive => "exhaustive",
            Method::BranchAndBound => "branch-and-bound",
        }
    );
    if enumerate {
        let optima = optimal_assignments(&inst, &config)?;
        println!("optima {}", optima.len());
        for a in &optima {
            println!("optimum {a}");
        }
        match min_pairwise_hamming(&optima)? {
            Distance::Finite(d) => println!("min_hamming {d}"),
            Distance::Infinite => println!("min_hamming inf"),
        }
    }
    Ok(())
}

fn cmd_blockify(wcnf: &Path, out: &Path) -> Result<(), Failure> {
    let parsed =
        parse_wcnf(&read(wcnf)?).map_err(|e| Failure::Usage(format!("{}: {e}", wcnf.display())))?;
    let (inst, mapping) = gen::blockify(&parsed.hard, &parsed.soft);
    write(out, &print_instance(&inst))?;
    let mut map = format!(
        "c soft blocking; original_nvars {} new_nvars {}\n",
        mapping.original_nvars, mapping.new_nvars
    );
    for (i, b) in mapping.soft_to_blocking.iter().enumerate() {
        map.push_str(&format!("{} {}\n", i + 1, b.id()));
    }
    let map_path = with_suffix(out, "map");
    write(&map_path, &map)?;
    println!("wrote {}", out.display());
    println!("wrote {}", map_path.display());
    println!("blocking {}", inst.blocking().len());
    Ok(())
}

fn cmd_export(instance: &Path, proof: &Path, out: &Path) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let proof = load_proof(proof)?;
    match export_veripb(&inst, &proof) {
        Ok(script) => {
            write(out, &script)?;
            println!("wrote {} ({} lines)", out.display(), script.lines().count());
            Ok(())
        }
        Err(ExportError::Rejected(f)) => {
            println!("verdict rejected");
            println!("failure {f}");
            Err(Failure::Rejected)
        }
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("COSTSR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            instance,
            proof,
            msr,
            stats,
            json,
        } => cmd_check(instance, proof, *msr, *stats, *json),
        Command::Gen { family } => cmd_gen(family),
        Command::Cost {
            instance,
            enumerate_optima,
            limit,
            budget,
        } => cmd_cost(instance, *enumerate_optima, *limit, *budget),
        Command::Blockify { wcnf, out } => cmd_blockify(wcnf, out),
        Command::Export {
            instance,
            proof,
            out,
        } => cmd_export(instance, proof, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Rejected => {}
                Failure::Usage(m) | Failure::Limit(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
