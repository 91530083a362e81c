use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ehsched::exact::{
    oracle_exhaustive_with, solve_drop_one, solve_keep_one, solve_pruned_search_with,
    SearchOptions, DEFAULT_SUBSET_CAP,
};
use ehsched::harness::selftest::{kkt_suite, oracle_equivalence};
use ehsched::harness::{run_experiment, ExperimentConfig};
use ehsched::heuristics::{lpcr, random_drop, wcr};
use ehsched::io::{parse_instance, parse_multi_cycle};
use ehsched::lp::lower_bound;
use ehsched::multicycle::{mc_lpcr, mc_oracle_with, mc_random_drop, mc_wcr};
use ehsched::{Error, Execution, Instance, SolveResult};

#[derive(Parser)]
#[command(
    name = "ehsched",
    version,
    about = "Minimum-cost power scheduling with harvested and conventional energy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Exhaustive search over every drop set.
    Oracle,
    /// Exact search for a single drop.
    Alg1,
    /// Exact search keeping a single slot.
    Alg2,
    /// Exhaustive search with provably kept slots removed.
    Pruned,
    /// Relax, then drop the slots with the largest fractional outage.
    Lpcr,
    /// Drop the weakest channels.
    Wcr,
    /// Drop uniformly random slots.
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum McMethod {
    Oracle,
    Lpcr,
    Wcr,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single-cycle instance file.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Number of slots to drop; defaults to the budget implied by the file's epsilon.
        #[arg(long)]
        drops: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest number of drop sets an exhaustive search may evaluate.
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        cap: u64,
    },
    /// Solve a multi-cycle instance file.
    SolveMc {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: McMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        cap: u64,
    },
    /// Lower bound from the linear relaxation.
    Bound {
        instance: PathBuf,
        #[arg(long)]
        drops: usize,
    },
    /// Run a Monte Carlo experiment and write its CSV.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's realization count.
        #[arg(long)]
        realizations: Option<usize>,
        /// Evaluate realizations one at a time.
        #[arg(long)]
        serial: bool,
    },
    /// Check the exact searches against the oracle and the greedy optimality conditions.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::CapExceeded { .. } => 3,
        Error::Lp { .. } => 1,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn report(inst: &Instance, r: &SolveResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cost {:.12}", r.total_cost);
    let _ = writeln!(out, "dropped {}", r.drop_set);
    let _ = writeln!(out, "candidates {}", r.candidates_examined);
    match r.certificate {
        Some(c) => {
            let _ = writeln!(out, "certificate {c}");
        }
        None => out.push_str("certificate none\n"),
    }
    out.push_str("slot gain arrival conventional harvested\n");
    for k in 0..inst.n_slots() {
        let _ = writeln!(
            out,
            "{} {} {} {:.12} {:.12}",
            k + 1,
            inst.gains()[k],
            inst.arrivals()[k],
            r.allocation.conv[k],
            r.allocation.renew[k]
        );
    }
    out
}

fn solve(
    path: &Path,
    method: Method,
    drops: Option<usize>,
    seed: u64,
    cap: u64,
) -> Result<String, Error> {
    let mut inst = parse_instance(&read(path)?)?;
    let opts = SearchOptions {
        cap,
        ..SearchOptions::default()
    };
    let m = drops.unwrap_or_else(|| inst.drop_budget());
    if matches!(method, Method::Alg1 | Method::Alg2) {
        if let Some(d) = drops {
            inst = inst.with_drop_count(d)?;
        }
    }
    let r = match method {
        Method::Oracle => oracle_exhaustive_with(&inst, m, &opts)?,
        Method::Alg1 => solve_drop_one(&inst)?,
        Method::Alg2 => solve_keep_one(&inst)?,
        Method::Pruned => solve_pruned_search_with(&inst, m, &opts)?,
        Method::Lpcr => lpcr(&inst, m)?,
        Method::Wcr => wcr(&inst, m)?,
        Method::Random => random_drop(&inst, m, seed)?,
    };
    Ok(report(&inst, &r))
}

fn solve_mc(path: &Path, method: McMethod, seed: u64, cap: u64) -> Result<String, Error> {
    let mci = parse_multi_cycle(&read(path)?)?;
    let opts = SearchOptions {
        cap,
        ..SearchOptions::default()
    };
    let r = match method {
        McMethod::Oracle => mc_oracle_with(&mci, &opts)?,
        McMethod::Lpcr => mc_lpcr(&mci)?,
        McMethod::Wcr => mc_wcr(&mci)?,
        McMethod::Random => mc_random_drop(&mci, seed)?,
    };
    Ok(report(mci.flattened(), &r))
}

fn bound(path: &Path, drops: usize) -> Result<String, Error> {
    let inst = parse_instance(&read(path)?)?;
    let lb = lower_bound(&inst, drops)?;
    let mut out = format!("bound {:.12}\nslot chi\n", lb.value);
    for (k, chi) in lb.chi.iter().enumerate() {
        let _ = writeln!(out, "{} {chi:.12}", k + 1);
    }
    Ok(out)
}

fn experiment(
    config: &Path,
    out: &Path,
    realizations: Option<usize>,
    serial: bool,
) -> Result<String, Error> {
    let mut cfg = ExperimentConfig::parse(&read(config)?)?;
    if let Some(r) = realizations {
        cfg.realizations = r;
    }
    let execution = if serial {
        Execution::Serial
    } else {
        Execution::default()
    };
    let csv = run_experiment(&cfg, execution)?.to_csv(&cfg);
    fs::write(out, csv)?;
    Ok(format!(
        "wrote {} ({} realizations, seed {})\n",
        out.display(),
        cfg.realizations,
        cfg.seed
    ))
}

fn selftest(seed: u64) -> Result<(String, bool), Error> {
    let eq = oracle_equivalence(500, seed)?;
    let (kkt, lp) = kkt_suite(1000, 200, seed)?;
    let mut out = String::new();
    let mut ok = true;
    for (name, outcome) in [
        ("oracle equivalence", &eq),
        ("optimality conditions", &kkt),
        ("fixed-drop program", &lp),
    ] {
        ok &= outcome.passed();
        let _ = writeln!(
            out,
            "{name}: {} ({outcome})",
            if outcome.passed() { "ok" } else { "FAILED" }
        );
        for f in outcome.failures.iter().take(5) {
            let _ = writeln!(out, "  {f}");
        }
    }
    Ok((out, ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            instance,
            method,
            drops,
            seed,
            cap,
        } => solve(&instance, method, drops, seed, cap).map(|s| (s, true)),
        Command::SolveMc {
            instance,
            method,
            seed,
            cap,
        } => solve_mc(&instance, method, seed, cap).map(|s| (s, true)),
        Command::Bound { instance, drops } => bound(&instance, drops).map(|s| (s, true)),
        Command::Experiment {
            config,
            out,
            realizations,
            serial,
        } => experiment(&config, &out, realizations, serial).map(|s| (s, true)),
        Command::Selftest { seed } => selftest(seed),
    };
    match result {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
