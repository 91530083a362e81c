//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use ehsched::exact::oracle_exhaustive;
use ehsched::harness::experiments::{realization_rng, SweepRow};
use ehsched::harness::selftest::{kkt_suite, oracle_equivalence, random_instance};
use ehsched::harness::{
    run_experiment, standard_families, Experiment, ExperimentConfig, Method, Report,
};
use ehsched::heuristics::{lpcr, wcr};
use ehsched::lp::lower_bound;
use ehsched::model::costs_agree;
use ehsched::multicycle::{
    mc_oracle, mc_wcr, mc_wcr_certificates, storage_sensitivity, MultiCycleInstance,
};
use ehsched::partial::ChannelDistribution;
use ehsched::{Economics, Execution, Instance};

const SEED: u64 = 2024;

type Check = fn() -> Verdict;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant, v: Verdict) -> Verdict {
    let took = start.elapsed();
    let ok = took <= limit;
    verdict(
        v.passed && ok,
        format!(
            "{}; {:.1}s of {}s allowed",
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn oracle_equivalence_check() -> Verdict {
    let start = Instant::now();
    let out = oracle_equivalence(500, SEED).unwrap();
    within(
        Duration::from_secs(60),
        start,
        verdict(out.passed(), out.to_string()),
    )
}

fn kkt_check() -> Verdict {
    let start = Instant::now();
    let (kkt, lp) = kkt_suite(1000, 200, SEED).unwrap();
    within(
        Duration::from_secs(60),
        start,
        verdict(
            kkt.passed() && lp.passed(),
            format!("conditions: {kkt}; program: {lp}"),
        ),
    )
}

fn sandwich_check() -> Verdict {
    let start = Instant::now();
    let mut violations = 0;
    let mut pairs = 0;
    for i in 0..500 {
        let mut rng = realization_rng(SEED, "acceptance-sandwich", i);
        let inst = random_instance(&mut rng, 1..=14).unwrap();
        for m in 0..=inst.n_slots() {
            let opt = oracle_exhaustive(&inst, m).unwrap().total_cost;
            let lb = lower_bound(&inst, m).unwrap().value;
            let best = lpcr(&inst, m)
                .unwrap()
                .total_cost
                .min(wcr(&inst, m).unwrap().total_cost);
            let slack = 1e-7 * opt.abs().max(1.0);
            if lb > opt + slack || opt > best + slack {
                violations += 1;
            }
            pairs += 1;
        }
    }
    within(
        Duration::from_secs(120),
        start,
        verdict(
            violations == 0,
            format!("{violations} violations over {pairs} (instance, M) pairs"),
        ),
    )
}

fn search_count_check() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(Experiment::SearchCount);
    cfg.n_slots = vec![200];
    cfg.realizations = 1000;
    cfg.seed = SEED;
    let Report::SearchCount(rows) = run_experiment(&cfg, Execution::default()).unwrap() else {
        unreachable!()
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for r in &rows {
        ok &= match r.algorithm {
            "alg1" => (4.0..=8.0).contains(&r.mean_candidates),
            _ => r.mean_candidates <= 1.5,
        };
        detail.push(format!(
            "{} {} {:.3}",
            r.family, r.algorithm, r.mean_candidates
        ));
    }
    within(
        Duration::from_secs(120),
        start,
        verdict(ok, detail.join(", ")),
    )
}

fn by_method(rows: &[SweepRow], method: Method) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.method == method).collect()
}

/// Ordering, monotonicity and gap-shape checks shared by the single- and
/// multi-cycle sweeps. `window` is where the WCR gap must rise above both
/// ends of the grid.
fn sweep_shape(rows: &[SweepRow], window: (usize, usize)) -> Verdict {
    let [bound, lp, wc, rnd] = Method::ALL.map(|m| by_method(rows, m));
    let above = |a: f64, b: f64| a >= b - 1e-9 * b.abs().max(1.0);
    let mut failures = Vec::new();
    for j in 0..bound.len() {
        let m = bound[j].drops;
        if !(above(rnd[j].mean_cost, wc[j].mean_cost)
            && above(wc[j].mean_cost, lp[j].mean_cost)
            && above(lp[j].mean_cost, bound[j].mean_cost))
        {
            failures.push(format!("cost ordering at {m}"));
        }
        if lp[j].mean_relative_gap > wc[j].mean_relative_gap + 1e-12 {
            failures.push(format!("lpcr gap above wcr gap at {m}"));
        }
        if j > 0 {
            for (name, series) in [("bound", &bound), ("lpcr", &lp), ("wcr", &wc)] {
                if !above(series[j - 1].mean_cost, series[j].mean_cost) {
                    failures.push(format!("{name} increases at {m}"));
                }
            }
        }
    }
    let gaps: Vec<(usize, f64)> = wc.iter().map(|r| (r.drops, r.mean_relative_gap)).collect();
    let (first, last) = (gaps[0].1, gaps[gaps.len() - 1].1);
    let inside = gaps
        .iter()
        .filter(|(m, _)| (window.0..=window.1).contains(m))
        .map(|g| g.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(inside > first && inside > last) {
        failures.push(format!(
            "wcr gap {inside:.4} in window does not exceed ends {first:.4}, {last:.4}"
        ));
    }
    let peak = gaps.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    if !(0.03..=0.20).contains(&peak) {
        failures.push(format!("wcr peak gap {peak:.4} outside [0.03, 0.20]"));
    }
    let fallbacks: usize = rows.iter().map(|r| r.abs_fallbacks).sum();
    let detail = format!(
        "wcr peak gap {:.2}%, gap at ends {:.2}% / {:.2}%, {} absolute-gap fallbacks{}",
        100.0 * peak,
        100.0 * first,
        100.0 * last,
        fallbacks,
        if failures.is_empty() {
            String::new()
        } else {
            format!("; {}", failures.join("; "))
        }
    );
    verdict(failures.is_empty(), detail)
}

fn single_cycle_sweep_check() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(Experiment::GapToBound);
    cfg.seed = SEED;
    let report = run_experiment(&cfg, Execution::default()).unwrap();
    within(
        Duration::from_secs(600),
        start,
        sweep_shape(report.sweep().unwrap(), (100, 140)),
    )
}

fn multi_cycle_sweep_check() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(Experiment::MulticycleGap);
    cfg.seed = SEED;
    let report = run_experiment(&cfg, Execution::default()).unwrap();
    within(
        Duration::from_secs(600),
        start,
        sweep_shape(report.sweep().unwrap(), (25, 35)),
    )
}

fn storage_check() -> Verdict {
    let start = Instant::now();
    let econ = Economics::default();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..300 {
        let mut rng = realization_rng(SEED, "acceptance-storage", i);
        let inst = random_instance(&mut rng, 1..=10).unwrap();
        let inst = inst
            .with_initial_storage(rng.random::<f64>() * 2.0)
            .unwrap();
        let m = rng.random_range(0..=inst.n_slots());
        let delta = rng.random::<f64>() * 5.0;
        let r = storage_sensitivity(&inst, m, delta).unwrap();
        let excess = (r.base_cost - r.raised_cost) - econ.price_gap() * delta;
        worst = worst.max(excess);
        if excess > 1e-7 {
            violations += 1;
        }
    }
    let tight = Instance::from_inversion_powers(econ, &[2.0], vec![0.0], 0.0).unwrap();
    let r = storage_sensitivity(&tight, 0, 1.0).unwrap();
    let attained = costs_agree(r.base_cost - r.raised_cost, econ.price_gap());
    within(
        Duration::from_secs(60),
        start,
        verdict(
            violations == 0 && attained,
            format!(
                "{violations} violations, largest excess {worst:.2e}; constructed saving {:.6} vs bound {:.6}",
                r.base_cost - r.raised_cost,
                econ.price_gap()
            ),
        ),
    )
}

/// A multi-cycle instance whose cycles are each built to satisfy one of the
/// conditions under which worst-channel removal is optimal.
fn certified_candidate(index: usize) -> MultiCycleInstance {
    let mut rng = realization_rng(SEED, "acceptance-certified", index);
    let econ = Economics::default();
    let cycles = rng.random_range(2..=3);
    let n = rng.random_range(3..=5);
    let k = rng.random_range(1..n);
    let rayleigh = ChannelDistribution::Exponential { mean: 1.0 };
    let mut gains: Vec<f64> = (0..cycles * n)
        .map(|_| rayleigh.sample(&mut rng).max(1e-4))
        .collect();
    let mut arrivals: Vec<f64> = (0..cycles * n).map(|_| rng.random::<f64>()).collect();
    for c in 0..cycles {
        let span = c * n..(c + 1) * n;
        match rng.random_range(0..4) {
            0 => arrivals[span].iter_mut().for_each(|t| *t = 0.0),
            1 => {
                let need: f64 = gains[span.clone()]
                    .iter()
                    .map(|&g| econ.inversion_power(g))
                    .sum();
                arrivals[span.clone()].iter_mut().for_each(|t| *t = 0.0);
                arrivals[span.start] = need + 1.0;
            }
            2 => {
                let first = arrivals[span.start] * 1e-3;
                arrivals[span.clone()].iter_mut().for_each(|t| *t = 0.0);
                arrivals[span.start] = first;
            }
            _ => gains[span].sort_by(f64::total_cmp),
        }
    }
    MultiCycleInstance::new(econ, n, k, gains, arrivals).unwrap()
}

fn certified_multi_cycle_check() -> Verdict {
    let start = Instant::now();
    let (mut checked, mut tried, mut mismatches) = (0, 0, 0);
    while checked < 100 {
        let mci = certified_candidate(tried);
        tried += 1;
        let r = mc_wcr(&mci).unwrap();
        if !mc_wcr_certificates(&mci, &r)
            .unwrap()
            .iter()
            .all(Option::is_some)
        {
            continue;
        }
        checked += 1;
        if !costs_agree(r.total_cost, mc_oracle(&mci).unwrap().total_cost) {
            mismatches += 1;
        }
    }
    within(
        Duration::from_secs(60),
        start,
        verdict(
            mismatches == 0,
            format!(
                "{mismatches} mismatches over {checked} certified instances ({tried} constructed)"
            ),
        ),
    )
}

fn partial_cesi_check() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(Experiment::PartialCesi);
    cfg.seed = SEED;
    let Report::PartialCesi(rows) = run_experiment(&cfg, Execution::default()).unwrap() else {
        unreachable!()
    };
    let mut failures = Vec::new();
    let curve = |b: f64| {
        rows.iter()
            .filter(|r| r.arrival_high == b)
            .map(|r| r.mean_cost)
            .collect::<Vec<_>>()
    };
    let (low, high) = (curve(10.0), curve(50.0));
    for (b, c) in [(10, &low), (50, &high)] {
        if c.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("U(0,{b}) curve not strictly decreasing"));
        }
    }
    if low.iter().zip(&high).any(|(l, h)| h > l) {
        failures.push("U(0,50) curve above U(0,10)".into());
    }

    let draws = 1_000_000;
    let econ = Economics::default();
    let mut worst_z: f64 = 0.0;
    for fading in standard_families() {
        let mut rng = realization_rng(SEED, &format!("acceptance-outage|{fading}"), 0);
        let powers: Vec<f64> = (0..draws)
            .map(|_| econ.inversion_power(fading.sample(&mut rng)))
            .collect();
        for &eps in &cfg.eps {
            let p_star = econ.inversion_power(fading.quantile(eps).unwrap());
            let outages = powers.iter().filter(|&&p| p > p_star).count();
            let freq = outages as f64 / draws as f64;
            let se = (eps * (1.0 - eps) / draws as f64).sqrt();
            let z = (freq - eps).abs() / se;
            worst_z = worst_z.max(z);
            if z > 3.0 {
                failures.push(format!("{fading} eps {eps}: frequency {freq:.5}"));
            }
        }
    }
    let detail = format!(
        "costs at eps 0.05 / 0.5: U(0,10) {:.3} / {:.3}, U(0,50) {:.3} / {:.3}; worst outage deviation {worst_z:.2} SE{}",
        low[0],
        low[low.len() - 1],
        high[0],
        high[high.len() - 1],
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    within(
        Duration::from_secs(600),
        start,
        verdict(failures.is_empty(), detail),
    )
}

fn determinism_check() -> Verdict {
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for experiment in [
        Experiment::SearchCount,
        Experiment::CostVsDrops,
        Experiment::GapToBound,
        Experiment::MulticycleGap,
        Experiment::PartialCesi,
    ] {
        let mut cfg = ExperimentConfig::defaults(experiment);
        cfg.seed = SEED;
        cfg.realizations = 20;
        let csv = |e| run_experiment(&cfg, e).unwrap().to_csv(&cfg);
        let first = csv(Execution::Serial);
        if first != csv(Execution::Serial) || first != csv(Execution::Parallel) {
            mismatched.push(experiment.name());
        }
    }
    within(
        Duration::from_secs(600),
        start,
        verdict(
            mismatched.is_empty(),
            if mismatched.is_empty() {
                "all five experiments byte-identical across serial, serial and parallel runs"
                    .to_string()
            } else {
                format!("differing output: {}", mismatched.join(", "))
            },
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("oracle equivalence", oracle_equivalence_check),
        ("greedy optimality conditions", kkt_check),
        ("bound and heuristic sandwich", sandwich_check),
        ("search counts", search_count_check),
        ("single-cycle cost and gap sweep", single_cycle_sweep_check),
        ("multi-cycle cost and gap sweep", multi_cycle_sweep_check),
        ("storage sensitivity bound", storage_check),
        (
            "certified multi-cycle optimality",
            certified_multi_cycle_check,
        ),
        ("partial channel knowledge", partial_cesi_check),
        ("determinism", determinism_check),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.passed);
        println!(
            "criterion {:>2} {:<34} {}  {}",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
