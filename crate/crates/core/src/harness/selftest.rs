//! Randomized self-checks of the exact solvers and the greedy allocation,
//! shared by the `selftest` command and the acceptance tests.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

use super::experiments::realization_rng;
use crate::error::Result;
use crate::exact::{oracle_exhaustive, solve_drop_one, solve_keep_one, solve_pruned_search};
use crate::greedy::{greedy_allocate, verify_greedy_kkt};
use crate::lp::{build_fixed_drop_program, solve_lp, LpStatus};
use crate::model::{costs_agree, total_cost, DropSet, Economics, Instance};
use crate::partial::ChannelDistribution;

#[derive(Clone, Debug, Default)]
pub struct CheckOutcome {
    pub cases: usize,
    pub failures: Vec<String>,
    /// Largest absolute cost difference seen between compared solvers.
    pub max_error: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn compare(&mut self, what: impl FnOnce() -> String, got: f64, want: f64) {
        self.max_error = self.max_error.max((got - want).abs());
        if !costs_agree(got, want) {
            self.failures.push(format!("{}: {got} vs {want}", what()));
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} cases, {} failures, max cost difference {:.3e}",
            self.cases,
            self.failures.len(),
            self.max_error
        )
    }
}

/// Rayleigh-faded instance with `U(0, 1)` arrivals and `n` drawn from
/// `slots`, under the default economics.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    slots: std::ops::RangeInclusive<usize>,
) -> Result<Instance> {
    let n = rng.random_range(slots);
    let fading = ChannelDistribution::Exponential { mean: 1.0 };
    let gains = (0..n)
        .map(|_| fading.sample(rng).max(f64::MIN_POSITIVE))
        .collect();
    let arrivals = (0..n).map(|_| rng.random::<f64>()).collect();
    Instance::new(Economics::default(), gains, arrivals, 0.0, 0.0)
}

/// Checks the one-drop, one-keep and pruned searches against exhaustive
/// enumeration on `cases` instances of 6 to 14 slots.
pub fn oracle_equivalence(cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut out = CheckOutcome {
        cases,
        ..Default::default()
    };
    for i in 0..cases {
        let mut rng = realization_rng(seed, "selftest-oracle", i);
        let inst = random_instance(&mut rng, 6..=14)?;
        let n = inst.n_slots();
        let oracle = |m| oracle_exhaustive(&inst, m).map(|r| r.total_cost);
        let one = solve_drop_one(&inst.clone().with_drop_count(1)?)?.total_cost;
        out.compare(|| format!("case {i}: one-drop search"), one, oracle(1)?);
        let keep = solve_keep_one(&inst.clone().with_drop_count(n - 1)?)?.total_cost;
        out.compare(
            || format!("case {i}: one-keep search"),
            keep,
            oracle(n - 1)?,
        );
        for m in 2..=n - 2 {
            let pruned = solve_pruned_search(&inst, m)?.total_cost;
            out.compare(
                || format!("case {i}: pruned search, {m} drops"),
                pruned,
                oracle(m)?,
            );
        }
    }
    Ok(out)
}

fn random_drop_set<R: Rng>(rng: &mut R, n: usize) -> DropSet {
    let m = rng.random_range(0..n);
    DropSet::new(sample(rng, n, m))
}

/// Verifies the optimality conditions of the greedy allocation on
/// `kkt_cases` random (instance, drop set) pairs, and its cost against the
/// fixed-drop linear program on `lp_cases` more.
pub fn kkt_suite(
    kkt_cases: usize,
    lp_cases: usize,
    seed: u64,
) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut kkt = CheckOutcome {
        cases: kkt_cases,
        ..Default::default()
    };
    for i in 0..kkt_cases {
        let mut rng = realization_rng(seed, "selftest-kkt", i);
        let inst = random_instance(&mut rng, 1..=20)?;
        let drops = random_drop_set(&mut rng, inst.n_slots());
        let alloc = greedy_allocate(&inst, &drops)?;
        if !verify_greedy_kkt(&inst, &drops, &alloc)? {
            kkt.failures
                .push(format!("case {i}: conditions fail for drops {drops}"));
        }
    }
    let mut lp = CheckOutcome {
        cases: lp_cases,
        ..Default::default()
    };
    for i in 0..lp_cases {
        let mut rng = realization_rng(seed, "selftest-lp", i);
        let inst = random_instance(&mut rng, 1..=20)?;
        let drops = random_drop_set(&mut rng, inst.n_slots());
        let greedy = total_cost(&inst, &greedy_allocate(&inst, &drops)?)?;
        let sol = solve_lp(&build_fixed_drop_program(&inst, &drops)?)?;
        if sol.status != LpStatus::Optimal {
            lp.failures
                .push(format!("case {i}: program ended {:?}", sol.status));
            continue;
        }
        lp.compare(
            || format!("case {i}: drops {drops}"),
            greedy,
            sol.objective_value,
        );
    }
    Ok((kkt, lp))
}
