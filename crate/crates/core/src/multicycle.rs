//! Several consecutive cycles, each with its own drop budget, sharing one
//! energy store. Harvest left over at the end of a cycle carries into the next.

use crate::error::{Error, Result};
use crate::exact::{binomial, finish, oracle_exhaustive_with, SearchOptions};
use crate::greedy::greedy_cost_masked;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::heuristics::{certify, instance_seed, lpcr};
use crate::lp::{relaxation_program, solve_relaxation, LowerBound};
use crate::model::{Allocation, Certificate, DropSet, Economics, Instance, SolveResult};

/// Leftover storage above this negative value is treated as rounding noise.
const LEFTOVER_DRIFT: f64 = -1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiCycleInstance {
    slots_per_cycle: usize,
    drops_per_cycle: usize,
    flat: Instance,
}

impl MultiCycleInstance {
    /// `gains` and `arrivals` run over all cycles back to back.
    pub fn new(
        econ: Economics,
        slots_per_cycle: usize,
        drops_per_cycle: usize,
        gains: Vec<f64>,
        arrivals: Vec<f64>,
    ) -> Result<Self> {
        if slots_per_cycle == 0 || gains.is_empty() || !gains.len().is_multiple_of(slots_per_cycle)
        {
            return Err(Error::InvalidInstance(format!(
                "{} slots do not split into cycles of {slots_per_cycle}",
                gains.len()
            )));
        }
        if drops_per_cycle > slots_per_cycle {
            return Err(Error::DropCountOutOfRange {
                drops: drops_per_cycle,
                n_slots: slots_per_cycle,
            });
        }
        let flat = Instance::new(econ, gains, arrivals, 0.0, 0.0)?;
        Ok(Self {
            slots_per_cycle,
            drops_per_cycle,
            flat,
        })
    }

    pub fn with_initial_storage(mut self, storage: f64) -> Result<Self> {
        self.flat = self.flat.with_initial_storage(storage)?;
        Ok(self)
    }

    pub fn cycles(&self) -> usize {
        self.flat.n_slots() / self.slots_per_cycle
    }

    pub fn slots_per_cycle(&self) -> usize {
        self.slots_per_cycle
    }

    pub fn drops_per_cycle(&self) -> usize {
        self.drops_per_cycle
    }

    /// All cycles as one single-cycle instance (no outage budget attached).
    pub fn flattened(&self) -> &Instance {
        &self.flat
    }

    fn span(&self, cycle: usize) -> std::ops::Range<usize> {
        cycle * self.slots_per_cycle..(cycle + 1) * self.slots_per_cycle
    }

    /// Cycle `cycle` on its own, starting from `storage`.
    pub fn cycle_instance(&self, cycle: usize, storage: f64) -> Result<Instance> {
        if cycle >= self.cycles() {
            return Err(Error::IndexOutOfRange {
                index: cycle,
                n_slots: self.cycles(),
            });
        }
        let span = self.span(cycle);
        Instance::new(
            *self.flat.economics(),
            self.flat.gains()[span.clone()].to_vec(),
            self.flat.arrivals()[span].to_vec(),
            storage,
            0.0,
        )
    }

    /// Storage entering each cycle under `alloc`.
    pub fn storage_entering_cycles(&self, alloc: &Allocation) -> Vec<f64> {
        let mut storage = self.flat.initial_storage();
        let mut out = Vec::with_capacity(self.cycles());
        for c in 0..self.cycles() {
            out.push(storage);
            let span = self.span(c);
            let harvested: f64 = self.flat.arrivals()[span.clone()].iter().sum();
            let used: f64 = alloc.renew[span].iter().sum();
            storage = clamp_leftover(storage + harvested - used);
        }
        out
    }
}

fn clamp_leftover(v: f64) -> f64 {
    debug_assert!(
        v >= LEFTOVER_DRIFT * 1e3,
        "leftover storage went negative: {v}"
    );
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Cycle by cycle: solve each cycle's relaxation from the storage left by the
/// previous one, round it, and carry the leftover forward.
pub fn mc_lpcr(mci: &MultiCycleInstance) -> Result<SolveResult> {
    let mut storage = mci.flat.initial_storage();
    let mut dropped = Vec::new();
    for c in 0..mci.cycles() {
        let inst = mci.cycle_instance(c, storage)?;
        let r = lpcr(&inst, mci.drops_per_cycle).map_err(|e| match e {
            Error::Lp { status, .. } => Error::Lp {
                status,
                cycle: Some(c),
            },
            other => other,
        })?;
        let used: f64 = r.allocation.renew.iter().sum();
        storage = clamp_leftover(inst.total_energy() - used);
        let offset = c * mci.slots_per_cycle;
        dropped.extend(r.drop_set.slots().iter().map(|&i| i + offset));
    }
    finish(&mci.flat, DropSet::new(dropped), mci.cycles(), None)
}

/// Drops the weakest channels of every cycle, then allocates greedily over
/// the whole horizon.
pub fn mc_wcr(mci: &MultiCycleInstance) -> Result<SolveResult> {
    let gains = mci.flat.gains();
    let mut dropped = Vec::new();
    for c in 0..mci.cycles() {
        let mut order: Vec<usize> = mci.span(c).collect();
        order.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(a.cmp(&b)));
        dropped.extend_from_slice(&order[..mci.drops_per_cycle]);
    }
    finish(&mci.flat, DropSet::new(dropped), 1, None)
}

/// Drops a uniformly random set of `drops_per_cycle` slots in every cycle.
/// The draw depends only on `seed` and the instance data.
pub fn mc_random_drop(mci: &MultiCycleInstance, seed: u64) -> Result<SolveResult> {
    let mut rng = ChaCha8Rng::from_seed(instance_seed(&mci.flat, seed));
    let mut dropped = Vec::new();
    for c in 0..mci.cycles() {
        let offset = c * mci.slots_per_cycle;
        let picked = rand::seq::index::sample(&mut rng, mci.slots_per_cycle, mci.drops_per_cycle);
        dropped.extend(picked.into_iter().map(|i| i + offset));
    }
    finish(&mci.flat, DropSet::new(dropped), 1, None)
}

/// WCR optimality certificate of every cycle of `result`, each judged from the
/// storage that cycle actually inherits.
pub fn mc_wcr_certificates(
    mci: &MultiCycleInstance,
    result: &SolveResult,
) -> Result<Vec<Option<Certificate>>> {
    let entering = mci.storage_entering_cycles(&result.allocation);
    (0..mci.cycles())
        .map(|c| {
            let inst = mci.cycle_instance(c, entering[c])?;
            let span = mci.span(c);
            let alloc = Allocation {
                conv: result.allocation.conv[span.clone()].to_vec(),
                renew: result.allocation.renew[span].to_vec(),
            };
            Ok(certify(&inst, &alloc))
        })
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                break;
            }
        }
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Minimum-cost schedule with exactly `drops_per_cycle` drops in every cycle,
/// by enumerating the cross product of per-cycle drop sets.
pub fn mc_oracle(mci: &MultiCycleInstance) -> Result<SolveResult> {
    mc_oracle_with(mci, &SearchOptions::default())
}

pub fn mc_oracle_with(mci: &MultiCycleInstance, opts: &SearchOptions) -> Result<SolveResult> {
    let (n, k, cycles) = (mci.slots_per_cycle, mci.drops_per_cycle, mci.cycles());
    let per_cycle = binomial(n, k);
    let total = (0..cycles)
        .try_fold(1u128, |acc, _| acc.checked_mul(per_cycle))
        .unwrap_or(u128::MAX);
    if total > opts.cap as u128 {
        return Err(Error::CapExceeded {
            count: total,
            cap: opts.cap,
        });
    }
    let combos = combinations(n, k);

    // cycle 0 is the most significant digit, so visiting order is
    // lexicographic in the global drop set
    let branch = |first: usize| -> (f64, Vec<usize>) {
        let mut mask = vec![false; mci.flat.n_slots()];
        let mut digits = vec![0usize; cycles];
        digits[0] = first;
        let mut best = (f64::INFINITY, Vec::new());
        loop {
            for (c, &d) in digits.iter().enumerate() {
                for &i in &combos[d] {
                    mask[c * n + i] = true;
                }
            }
            let cost = greedy_cost_masked(&mci.flat, &mask);
            if cost < best.0 {
                best.0 = cost;
                best.1 = digits.clone();
            }
            mask.iter_mut().for_each(|m| *m = false);
            let mut c = cycles;
            loop {
                c -= 1;
                if c == 0 {
                    return best;
                }
                digits[c] += 1;
                if digits[c] < combos.len() {
                    break;
                }
                digits[c] = 0;
            }
        }
    };
    let best = opts
        .execution
        .map(combos.len(), branch)
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one combination");
    let dropped = best
        .1
        .iter()
        .enumerate()
        .flat_map(|(c, &d)| combos[d].iter().map(move |&i| c * n + i))
        .collect::<Vec<_>>();
    finish(
        &mci.flat,
        DropSet::new(dropped),
        total as usize,
        Some(Certificate::Exhaustive),
    )
}

/// Relaxation of the whole horizon with one budget row per cycle; a lower
/// bound on every schedule that drops `drops_per_cycle` slots per cycle.
pub fn mc_lower_bound(mci: &MultiCycleInstance) -> Result<LowerBound> {
    let budgets: Vec<_> = (0..mci.cycles())
        .map(|c| (mci.span(c), mci.drops_per_cycle))
        .collect();
    let lp = relaxation_program(&mci.flat, &budgets);
    solve_relaxation(&lp, mci.flat.n_slots(), None)
}

/// Optimal costs with `m` drops at the instance's storage and at `delta`
/// more, and whether the saving stays within `(alpha - beta) delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StorageSensitivity {
    pub base_cost: f64,
    pub raised_cost: f64,
    pub bound_holds: bool,
}

pub fn storage_sensitivity(inst: &Instance, m: usize, delta: f64) -> Result<StorageSensitivity> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidInstance(format!(
            "storage increment {delta} must be non-negative"
        )));
    }
    let opts = SearchOptions::default();
    let base_cost = oracle_exhaustive_with(inst, m, &opts)?.total_cost;
    let raised = inst
        .clone()
        .with_initial_storage(inst.initial_storage() + delta)?;
    let raised_cost = oracle_exhaustive_with(&raised, m, &opts)?.total_cost;
    let allowance = inst.economics().price_gap() * delta + crate::model::COST_TOL;
    Ok(StorageSensitivity {
        base_cost,
        raised_cost,
        bound_holds: base_cost - raised_cost <= allowance,
    })
}
