//! Exact solvers: the exhaustive oracle, the candidate-pruning searches for one
//! drop and one keep, and the general search restricted by the keep filter.
//!
//! Two exchange facts drive the pruning. If an earlier slot needs strictly
//! more power than a later one, dropping the earlier slot is never worse than
//! dropping the later one. And with cost written as
//! `beta * demand + (alpha - beta) * conventional`, moving a unit of demand
//! anywhere changes the conventional total by at most that unit.

use crate::error::{Error, Result};
use crate::greedy::{greedy_allocate, greedy_cost_masked};
use crate::model::{total_cost, Certificate, DropSet, Instance, SolveResult};
use crate::par::Execution;

/// Default ceiling on the number of drop sets an exhaustive search will visit.
pub const DEFAULT_SUBSET_CAP: u64 = 2_000_000;

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub cap: u64,
    pub execution: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_SUBSET_CAP,
            execution: Execution::default(),
        }
    }
}

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub(crate) fn finish(
    inst: &Instance,
    drop_set: DropSet,
    candidates_examined: usize,
    certificate: Option<Certificate>,
) -> Result<SolveResult> {
    let allocation = greedy_allocate(inst, &drop_set)?;
    let total_cost = total_cost(inst, &allocation)?;
    Ok(SolveResult {
        drop_set,
        allocation,
        total_cost,
        candidates_examined,
        certificate,
    })
}

struct Best {
    cost: f64,
    set: Vec<usize>,
    visited: u64,
}

impl Best {
    fn merge(self, other: Best) -> Best {
        let visited = self.visited + other.visited;
        // the left operand always comes first lexicographically
        let winner = if other.cost < self.cost { other } else { self };
        Best { visited, ..winner }
    }
}

/// Every `k`-subset of `pool` (sorted) whose smallest member is `pool[first]`,
/// in lexicographic order, keeping the cheapest.
fn search_branch(inst: &Instance, pool: &[usize], k: usize, first: usize) -> Best {
    let n = inst.n_slots();
    let mut mask = vec![false; n];
    let rest = &pool[first + 1..];
    let r = k - 1;
    let mut idx: Vec<usize> = (0..r).collect();
    mask[pool[first]] = true;
    let mut best = Best {
        cost: f64::INFINITY,
        set: Vec::new(),
        visited: 0,
    };
    loop {
        for &i in &idx {
            mask[rest[i]] = true;
        }
        let cost = greedy_cost_masked(inst, &mask);
        best.visited += 1;
        if cost < best.cost {
            best.cost = cost;
            best.set.clear();
            best.set.push(pool[first]);
            best.set.extend(idx.iter().map(|&i| rest[i]));
        }
        for &i in &idx {
            mask[rest[i]] = false;
        }
        // advance to the next combination
        let mut pos = r;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            if idx[pos] < rest.len() - r + pos {
                break;
            }
        }
        idx[pos] += 1;
        for q in pos + 1..r {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Cheapest `k`-subset of `pool`, ties to the lexicographically smallest.
fn search_subsets(
    inst: &Instance,
    pool: &[usize],
    k: usize,
    opts: &SearchOptions,
) -> Result<(DropSet, u64)> {
    let count = binomial(pool.len(), k);
    if count > opts.cap as u128 {
        return Err(Error::CapExceeded {
            count,
            cap: opts.cap,
        });
    }
    if k == 0 {
        return Ok((DropSet::empty(), 1));
    }
    let branches = pool.len() + 1 - k;
    let best = opts
        .execution
        .map(branches, |f| search_branch(inst, pool, k, f))
        .into_iter()
        .reduce(Best::merge)
        .expect("at least one branch");
    Ok((DropSet::new(best.set), best.visited))
}

/// Minimum-cost schedule with exactly `m` drops, by enumerating every drop set.
pub fn oracle_exhaustive(inst: &Instance, m: usize) -> Result<SolveResult> {
    oracle_exhaustive_with(inst, m, &SearchOptions::default())
}

pub fn oracle_exhaustive_with(
    inst: &Instance,
    m: usize,
    opts: &SearchOptions,
) -> Result<SolveResult> {
    inst.check_drop_count(m)?;
    let pool: Vec<usize> = (0..inst.n_slots()).collect();
    let (set, visited) = search_subsets(inst, &pool, m, opts)?;
    finish(inst, set, visited as usize, Some(Certificate::Exhaustive))
}

/// Which rule discards candidates in the one-drop search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DropOnePrune {
    /// Discard a self-covered candidate (`p_i < T_i`) only when it provably
    /// cannot beat dropping the latest maximum `g`:
    /// `beta (p_g - p_i) >= (alpha - beta) min(p_i, C_g)`, where `C_g` is the
    /// conventional energy left after dropping `g`.
    #[default]
    Guarded,
    /// Discard every self-covered candidate. Can miss the optimum when the
    /// spared arrival would have served later slots.
    ArrivalOnly,
}

/// Slots with no strictly larger predecessor, scanned from the right
/// (ties resolved towards the later slot). The first entry is the latest
/// global maximum.
pub fn drop_one_candidates(inst: &Instance) -> Vec<usize> {
    let p = inst.inversion_powers();
    let mut prefix_arg = Vec::with_capacity(p.len());
    for (k, &v) in p.iter().enumerate() {
        let a = match prefix_arg.last() {
            Some(&j) if p[j] > v => j,
            _ => k,
        };
        prefix_arg.push(a);
    }
    let mut out = Vec::new();
    let mut k = p.len() - 1;
    loop {
        let i = prefix_arg[k];
        out.push(i);
        if i == 0 {
            return out;
        }
        k = i - 1;
    }
}

/// Optimal schedule when exactly one slot may be dropped.
pub fn solve_drop_one(inst: &Instance) -> Result<SolveResult> {
    solve_drop_one_with(inst, DropOnePrune::Guarded)
}

pub fn solve_drop_one_with(inst: &Instance, prune: DropOnePrune) -> Result<SolveResult> {
    let budget = inst.drop_budget();
    if budget != 1 {
        return Err(Error::BudgetMismatch {
            expected: 1,
            found: budget,
        });
    }
    let econ = inst.economics();
    let p = inst.inversion_powers();
    let t = inst.arrivals();
    let mut candidates = drop_one_candidates(inst);
    let top = candidates[0];
    let residual = conventional_without(inst, top);
    candidates.retain(|&i| {
        if i == top || p[i] >= t[i] {
            return true;
        }
        match prune {
            DropOnePrune::ArrivalOnly => false,
            DropOnePrune::Guarded => {
                econ.price_renew * (p[top] - p[i]) < econ.price_gap() * p[i].min(residual)
            }
        }
    });

    let mut mask = vec![false; inst.n_slots()];
    let mut best = (f64::INFINITY, usize::MAX);
    for &i in &candidates {
        mask[i] = true;
        let cost = greedy_cost_masked(inst, &mask);
        mask[i] = false;
        if cost < best.0 || (cost == best.0 && i < best.1) {
            best = (cost, i);
        }
    }
    let certificate = match prune {
        DropOnePrune::Guarded => Some(Certificate::Exhaustive),
        DropOnePrune::ArrivalOnly => None,
    };
    finish(inst, DropSet::new([best.1]), candidates.len(), certificate)
}

/// Conventional energy the greedy allocation needs with one slot dropped.
fn conventional_without(inst: &Instance, dropped: usize) -> f64 {
    let mut stored = inst.initial_storage();
    let mut conv = 0.0;
    for (k, (&p, &t)) in inst
        .inversion_powers()
        .iter()
        .zip(inst.arrivals())
        .enumerate()
    {
        stored += t;
        if k != dropped {
            let r = p.min(stored);
            stored -= r;
            conv += p - r;
        }
    }
    conv
}

/// Successive minima scanning forward (ties to the earlier slot): each is a
/// slot no later slot undercuts.
pub fn keep_one_candidates(inst: &Instance) -> Vec<usize> {
    let p = inst.inversion_powers();
    let n = p.len();
    // suffix argmin, ties to the earlier slot
    let mut suffix_arg = vec![n - 1; n];
    for k in (0..n - 1).rev() {
        let j = suffix_arg[k + 1];
        suffix_arg[k] = if p[k] <= p[j] { k } else { j };
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let i = suffix_arg[k];
        out.push(i);
        if i == n - 1 {
            return out;
        }
        k = i + 1;
    }
}

/// Optimal schedule when exactly one slot is kept.
pub fn solve_keep_one(inst: &Instance) -> Result<SolveResult> {
    let n = inst.n_slots();
    let budget = inst.drop_budget();
    if budget + 1 != n {
        return Err(Error::BudgetMismatch {
            expected: n - 1,
            found: budget,
        });
    }
    let p = inst.inversion_powers();
    let mut candidates = keep_one_candidates(inst);
    // once cumulative harvest covers a candidate, it is fully renewable and
    // every later candidate needs at least as much power
    let mut harvested = inst.initial_storage();
    let mut next = 0;
    let mut cut = candidates.len();
    for (pos, &k) in candidates.iter().enumerate() {
        while next <= k {
            harvested += inst.arrivals()[next];
            next += 1;
        }
        if harvested > p[k] {
            cut = pos + 1;
            break;
        }
    }
    candidates.truncate(cut);

    let mut mask = vec![true; n];
    let mut best = (f64::INFINITY, usize::MAX);
    for &k in &candidates {
        mask[k] = false;
        let cost = greedy_cost_masked(inst, &mask);
        mask[k] = true;
        if cost < best.0 {
            best = (cost, k);
        }
    }
    let kept = best.1;
    finish(
        inst,
        DropSet::new((0..n).filter(|&i| i != kept)),
        candidates.len(),
        Some(Certificate::Exhaustive),
    )
}

/// Slots with at least `m` strictly larger predecessors; none of them is
/// dropped by an optimal schedule with `m` drops.
pub fn forced_keep_slots(inst: &Instance, m: usize) -> Vec<usize> {
    let p = inst.inversion_powers();
    (0..p.len())
        .filter(|&i| p[..i].iter().filter(|&&q| q > p[i]).count() >= m)
        .collect()
}

/// Exhaustive search over drop sets that avoid [`forced_keep_slots`].
pub fn solve_pruned_search(inst: &Instance, m: usize) -> Result<SolveResult> {
    solve_pruned_search_with(inst, m, &SearchOptions::default())
}

pub fn solve_pruned_search_with(
    inst: &Instance,
    m: usize,
    opts: &SearchOptions,
) -> Result<SolveResult> {
    inst.check_drop_count(m)?;
    let forced = forced_keep_slots(inst, m);
    let pool: Vec<usize> = (0..inst.n_slots())
        .filter(|i| forced.binary_search(i).is_err())
        .collect();
    let (set, visited) = search_subsets(inst, &pool, m, opts)?;
    finish(inst, set, visited as usize, Some(Certificate::Exhaustive))
}
