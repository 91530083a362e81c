//! Polynomial-time schedules: rounding the relaxation (LPCR), dropping the
//! worst channels (WCR), a uniformly random drop set, and the conditions under
//! which WCR is provably optimal.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::exact::finish;
use crate::lp::{lower_bound, LowerBound};
use crate::model::{scaled_tol, Allocation, Certificate, DropSet, Instance, SolveResult};

/// Relaxation values closer than this are treated as equal when ranking.
const CHI_RESOLUTION: f64 = 1e-9;

/// Solves the relaxation, drops the `m` slots with the largest fractional
/// outage, and allocates the rest greedily.
pub fn lpcr(inst: &Instance, m: usize) -> Result<SolveResult> {
    let bound = lower_bound(inst, m)?;
    lpcr_from_bound(inst, m, &bound)
}

/// [`lpcr`] with an already solved relaxation.
pub fn lpcr_from_bound(inst: &Instance, m: usize, bound: &LowerBound) -> Result<SolveResult> {
    inst.check_drop_count(m)?;
    let p = inst.inversion_powers();
    let quantized: Vec<i64> = bound
        .chi
        .iter()
        .map(|c| (c / CHI_RESOLUTION).round() as i64)
        .collect();
    let mut order: Vec<usize> = (0..inst.n_slots()).collect();
    order.sort_by(|&a, &b| {
        quantized[b]
            .cmp(&quantized[a])
            .then_with(|| p[b].total_cmp(&p[a]))
            .then(a.cmp(&b))
    });
    finish(inst, DropSet::new(order[..m].iter().copied()), 1, None)
}

/// Drops the `m` slots with the weakest channels, earlier slots first on ties.
pub fn wcr(inst: &Instance, m: usize) -> Result<SolveResult> {
    inst.check_drop_count(m)?;
    let gains = inst.gains();
    let mut order: Vec<usize> = (0..inst.n_slots()).collect();
    order.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(a.cmp(&b)));
    let dropped = DropSet::new(order[..m].iter().copied());
    let mut result = finish(inst, dropped, 1, None)?;
    result.certificate = wcr_certificate(inst, &result);
    Ok(result)
}

/// Drops a uniformly random set of `m` slots. The draw depends only on `seed`
/// and the instance data.
pub fn random_drop(inst: &Instance, m: usize, seed: u64) -> Result<SolveResult> {
    inst.check_drop_count(m)?;
    let mut rng = ChaCha8Rng::from_seed(instance_seed(inst, seed));
    let picked = rand::seq::index::sample(&mut rng, inst.n_slots(), m);
    finish(inst, DropSet::new(picked), 1, None)
}

pub(crate) fn instance_seed(inst: &Instance, seed: u64) -> [u8; 32] {
    let econ = inst.economics();
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for v in [
        econ.rate,
        econ.noise,
        econ.price_conv,
        econ.price_renew,
        inst.initial_storage(),
    ] {
        h.update(v.to_le_bytes());
    }
    for (g, t) in inst.gains().iter().zip(inst.arrivals()) {
        h.update(g.to_le_bytes());
        h.update(t.to_le_bytes());
    }
    h.finalize().into()
}

/// A sufficient condition for `result` (a WCR schedule on `inst`) to be
/// optimal, checked in order: all harvested energy consumed, no conventional
/// energy used, gains non-decreasing in time.
pub fn wcr_certificate(inst: &Instance, result: &SolveResult) -> Option<Certificate> {
    certify(inst, &result.allocation)
}

pub(crate) fn certify(inst: &Instance, alloc: &Allocation) -> Option<Certificate> {
    let harvest = inst.total_energy();
    let demand: f64 = inst.inversion_powers().iter().sum();
    let tol = scaled_tol(harvest.max(demand));
    let renew: f64 = alloc.renew.iter().sum();
    let conv: f64 = alloc.conv.iter().sum();
    if (renew - harvest).abs() <= tol {
        Some(Certificate::FullRenewableUse)
    } else if conv.abs() <= tol {
        Some(Certificate::NoConventional)
    } else if inst
        .gains()
        .windows(2)
        .all(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Greater))
    {
        Some(Certificate::NonDecreasingChannel)
    } else {
        None
    }
}
