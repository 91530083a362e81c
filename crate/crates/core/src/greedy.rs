//! Greedy dual-source allocation: every kept slot draws harvested energy up
//! to what is stored, and tops up with conventional energy. For a fixed drop
//! set this is cost-optimal, which [`verify_greedy_kkt`] certifies by
//! constructing explicit Lagrange multipliers.

use crate::error::{Error, Result};
use crate::model::{scaled_tol, Allocation, DropSet, Instance};

/// Splits each slot's power demand between storage and the grid, serving
/// demands in time order from whatever harvested energy has accumulated.
pub fn greedy_split(demands: &[f64], arrivals: &[f64], initial_storage: f64) -> Allocation {
    debug_assert_eq!(demands.len(), arrivals.len());
    let mut alloc = Allocation::zeros(demands.len());
    let mut stored = initial_storage;
    for (k, (&d, &t)) in demands.iter().zip(arrivals).enumerate() {
        stored += t;
        let r = d.min(stored);
        stored -= r;
        alloc.renew[k] = r;
        alloc.conv[k] = d - r;
    }
    alloc
}

/// Greedy allocation with the slots in `drop_set` switched off.
pub fn greedy_allocate(inst: &Instance, drop_set: &DropSet) -> Result<Allocation> {
    let mask = drop_set.mask(inst.n_slots())?;
    Ok(greedy_allocate_masked(inst, &mask))
}

pub(crate) fn greedy_allocate_masked(inst: &Instance, dropped: &[bool]) -> Allocation {
    let demands: Vec<f64> = inst
        .inversion_powers()
        .iter()
        .zip(dropped)
        .map(|(&p, &d)| if d { 0.0 } else { p })
        .collect();
    greedy_split(&demands, inst.arrivals(), inst.initial_storage())
}

/// Cost of the greedy allocation for a drop mask without materializing it.
///
/// Accumulates in the same order as [`crate::model::total_cost`] so the two
/// agree bit for bit.
pub(crate) fn greedy_cost_masked(inst: &Instance, dropped: &[bool]) -> f64 {
    let econ = inst.economics();
    let mut stored = inst.initial_storage();
    let mut cost = 0.0;
    for ((&p, &t), &d) in inst
        .inversion_powers()
        .iter()
        .zip(inst.arrivals())
        .zip(dropped)
    {
        stored += t;
        let (c, r) = if d {
            (0.0, 0.0)
        } else {
            let r = p.min(stored);
            stored -= r;
            (p - r, r)
        };
        cost += econ.price_conv * c + econ.price_renew * r;
    }
    cost
}

/// Checks the optimality conditions of the fixed-drop-set linear program
///
/// ```text
/// min  alpha * sum(c) - (alpha - beta) * sum(x)
/// s.t. 0 <= x_i <= c_i,   sum_{i<=k} x_i <= S + sum_{i<=k} T_i
/// ```
///
/// with `c_i` the inversion power of kept slots (zero for dropped ones) and
/// `x` the harvested draw. Multipliers: `gamma = 0`; `K` is the last slot whose
/// prefix constraint is tight; `mu_K = alpha - beta` and `lambda_i = alpha - beta`
/// after `K`, zero elsewhere. Also requires the conventional share to be exactly
/// the remainder `c_i - x_i`.
pub fn verify_greedy_kkt(inst: &Instance, drop_set: &DropSet, alloc: &Allocation) -> Result<bool> {
    let n = inst.n_slots();
    for found in [alloc.conv.len(), alloc.renew.len()] {
        if found != n {
            return Err(Error::LengthMismatch { expected: n, found });
        }
    }
    let dropped = drop_set.mask(n)?;
    let econ = inst.economics();
    let gap = econ.price_gap();

    let cap: Vec<f64> = inst
        .inversion_powers()
        .iter()
        .zip(&dropped)
        .map(|(&p, &d)| if d { 0.0 } else { p })
        .collect();
    let x = &alloc.renew;
    let scale = inst
        .total_energy()
        .max(cap.iter().copied().fold(0.0, f64::max));
    let tol = scaled_tol(scale);

    // prefix slack: sum x - available, <= 0 when feasible
    let mut prefix = Vec::with_capacity(n);
    let (mut avail, mut used) = (inst.initial_storage(), 0.0);
    for (t, xk) in inst.arrivals().iter().zip(x) {
        avail += t;
        used += xk;
        prefix.push(used - avail);
    }

    // primal feasibility, including the conventional top-up
    for k in 0..n {
        if x[k] < -tol || x[k] > cap[k] + tol || prefix[k] > tol {
            return Ok(false);
        }
        if (alloc.conv[k] - (cap[k] - x[k])).abs() > tol {
            return Ok(false);
        }
    }

    let tight = prefix.iter().rposition(|s| s.abs() <= tol);
    let mut lambda = vec![0.0; n];
    let mut mu = vec![0.0; n];
    match tight {
        Some(kk) => {
            mu[kk] = gap;
            lambda[kk + 1..].iter_mut().for_each(|l| *l = gap);
        }
        None => lambda.iter_mut().for_each(|l| *l = gap),
    }

    // dual feasibility holds by construction since gap > 0
    let dual_tol = tol * gap.max(1.0);
    let mut mu_suffix = 0.0;
    for k in (0..n).rev() {
        mu_suffix += mu[k];
        if (lambda[k] * (x[k] - cap[k])).abs() > dual_tol {
            return Ok(false);
        }
        if (mu[k] * prefix[k]).abs() > dual_tol {
            return Ok(false);
        }
        let stationarity = -gap + lambda[k] + mu_suffix;
        if stationarity.abs() > dual_tol {
            return Ok(false);
        }
    }
    Ok(true)
}
