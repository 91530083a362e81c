use std::ops::Range;

use super::{solve_lp, LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};
use crate::model::{DropSet, Instance};

/// Continuous relaxation of the drop-set problem.
///
/// Variables are `[conv_1..conv_N, renew_1..renew_N, chi_1..chi_N]`. Rows, in
/// order: one coverage row per slot `-conv_i - renew_i - p_i chi_i <= -p_i`,
/// one harvesting row per prefix, and the budget `sum chi <= m`.
pub fn build_relaxation(inst: &Instance, m: usize) -> Result<LinearProgram> {
    inst.check_drop_count(m)?;
    Ok(relaxation_program(inst, &[(0..inst.n_slots(), m)]))
}

/// Same program with one budget row per group of slots.
pub(crate) fn relaxation_program(
    inst: &Instance,
    budgets: &[(Range<usize>, usize)],
) -> LinearProgram {
    let n = inst.n_slots();
    let econ = inst.economics();
    let p_inv = inst.inversion_powers();
    let mut objective = vec![0.0; 3 * n];
    objective[..n].iter_mut().for_each(|c| *c = econ.price_conv);
    objective[n..2 * n]
        .iter_mut()
        .for_each(|c| *c = econ.price_renew);
    let mut lp = LinearProgram::new(objective);

    for i in 0..n {
        let mut row = vec![0.0; 3 * n];
        row[i] = -1.0;
        row[n + i] = -1.0;
        row[2 * n + i] = -p_inv[i];
        lp.add_row(row, -p_inv[i]);
    }
    push_prefix_rows(&mut lp, inst, n, 3 * n);
    for (range, budget) in budgets {
        let mut row = vec![0.0; 3 * n];
        row[2 * n + range.start..2 * n + range.end]
            .iter_mut()
            .for_each(|a| *a = 1.0);
        lp.add_row(row, *budget as f64);
    }
    for j in 2 * n..3 * n {
        lp.set_bounds(j, 0.0, 1.0);
    }
    lp
}

fn push_prefix_rows(lp: &mut LinearProgram, inst: &Instance, renew_offset: usize, width: usize) {
    let mut avail = inst.initial_storage();
    for k in 0..inst.n_slots() {
        avail += inst.arrivals()[k];
        let mut row = vec![0.0; width];
        row[renew_offset..=renew_offset + k]
            .iter_mut()
            .for_each(|a| *a = 1.0);
        lp.add_row(row, avail);
    }
}

/// The fixed-drop-set problem as a plain LP over `[conv, renew]`; dropped
/// slots are pinned to zero power.
pub fn build_fixed_drop_program(inst: &Instance, drop_set: &DropSet) -> Result<LinearProgram> {
    let n = inst.n_slots();
    let dropped = drop_set.mask(n)?;
    let econ = inst.economics();
    let mut objective = vec![econ.price_conv; 2 * n];
    objective[n..]
        .iter_mut()
        .for_each(|c| *c = econ.price_renew);
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        if dropped[i] {
            lp.set_bounds(i, 0.0, 0.0).set_bounds(n + i, 0.0, 0.0);
        } else {
            let mut row = vec![0.0; 2 * n];
            row[i] = -1.0;
            row[n + i] = -1.0;
            lp.add_row(row, -inst.inversion_powers()[i]);
        }
    }
    push_prefix_rows(&mut lp, inst, n, 2 * n);
    Ok(lp)
}

#[derive(Clone, Debug)]
pub struct LowerBound {
    pub value: f64,
    /// Fractional outage indicators, one per slot.
    pub chi: Vec<f64>,
    pub solution: LpSolution,
}

/// Optimal value of the relaxation, a lower bound on the best cost with `m`
/// drops, plus its fractional outage vector.
pub fn lower_bound(inst: &Instance, m: usize) -> Result<LowerBound> {
    let lp = build_relaxation(inst, m)?;
    solve_relaxation(&lp, inst.n_slots(), None)
}

pub(crate) fn solve_relaxation(
    lp: &LinearProgram,
    n: usize,
    cycle: Option<usize>,
) -> Result<LowerBound> {
    let solution = solve_lp(lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::Lp {
            status: solution.status,
            cycle,
        });
    }
    Ok(LowerBound {
        value: solution.objective_value,
        chi: solution.x[2 * n..3 * n].to_vec(),
        solution,
    })
}
