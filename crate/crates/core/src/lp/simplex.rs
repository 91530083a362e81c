//! Dense bounded-variable primal simplex.
//!
//! Variables are shifted so every lower bound is zero. Each row gets a slack;
//! rows whose shifted right-hand side is negative are negated and given an
//! artificial variable, which phase one drives to zero. After phase one the
//! artificials are fixed at `[0, 0]`, so any that remain basic are harmless.

use super::{LinearProgram, LpSolution, LpStatus};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 50;
const REFRESH_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
    Basic,
}

struct Tableau {
    m: usize,
    cols: usize,
    /// row-major `m x cols`, equal to `B^-1 M`
    t: Vec<f64>,
    /// values of the basic variables
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<Bound>,
    upper: Vec<f64>,
    d: Vec<f64>,
    /// modified constraint matrix `M` (rows negated where needed), row-major
    orig: Vec<f64>,
    /// modified right-hand side `h`
    rhs: Vec<f64>,
    /// column holding the initial identity entry of each row
    unit_col: Vec<usize>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

pub(super) fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.n_vars();
    let m = lp.rows.len();
    let lower: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();

    // shifted rhs: b - A lo
    let shifted: Vec<f64> = lp
        .rows
        .iter()
        .map(|r| r.rhs - r.coeffs.iter().zip(&lower).map(|(a, l)| a * l).sum::<f64>())
        .collect();
    let negated: Vec<bool> = shifted.iter().map(|&h| h < 0.0).collect();
    let n_art = negated.iter().filter(|&&x| x).count();
    let first_artificial = n + m;
    let cols = n + m + n_art;

    let mut orig = vec![0.0; m * cols];
    let mut rhs = vec![0.0; m];
    let mut unit_col = vec![0; m];
    let mut upper = vec![f64::INFINITY; cols];
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        upper[j] = hi - lo;
    }
    let mut art = first_artificial;
    for i in 0..m {
        let sign = if negated[i] { -1.0 } else { 1.0 };
        let row = &mut orig[i * cols..(i + 1) * cols];
        for (j, a) in lp.rows[i].coeffs.iter().enumerate() {
            row[j] = sign * a;
        }
        row[n + i] = sign;
        rhs[i] = sign * shifted[i];
        if negated[i] {
            row[art] = 1.0;
            unit_col[i] = art;
            art += 1;
        } else {
            unit_col[i] = n + i;
        }
    }

    let mut state = vec![Bound::Lower; cols];
    for &c in &unit_col {
        state[c] = Bound::Basic;
    }
    let mut tab = Tableau {
        m,
        cols,
        t: orig.clone(),
        beta: rhs.clone(),
        basis: unit_col.clone(),
        state,
        upper,
        d: vec![0.0; cols],
        orig,
        rhs,
        unit_col,
        pivots: 0,
    };
    let limit = 50 * (m + cols) + 1000;

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        tab.price(&phase1);
        match tab.run(limit) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return failed(n, LpStatus::IterationLimit),
            // phase one is bounded below by zero
            Outcome::Unbounded => return failed(n, LpStatus::Infeasible),
        }
        tab.refresh();
        let infeas: f64 = (first_artificial..cols).map(|j| tab.value(j)).sum();
        let scale = tab.rhs.iter().fold(1.0f64, |a, &h| a.max(h.abs()));
        if infeas > 1e-9 * scale {
            return failed(n, LpStatus::Infeasible);
        }
        for j in first_artificial..cols {
            tab.upper[j] = 0.0;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    tab.price(&cost);
    let outcome = tab.run(limit);
    tab.refresh();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => return failed(n, LpStatus::Unbounded),
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };

    let x: Vec<f64> = (0..n)
        .map(|j| {
            let v = lower[j] + tab.value(j).max(0.0);
            let hi = lp.bounds[j].1;
            v.min(hi)
        })
        .collect();
    LpSolution {
        objective_value: lp.objective_at(&x),
        x,
        status,
    }
}

fn failed(n: usize, status: LpStatus) -> LpSolution {
    LpSolution {
        x: vec![f64::NAN; n],
        objective_value: f64::NAN,
        status,
    }
}

impl Tableau {
    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            Bound::Lower => 0.0,
            Bound::Upper => self.upper[j],
            Bound::Basic => {
                let r = self
                    .basis
                    .iter()
                    .position(|&b| b == j)
                    .expect("basic column");
                self.beta[r]
            }
        }
    }

    /// Reduced costs `c - c_B^T T` for a fresh cost vector.
    fn price(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (d, &a) in self.d.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Recomputes basic values from `B^-1`, read off the initial unit columns.
    fn refresh(&mut self) {
        let mut h = self.rhs.clone();
        for j in 0..self.cols {
            if self.state[j] == Bound::Upper {
                let u = self.upper[j];
                for (i, hi) in h.iter_mut().enumerate() {
                    *hi -= self.orig[i * self.cols + j] * u;
                }
            }
        }
        for r in 0..self.m {
            let row = &self.t[r * self.cols..(r + 1) * self.cols];
            self.beta[r] = self
                .unit_col
                .iter()
                .zip(&h)
                .map(|(&c, &hv)| row[c] * hv)
                .sum();
        }
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            let score = match self.state[j] {
                Bound::Basic => continue,
                _ if self.upper[j] <= 0.0 => continue,
                Bound::Lower => -self.d[j],
                Bound::Upper => self.d[j],
            };
            if score > COST_TOL {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn run(&mut self, limit: usize) -> Outcome {
        let mut degenerate = 0usize;
        let mut iters = 0usize;
        loop {
            if iters >= limit {
                return Outcome::IterationLimit;
            }
            iters += 1;
            let bland = degenerate >= BLAND_AFTER;
            let Some(j) = self.entering(bland) else {
                return Outcome::Optimal;
            };
            let dir = if self.state[j] == Bound::Lower {
                1.0
            } else {
                -1.0
            };

            // ratio test
            let mut step = self.upper[j];
            let mut leave: Option<(usize, Bound)> = None;
            let mut leave_mag = 0.0;
            for i in 0..self.m {
                let a = dir * self.t[i * self.cols + j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit_i, to) = if a > 0.0 {
                    (self.beta[i].max(0.0) / a, Bound::Lower)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / -a, Bound::Upper)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit_i < step => true,
                    Some((r, _)) if limit_i == step => {
                        if bland {
                            b < self.basis[r]
                        } else {
                            a.abs() > leave_mag
                        }
                    }
                    _ => false,
                };
                if better {
                    step = limit_i;
                    leave = Some((i, to));
                    leave_mag = a.abs();
                }
            }
            if step.is_infinite() {
                return Outcome::Unbounded;
            }
            if step <= DEGENERATE_STEP {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for i in 0..self.m {
                let a = self.t[i * self.cols + j];
                if a != 0.0 {
                    self.beta[i] -= dir * step * a;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 {
                        Bound::Upper
                    } else {
                        Bound::Lower
                    };
                }
                Some((r, to)) => {
                    let start = if dir > 0.0 { 0.0 } else { self.upper[j] };
                    let out = self.basis[r];
                    self.state[out] = to;
                    self.state[j] = Bound::Basic;
                    self.basis[r] = j;
                    self.beta[r] = start + dir * step;
                    self.pivot(r, j);
                    self.pivots += 1;
                    if self.pivots.is_multiple_of(REFRESH_EVERY) {
                        self.refresh();
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        prow[j] = 1.0;
        let nz: Vec<usize> = (0..cols).filter(|&c| prow[c] != 0.0).collect();
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for &c in &nz {
                    row[c] -= f * prow[c];
                }
                row[j] = 0.0;
            }
        };
        before.chunks_exact_mut(cols).for_each(eliminate);
        after.chunks_exact_mut(cols).for_each(eliminate);
        let f = self.d[j];
        if f != 0.0 {
            for &c in &nz {
                self.d[c] -= f * prow[c];
            }
            self.d[j] = 0.0;
        }
    }
}
