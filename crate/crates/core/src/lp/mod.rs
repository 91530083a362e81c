//! Linear programming: a general bounded-variable simplex solver and the
//! continuous relaxation of the drop-set problem built on top of it.

mod relaxation;
mod simplex;

use std::fmt;

pub use relaxation::{build_fixed_drop_program, build_relaxation, lower_bound, LowerBound};
pub(crate) use relaxation::{relaxation_program, solve_relaxation};

use crate::error::{Error, Result};

/// `row . x <= rhs`
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// Minimize `objective . x` subject to inequality rows and per-variable bounds.
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// All variables start with bounds `[0, inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.rows.push(Row { coeffs, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.bounds.len(),
            });
        }
        for row in &self.rows {
            if row.coeffs.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: row.coeffs.len(),
                });
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::InvalidInstance("non-finite constraint data".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("non-finite objective".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidInstance(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max(lhs - row.rhs);
        }
        for (v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Plain-text tableau dump, one row per constraint.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "min")?;
        for c in &self.objective {
            write!(f, " {c}")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            for a in &row.coeffs {
                write!(f, "{a} ")?;
            }
            writeln!(f, "<= {}", row.rhs)?;
        }
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            writeln!(f, "x{j} in [{lo}, {hi}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot budget ran out before optimality was established.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: LpStatus,
}

/// Solves `lp` with the bounded-variable two-phase simplex method.
///
/// Pricing is largest reduced cost with lowest-index tie breaking, falling back
/// to Bland's rule during long degenerate stretches, so the returned vertex is a
/// deterministic function of the input.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    Ok(simplex::solve(lp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_active_bound() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.set_bounds(0, 3.0, 10.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective_value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_vertex() {
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]);
        lp.add_row(vec![1.0, 1.0], 1.0);
        lp.set_bounds(0, 0.0, 1.0).set_bounds(1, 0.0, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.objective_value, -1.0, epsilon = 1e-12);
        assert!(lp.max_violation(&sol.x) < 1e-9);
    }

    #[test]
    fn empty_polytope() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![1.0], 0.0).add_row(vec![-1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_row(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn malformed_program_is_an_error() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_row(vec![1.0], 1.0);
        assert!(solve_lp(&lp).is_err());
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(solve_lp(&lp).is_err());
    }

    #[test]
    fn negative_lower_bounds_and_equality_pair() {
        // min x + 2y s.t. x + y = 1 (as two rows), x in [-5, 5], y in [-1, 3]
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_row(vec![1.0, 1.0], 1.0)
            .add_row(vec![-1.0, -1.0], -1.0);
        lp.set_bounds(0, -5.0, 5.0).set_bounds(1, -1.0, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // y at its lower bound, x = 2
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective_value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn display_dumps_rows() {
        let mut lp = LinearProgram::new(vec![1.0, 0.5]);
        lp.add_row(vec![1.0, -1.0], 2.0);
        let s = lp.to_string();
        assert!(s.starts_with("min 1 0.5\n1 -1 <= 2\n"));
    }
}
