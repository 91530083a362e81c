//! Minimum-cost transmit power schedules for a block-fading link that can
//! draw on cheap harvested energy and expensive conventional energy, subject
//! to a budget on the number of slots left in outage.

pub mod error;
pub mod exact;
pub mod greedy;
pub mod harness;
pub mod heuristics;
pub mod io;
pub mod lp;
pub mod model;
pub mod multicycle;
pub mod par;
pub mod partial;

pub use error::{Error, Result};
pub use greedy::{greedy_allocate, greedy_split, verify_greedy_kkt};
pub use model::{
    check_feasible, check_feasible_with_budget, drop_budget, outage_indicator, total_cost,
    Allocation, Certificate, DropSet, Economics, Instance, SolveResult, Violation,
};
pub use par::Execution;
