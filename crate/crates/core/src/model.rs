//! Problem data and the evaluation primitives shared by every solver.
//!
//! Slot indices are zero-based throughout the library API. Anything that is
//! printed for people (drop sets, violation reports, CLI output) is one-based.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for feasibility comparisons, scaled by magnitude where
/// sums of large powers are involved.
pub const FEAS_TOL: f64 = 1e-9;

/// Relative tolerance used when two costs are said to be equal.
pub const COST_TOL: f64 = 1e-7;

/// Tolerance appropriate for a comparison between quantities of size `scale`.
#[inline]
pub fn scaled_tol(scale: f64) -> f64 {
    FEAS_TOL * scale.abs().max(1.0)
}

/// `a` and `b` agree to [`COST_TOL`], relative to the larger of the two (and
/// absolute below 1).
pub fn costs_agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Link and tariff parameters common to all slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Economics {
    /// Target rate in nats per channel use.
    pub rate: f64,
    /// Receiver noise power.
    pub noise: f64,
    /// Price per unit of conventional energy.
    pub price_conv: f64,
    /// Price per unit of harvested energy.
    pub price_renew: f64,
}

impl Default for Economics {
    fn default() -> Self {
        Self {
            rate: 1.0,
            noise: 1.0,
            price_conv: 1.0,
            price_renew: 0.2,
        }
    }
}

impl Economics {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInstance(what.to_string()));
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return bad("rate must be finite and non-negative");
        }
        if !(self.noise.is_finite() && self.noise > 0.0) {
            return bad("noise power must be finite and positive");
        }
        if !(self.price_renew.is_finite() && self.price_renew > 0.0) {
            return bad("renewable price must be finite and positive");
        }
        if !(self.price_conv.is_finite() && self.price_conv > self.price_renew) {
            return bad("conventional price must exceed renewable price");
        }
        Ok(())
    }

    /// Power that meets the target rate on a channel with power gain `gain`.
    #[inline]
    pub fn inversion_power(&self, gain: f64) -> f64 {
        self.noise * self.rate.exp_m1() / gain
    }

    /// Marginal saving of one unit of harvested energy over conventional.
    #[inline]
    pub fn price_gap(&self) -> f64 {
        self.price_conv - self.price_renew
    }
}

/// Largest number of slots that may be in outage, `floor(n * epsilon)`.
///
/// Products that are integers up to rounding error (`200 * 0.3`) are snapped
/// before flooring so they do not lose a unit.
pub fn drop_budget(n_slots: usize, epsilon: f64) -> usize {
    let product = n_slots as f64 * epsilon;
    let nearest = product.round();
    let m = if (product - nearest).abs() <= 1e-9 {
        nearest
    } else {
        product.floor()
    };
    (m.max(0.0) as usize).min(n_slots)
}

/// One single-cycle optimization problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    econ: Economics,
    gains: Vec<f64>,
    arrivals: Vec<f64>,
    initial_storage: f64,
    epsilon: f64,
    p_inv: Vec<f64>,
}

impl Instance {
    pub fn new(
        econ: Economics,
        gains: Vec<f64>,
        arrivals: Vec<f64>,
        initial_storage: f64,
        epsilon: f64,
    ) -> Result<Self> {
        econ.validate()?;
        if gains.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one slot is required".into(),
            ));
        }
        if gains.len() != arrivals.len() {
            return Err(Error::LengthMismatch {
                expected: gains.len(),
                found: arrivals.len(),
            });
        }
        if let Some(i) = gains.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidInstance(format!(
                "gain of slot {} must be finite and positive",
                i + 1
            )));
        }
        if let Some(i) = arrivals.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidInstance(format!(
                "arrival of slot {} must be finite and non-negative",
                i + 1
            )));
        }
        if !(initial_storage.is_finite() && initial_storage >= 0.0) {
            return Err(Error::InvalidInstance(
                "initial storage must be finite and non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidInstance(format!(
                "outage fraction {epsilon} must lie in [0, 1)"
            )));
        }
        let p_inv = gains.iter().map(|&g| econ.inversion_power(g)).collect();
        Ok(Self {
            econ,
            gains,
            arrivals,
            initial_storage,
            epsilon,
            p_inv,
        })
    }

    /// Builds an instance directly from channel inversion powers, inverting
    /// `p = noise (e^rate - 1) / g` for the gains. Requires `rate > 0`.
    pub fn from_inversion_powers(
        econ: Economics,
        p_inv: &[f64],
        arrivals: Vec<f64>,
        initial_storage: f64,
    ) -> Result<Self> {
        if econ.rate <= 0.0 {
            return Err(Error::InvalidInstance(
                "inversion powers only determine gains for a positive rate".into(),
            ));
        }
        let scale = econ.noise * econ.rate.exp_m1();
        let gains = p_inv.iter().map(|p| scale / p).collect();
        let mut inst = Self::new(econ, gains, arrivals, initial_storage, 0.0)?;
        // keep the caller's values rather than the round-tripped ones
        inst.p_inv.copy_from_slice(p_inv);
        Ok(inst)
    }

    pub fn n_slots(&self) -> usize {
        self.gains.len()
    }

    pub fn economics(&self) -> &Economics {
        &self.econ
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn initial_storage(&self) -> f64 {
        self.initial_storage
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Channel inversion power of every slot.
    pub fn inversion_powers(&self) -> &[f64] {
        &self.p_inv
    }

    pub fn channel_inversion_power(&self, slot: usize) -> Result<f64> {
        self.p_inv.get(slot).copied().ok_or(Error::IndexOutOfRange {
            index: slot,
            n_slots: self.n_slots(),
        })
    }

    /// Drop budget implied by the instance's outage fraction.
    pub fn drop_budget(&self) -> usize {
        drop_budget(self.n_slots(), self.epsilon)
    }

    /// Total harvested energy available over the horizon, storage included.
    pub fn total_energy(&self) -> f64 {
        self.initial_storage + self.arrivals.iter().sum::<f64>()
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidInstance(format!(
                "outage fraction {epsilon} must lie in [0, 1)"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Sets the outage fraction so that the drop budget is exactly `m`.
    /// `m == n_slots` is not representable as a fraction below one.
    pub fn with_drop_count(self, m: usize) -> Result<Self> {
        let n = self.n_slots();
        if m >= n {
            return Err(Error::DropCountOutOfRange {
                drops: m,
                n_slots: n,
            });
        }
        self.with_epsilon(m as f64 / n as f64)
    }

    pub fn with_initial_storage(mut self, storage: f64) -> Result<Self> {
        if !(storage.is_finite() && storage >= 0.0) {
            return Err(Error::InvalidInstance(
                "initial storage must be finite and non-negative".into(),
            ));
        }
        self.initial_storage = storage;
        Ok(self)
    }

    pub(crate) fn check_drop_count(&self, m: usize) -> Result<()> {
        if m > self.n_slots() {
            return Err(Error::DropCountOutOfRange {
                drops: m,
                n_slots: self.n_slots(),
            });
        }
        Ok(())
    }
}

/// Per-slot conventional and harvested power.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Allocation {
    pub conv: Vec<f64>,
    pub renew: Vec<f64>,
}

impl Allocation {
    pub fn zeros(n_slots: usize) -> Self {
        Self {
            conv: vec![0.0; n_slots],
            renew: vec![0.0; n_slots],
        }
    }

    pub fn len(&self) -> usize {
        self.conv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conv.is_empty()
    }

    pub fn power(&self, slot: usize) -> f64 {
        self.conv[slot] + self.renew[slot]
    }

    fn check_len(&self, n_slots: usize) -> Result<()> {
        for found in [self.conv.len(), self.renew.len()] {
            if found != n_slots {
                return Err(Error::LengthMismatch {
                    expected: n_slots,
                    found,
                });
            }
        }
        Ok(())
    }
}

/// Set of slots left in outage, kept sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DropSet(Vec<usize>);

impl DropSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new<I: IntoIterator<Item = usize>>(slots: I) -> Self {
        let mut v: Vec<usize> = slots.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// From one-based slot numbers; zero is rejected.
    pub fn from_one_based<I: IntoIterator<Item = usize>>(slots: I) -> Result<Self> {
        let mut v = Vec::new();
        for s in slots {
            if s == 0 {
                return Err(Error::IndexOutOfRange {
                    index: 0,
                    n_slots: 0,
                });
            }
            v.push(s - 1);
        }
        Ok(Self::new(v))
    }

    pub fn slots(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.0.binary_search(&slot).is_ok()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    /// Dense membership mask; errors if a slot is out of range.
    pub fn mask(&self, n_slots: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; n_slots];
        for &s in &self.0 {
            *mask
                .get_mut(s)
                .ok_or(Error::IndexOutOfRange { index: s, n_slots })? = true;
        }
        Ok(mask)
    }
}

impl fmt::Display for DropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", s + 1)?;
        }
        f.write_str("}")
    }
}

/// Why a solution is known to be optimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Every admissible drop set (or every one surviving sound pruning) was evaluated.
    Exhaustive,
    /// All harvested energy is consumed by the worst-channel-removal schedule.
    FullRenewableUse,
    /// The worst-channel-removal schedule draws no conventional energy.
    NoConventional,
    /// Gains never decrease over time.
    NonDecreasingChannel,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Certificate::Exhaustive => "exhaustive",
            Certificate::FullRenewableUse => "full-renewable-use",
            Certificate::NoConventional => "no-conventional",
            Certificate::NonDecreasingChannel => "non-decreasing-channel",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub drop_set: DropSet,
    pub allocation: Allocation,
    pub total_cost: f64,
    pub candidates_examined: usize,
    pub certificate: Option<Certificate>,
}

/// 1 when slot `slot` misses the target rate under `alloc`.
pub fn outage_indicator(inst: &Instance, alloc: &Allocation, slot: usize) -> Result<bool> {
    alloc.check_len(inst.n_slots())?;
    let p_inv = inst.channel_inversion_power(slot)?;
    Ok(alloc.power(slot) < p_inv - FEAS_TOL)
}

pub fn total_cost(inst: &Instance, alloc: &Allocation) -> Result<f64> {
    alloc.check_len(inst.n_slots())?;
    let econ = inst.economics();
    let mut cost = 0.0;
    for (c, r) in alloc.conv.iter().zip(&alloc.renew) {
        cost += econ.price_conv * c + econ.price_renew * r;
    }
    Ok(cost)
}

/// A constraint that an allocation breaks. Slot numbers are one-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NegativeConventional {
        slot: usize,
        value: f64,
    },
    NegativeRenewable {
        slot: usize,
        value: f64,
    },
    /// Harvested energy drawn through `slot` exceeds what has arrived by then.
    PrefixHarvest {
        slot: usize,
        excess: f64,
    },
    OutageBudget {
        outages: usize,
        budget: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeConventional { slot, value } => {
                write!(f, "slot {slot}: conventional power {value} is negative")
            }
            Violation::NegativeRenewable { slot, value } => {
                write!(f, "slot {slot}: renewable power {value} is negative")
            }
            Violation::PrefixHarvest { slot, excess } => write!(
                f,
                "slot {slot}: prefix energy-harvesting constraint exceeded by {excess}"
            ),
            Violation::OutageBudget { outages, budget } => {
                write!(f, "{outages} slots in outage, budget is {budget}")
            }
        }
    }
}

/// Empty when `alloc` is feasible for the instance's own outage budget.
pub fn check_feasible(inst: &Instance, alloc: &Allocation) -> Result<Vec<Violation>> {
    check_feasible_with_budget(inst, alloc, inst.drop_budget())
}

pub fn check_feasible_with_budget(
    inst: &Instance,
    alloc: &Allocation,
    budget: usize,
) -> Result<Vec<Violation>> {
    let n = inst.n_slots();
    alloc.check_len(n)?;
    let mut violations = Vec::new();
    let mut harvested = inst.initial_storage();
    let mut drawn = 0.0;
    let mut outages = 0;
    for k in 0..n {
        let (c, r) = (alloc.conv[k], alloc.renew[k]);
        if c < -FEAS_TOL {
            violations.push(Violation::NegativeConventional {
                slot: k + 1,
                value: c,
            });
        }
        if r < -FEAS_TOL {
            violations.push(Violation::NegativeRenewable {
                slot: k + 1,
                value: r,
            });
        }
        harvested += inst.arrivals()[k];
        drawn += r;
        if drawn - harvested > scaled_tol(harvested) {
            violations.push(Violation::PrefixHarvest {
                slot: k + 1,
                excess: drawn - harvested,
            });
        }
        if c + r < inst.inversion_powers()[k] - FEAS_TOL {
            outages += 1;
        }
    }
    if outages > budget {
        violations.push(Violation::OutageBudget { outages, budget });
    }
    Ok(violations)
}
