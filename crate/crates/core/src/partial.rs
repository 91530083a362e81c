//! Scheduling with only the fading statistics known in advance.
//!
//! Without future gains the transmitter cannot pick which slots to drop, so
//! it fixes one power level that meets the rate unless the gain falls below
//! its `eps`-quantile, and serves that power greedily from storage.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::greedy::greedy_split;
use crate::model::{Allocation, Economics};

const BRACKET_LOW: f64 = 1e-12;
const BRACKET_SPAN: f64 = 1e6;
const QUANTILE_TOL: f64 = 1e-10;

/// Law of the channel power gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelDistribution {
    /// Rayleigh fading.
    Exponential { mean: f64 },
    /// Nakagami-`m` fading: gamma with shape `m` and scale `mean / m`.
    Nakagami { m: f64, mean: f64 },
    /// Log-normal shadowing; `sigma2` is the variance of the log-gain, and
    /// the location is chosen so the gain has the given mean.
    LogNormal { sigma2: f64, mean: f64 },
}

impl ChannelDistribution {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = match *self {
            Self::Exponential { mean } => positive(mean),
            Self::Nakagami { m, mean } => positive(m) && positive(mean),
            Self::LogNormal { sigma2, mean } => positive(sigma2) && positive(mean),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!(
                "{self}: parameters must be positive"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { mean }
            | Self::Nakagami { mean, .. }
            | Self::LogNormal { mean, .. } => mean,
        }
    }

    fn log_location(sigma2: f64, mean: f64) -> f64 {
        mean.ln() - sigma2 / 2.0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { mean } => -(-x / mean).exp_m1(),
            Self::Nakagami { m, mean } => gamma_lr(m, x * m / mean),
            Self::LogNormal { sigma2, mean } => {
                let z = (x.ln() - Self::log_location(sigma2, mean)) / (2.0 * sigma2).sqrt();
                0.5 * erfc(-z)
            }
        }
    }

    /// Gain below which the channel falls with probability `eps`.
    ///
    /// Closed form for the exponential law; bisection on
    /// `[1e-12, 1e6 * mean]` otherwise.
    pub fn quantile(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEpsilon(eps));
        }
        self.validate()?;
        if let Self::Exponential { mean } = *self {
            return Ok(-mean * (-eps).ln_1p());
        }
        let (mut lo, mut hi) = (BRACKET_LOW, BRACKET_SPAN * self.mean());
        while hi - lo > QUANTILE_TOL * lo.max(1e-3) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { mean } => Exp::new(1.0 / mean).expect("validated rate").sample(rng),
            Self::Nakagami { m, mean } => Gamma::new(m, mean / m)
                .expect("validated shape")
                .sample(rng),
            Self::LogNormal { sigma2, mean } => {
                LogNormal::new(Self::log_location(sigma2, mean), sigma2.sqrt())
                    .expect("validated spread")
                    .sample(rng)
            }
        }
    }
}

impl fmt::Display for ChannelDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { mean } => write!(f, "exp:mean={mean}"),
            Self::Nakagami { m, mean } => write!(f, "nakagami:m={m},mean={mean}"),
            Self::LogNormal { sigma2, mean } => write!(f, "lognormal:sigma2={sigma2},mean={mean}"),
        }
    }
}

/// Parses `exp:mean=1`, `nakagami:m=2,mean=1` or `lognormal:sigma2=1,mean=1`.
/// `mean` defaults to 1.
impl FromStr for ChannelDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidDistribution(msg);
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut mean = 1.0;
        let mut shape = None;
        let mut sigma2 = None;
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, found `{pair}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{value}` is not a number")))?;
            match key.trim() {
                "mean" => mean = value,
                "m" => shape = Some(value),
                "sigma2" => sigma2 = Some(value),
                other => return Err(bad(format!("unknown parameter `{other}`"))),
            }
        }
        let dist = match kind.trim() {
            "exp" | "exponential" | "rayleigh" if shape.is_none() && sigma2.is_none() => {
                Self::Exponential { mean }
            }
            "nakagami" | "gamma" if sigma2.is_none() => Self::Nakagami {
                m: shape.ok_or_else(|| bad("nakagami needs m".into()))?,
                mean,
            },
            "lognormal" if shape.is_none() => Self::LogNormal {
                sigma2: sigma2.ok_or_else(|| bad("lognormal needs sigma2".into()))?,
                mean,
            },
            _ => return Err(bad(format!("unrecognised distribution `{s}`"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialCesiSchedule {
    /// Power used in every slot.
    pub power: f64,
    pub allocation: Allocation,
    pub total_cost: f64,
}

/// Fixed power `noise (e^rate - 1) / F^{-1}(eps)` in every slot, served from
/// harvested energy first. Slot `k` depends only on arrivals up to `k`.
pub fn allocate_partial_cesi(
    dist: &ChannelDistribution,
    econ: &Economics,
    eps: f64,
    arrivals: &[f64],
    initial_storage: f64,
) -> Result<PartialCesiSchedule> {
    econ.validate()?;
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
    let power = econ.inversion_power(dist.quantile(eps)?);
    let demands = vec![power; arrivals.len()];
    let allocation = greedy_split(&demands, arrivals, initial_storage);
    let total_cost = allocation
        .conv
        .iter()
        .zip(&allocation.renew)
        .fold(0.0, |acc, (c, r)| {
            acc + econ.price_conv * c + econ.price_renew * r
        });
    Ok(PartialCesiSchedule {
        power,
        allocation,
        total_cost,
    })
}
