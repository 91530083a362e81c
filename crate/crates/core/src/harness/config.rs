use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Economics;
use crate::partial::ChannelDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    SearchCount,
    CostVsDrops,
    GapToBound,
    MulticycleGap,
    PartialCesi,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::SearchCount => "search-count",
            Self::CostVsDrops => "cost-vs-drops",
            Self::GapToBound => "gap-to-bound",
            Self::MulticycleGap => "multicycle-gap",
            Self::PartialCesi => "partial-cesi",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::SearchCount,
            Self::CostVsDrops,
            Self::GapToBound,
            Self::MulticycleGap,
            Self::PartialCesi,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three fading laws of the simulations, all with unit mean gain.
pub fn standard_families() -> Vec<ChannelDistribution> {
    vec![
        ChannelDistribution::Exponential { mean: 1.0 },
        ChannelDistribution::Nakagami { m: 2.0, mean: 1.0 },
        ChannelDistribution::LogNormal {
            sigma2: 1.0,
            mean: 1.0,
        },
    ]
}

/// Everything an experiment run depends on.
///
/// Parsed from flat `key = value` text. List values are comma separated,
/// except `fading`, whose entries are separated by `;`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Slot counts; a grid for search-count, per cycle for multicycle-gap.
    pub n_slots: Vec<usize>,
    pub realizations: usize,
    pub seed: u64,
    pub fading: Vec<ChannelDistribution>,
    /// Upper ends `b` of the uniform arrival law `U(0, b)`.
    pub arrival_high: Vec<f64>,
    pub economics: Economics,
    /// Drop counts; per cycle for multicycle-gap.
    pub drops: Vec<usize>,
    pub cycles: usize,
    pub eps: Vec<f64>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let (n_slots, drops, arrival_high, fading, cycles) = match experiment {
            Experiment::SearchCount => (
                (1..=10).map(|i| 20 * i).collect(),
                Vec::new(),
                vec![1.0],
                standard_families(),
                1,
            ),
            Experiment::CostVsDrops | Experiment::GapToBound => (
                vec![200],
                (1..=9).map(|i| 20 * i).collect(),
                vec![1.0],
                vec![ChannelDistribution::Exponential { mean: 1.0 }],
                1,
            ),
            Experiment::MulticycleGap => (
                vec![50],
                (1..=9).map(|i| 5 * i).collect(),
                vec![1.0],
                vec![ChannelDistribution::Exponential { mean: 1.0 }],
                4,
            ),
            Experiment::PartialCesi => (
                vec![50],
                Vec::new(),
                vec![10.0, 50.0],
                vec![ChannelDistribution::Exponential { mean: 1.0 }],
                1,
            ),
        };
        Self {
            experiment,
            n_slots,
            realizations: 100,
            seed: 1,
            fading,
            arrival_high,
            economics: Economics::default(),
            drops,
            cycles,
            eps: (1..=10).map(|i| i as f64 * 0.05).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let experiment = pairs
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .ok_or_else(|| Error::Config("missing `experiment`".into()))?
            .2
            .parse()?;
        let mut cfg = Self::defaults(experiment);
        for (line, key, value) in &pairs {
            let ctx = |e: Error| Error::Config(format!("line {line}: {key}: {e}"));
            match key.as_str() {
                "experiment" => {}
                "n_slots" => cfg.n_slots = list(value).map_err(ctx)?,
                "realizations" => cfg.realizations = scalar(value).map_err(ctx)?,
                "seed" => cfg.seed = scalar(value).map_err(ctx)?,
                "fading" => {
                    cfg.fading = value
                        .split(';')
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()
                        .map_err(ctx)?
                }
                "arrival_high" => cfg.arrival_high = list(value).map_err(ctx)?,
                "rate" => cfg.economics.rate = scalar(value).map_err(ctx)?,
                "noise" => cfg.economics.noise = scalar(value).map_err(ctx)?,
                "alpha" => cfg.economics.price_conv = scalar(value).map_err(ctx)?,
                "beta" => cfg.economics.price_renew = scalar(value).map_err(ctx)?,
                "drops" => cfg.drops = list(value).map_err(ctx)?,
                "cycles" => cfg.cycles = scalar(value).map_err(ctx)?,
                "eps" => cfg.eps = list(value).map_err(ctx)?,
                other => return Err(Error::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.economics.validate()?;
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.n_slots.is_empty() || self.fading.is_empty() || self.arrival_high.is_empty() {
            return bad("n_slots, fading and arrival_high need at least one value".into());
        }
        if let Some(&n) = self.n_slots.iter().find(|&&n| n < 2) {
            return bad(format!("n_slots = {n} leaves no droppable configuration"));
        }
        if let Some(b) = self
            .arrival_high
            .iter()
            .find(|b| !(b.is_finite() && **b >= 0.0))
        {
            return bad(format!("arrival_high = {b} must be non-negative"));
        }
        for d in &self.fading {
            d.validate()?;
        }
        match self.experiment {
            Experiment::CostVsDrops | Experiment::GapToBound | Experiment::MulticycleGap => {
                if self.n_slots.len() != 1 {
                    return bad("this experiment takes a single n_slots value".into());
                }
                let n = self.n_slots[0];
                if let Some(m) = self.drops.iter().find(|&&m| m > n) {
                    return bad(format!("drop count {m} exceeds {n} slots"));
                }
                if self.drops.is_empty() {
                    return bad("drops needs at least one value".into());
                }
                if self.cycles == 0 {
                    return bad("cycles must be at least 1".into());
                }
            }
            Experiment::PartialCesi => {
                if self.eps.is_empty() {
                    return bad("eps needs at least one value".into());
                }
                if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                    return Err(Error::InvalidEpsilon(*e));
                }
            }
            Experiment::SearchCount => {}
        }
        Ok(())
    }

    /// Canonical text form: parses back to the same config, and is what the
    /// config hash is taken over.
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>, sep: &str| v.join(sep);
        let mut out = String::new();
        let _ = writeln!(out, "experiment = {}", self.experiment);
        let _ = writeln!(
            out,
            "n_slots = {}",
            join(self.n_slots.iter().map(|n| n.to_string()).collect(), ",")
        );
        let _ = writeln!(out, "realizations = {}", self.realizations);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(
            out,
            "fading = {}",
            join(self.fading.iter().map(|d| d.to_string()).collect(), "; ")
        );
        let _ = writeln!(
            out,
            "arrival_high = {}",
            join(
                self.arrival_high.iter().map(|b| b.to_string()).collect(),
                ","
            )
        );
        let e = &self.economics;
        let _ = writeln!(
            out,
            "rate = {}\nnoise = {}\nalpha = {}\nbeta = {}",
            e.rate, e.noise, e.price_conv, e.price_renew
        );
        let _ = writeln!(
            out,
            "drops = {}",
            join(self.drops.iter().map(|m| m.to_string()).collect(), ",")
        );
        let _ = writeln!(out, "cycles = {}", self.cycles);
        let _ = writeln!(
            out,
            "eps = {}",
            join(self.eps.iter().map(|x| x.to_string()).collect(), ",")
        );
        out
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().fold(
            String::with_capacity(64),
            |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            },
        )
    }
}

fn scalar<T: FromStr>(v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{v}` is not a valid value")))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(scalar)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nexperiment = cost-vs-drops\nrealizations = 7\ndrops = 20, 40\nseed=9\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::CostVsDrops);
        assert_eq!(cfg.realizations, 7);
        assert_eq!(cfg.drops, vec![20, 40]);
        assert_eq!(cfg.n_slots, vec![200]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn canonical_form_round_trips() {
        for e in [
            "search-count",
            "cost-vs-drops",
            "gap-to-bound",
            "multicycle-gap",
            "partial-cesi",
        ] {
            let cfg = ExperimentConfig::parse(&format!("experiment = {e}")).unwrap();
            let again = ExperimentConfig::parse(&cfg.canonical()).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.sha256(), cfg.sha256());
        }
    }

    #[test]
    fn fading_list_uses_semicolons() {
        let cfg = ExperimentConfig::parse(
            "experiment = search-count\nfading = exp:mean=1; nakagami:m=2,mean=1",
        )
        .unwrap();
        assert_eq!(cfg.fading.len(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "realizations = 3",
            "experiment = fig9",
            "experiment = search-count\nn_slots = 1",
            "experiment = cost-vs-drops\ndrops = 300",
            "experiment = partial-cesi\neps = 0.1, 1.0",
            "experiment = search-count\nrealizations = 0",
            "experiment = search-count\ncolour = blue",
            "experiment = search-count\nseed",
            "experiment = search-count\nalpha = 0.1",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_ignores_layout() {
        let a = ExperimentConfig::parse("experiment = gap-to-bound\nseed = 3").unwrap();
        let b = ExperimentConfig::parse("seed=3\n\n  experiment=gap-to-bound # note").unwrap();
        assert_eq!(a.sha256(), b.sha256());
        let c = ExperimentConfig::parse("experiment = gap-to-bound\nseed = 4").unwrap();
        assert_ne!(a.sha256(), c.sha256());
    }
}
