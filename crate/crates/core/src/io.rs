//! Plain-text instance files.
//!
//! Single cycle:
//!
//! ```text
//! # N R N0 alpha beta epsilon S0
//! 3 1 1 1 0.2 0.34 0
//! 0.86 1.0
//! 1.72 2.0
//! 0.57 0.0
//! ```
//!
//! followed by one `gain arrival` line per slot. A multi-cycle file has the
//! header `Ncycles N K R N0 alpha beta` and `Ncycles * N` slot lines. `#`
//! starts a comment; blank lines are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Economics, Instance};
use crate::multicycle::MultiCycleInstance;

struct Line<'a> {
    number: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.number,
            message: message.into(),
        }
    }

    fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.fields.len() != n {
            return Err(self.err(format!(
                "expected {n} fields ({what}), found {}",
                self.fields.len()
            )));
        }
        Ok(())
    }

    fn number(&self, idx: usize, name: &str) -> Result<f64> {
        let raw = self.fields[idx];
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(format!("{name}: `{raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{name} must be finite")));
        }
        if v < 0.0 {
            return Err(self.err(format!("{name} must be non-negative, found {v}")));
        }
        Ok(v)
    }

    fn count(&self, idx: usize, name: &str) -> Result<usize> {
        let raw = self.fields[idx];
        raw.parse()
            .map_err(|_| self.err(format!("{name}: `{raw}` is not a non-negative integer")))
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some(Line {
            number: i + 1,
            fields,
        })
    })
}

fn economics(line: &Line, offset: usize) -> Result<Economics> {
    let econ = Economics {
        rate: line.number(offset, "R")?,
        noise: line.number(offset + 1, "N0")?,
        price_conv: line.number(offset + 2, "alpha")?,
        price_renew: line.number(offset + 3, "beta")?,
    };
    econ.validate().map_err(|e| line.err(e.to_string()))?;
    Ok(econ)
}

fn slots<'a>(
    lines: &mut impl Iterator<Item = Line<'a>>,
    n: usize,
    header_line: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut gains = Vec::with_capacity(n);
    let mut arrivals = Vec::with_capacity(n);
    let mut last = header_line;
    for k in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse {
            line: last + 1,
            message: format!("expected {n} slot lines, found {k}"),
        })?;
        line.expect_len(2, "gain arrival")?;
        let g = line.number(0, "gain")?;
        if g == 0.0 {
            return Err(line.err("gain must be positive"));
        }
        gains.push(g);
        arrivals.push(line.number(1, "arrival")?);
        last = line.number;
    }
    if let Some(extra) = lines.next() {
        return Err(extra.err(format!("unexpected data after {n} slot lines")));
    }
    Ok((gains, arrivals))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = content_lines(text);
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty instance file".into(),
    })?;
    header.expect_len(7, "N R N0 alpha beta epsilon S0")?;
    let n = header.count(0, "N")?;
    if n == 0 {
        return Err(header.err("N must be at least 1"));
    }
    let econ = economics(&header, 1)?;
    let epsilon = header.number(5, "epsilon")?;
    if epsilon >= 1.0 {
        return Err(header.err(format!("epsilon must lie in [0, 1), found {epsilon}")));
    }
    let storage = header.number(6, "S0")?;
    let (gains, arrivals) = slots(&mut lines, n, header.number)?;
    Instance::new(econ, gains, arrivals, storage, epsilon)
}

pub fn parse_multi_cycle(text: &str) -> Result<MultiCycleInstance> {
    let mut lines = content_lines(text);
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty instance file".into(),
    })?;
    header.expect_len(7, "Ncycles N K R N0 alpha beta")?;
    let cycles = header.count(0, "Ncycles")?;
    let n = header.count(1, "N")?;
    let k = header.count(2, "K")?;
    if cycles == 0 || n == 0 {
        return Err(header.err("Ncycles and N must be at least 1"));
    }
    if k > n {
        return Err(header.err(format!("K = {k} exceeds N = {n}")));
    }
    let econ = economics(&header, 3)?;
    let (gains, arrivals) = slots(&mut lines, cycles * n, header.number)?;
    MultiCycleInstance::new(econ, n, k, gains, arrivals)
}

fn push_econ(out: &mut String, econ: &Economics) {
    let _ = write!(
        out,
        " {} {} {} {}",
        econ.rate, econ.noise, econ.price_conv, econ.price_renew
    );
}

fn push_slots(out: &mut String, inst: &Instance) {
    for (g, t) in inst.gains().iter().zip(inst.arrivals()) {
        let _ = writeln!(out, "{g} {t}");
    }
}

/// Text that [`parse_instance`] reads back to an identical instance.
pub fn format_instance(inst: &Instance) -> String {
    let mut out = String::from("# N R N0 alpha beta epsilon S0\n");
    let _ = write!(out, "{}", inst.n_slots());
    push_econ(&mut out, inst.economics());
    let _ = writeln!(out, " {} {}", inst.epsilon(), inst.initial_storage());
    push_slots(&mut out, inst);
    out
}

pub fn format_multi_cycle(mci: &MultiCycleInstance) -> String {
    let mut out = String::from("# Ncycles N K R N0 alpha beta\n");
    let _ = write!(
        out,
        "{} {} {}",
        mci.cycles(),
        mci.slots_per_cycle(),
        mci.drops_per_cycle()
    );
    push_econ(&mut out, mci.flattened().economics());
    out.push('\n');
    push_slots(&mut out, mci.flattened());
    out
}
