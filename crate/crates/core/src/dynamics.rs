//! `m` and `M` iterated as maps on log radii: `lr -> log m(e^lr)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::sample_grid;
use crate::logdomain::{LogRadius, LogValue};
use crate::modulus::{m_tilde, ArgMax, ScanSettings};
use crate::product::{EntireProductFunction, EvalSettings};

/// `log 10^12`.
pub const DEFAULT_ESCAPE_LOG: f64 = 12.0 * std::f64::consts::LN_10;
const FIXED_POINT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Escaped,
    /// Certified by `m~(R) <= R` at the largest radius the orbit visited.
    Trapped,
    HitZero,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub start: LogRadius,
    /// `log` of each image; the start itself is not repeated.
    pub steps: Vec<LogValue>,
    pub verdict: Verdict,
    pub map_kind: MapKind,
    pub escape_log_threshold: f64,
}

impl OrbitRecord {
    /// Largest log radius on the orbit, start included.
    pub fn max_log_radius(&self) -> f64 {
        self.steps.iter().map(|v| v.as_f64()).fold(self.start.get(), f64::max)
    }
}

/// Default escape threshold capped by the evaluable range of `f`.
pub fn escape_threshold(f: &EntireProductFunction, settings: &EvalSettings) -> f64 {
    DEFAULT_ESCAPE_LOG.min(f.max_evaluable_lr(settings))
}

pub fn iterate_modulus(
    f: &EntireProductFunction,
    start: LogRadius,
    map_kind: MapKind,
    max_iter: usize,
    escape_log_threshold: f64,
    scan: &ScanSettings,
    settings: &EvalSettings,
) -> Result<OrbitRecord> {
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be positive".into()));
    }
    let limit = f.max_evaluable_lr(settings);
    if !(escape_log_threshold <= limit) {
        return Err(Error::InvalidInput(format!(
            "escape threshold {escape_log_threshold} beyond evaluable range {limit}"
        )));
    }
    let mut record = OrbitRecord { start, steps: Vec::new(), verdict: Verdict::Undecided, map_kind, escape_log_threshold };
    let mut cur = start.get();
    if cur >= escape_log_threshold {
        return Err(Error::InvalidInput(format!("start {cur} already beyond the escape threshold")));
    }
    for _ in 0..max_iter {
        let lr = LogRadius::new(cur)?;
        let v = match map_kind {
            MapKind::Min => f.log_min_modulus(lr, settings)?,
            MapKind::Max => f.log_max_modulus(lr, settings)?,
        };
        record.steps.push(v);
        let Some(next) = v.finite() else {
            record.verdict = Verdict::HitZero;
            return Ok(record);
        };
        if next >= escape_log_threshold {
            record.verdict = Verdict::Escaped;
            return Ok(record);
        }
        if (next - cur).abs() <= FIXED_POINT_TOL * (1.0 + cur.abs()) {
            break;
        }
        cur = next;
    }
    let top = LogRadius::new(record.max_log_radius())?;
    if map_kind == MapKind::Min && trap_check(f, top, scan, settings)? {
        record.verdict = Verdict::Trapped;
    }
    Ok(record)
}

/// `m~(r) <= r`: every MIN orbit started at or below `r` stays at or below `r`.
pub fn trap_check(f: &EntireProductFunction, lr: LogRadius, scan: &ScanSettings, settings: &EvalSettings) -> Result<bool> {
    Ok(m_tilde(f, lr, scan, settings)?.log_value <= LogValue::Finite(lr.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeScan {
    pub records: Vec<(LogRadius, OrbitRecord)>,
    pub any_escaped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSettings {
    pub max_iter: usize,
    /// `None` selects [`escape_threshold`].
    pub escape_log_threshold: Option<f64>,
    /// Grid density for choosing start radii.
    pub starts_per_decade: u32,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        OrbitSettings { max_iter: 50, escape_log_threshold: None, starts_per_decade: 4 }
    }
}

/// MIN-map orbits started from the `m~` maximizers of a log grid on
/// `[lr_min, lr_max]`. An `Origin` maximizer starts the orbit at `log c`,
/// the image of `s -> 0+`.
pub fn scan_escape_candidates(
    f: &EntireProductFunction,
    lr_min: LogRadius,
    lr_max: LogRadius,
    orbit: &OrbitSettings,
    scan: &ScanSettings,
    settings: &EvalSettings,
) -> Result<EscapeScan> {
    if !(lr_min < lr_max) {
        return Err(Error::InvalidInput("scan needs lr_min < lr_max".into()));
    }
    let threshold = orbit.escape_log_threshold.unwrap_or_else(|| escape_threshold(f, settings));
    let mut starts: Vec<f64> = Vec::new();
    for x in sample_grid(lr_min.get(), lr_max.get(), orbit.starts_per_decade) {
        let mt = m_tilde(f, LogRadius::new(x)?, scan, settings)?;
        let s = match mt.argmax {
            ArgMax::Origin => f.log_c,
            ArgMax::At(lr) => lr.get(),
        };
        if s < threshold && !starts.iter().any(|&t| (t - s).abs() <= 1e-9 * (1.0 + s.abs())) {
            starts.push(s);
        }
    }
    let mut records = Vec::with_capacity(starts.len());
    for s in starts {
        let lr = LogRadius::new(s)?;
        let rec = iterate_modulus(f, lr, MapKind::Min, orbit.max_iter, threshold, scan, settings)?;
        records.push((lr, rec));
    }
    let any_escaped = records.iter().any(|(_, r)| r.verdict == Verdict::Escaped);
    Ok(EscapeScan { records, any_escaped })
}
