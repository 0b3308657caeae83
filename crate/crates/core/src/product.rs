//! Canonical products `f(z) = c * prod (1 + z/t_n)` over negative real zeros
//! `-t_n`, evaluated as `log|f|` entirely in log coordinates.
//!
//! Zeros with `t_n` below a cutoff are summed term by term in ascending order.
//! Infinite sequences switch to quadrature against the counting measure above
//! the cutoff; continuous counting laws are integrated throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logdomain::{log_abs_factor, Angle, LogRadius, LogValue};
use crate::quadrature::{integrate_panels, QuadSettings};

/// Zeros with `log t > log r + CUTOFF_GAP` go to the tail (so `r/t <= e^-3`).
const CUTOFF_GAP: f64 = 3.0;
/// Minimum number of explicitly summed terms of an infinite sequence before
/// the Euler-Maclaurin tail takes over.
const MIN_EXPLICIT_TERMS: f64 = 1000.0;
/// Relative slack when deciding whether a zero lies at or below a radius.
const COINCIDENCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub rel_tolerance: f64,
    pub max_terms: u64,
    /// Log-distance below which `r` is treated as sitting on a zero.
    pub singularity_exclusion: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { rel_tolerance: 1e-9, max_terms: 10_000_000, singularity_exclusion: (-12f64).exp() }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::InvalidInput(format!("rel_tolerance {} not in (0, 1)", self.rel_tolerance)));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidInput("max_terms must be positive".into()));
        }
        if !(self.singularity_exclusion > 0.0) {
            return Err(Error::InvalidInput("singularity_exclusion must be positive".into()));
        }
        Ok(())
    }
}

/// A zero at `-e^{log_t}` with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub log_t: f64,
    pub multiplicity: u32,
}

/// A band `[e^{log_a}, e^{log_b}]` on the (reflected) negative axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub log_a: f64,
    pub log_b: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.log_b - self.log_a
    }
}

/// A continuous counting function `n(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CountingLaw {
    /// `n(t) = scale * t^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `counts[j]` zeros spread uniformly in `log t` over `bands[j]`.
    Bands { bands: Vec<Band>, counts: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZeroDistribution {
    /// Finite ascending list.
    Explicit { zeros: Vec<Zero> },
    /// `t_n = n^exponent` for `n = 1, 2, ...`.
    PowerSequence { exponent: f64 },
    /// `counts[j]` zeros in band `j` at `log t = log_a + (i + 1/2) * width / count`.
    BandUniformLog { bands: Vec<Band>, counts: Vec<u64> },
    AnalyticCounting(CountingLaw),
}

/// How the zeros in a window are laid out, for scans that refine per gap.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroLayout {
    /// Ascending distinct `log t` values inside the window.
    Discrete(Vec<f64>),
    /// More zeros in the window than the caller's limit.
    TooMany,
    /// Continuous counting measure; `m` has no zeros.
    Continuous,
}

fn bands_valid(bands: &[Band]) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for b in bands {
        if !(b.log_a.is_finite() && b.log_b.is_finite() && b.log_a < b.log_b && b.log_a > prev) {
            return Err(Error::InvalidInput(format!("bands must be ascending and disjoint, got {b:?}")));
        }
        prev = b.log_b;
    }
    Ok(())
}

impl ZeroDistribution {
    /// Explicit zeros from raw positive values; repeats merge into multiplicities.
    pub fn explicit(values: &[f64]) -> Result<Self> {
        let mut logs = Vec::with_capacity(values.len());
        for &t in values {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!("zero {t} is not a positive finite real")));
            }
            logs.push(t.ln());
        }
        Self::explicit_logs(&logs)
    }

    /// Explicit zeros from `log t` values (any order; repeats merge).
    pub fn explicit_logs(logs: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = logs.to_vec();
        if sorted.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("zero logs must be finite".into()));
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut zeros: Vec<Zero> = Vec::with_capacity(sorted.len());
        for lt in sorted {
            match zeros.last_mut() {
                Some(z) if z.log_t == lt => z.multiplicity += 1,
                _ => zeros.push(Zero { log_t: lt, multiplicity: 1 }),
            }
        }
        Ok(ZeroDistribution::Explicit { zeros })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ZeroDistribution::Explicit { zeros } => {
                let mut prev = f64::NEG_INFINITY;
                for z in zeros {
                    if !z.log_t.is_finite() || z.log_t <= prev || z.multiplicity == 0 {
                        return Err(Error::InvalidInput(format!(
                            "explicit zeros must be strictly ascending with positive multiplicity, got {z:?}"
                        )));
                    }
                    prev = z.log_t;
                }
                Ok(())
            }
            ZeroDistribution::PowerSequence { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidInput(format!("sequence exponent {exponent} must be positive")));
                }
                Ok(())
            }
            ZeroDistribution::BandUniformLog { bands, counts } => {
                bands_valid(bands)?;
                if bands.len() != counts.len() || counts.contains(&0) {
                    return Err(Error::InvalidInput("each band needs a positive zero count".into()));
                }
                Ok(())
            }
            ZeroDistribution::AnalyticCounting(CountingLaw::Power { scale, exponent }) => {
                if !(scale.is_finite() && *scale > 0.0 && exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidInput("power counting law needs positive scale and exponent".into()));
                }
                Ok(())
            }
            ZeroDistribution::AnalyticCounting(CountingLaw::Bands { bands, counts }) => {
                bands_valid(bands)?;
                if bands.len() != counts.len() || counts.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
                    return Err(Error::InvalidInput("each band needs a positive finite count".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ZeroDistribution::Explicit { zeros } => zeros.is_empty(),
            ZeroDistribution::BandUniformLog { bands, .. } => bands.is_empty(),
            ZeroDistribution::AnalyticCounting(CountingLaw::Bands { bands, .. }) => bands.is_empty(),
            _ => false,
        }
    }

    /// `n(r)`, the number of zeros with `t <= r` counted with multiplicity.
    pub fn count_up_to(&self, lr: f64) -> f64 {
        let slack = COINCIDENCE * lr.abs().max(1.0);
        match self {
            ZeroDistribution::Explicit { zeros } => {
                let k = zeros.partition_point(|z| z.log_t <= lr + slack);
                zeros[..k].iter().map(|z| z.multiplicity as f64).sum()
            }
            ZeroDistribution::PowerSequence { exponent } => power_sequence_count(*exponent, lr) as f64,
            ZeroDistribution::BandUniformLog { bands, counts } => bands
                .iter()
                .zip(counts)
                .map(|(b, &k)| band_count_below(b, k, lr + slack) as f64)
                .sum(),
            ZeroDistribution::AnalyticCounting(law) => law.count(lr),
        }
    }

    /// Visits each discrete zero with `log t <= lr_max` in ascending order.
    /// Returns the number of distinct positions visited, stopping with
    /// `NonConvergent` once `limit` is exceeded.
    pub(crate) fn for_each_zero_below(&self, lr_max: f64, limit: u64, mut visit: impl FnMut(f64, f64)) -> Result<u64> {
        let mut visited = 0u64;
        let bump = |n: u64| -> Result<()> {
            if n > limit {
                Err(Error::NonConvergent(format!("more than {limit} zeros below log r = {lr_max}")))
            } else {
                Ok(())
            }
        };
        match self {
            ZeroDistribution::Explicit { zeros } => {
                for z in zeros.iter().take_while(|z| z.log_t <= lr_max) {
                    visited += 1;
                    bump(visited)?;
                    visit(z.log_t, z.multiplicity as f64);
                }
            }
            ZeroDistribution::PowerSequence { exponent } => {
                let n_max = power_sequence_count(*exponent, lr_max);
                bump(n_max)?;
                for n in 1..=n_max {
                    visit(exponent * (n as f64).ln(), 1.0);
                }
                visited = n_max;
            }
            ZeroDistribution::BandUniformLog { bands, counts } => {
                for (b, &k) in bands.iter().zip(counts) {
                    let step = b.width() / k as f64;
                    for i in 0..k {
                        let lt = b.log_a + (i as f64 + 0.5) * step;
                        if lt > lr_max {
                            break;
                        }
                        visited += 1;
                        bump(visited)?;
                        visit(lt, 1.0);
                    }
                }
            }
            ZeroDistribution::AnalyticCounting(_) => {}
        }
        Ok(visited)
    }

    /// Zero positions (as `log t`) inside `[lo, hi]`.
    pub fn layout_between(&self, lo: f64, hi: f64, limit: usize) -> ZeroLayout {
        if let ZeroDistribution::AnalyticCounting(_) = self {
            return ZeroLayout::Continuous;
        }
        let below_lo = self.count_strictly_below(lo);
        let upto_hi = self.count_up_to(hi);
        if upto_hi - below_lo > limit as f64 {
            return ZeroLayout::TooMany;
        }
        let mut out = Vec::new();
        let res = self.for_each_zero_below(hi, u64::MAX, |lt, _| {
            if lt >= lo && out.last() != Some(&lt) {
                out.push(lt);
            }
        });
        match res {
            Ok(_) => ZeroLayout::Discrete(out),
            Err(_) => ZeroLayout::TooMany,
        }
    }

    fn count_strictly_below(&self, lr: f64) -> f64 {
        match self {
            ZeroDistribution::Explicit { zeros } => {
                let k = zeros.partition_point(|z| z.log_t < lr);
                zeros[..k].iter().map(|z| z.multiplicity as f64).sum()
            }
            _ => self.count_up_to(lr - COINCIDENCE * lr.abs().max(1.0) * 2.0),
        }
    }

    /// Log-distance from `lr` to the nearest discrete zero, if any.
    pub fn nearest_zero_distance(&self, lr: f64) -> Option<f64> {
        match self {
            ZeroDistribution::Explicit { zeros } => {
                let k = zeros.partition_point(|z| z.log_t < lr);
                let mut best: Option<f64> = None;
                for j in [k.wrapping_sub(1), k] {
                    if let Some(z) = zeros.get(j) {
                        let d = (z.log_t - lr).abs();
                        best = Some(best.map_or(d, |b: f64| b.min(d)));
                    }
                }
                best
            }
            ZeroDistribution::PowerSequence { exponent } => {
                let u = (lr / exponent).exp();
                let base = u.floor().max(1.0);
                [base - 1.0, base, base + 1.0]
                    .into_iter()
                    .filter(|&n| n >= 1.0)
                    .map(|n| (exponent * n.ln() - lr).abs())
                    .reduce(f64::min)
            }
            ZeroDistribution::BandUniformLog { bands, counts } => {
                let mut best: Option<f64> = None;
                for (b, &k) in bands.iter().zip(counts) {
                    let step = b.width() / k as f64;
                    let i = ((lr - b.log_a) / step - 0.5).round().clamp(0.0, (k - 1) as f64);
                    let d = (b.log_a + (i + 0.5) * step - lr).abs();
                    best = Some(best.map_or(d, |x: f64| x.min(d)));
                }
                best
            }
            ZeroDistribution::AnalyticCounting(_) => None,
        }
    }

    /// Upper bound on `sum_{t_n > e^cutoff} |log|1 + z/t_n||` for `|z| = r`,
    /// from `|log(1 +- x)| <= x / (1 - x)` and `r * int_cutoff^inf dn(t)/t`.
    pub fn tail_bound(&self, lr: f64, cutoff: f64) -> Result<f64> {
        if !(cutoff > lr) {
            return Err(Error::InvalidInput(format!("tail cutoff {cutoff} must exceed log r = {lr}")));
        }
        let factor = 1.0 / -(lr - cutoff).exp_m1();
        let raw = match self {
            ZeroDistribution::Explicit { zeros } => {
                let k = zeros.partition_point(|z| z.log_t <= cutoff);
                zeros[k..].iter().map(|z| z.multiplicity as f64 * (lr - z.log_t).exp()).sum()
            }
            ZeroDistribution::PowerSequence { exponent } => {
                let q = *exponent;
                if q <= 1.0 {
                    return Err(Error::UnboundedTail(format!("t_n = n^{q} has order {} >= 1", 1.0 / q)));
                }
                // convex decreasing summand: sum_{n > N} x_n <= int_{N + 1/2}^inf
                let n = power_sequence_count(q, cutoff) as f64;
                (lr + (1.0 - q) * (n + 0.5).ln()).exp() / (q - 1.0)
            }
            ZeroDistribution::BandUniformLog { bands, counts } => {
                let mut total = 0.0;
                for (b, &k) in bands.iter().zip(counts) {
                    if b.log_b <= cutoff {
                        continue;
                    }
                    let step = b.width() / k as f64;
                    let first = if b.log_a >= cutoff { 0 } else { band_count_below(b, k, cutoff) };
                    if first >= k {
                        continue;
                    }
                    // geometric series over i = first .. k-1 of e^{lr - log_a - (i + 1/2) step}
                    let lead = (lr - b.log_a - (first as f64 + 0.5) * step).exp();
                    let m = (k - first) as f64;
                    let ratio_sum = if step > 0.0 { -(-m * step).exp_m1() / -(-step).exp_m1() } else { m };
                    total += lead * ratio_sum;
                }
                total
            }
            ZeroDistribution::AnalyticCounting(law) => law.tail_integral(lr, cutoff)?,
        };
        Ok(raw * factor)
    }
}

impl CountingLaw {
    pub fn count(&self, lr: f64) -> f64 {
        match self {
            CountingLaw::Power { scale, exponent } => scale * (exponent * lr).exp(),
            CountingLaw::Bands { bands, counts } => bands
                .iter()
                .zip(counts)
                .map(|(b, &k)| {
                    if lr <= b.log_a {
                        0.0
                    } else if lr >= b.log_b {
                        k
                    } else {
                        k * (lr - b.log_a) / b.width()
                    }
                })
                .sum(),
        }
    }

    /// `dn / d(log t)` at `log t = lt`.
    pub fn density(&self, lt: f64) -> f64 {
        match self {
            CountingLaw::Power { scale, exponent } => scale * exponent * (exponent * lt).exp(),
            CountingLaw::Bands { bands, counts } => bands
                .iter()
                .zip(counts)
                .find(|(b, _)| lt >= b.log_a && lt <= b.log_b)
                .map_or(0.0, |(b, &k)| k / b.width()),
        }
    }

    /// `r * int_{e^cutoff}^inf dn(t) / t`.
    fn tail_integral(&self, lr: f64, cutoff: f64) -> Result<f64> {
        match self {
            CountingLaw::Power { scale, exponent } => {
                let p = *exponent;
                if p >= 1.0 {
                    return Err(Error::UnboundedTail(format!("n(r) = r^{p} has order >= 1")));
                }
                Ok(scale * p / (1.0 - p) * (lr + (p - 1.0) * cutoff).exp())
            }
            CountingLaw::Bands { bands, counts } => Ok(bands
                .iter()
                .zip(counts)
                .filter(|(b, _)| b.log_b > cutoff)
                .map(|(b, &k)| {
                    let lo = b.log_a.max(cutoff);
                    k / b.width() * ((lr - lo).exp() - (lr - b.log_b).exp())
                })
                .sum()),
        }
    }
}

/// Number of `n >= 1` with `exponent * ln n <= lr`.
fn power_sequence_count(exponent: f64, lr: f64) -> u64 {
    let slack = COINCIDENCE * lr.abs().max(1.0);
    let u = (lr / exponent).exp();
    if !u.is_finite() || u >= u64::MAX as f64 {
        return u64::MAX;
    }
    let mut n = u.floor() as u64;
    while n >= 1 && exponent * (n as f64).ln() > lr + slack {
        n -= 1;
    }
    while exponent * ((n + 1) as f64).ln() <= lr + slack {
        n += 1;
    }
    n
}

fn band_count_below(b: &Band, k: u64, lr: f64) -> u64 {
    if lr < b.log_a {
        return 0;
    }
    let step = b.width() / k as f64;
    let i = ((lr - b.log_a) / step - 0.5).floor();
    if i < 0.0 {
        0
    } else {
        (i as u64).saturating_add(1).min(k)
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `f(z) = c * prod (1 + z / t_n)` with `c = e^{log_c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntireProductFunction {
    pub log_c: f64,
    pub zeros: ZeroDistribution,
    /// Largest log radius at which this finite realization stands in for the
    /// intended function (set by truncating constructors).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_up_to: Option<f64>,
}

impl EntireProductFunction {
    pub fn new(log_c: f64, zeros: ZeroDistribution) -> Result<Self> {
        if !log_c.is_finite() {
            return Err(Error::InvalidInput("log_c must be finite".into()));
        }
        zeros.validate()?;
        Ok(EntireProductFunction { log_c, zeros, valid_up_to: None })
    }

    pub fn with_valid_range(mut self, lr: f64) -> Self {
        self.valid_up_to = Some(lr);
        self
    }

    /// `log|f(r e^{i theta})|` for `theta` in `[0, pi]`.
    pub fn log_abs_at_angle(&self, lr: LogRadius, theta: f64, settings: &EvalSettings) -> Result<LogValue> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidAngle(theta));
        }
        let lr = lr.get();
        let angle = Angle::new(theta);
        if angle.is_pi {
            if let Some(d) = self.zeros.nearest_zero_distance(lr) {
                if d < settings.singularity_exclusion {
                    return Ok(LogValue::NegInfinity);
                }
            }
        }
        let body = match &self.zeros {
            ZeroDistribution::Explicit { .. } | ZeroDistribution::BandUniformLog { .. } => {
                let mut acc = Accumulator::default();
                self.zeros.for_each_zero_below(f64::INFINITY, settings.max_terms, |lt, mult| {
                    acc.add(mult * log_abs_factor(lr - lt, &angle));
                })?;
                acc.value()
            }
            ZeroDistribution::PowerSequence { exponent } => power_sequence_sum(*exponent, lr, &angle, settings)?,
            ZeroDistribution::AnalyticCounting(law) => counting_integral(law, lr, &angle, settings)?,
        };
        Ok(LogValue::from_f64(self.log_c + body))
    }

    pub fn count_zeros_up_to(&self, lr: LogRadius) -> f64 {
        self.zeros.count_up_to(lr.get())
    }

    pub fn tail_bound(&self, lr: LogRadius, cutoff: LogRadius) -> Result<f64> {
        self.zeros.tail_bound(lr.get(), cutoff.get())
    }

    /// Largest log radius at which evaluation stays within `max_terms`.
    pub fn max_evaluable_lr(&self, settings: &EvalSettings) -> f64 {
        let intrinsic = match &self.zeros {
            ZeroDistribution::PowerSequence { exponent } => {
                exponent * (settings.max_terms as f64).ln() - CUTOFF_GAP - 1e-9
            }
            _ => 700.0,
        };
        match self.valid_up_to {
            Some(v) => intrinsic.min(v),
            None => intrinsic,
        }
    }
}

/// Explicit sum over `n <= N` plus the Euler-Maclaurin (midpoint) tail
/// `int_{N+1/2}^inf F(u) du + F'(N + 1/2) / 24`.
fn power_sequence_sum(q: f64, lr: f64, angle: &Angle, settings: &EvalSettings) -> Result<f64> {
    if q <= 1.0 {
        return Err(Error::UnboundedTail(format!("t_n = n^{q} has order {} >= 1", 1.0 / q)));
    }
    let cutoff = (lr + CUTOFF_GAP).max(q * MIN_EXPLICIT_TERMS.ln());
    let n_max = power_sequence_count(q, cutoff);
    if n_max > settings.max_terms {
        return Err(Error::NonConvergent(format!(
            "{n_max} explicit terms needed at log r = {lr}, above max_terms = {}",
            settings.max_terms
        )));
    }
    let mut acc = Accumulator::default();
    for n in 1..=n_max {
        acc.add(log_abs_factor(lr - q * (n as f64).ln(), angle));
    }
    let head = acc.value();

    let u0 = n_max as f64 + 0.5;
    let s0 = u0.ln();
    // |tail beyond s| <= e^{lr + (1 - q) s} / ((q - 1)(1 - x0))
    let x0 = (lr - q * s0).exp();
    let scale = head.abs().max(x0 * u0 / (q - 1.0)).max(f64::MIN_POSITIVE);
    let target = settings.rel_tolerance * scale * 1e-2;
    let s_max = s0 + ((lr + (1.0 - q) * s0).exp() / ((q - 1.0) * (1.0 - x0) * target)).ln().max(1.0) / (q - 1.0);
    let mut breaks = vec![s0];
    let mut s = s0 + 1.0;
    while s < s_max {
        breaks.push(s);
        s += 4.0;
    }
    breaks.push(s_max);
    let quad = QuadSettings { abs_tol: target, rel_tol: 0.0, max_subdivisions: 4000 };
    let mut integrand = |s: f64| log_abs_factor(lr - q * s, angle) * s.exp();
    let integral = integrate_panels(&mut integrand, &breaks, &quad)?.value;

    // F'(u) = h'(d) * (-q / u), h'(d) = x (cos + x) / |1 + x e^{i theta}|^2
    let x = x0;
    let cos = if angle.is_pi { -1.0 } else { angle.cos };
    let dh = x * (cos + x) / (1.0 + 2.0 * x * cos + x * x);
    let correction = dh * (-q / u0) / 24.0;
    Ok(head + integral + correction)
}

/// `int h(log r - log t) dn(t)` over a continuous counting law.
fn counting_integral(law: &CountingLaw, lr: f64, angle: &Angle, settings: &EvalSettings) -> Result<f64> {
    // magnitude guess for absolute tolerances: the count near r
    let scale = law.count(lr + 1.0).max(law.count(lr) * (lr.abs() + 1.0)).max(1e-300);
    let mut target = settings.rel_tolerance * scale * 1e-2;
    for _ in 0..3 {
        let value = counting_integral_at(law, lr, angle, target)?;
        // floor: a value that cancels to ~0 cannot be resolved relatively
        let wanted = (settings.rel_tolerance * value.abs() * 1e-1).max(scale * 1e-14);
        if target <= wanted || value == 0.0 {
            return Ok(value);
        }
        target = wanted.max(target * 1e-6);
    }
    counting_integral_at(law, lr, angle, target)
}

fn counting_integral_at(law: &CountingLaw, lr: f64, angle: &Angle, target: f64) -> Result<f64> {
    let quad = QuadSettings { abs_tol: target * 0.5, rel_tol: 0.0, max_subdivisions: 4000 };
    let mut integrand = |lt: f64| log_abs_factor(lr - lt, angle) * law.density(lt);
    match law {
        CountingLaw::Power { scale, exponent } => {
            let p = *exponent;
            if p >= 1.0 {
                return Err(Error::UnboundedTail(format!("n(r) = r^{p} has order >= 1")));
            }
            // below lr - a: |h| <= (lr - lt) + ln 2, mass scale * e^{p lt}
            let mut a = 5.0;
            while scale * (p * (lr - a)).exp() * (a + std::f64::consts::LN_2 + 1.0 / p) > target * 0.25 {
                a += 5.0;
                if a > 1e6 {
                    return Err(Error::NonConvergent("lower quadrature limit not found".into()));
                }
            }
            let mut b = 5.0;
            while law.tail_integral(lr, lr + b)? / -(-b).exp_m1() > target * 0.25 {
                b += 5.0;
                if b > 1e6 {
                    return Err(Error::NonConvergent("upper quadrature limit not found".into()));
                }
            }
            let mut breaks = vec![lr - a];
            let mut x = lr - a + 5.0;
            while x < lr - 1.0 {
                breaks.push(x);
                x += 5.0;
            }
            breaks.extend([lr - 1.0, lr, lr + 1.0]);
            let mut x = lr + 5.0;
            while x < lr + b {
                breaks.push(x);
                x += 5.0;
            }
            breaks.push(lr + b);
            breaks.dedup();
            Ok(integrate_panels(&mut integrand, &breaks, &quad)?.value)
        }
        CountingLaw::Bands { bands, .. } => {
            let mut acc = Accumulator::default();
            for band in bands {
                let mut breaks = vec![band.log_a];
                for p in [lr - 1.0, lr, lr + 1.0] {
                    if p > band.log_a && p < band.log_b {
                        breaks.push(p);
                    }
                }
                breaks.push(band.log_b);
                // density is constant inside the band; integrate h alone
                let k = law.density(0.5 * (band.log_a + band.log_b));
                let mut h = |lt: f64| log_abs_factor(lr - lt, angle);
                let band_quad = QuadSettings { abs_tol: quad.abs_tol / (k * bands.len() as f64), ..quad };
                acc.add(k * integrate_panels(&mut h, &breaks, &band_quad)?.value);
            }
            Ok(acc.value())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn settings() -> EvalSettings {
        EvalSettings::default()
    }

    fn lr(r: f64) -> LogRadius {
        LogRadius::from_radius(r).unwrap()
    }

    #[test]
    fn single_factor_values() {
        let f = EntireProductFunction::new(0.0, ZeroDistribution::explicit(&[1.0]).unwrap()).unwrap();
        let v = f.log_abs_at_angle(lr(3.0), 0.0, &settings()).unwrap();
        assert!((v.as_f64() - 4f64.ln()).abs() < 1e-15);
        let v = f.log_abs_at_angle(LogRadius::of(0.0), PI, &settings()).unwrap();
        assert_eq!(v, LogValue::NegInfinity);
    }

    #[test]
    fn invalid_angle_rejected() {
        let f = EntireProductFunction::new(0.0, ZeroDistribution::explicit(&[1.0]).unwrap()).unwrap();
        assert_eq!(f.log_abs_at_angle(lr(2.0), 4.0, &settings()), Err(Error::InvalidAngle(4.0)));
        assert!(f.log_abs_at_angle(lr(2.0), -0.1, &settings()).is_err());
    }

    #[test]
    fn counts() {
        let sq = ZeroDistribution::PowerSequence { exponent: 2.0 };
        assert_eq!(sq.count_up_to(10f64.ln()), 3.0);
        assert_eq!(sq.count_up_to(4f64.ln()), 2.0);
        let cube = ZeroDistribution::PowerSequence { exponent: 3.0 };
        assert_eq!(cube.count_up_to(1000f64.ln()), 10.0);
        let empty = ZeroDistribution::Explicit { zeros: vec![] };
        assert_eq!(empty.count_up_to(50.0), 0.0);
        let law = ZeroDistribution::AnalyticCounting(CountingLaw::Power { scale: 1.0, exponent: 1.0 / 3.0 });
        assert!((law.count_up_to(1000f64.ln()) - 10.0).abs() < 1e-12);
        let bands = ZeroDistribution::BandUniformLog {
            bands: vec![Band { log_a: 0.0, log_b: 1.0 }, Band { log_a: 2.0, log_b: 3.0 }],
            counts: vec![2, 4],
        };
        assert_eq!(bands.count_up_to(1.5), 2.0);
        assert_eq!(bands.count_up_to(3.5), 6.0);
    }

    #[test]
    fn explicit_merges_multiplicities_and_rejects_nonpositive() {
        let d = ZeroDistribution::explicit(&[4.0, 1.0, 4.0]).unwrap();
        assert_eq!(d.count_up_to(4f64.ln()), 3.0);
        assert!(ZeroDistribution::explicit(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        let sq = ZeroDistribution::PowerSequence { exponent: 2.0 };
        let b = sq.tail_bound(4f64.ln(), 1e6f64.ln()).unwrap();
        // direct: 4 * sum_{n > 1000} 1/n^2
        let direct: f64 = 4.0 * (1001..2_000_000).map(|n| 1.0 / (n as f64).powi(2)).sum::<f64>();
        assert!(b >= direct && b <= 0.004, "{b} vs {direct}");

        let law = ZeroDistribution::AnalyticCounting(CountingLaw::Power { scale: 1.0, exponent: 1.0 / 3.0 });
        let b = law.tail_bound(10f64.ln(), 1e9f64.ln()).unwrap();
        assert!(b <= 1.5e-5 && b > 4.9e-6);

        let empty = ZeroDistribution::Explicit { zeros: vec![] };
        assert_eq!(empty.tail_bound(0.0, 5.0).unwrap(), 0.0);
        let linear = ZeroDistribution::PowerSequence { exponent: 1.0 };
        assert!(matches!(linear.tail_bound(0.0, 5.0), Err(Error::UnboundedTail(_))));
    }

    #[test]
    fn band_tail_bound_matches_direct_sum() {
        let d = ZeroDistribution::BandUniformLog { bands: vec![Band { log_a: 1.0, log_b: 6.0 }], counts: vec![37] };
        let lr = 0.5;
        let cutoff = 3.3;
        let mut direct = 0.0;
        d.for_each_zero_below(f64::INFINITY, 1000, |lt, m| {
            if lt > cutoff {
                direct += m * (lr - lt).exp();
            }
        })
        .unwrap();
        let bound = d.tail_bound(lr, cutoff).unwrap();
        let factor = 1.0 / (1.0 - (lr - cutoff).exp());
        assert!((bound - direct * factor).abs() < 1e-12);
    }

    #[test]
    fn power_sequence_too_many_terms() {
        let f = EntireProductFunction::new(0.0, ZeroDistribution::PowerSequence { exponent: 2.0 }).unwrap();
        let s = EvalSettings { max_terms: 500, ..settings() };
        assert!(matches!(f.log_abs_at_angle(lr(10.0), 0.0, &s), Err(Error::NonConvergent(_))));
    }
}
