//! Growth functionals: `eps(r)`, `k(r)`, finite-range order estimates, the
//! counting integrals `N(r)`, `Q(r)`, and finite checks of the growth
//! criteria and of Beurling's inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golden;
use crate::logdomain::{LogRadius, LogValue};
use crate::product::{CountingLaw, EntireProductFunction, EvalSettings, ZeroDistribution, ZeroLayout};
use crate::quadrature::{integrate_panels, QuadSettings};

/// Fraction of the sampled range (at the top) used by the order estimates.
pub const ESTIMATE_WINDOW: f64 = 0.3;
const MAX_EXPLICIT_COUNT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub lr: LogRadius,
    pub log_max: f64,
    pub log_min: LogValue,
    /// `None` where `log M(r) <= 1`.
    pub eps: Option<f64>,
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    /// Largest local slope of `log log M` against `log r` in the window;
    /// `None` when the window holds fewer than two usable samples.
    pub rho_hat: Option<f64>,
    /// Smallest local slope in the window.
    pub lambda_hat: Option<f64>,
    /// `max` / `min` of `log log M(r) / log r` in the window.
    pub rho_ratio: Option<f64>,
    pub lambda_ratio: Option<f64>,
    /// `(lo, hi)` in log r.
    pub window: (f64, f64),
    /// `(log r, log(log M(r) / r^{1/2}))`, `None` where `log M <= 0`.
    pub minimal_type_trend: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub samples: Vec<GrowthSample>,
    pub summary: GrowthSummary,
}

/// `eps = 1/2 - log(log M) / log r` and `k = eps log r`.
pub fn eps_k_from(lr: f64, log_max: f64) -> Result<(f64, f64)> {
    if !(log_max > 1.0) || !(lr > 0.0) {
        return Err(Error::DomainTooSmall { lr, log_max });
    }
    let eps = 0.5 - log_max.ln() / lr;
    Ok((eps, eps * lr))
}

pub fn eps_k_at(f: &EntireProductFunction, lr: LogRadius, settings: &EvalSettings) -> Result<(f64, f64)> {
    let log_max = f.log_max_modulus(lr, settings)?.as_f64();
    eps_k_from(lr.get(), log_max)
}

/// Log-spaced samples on `[lr_min, lr_max]`, endpoints included.
pub fn sample_grid(lr_min: f64, lr_max: f64, points_per_decade: u32) -> Vec<f64> {
    let n = ((lr_max - lr_min) / std::f64::consts::LN_10 * points_per_decade.max(1) as f64).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { lr_max } else { lr_min + (lr_max - lr_min) * i as f64 / n as f64 }).collect()
}

pub fn build_profile(
    f: &EntireProductFunction,
    lr_min: LogRadius,
    lr_max: LogRadius,
    points_per_decade: u32,
    settings: &EvalSettings,
) -> Result<GrowthProfile> {
    if !(lr_min < lr_max) {
        return Err(Error::InvalidInput("profile needs lr_min < lr_max".into()));
    }
    profile_at(f, &sample_grid(lr_min.get(), lr_max.get(), points_per_decade), settings)
}

/// Profile on caller-chosen ascending log radii (at least two).
pub fn profile_at(f: &EntireProductFunction, lrs: &[f64], settings: &EvalSettings) -> Result<GrowthProfile> {
    if lrs.len() < 2 || lrs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("profile radii must be at least two, strictly ascending".into()));
    }
    let mut samples = Vec::new();
    for &x in lrs {
        let lr = LogRadius::new(x)?;
        let log_max = f.log_max_modulus(lr, settings)?.as_f64();
        let log_min = f.log_min_modulus(lr, settings)?;
        let (eps, k) = match eps_k_from(x, log_max) {
            Ok((e, k)) => (Some(e), Some(k)),
            Err(_) => (None, None),
        };
        samples.push(GrowthSample { lr, log_max, log_min, eps, k });
    }
    let summary = summarize(&samples, lrs[0], lrs[lrs.len() - 1]);
    Ok(GrowthProfile { samples, summary })
}

fn summarize(samples: &[GrowthSample], lo: f64, hi: f64) -> GrowthSummary {
    let w_lo = hi - ESTIMATE_WINDOW * (hi - lo);
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.lr.get() >= w_lo && s.log_max > 0.0)
        .map(|s| (s.lr.get(), s.log_max.ln()))
        .collect();
    let slopes: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let ratios: Vec<f64> = pts.iter().filter(|p| p.0 > 0.0).map(|p| p.1 / p.0).collect();
    let fold = |v: &[f64]| -> (Option<f64>, Option<f64>) {
        if v.is_empty() {
            (None, None)
        } else {
            (Some(v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)), Some(v.iter().cloned().fold(f64::INFINITY, f64::min)))
        }
    };
    let (rho_hat, lambda_hat) = fold(&slopes);
    let (rho_ratio, lambda_ratio) = fold(&ratios);
    let minimal_type_trend = samples
        .iter()
        .map(|s| {
            let lr = s.lr.get();
            (lr, (s.log_max > 0.0).then(|| s.log_max.ln() - 0.5 * lr))
        })
        .collect();
    GrowthSummary { rho_hat, lambda_hat, rho_ratio, lambda_ratio, window: (w_lo, hi), minimal_type_trend }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingData {
    pub lr: LogRadius,
    /// `n(r)`.
    pub n_r: f64,
    /// `N(r) = int_0^r n(t)/t dt`.
    pub big_n: f64,
    /// `Q(r) = r int_r^inf n(t)/t^2 dt`.
    pub big_q: f64,
}

pub fn counting_data(f: &EntireProductFunction, lr: LogRadius, quad: &QuadSettings) -> Result<CountingData> {
    let x = lr.get();
    let n_r = f.zeros.count_up_to(x);
    let (big_n, big_q) = match &f.zeros {
        ZeroDistribution::Explicit { .. } | ZeroDistribution::BandUniformLog { .. } => {
            let (mut n, mut q) = (0.0, 0.0);
            f.zeros.for_each_zero_below(f64::INFINITY, u64::MAX, |lt, m| {
                if lt <= x {
                    n += m * (x - lt);
                    q += m;
                } else {
                    q += m * (x - lt).exp();
                }
            })?;
            (n, q)
        }
        ZeroDistribution::PowerSequence { exponent } => power_counting(*exponent, x)?,
        ZeroDistribution::AnalyticCounting(law) => analytic_counting(law, x, quad)?,
    };
    Ok(CountingData { lr, n_r, big_n, big_q })
}

/// `t_n = n^q`: explicit sums up to `M = max(n(r), 1000)`, then the
/// midpoint Euler-Maclaurin tail of `sum n^{-q}`.
fn power_counting(q: f64, x: f64) -> Result<(f64, f64)> {
    if q <= 1.0 {
        return Err(Error::UnboundedTail(format!("sum n^-{q} diverges")));
    }
    let k = {
        // floor(r^{1/q}), guarded against rounding
        let mut k = (x / q).exp().floor() as u64;
        while k > 0 && q * (k as f64).ln() > x {
            k -= 1;
        }
        while q * ((k + 1) as f64).ln() <= x {
            k += 1;
        }
        k
    };
    if k > MAX_EXPLICIT_COUNT {
        return Err(Error::NonConvergent(format!("{k} zeros below log r = {x}")));
    }
    let m = k.max(1000);
    let mut big_n = 0.0;
    let mut tail = 0.0;
    for n in 1..=m {
        let lt = q * (n as f64).ln();
        if n <= k {
            big_n += x - lt;
        } else {
            tail += (x - lt).exp();
        }
    }
    let h = m as f64 + 0.5;
    let em = h.powf(1.0 - q) / (q - 1.0) - q * h.powf(-q - 1.0) / 24.0;
    let big_q = k as f64 + tail + (x + (em.ln())).exp();
    Ok((big_n, big_q))
}

fn analytic_counting(law: &CountingLaw, x: f64, quad: &QuadSettings) -> Result<(f64, f64)> {
    // N = int n(e^s) ds over s < x;  Q = int_{s > x} n(e^s) e^{x - s} ds
    match law {
        CountingLaw::Power { exponent, .. } => {
            let p = *exponent;
            if !(p > 0.0) {
                return Err(Error::InvalidInput(format!("power law exponent {p} must be positive")));
            }
            if p >= 1.0 {
                return Err(Error::UnboundedTail(format!("n(r) = r^{p} has order >= 1")));
            }
            let mut fn_n = |s: f64| law.count(s);
            let big_n = integrate_panels(&mut fn_n, &[x - 60.0 / p, x], quad)?.value;
            let mut fn_q = |s: f64| law.count(s) * (x - s).exp();
            let big_q = integrate_panels(&mut fn_q, &[x, x + 60.0 / (1.0 - p)], quad)?.value;
            Ok((big_n, big_q))
        }
        CountingLaw::Bands { bands, counts } => {
            let total: f64 = counts.iter().sum();
            let mut breaks: Vec<f64> = bands.iter().flat_map(|b| [b.log_a, b.log_b]).collect();
            let first = breaks.first().copied().unwrap_or(x);
            let last = breaks.last().copied().unwrap_or(x);
            breaks.push(x);
            breaks.sort_by(f64::total_cmp);
            let below: Vec<f64> = breaks.iter().copied().filter(|&b| b >= first.min(x) && b <= x).collect();
            let above: Vec<f64> = breaks.iter().copied().filter(|&b| b >= x).collect();
            let mut fn_n = |s: f64| law.count(s);
            let big_n = integrate_panels(&mut fn_n, &below, quad)?.value;
            let mut fn_q = |s: f64| law.count(s) * (x - s).exp();
            let inner = integrate_panels(&mut fn_q, &above, quad)?.value;
            let end = last.max(x);
            Ok((big_n, inner + total * (x - end).exp()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub lr: LogRadius,
    pub big_n: f64,
    pub big_q: f64,
    /// `log M(r) - log c`.
    pub log_max_normalized: f64,
    pub tolerance: f64,
    /// `log M - log c - N`, nonnegative when the lower bound holds.
    pub lower_slack: f64,
    /// `N + Q - (log M - log c)`, nonnegative when the upper bound holds.
    pub upper_slack: f64,
    pub holds: bool,
}

pub fn sandwich_check(
    f: &EntireProductFunction,
    lr: LogRadius,
    settings: &EvalSettings,
    quad: &QuadSettings,
) -> Result<SandwichReport> {
    let log_max = f.log_max_modulus(lr, settings)?.as_f64();
    let cd = counting_data(f, lr, quad)?;
    let normalized = log_max - f.log_c;
    let tolerance = 1e-9 * (1.0 + log_max.abs());
    let lower_slack = normalized - cd.big_n;
    let upper_slack = cd.big_n + cd.big_q - normalized;
    Ok(SandwichReport {
        lr,
        big_n: cd.big_n,
        big_q: cd.big_q,
        log_max_normalized: normalized,
        tolerance,
        lower_slack,
        upper_slack,
        holds: lower_slack >= -tolerance && upper_slack >= -tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub points_per_decade: u32,
    /// Smallest `log s` tried.
    pub min_log_s: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings { points_per_decade: 32, min_log_s: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub lr: LogRadius,
    /// Set when the best candidate has `margin >= 0` and `M(s) >= r^2`.
    pub witness_s: Option<LogRadius>,
    /// Best candidate satisfying the side condition, witness or not.
    pub best_s: Option<LogRadius>,
    /// `log( (1/4) (log M(s)/s^{1/2}) / (log M(r)/r^{1/2}) )` at `best_s`.
    pub margin: Option<f64>,
    pub side_condition_ok: bool,
}

/// `log` of the main-criterion factor at `(r, s)`, from `log M` values.
pub fn main_margin(lr: f64, log_max_r: f64, ls: f64, log_max_s: f64) -> f64 {
    0.25f64.ln() + log_max_s.ln() - 0.5 * ls - log_max_r.ln() + 0.5 * lr
}

/// Searches `s < r` on a descending log grid, keeping `M(s) >= r^2`.
pub fn criterion_witness(
    f: &EntireProductFunction,
    lr: LogRadius,
    search: &SearchSettings,
    settings: &EvalSettings,
) -> Result<CriterionReport> {
    let x = lr.get();
    let log_max_r = f.log_max_modulus(lr, settings)?.as_f64();
    let mut report = CriterionReport { lr, witness_s: None, best_s: None, margin: None, side_condition_ok: false };
    if !(log_max_r > 0.0) {
        return Ok(report);
    }
    let step = std::f64::consts::LN_10 / search.points_per_decade.max(1) as f64;
    let mut j = 1;
    loop {
        let ls = x - j as f64 * step;
        j += 1;
        if ls < search.min_log_s {
            break;
        }
        let log_max_s = f.log_max_modulus(LogRadius::new(ls)?, settings)?.as_f64();
        if log_max_s < 2.0 * x {
            // M is increasing: smaller s fails the side condition too
            break;
        }
        let m = main_margin(x, log_max_r, ls, log_max_s);
        if report.margin.is_none_or(|b| m > b) {
            report.margin = Some(m);
            report.best_s = Some(LogRadius::new(ls)?);
            report.side_condition_ok = true;
        }
    }
    if report.margin.is_some_and(|m| m >= 0.0) {
        report.witness_s = report.best_s;
    }
    Ok(report)
}

/// The main criterion at `(r, s)` computed three ways, each as a log
/// margin that is nonnegative exactly when the criterion holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionForms {
    pub main: f64,
    /// `log( (1/4) r^{eps(r)} / s^{eps(s)} )`.
    pub eps_form: f64,
    /// `k(r) - k(s) - log 4`.
    pub k_form: f64,
}

pub fn criterion_forms(f: &EntireProductFunction, lr: LogRadius, ls: LogRadius, settings: &EvalSettings) -> Result<CriterionForms> {
    let lm_r = f.log_max_modulus(lr, settings)?.as_f64();
    let lm_s = f.log_max_modulus(ls, settings)?.as_f64();
    let (eps_r, k_r) = eps_k_from(lr.get(), lm_r)?;
    let (eps_s, k_s) = eps_k_from(ls.get(), lm_s)?;
    Ok(CriterionForms {
        main: main_margin(lr.get(), lm_r, ls.get(), lm_s),
        eps_form: 0.25f64.ln() + eps_r * lr.get() - eps_s * ls.get(),
        k_form: k_r - k_s - 4f64.ln(),
    })
}

/// `delta log r >= k >= C delta/(1/2 - delta) log log r`; `None` when `log r <= 1`.
pub fn condition_a(lr: f64, k: f64, delta: f64, c: f64) -> Option<bool> {
    if !(lr > 1.0) {
        return None;
    }
    Some(delta * lr >= k && k >= c * delta / (0.5 - delta) * lr.ln())
}

pub fn check_condition_a(profile: &GrowthProfile, delta: f64, c: f64) -> Result<Vec<Option<bool>>> {
    if !(delta > 0.0 && delta < 0.5) || !(c > 1.0) {
        return Err(Error::InvalidInput(format!("need delta in (0, 1/2) and C > 1, got {delta}, {c}")));
    }
    Ok(profile.samples.iter().map(|s| s.k.and_then(|k| condition_a(s.lr.get(), k, delta, c))).collect())
}

/// `k(r) >= C k((log r)^{2d})` for a given `k` as a function of `log r`.
pub fn condition_b_with(k: impl Fn(f64) -> Option<f64>, lr: f64, c: f64, d: f64) -> Option<bool> {
    if !(lr > 1.0) {
        return None;
    }
    let inner = 2.0 * d * lr.ln();
    Some(k(lr)? >= c * k(inner)?)
}

pub fn check_condition_b(f: &EntireProductFunction, lr: LogRadius, c: f64, d: f64, settings: &EvalSettings) -> Result<bool> {
    if !(c > 1.0 && d > 1.0) {
        return Err(Error::InvalidInput(format!("need C > 1 and d > 1, got {c}, {d}")));
    }
    if !(lr.get() > 1.0) {
        return Err(Error::DomainTooSmall { lr: lr.get(), log_max: f64::NAN });
    }
    let inner = LogRadius::new(2.0 * d * lr.get().ln())?;
    let (_, k_r) = eps_k_at(f, lr, settings)?;
    let (_, k_inner) = eps_k_at(f, inner, settings)?;
    Ok(k_r >= c * k_inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeurlingReport {
    pub lr1: LogRadius,
    pub lr2: LogRadius,
    pub threshold_log_c: f64,
    /// `int_E dt/t` over `E = {t in [r1, r2] : m(t) <= c}`.
    pub e_log_measure: f64,
    /// Bound on the error of `e_log_measure` from boundary refinement.
    pub measure_error: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

const BOUNDARY_TOL: f64 = 1e-12;
const BEURLING_ZERO_LIMIT: usize = 200_000;

/// Checks `B(r2, u) > (1/2) exp((1/2) int_E dt/t) B(r1, u)` with
/// `u = log(|f|/c)`, so `B(r, u) = log M(r) - log c`.
///
/// `E` is located piece by piece between grid points (64 per decade) and
/// zeros. On each piece `log m` is unimodal, so its part of `E` is found by
/// one golden-section search and at most two bisections.
pub fn beurling_verify(
    f: &EntireProductFunction,
    lr1: LogRadius,
    lr2: LogRadius,
    log_c: f64,
    settings: &EvalSettings,
) -> Result<BeurlingReport> {
    let (a, b) = (lr1.get(), lr2.get());
    if !(a < b) {
        return Err(Error::InvalidInput("beurling check needs lr1 < lr2".into()));
    }
    let b1 = f.log_max_modulus(lr1, settings)?.as_f64() - log_c;
    if !(b1 > 0.0) {
        return Err(Error::ThresholdTooHigh(b1));
    }
    let b2 = f.log_max_modulus(lr2, settings)?.as_f64() - log_c;

    let mut breaks = sample_grid(a, b, 64);
    if let ZeroLayout::Discrete(zs) = f.zeros.layout_between(a, b, BEURLING_ZERO_LIMIT) {
        breaks.extend(zs.into_iter().filter(|&z| z > a && z < b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let mut err = None;
    let mut g = |x: f64| -> f64 {
        match f.log_min_modulus(LogRadius::of(x), settings) {
            Ok(v) => v.as_f64() - log_c,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let mut measure = 0.0;
    let mut crossings = 0usize;
    let mut g_lo = g(breaks[0]);
    for w in breaks.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let g_hi = g(x1);
        let (in0, in1) = (g_lo <= 0.0, g_hi <= 0.0);
        match (in0, in1) {
            (true, true) => {
                let peak = golden::maximize(&mut g, x0, x1, BOUNDARY_TOL, 200);
                if peak.value <= 0.0 {
                    measure += x1 - x0;
                } else {
                    let (c1, _) = golden::bisect(|x| g(x) <= 0.0, x0, peak.x, BOUNDARY_TOL, 200);
                    let (_, c2) = golden::bisect(|x| g(x) > 0.0, peak.x, x1, BOUNDARY_TOL, 200);
                    measure += (c1 - x0) + (x1 - c2);
                    crossings += 2;
                }
            }
            (true, false) => {
                let (c, _) = golden::bisect(|x| g(x) <= 0.0, x0, x1, BOUNDARY_TOL, 200);
                measure += c - x0;
                crossings += 1;
            }
            (false, true) => {
                let (_, c) = golden::bisect(|x| g(x) > 0.0, x0, x1, BOUNDARY_TOL, 200);
                measure += x1 - c;
                crossings += 1;
            }
            (false, false) => {}
        }
        g_lo = g_hi;
    }
    if let Some(e) = err {
        return Err(e);
    }
    let measure = measure.clamp(0.0, b - a);
    let lhs = b2.ln();
    let rhs = 0.5f64.ln() + 0.5 * measure + b1.ln();
    Ok(BeurlingReport {
        lr1,
        lr2,
        threshold_log_c: log_c,
        e_log_measure: measure,
        measure_error: 2.0 * BOUNDARY_TOL * crossings as f64,
        lhs,
        rhs,
        holds: lhs > rhs,
    })
}
