//! Example families: regular zeros with `n(r) ~ r^{1/2 - eps(r)}`, and band
//! sequences `[a_n, b_n]` hosting zeros, realized as zero distributions.
//!
//! Band endpoints grow like towers of exponentials, so each `log a_n`,
//! `log b_n` is stored at one of two levels: as `log x` while that fits
//! comfortably in an `f64`, otherwise as `log log x`.

use serde::{Deserialize, Serialize};

use crate::balance::place_balanced;
use crate::error::{Error, Result};
use crate::golden::bisect;
use crate::logdomain::log_add_exp;
use crate::product::{Band, CountingLaw, EntireProductFunction, ZeroDistribution};

/// Above this, `log x` is stored as `log log x`.
const LOG_LEVEL_MAX: f64 = 1e300;
/// Largest argument of `exp` that stays finite.
const EXP_MAX: f64 = 709.0;
const RECURRENCE_TOL: f64 = 1e-12;

/// `eps(r)` in `log M(r) = r^{1/2 - eps(r)}`, with `k(r) = eps(r) log r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum EpsSpec {
    Constant { eps: f64 },
    /// `k(r) = alpha * (log^depth r)^beta`, `log^n` the n-th iterated logarithm.
    KFamily { alpha: f64, beta: f64, depth: u32 },
    /// `(log r, eps)` pairs, linearly interpolated in `log r`.
    Table { points: Vec<(f64, f64)> },
}

impl EpsSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EpsSpec::Constant { eps } if !(*eps > 0.0 && *eps < 0.5) => {
                Err(Error::InvalidInput(format!("eps = {eps} not in (0, 1/2)")))
            }
            EpsSpec::KFamily { alpha, beta, depth } if !(*alpha > 0.0 && *beta > 0.0 && *depth >= 2) => {
                Err(Error::InvalidInput("k-family needs alpha, beta > 0 and depth >= 2".into()))
            }
            EpsSpec::Table { points } if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0) => {
                Err(Error::InvalidInput("eps table needs >= 2 points with ascending log r".into()))
            }
            _ => Ok(()),
        }
    }

    /// `eps` at `log r = lr`; `None` outside the domain of definition.
    pub fn eps(&self, lr: f64) -> Option<f64> {
        match self {
            EpsSpec::Constant { eps } => Some(*eps),
            EpsSpec::KFamily { .. } => self.k(lr).map(|k| k / lr),
            EpsSpec::Table { points } => {
                let first = points.first()?;
                let last = points.last()?;
                if lr < first.0 || lr > last.0 {
                    return None;
                }
                let j = points.partition_point(|p| p.0 <= lr).clamp(1, points.len() - 1);
                let (x0, y0) = points[j - 1];
                let (x1, y1) = points[j];
                Some(y0 + (y1 - y0) * (lr - x0) / (x1 - x0))
            }
        }
    }

    pub fn k(&self, lr: f64) -> Option<f64> {
        match self {
            EpsSpec::KFamily { alpha, beta, depth } => {
                let mut l = lr;
                for _ in 1..*depth {
                    if !(l > 0.0) {
                        return None;
                    }
                    l = l.ln();
                }
                if !(l > 0.0) {
                    return None;
                }
                Some(alpha * l.powf(*beta))
            }
            _ => self.eps(lr).map(|e| e * lr),
        }
    }

    /// `log n_target(r) = (1/2 - eps(r)) log r`.
    pub fn log_n_target(&self, lr: f64) -> Option<f64> {
        self.eps(lr).map(|e| (0.5 - e) * lr)
    }

    /// Lower end of the domain on which the spec is used.
    ///
    /// For the k-family this is where `eps` lies in `(0, 1/2)`, `eps`
    /// decreases, `k` increases and `n_target` increases all the way to
    /// `max_lr`, located on a 4096-point grid.
    pub fn domain_floor(&self, max_lr: f64) -> Result<f64> {
        match self {
            EpsSpec::Constant { .. } => Ok(0.0),
            EpsSpec::Table { points } => Ok(points[0].0),
            EpsSpec::KFamily { depth, .. } => {
                // iterated logs positive: lr > e^{e^{...}} with depth - 1 levels
                let mut start = 0.0f64;
                for _ in 1..*depth {
                    start = start.exp();
                }
                if max_lr <= start {
                    return Err(Error::InvalidInput(format!("max log r {max_lr} below k-family domain {start}")));
                }
                let n = 4096;
                let grid: Vec<f64> = (0..=n).map(|i| start + (max_lr - start) * i as f64 / n as f64).collect();
                let ok = |a: f64, b: f64| -> bool {
                    match (self.eps(a), self.eps(b), self.k(a), self.k(b)) {
                        (Some(ea), Some(eb), Some(ka), Some(kb)) => {
                            ea > 0.0
                                && ea < 0.5
                                && eb > 0.0
                                && eb < 0.5
                                && eb <= ea
                                && kb >= ka
                                && (0.5 - eb) * b > (0.5 - ea) * a
                        }
                        _ => false,
                    }
                };
                let mut floor = None;
                for i in (0..n).rev() {
                    if !ok(grid[i], grid[i + 1]) {
                        floor = Some(grid[i + 1]);
                        break;
                    }
                }
                match floor {
                    None => Ok(grid[1].min(grid[0] + 1e-9).max(grid[0] + f64::EPSILON)),
                    Some(f) if f >= max_lr => Err(Error::NonMonotoneSpec(format!(
                        "k-family hypotheses fail up to log r = {max_lr}"
                    ))),
                    Some(f) => Ok(f),
                }
            }
        }
    }

    /// Checks `eps` decreasing and `k` increasing on a grid over `[lo, hi]`.
    pub fn check_regular_hypotheses(&self, lo: f64, hi: f64, points: usize) -> Result<()> {
        let pts = points.max(2);
        let mut prev: Option<(f64, f64, f64)> = None;
        for i in 0..pts {
            let lr = lo + (hi - lo) * i as f64 / (pts - 1) as f64;
            let (Some(e), Some(k)) = (self.eps(lr), self.k(lr)) else {
                return Err(Error::NonMonotoneSpec(format!("eps undefined at log r = {lr}")));
            };
            if let Some((plr, pe, pk)) = prev {
                if e > pe || k < pk {
                    return Err(Error::NonMonotoneSpec(format!(
                        "eps decreasing / k increasing fails between log r = {plr} and {lr}"
                    )));
                }
            }
            prev = Some((lr, e, k));
        }
        Ok(())
    }
}

/// Explicit zeros with `n(r)` tracking `n_target(r) = r^{1/2 - eps(r)}` on
/// `[lr0, max_lr]`: zero number `n` sits where `n_target = n`. The
/// `floor(n_target(lr0))` zeros that would fall below the domain are placed at
/// `lr0` itself.
pub fn regular_zeros(spec: &EpsSpec, max_lr: f64) -> Result<ZeroDistribution> {
    const MAX_ZEROS: f64 = 1e7;
    spec.validate()?;
    let lr0 = spec.domain_floor(max_lr)?;
    if !(max_lr > lr0) {
        return Err(Error::InvalidInput(format!("max log r {max_lr} not above domain floor {lr0}")));
    }
    let g = |lr: f64| spec.log_n_target(lr).ok_or_else(|| Error::NonMonotoneSpec(format!("eps undefined at {lr}")));
    // n_target must increase on the domain
    let checks = 4096;
    let mut prev = g(lr0)?;
    for i in 1..=checks {
        let lr = lr0 + (max_lr - lr0) * i as f64 / checks as f64;
        let v = g(lr)?;
        if !(v > prev) || spec.eps(lr).is_some_and(|e| !(e > 0.0 && e < 0.5)) {
            return Err(Error::NonMonotoneSpec(format!("n_target not increasing near log r = {lr}")));
        }
        prev = v;
    }
    let n_lo = g(lr0)?.exp();
    let n_hi = g(max_lr)?.exp();
    if n_hi > MAX_ZEROS {
        return Err(Error::NonConvergent(format!("{n_hi:.3e} zeros requested below log r = {max_lr}")));
    }
    let mut logs = Vec::with_capacity(n_hi as usize + 1);
    let head = n_lo.floor() as u64;
    logs.extend(std::iter::repeat_n(lr0, head as usize));
    let mut lo = lr0;
    for n in (head + 1)..=(n_hi.floor() as u64) {
        let target = (n as f64).ln();
        let (_, hi) = bisect(|x| spec.log_n_target(x).unwrap_or(f64::INFINITY) < target, lo, max_lr, 0.0, 200);
        logs.push(hi);
        lo = hi;
    }
    ZeroDistribution::explicit_logs(&logs)
}

/// Same as [`regular_zeros`], wrapped as `f` with `f(0) = 1` and its valid range recorded.
pub fn regular_function(spec: &EpsSpec, max_lr: f64) -> Result<EntireProductFunction> {
    Ok(EntireProductFunction::new(0.0, regular_zeros(spec, max_lr)?)?.with_valid_range(max_lr))
}

/// A decreasing `delta(r) -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum DeltaSpec {
    /// `delta(r) = scale / log r`.
    InverseLog { scale: f64 },
    /// `delta(r) = scale / (log r)^power`.
    InversePowerLog { scale: f64, power: f64 },
    /// Rejected by the band constructors: `delta` must decrease to 0.
    Constant { delta: f64 },
}

impl DeltaSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeltaSpec::InverseLog { scale } if *scale > 0.0 => Ok(()),
            DeltaSpec::InversePowerLog { scale, power } if *scale > 0.0 && *power > 0.0 => Ok(()),
            DeltaSpec::Constant { delta } => {
                Err(Error::NonMonotoneSpec(format!("constant delta = {delta} does not decrease to 0")))
            }
            other => Err(Error::InvalidInput(format!("invalid delta spec {other:?}"))),
        }
    }

    pub fn delta(&self, lr: f64) -> f64 {
        self.ln_delta(lr.ln()).exp()
    }

    /// `log delta(r)` given `y = log log r`.
    pub fn ln_delta(&self, y: f64) -> f64 {
        match self {
            DeltaSpec::InverseLog { scale } => scale.ln() - y,
            DeltaSpec::InversePowerLog { scale, power } => scale.ln() - power * y,
            DeltaSpec::Constant { delta } => delta.ln(),
        }
    }
}

/// `log x` at one of two levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "level", content = "value", rename_all = "kebab-case")]
pub enum Magnitude {
    /// Holds `log x`.
    Log(f64),
    /// Holds `log log x`.
    LogLog(f64),
}

impl Magnitude {
    /// From `ell = log log x`, dropping to the `Log` level when it fits.
    pub fn from_ln_ln(ell: f64) -> Self {
        if ell < LOG_LEVEL_MAX.ln() {
            Magnitude::Log(ell.exp())
        } else {
            Magnitude::LogLog(ell)
        }
    }

    /// `log x` when representable.
    pub fn log(self) -> Option<f64> {
        match self {
            Magnitude::Log(v) => Some(v),
            Magnitude::LogLog(w) if w <= EXP_MAX => Some(w.exp()),
            Magnitude::LogLog(_) => None,
        }
    }

    /// `log log x`, requiring `x > 1`.
    pub fn ln_ln(self) -> f64 {
        match self {
            Magnitude::Log(v) => v.ln(),
            Magnitude::LogLog(w) => w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    MinimalType,
    LowerOrderHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEnds {
    pub a: Magnitude,
    pub b: Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSequence {
    pub bands: Vec<BandEnds>,
    pub delta_spec: Option<DeltaSpec>,
    pub kind: BandKind,
    pub moderation_exponent: f64,
}

/// Result of re-checking one recurrence step `n -> n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub index: usize,
    pub separation: bool,
    pub delta_condition: bool,
    pub growth_identity: bool,
}

impl StepCheck {
    pub fn all(&self) -> bool {
        self.separation && self.delta_condition && self.growth_identity
    }
}

fn horizon(seq: BandSequence) -> Error {
    Error::OverflowHorizon { representable: seq.bands.len(), partial: Box::new(seq) }
}

/// Smallest `y = log log a` with `delta(a / 2) <= log b / (40 b)`, i.e.
/// `log delta(a/2) <= log log b - log b - log 40`.
fn delta_threshold(delta: &DeltaSpec, ln_ln_b: f64, ln_b: f64) -> Option<f64> {
    let target = ln_ln_b - ln_b - 40f64.ln();
    // log log (a/2) = log(log a - ln 2) = y + ln(1 - ln2 e^{-y})
    let ln_ln_half = |y: f64| y + (-(std::f64::consts::LN_2.ln() - y).exp()).ln_1p();
    let holds = |y: f64| delta.ln_delta(ln_ln_half(y)) <= target;
    let lo = std::f64::consts::LN_2.ln() + 1e-9;
    if holds(lo) {
        return Some(lo);
    }
    let mut hi = lo.abs().max(1.0);
    while !holds(hi) {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return None;
        }
    }
    let (_, hi) = bisect(|y| !holds(y), lo, hi, 0.0, 400);
    Some(hi)
}

/// Bands obeying `a_{n+1} >= b_n^p`, `delta(a_{n+1}/2) <= log b_n / (40 b_n)`
/// and `log b_{n+1} = (b_n / log b_n) log a_{n+1}`, with `a_{n+1}` as small as
/// those allow.
pub fn minimal_type_bands(
    delta: &DeltaSpec,
    seed_log_a0: f64,
    seed_log_b0: f64,
    n_bands: usize,
    moderation_exponent: f64,
) -> Result<BandSequence> {
    delta.validate()?;
    if !(seed_log_a0 >= 0.0 && seed_log_a0 < seed_log_b0 && seed_log_b0.is_finite()) {
        return Err(Error::InvalidInput("need 0 <= log a0 < log b0".into()));
    }
    if !(moderation_exponent >= 2.0) {
        return Err(Error::InvalidInput(format!("moderation exponent {moderation_exponent} < 2")));
    }
    if n_bands == 0 {
        return Err(Error::InvalidInput("n_bands must be positive".into()));
    }
    let mut seq = BandSequence {
        bands: vec![BandEnds { a: Magnitude::Log(seed_log_a0), b: Magnitude::Log(seed_log_b0) }],
        delta_spec: Some(delta.clone()),
        kind: BandKind::MinimalType,
        moderation_exponent,
    };
    while seq.bands.len() < n_bands {
        let last = *seq.bands.last().unwrap();
        let Some(lb) = last.b.log() else { return Err(horizon(seq)) };
        let ll_b = last.b.ln_ln();
        let Some(y_delta) = delta_threshold(delta, ll_b, lb) else { return Err(horizon(seq)) };
        let y_a = (moderation_exponent.ln() + ll_b).max(y_delta);
        // log log b_{n+1} = log b_n - log log b_n + log log a_{n+1}
        let ll_next = lb - ll_b + y_a;
        if !ll_next.is_finite() || ll_next > LOG_LEVEL_MAX {
            return Err(horizon(seq));
        }
        seq.bands.push(BandEnds { a: Magnitude::from_ln_ln(y_a), b: Magnitude::from_ln_ln(ll_next) });
    }
    Ok(seq)
}

/// Bands with `a_{n+1} = 2 b_n` and `log(b_{n+1}/a_{n+1}) = g_{n+1}`,
/// `g_{n+1} = max(2 g_n, (2 b_n)^{1/2})`.
pub fn lower_order_half_bands(seed_log_a0: f64, seed_log_b0: f64, n_bands: usize) -> Result<BandSequence> {
    if !(seed_log_a0 < seed_log_b0 && seed_log_a0.is_finite() && seed_log_b0.is_finite()) {
        return Err(Error::InvalidInput("need log a0 < log b0".into()));
    }
    if n_bands == 0 {
        return Err(Error::InvalidInput("n_bands must be positive".into()));
    }
    let mut seq = BandSequence {
        bands: vec![BandEnds { a: Magnitude::Log(seed_log_a0), b: Magnitude::Log(seed_log_b0) }],
        delta_spec: None,
        kind: BandKind::LowerOrderHalf,
        moderation_exponent: 2.0,
    };
    let ln2 = std::f64::consts::LN_2;
    // gap kept as log g so it can outgrow f64
    let mut ln_gap = (seed_log_b0 - seed_log_a0).ln();
    while seq.bands.len() < n_bands {
        let last = *seq.bands.last().unwrap();
        let Some(lb) = last.b.log() else { return Err(horizon(seq)) };
        let la_next = ln2 + lb;
        let ln_gap_next = (ln2 + ln_gap).max(0.5 * la_next);
        let a = Magnitude::Log(la_next);
        let b = if ln_gap_next < 600.0 && la_next < LOG_LEVEL_MAX {
            Magnitude::Log(la_next + ln_gap_next.exp())
        } else {
            Magnitude::from_ln_ln(log_add_exp(la_next.ln(), ln_gap_next))
        };
        if !la_next.is_finite() || la_next > LOG_LEVEL_MAX {
            return Err(horizon(seq));
        }
        ln_gap = ln_gap_next;
        seq.bands.push(BandEnds { a, b });
    }
    Ok(seq)
}

impl BandSequence {
    /// `0 <= log a_0 < log b_0 < log a_1 < ...`, compared at the log-log level.
    pub fn is_interlaced(&self) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for (i, band) in self.bands.iter().enumerate() {
            let (a, b) = (band.a.ln_ln(), band.b.ln_ln());
            let a_ok = if i == 0 { band.a.log().is_some_and(|v| v >= 0.0) } else { a > prev };
            if !(a_ok && b > a) {
                return false;
            }
            prev = b;
        }
        true
    }

    /// Re-verifies the three minimal-type constraints from the stored fields.
    pub fn verify_minimal_type(&self) -> Result<Vec<StepCheck>> {
        let delta = self
            .delta_spec
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("band sequence carries no delta spec".into()))?;
        let mut out = Vec::new();
        for (i, w) in self.bands.windows(2).enumerate() {
            let (cur, next) = (w[0], w[1]);
            let ll_b = cur.b.ln_ln();
            let ll_a_next = next.a.ln_ln();
            let slack = RECURRENCE_TOL * ll_a_next.abs().max(1.0);
            let separation = ll_a_next + slack >= self.moderation_exponent.ln() + ll_b;
            let delta_condition = match cur.b.log() {
                Some(lb) => {
                    let ln_ln_half = ll_a_next + (-(std::f64::consts::LN_2.ln() - ll_a_next).exp()).ln_1p();
                    let lhs = delta.ln_delta(ln_ln_half);
                    let rhs = ll_b - lb - 40f64.ln();
                    lhs <= rhs + RECURRENCE_TOL * rhs.abs().max(1.0)
                }
                None => false,
            };
            let growth_identity = match cur.b.log() {
                Some(lb) => {
                    let want = lb - ll_b + ll_a_next;
                    let got = next.b.ln_ln();
                    (got - want).abs() <= RECURRENCE_TOL * want.abs().max(1.0)
                }
                None => false,
            };
            out.push(StepCheck { index: i, separation, delta_condition, growth_identity });
        }
        Ok(out)
    }

    /// `log a_{n+1} - log b_n = log 2`, `log(b_n / a_n)` strictly increasing and
    /// `(2 b_n)^{1/2} <= log b_{n+1}`, per step.
    pub fn verify_lower_order_half(&self) -> Vec<StepCheck> {
        let ln2 = std::f64::consts::LN_2;
        let mut out = Vec::new();
        for (i, w) in self.bands.windows(2).enumerate() {
            let (cur, next) = (w[0], w[1]);
            let (Some(la), Some(lb), Some(la_n)) = (cur.a.log(), cur.b.log(), next.a.log()) else {
                out.push(StepCheck { index: i, separation: false, delta_condition: false, growth_identity: false });
                continue;
            };
            let separation = ((la_n - lb) - ln2).abs() <= RECURRENCE_TOL * la_n.abs().max(1.0);
            let gap_now = lb - la;
            let gap_next_ln = match next.b.log() {
                Some(lb_n) => (lb_n - la_n).ln(),
                None => log_gap_ln(next.b.ln_ln(), la_n.ln()),
            };
            let growth_identity = gap_next_ln > gap_now.ln();
            // (2 b_n)^{1/2} <= log b_{n+1}  <=>  (ln2 + lb)/2 <= log log b_{n+1}
            let delta_condition = 0.5 * (ln2 + lb) <= next.b.ln_ln() + RECURRENCE_TOL * next.b.ln_ln().abs();
            out.push(StepCheck { index: i, separation, delta_condition, growth_identity });
        }
        out
    }

    /// Bands whose endpoints are both at the `Log` level.
    pub fn log_level_bands(&self) -> Vec<Band> {
        self.bands
            .iter()
            .map_while(|b| match (b.a, b.b) {
                (Magnitude::Log(la), Magnitude::Log(lb)) => Some(Band { log_a: la, log_b: lb }),
                _ => None,
            })
            .collect()
    }
}

/// `log(e^{ell_b} - e^{ell_a})` for `ell_b > ell_a`.
fn log_gap_ln(ell_b: f64, ell_a: f64) -> f64 {
    ell_b + (-(ell_a - ell_b).exp()).ln_1p()
}

/// How zeros are placed inside the bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum DensityRule {
    /// Fixed count per band, uniform in `log t`.
    Counts { counts: Vec<u64> },
    /// Uniform in `log t`, with the running total targeting
    /// `n(b_n) = b_n^{1/2 - delta(b_n)}`.
    GrowthCap { delta: DeltaSpec },
    /// Greedy placement: a zero at `a_n`, then each next zero where the
    /// partial product first climbs back to `|f(-r)| = 1`. Keeps `m(r) <= 1`
    /// throughout every band.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub function: EntireProductFunction,
    /// Number of leading bands that were realized.
    pub realized_bands: usize,
    pub total_zeros: f64,
    /// `true` when counts exceeded the budget and a continuous measure was used.
    pub continuous: bool,
}

/// Turns bands into a zero distribution, `f(0) = 1`.
///
/// Only bands with both endpoints at the `Log` level are candidates. Uniform
/// rules switch to a continuous counting law once the total exceeds `budget`;
/// the balanced rule stops at the first band that would exceed it. The first
/// `drop_first` zeros are removed (discrete realizations only).
pub fn realize_bands(bands: &BandSequence, rule: &DensityRule, budget: u64, drop_first: usize) -> Result<Realization> {
    let candidates = bands.log_level_bands();
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no band is representable at the log level".into()));
    }
    let (dist, used, total, continuous) = match rule {
        DensityRule::Counts { counts } => {
            if counts.len() < candidates.len() && counts.is_empty() {
                return Err(Error::InvalidInput("empty count list".into()));
            }
            let used = candidates.len().min(counts.len());
            let counts: Vec<u64> = counts[..used].to_vec();
            if counts.contains(&0) {
                return Err(Error::InvalidInput("band counts must be positive".into()));
            }
            let total: u64 = counts.iter().sum();
            uniform(candidates[..used].to_vec(), counts.iter().map(|&c| c as f64).collect(), total as f64, budget)
        }
        DensityRule::GrowthCap { delta } => {
            delta.validate()?;
            let mut counts = Vec::new();
            let mut total = 0.0f64;
            for band in &candidates {
                let ln_target = band.log_b * (0.5 - delta.delta(band.log_b).min(0.5));
                if ln_target > EXP_MAX {
                    break;
                }
                let target = ln_target.exp().floor();
                let k = (target - total).max(1.0);
                counts.push(k);
                total += k;
            }
            if counts.is_empty() {
                return Err(Error::InvalidInput("first band count is not representable".into()));
            }
            let used = counts.len();
            uniform(candidates[..used].to_vec(), counts, total, budget)
        }
        DensityRule::Balanced => {
            let mut logs: Vec<f64> = Vec::new();
            let mut used = 0;
            for band in &candidates {
                let before = logs.len();
                if !place_balanced(&mut logs, band, budget) {
                    logs.truncate(before);
                    break;
                }
                used += 1;
            }
            if used == 0 {
                return Err(Error::NonConvergent(format!("first band needs more than {budget} zeros")));
            }
            let total = logs.len() as f64;
            (ZeroDistribution::explicit_logs(&logs)?, used, total, false)
        }
    };
    let dist = if drop_first > 0 { drop_leading(dist, drop_first)? } else { dist };
    let valid = candidates[used - 1].log_b;
    let function = EntireProductFunction::new(0.0, dist)?.with_valid_range(valid);
    Ok(Realization { function, realized_bands: used, total_zeros: total, continuous })
}

fn uniform(bands: Vec<Band>, counts: Vec<f64>, total: f64, budget: u64) -> (ZeroDistribution, usize, f64, bool) {
    let used = bands.len();
    if total <= budget as f64 {
        let counts = counts.iter().map(|&c| c as u64).collect();
        (ZeroDistribution::BandUniformLog { bands, counts }, used, total, false)
    } else {
        (ZeroDistribution::AnalyticCounting(CountingLaw::Bands { bands, counts }), used, total, true)
    }
}

fn drop_leading(dist: ZeroDistribution, k: usize) -> Result<ZeroDistribution> {
    let mut logs = Vec::new();
    match &dist {
        ZeroDistribution::Explicit { .. } | ZeroDistribution::BandUniformLog { .. } => {
            dist.for_each_zero_below(f64::INFINITY, u64::MAX, |lt, m| {
                for _ in 0..(m as usize) {
                    logs.push(lt);
                }
            })?;
        }
        _ => return Err(Error::InvalidInput("drop_first needs a discrete realization".into())),
    }
    let k = k.min(logs.len());
    ZeroDistribution::explicit_logs(&logs[k..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_eps_gives_cubes() {
        let d = regular_zeros(&EpsSpec::Constant { eps: 1.0 / 6.0 }, 1e6f64.ln()).unwrap();
        let ZeroDistribution::Explicit { zeros } = d else { panic!() };
        assert_eq!(zeros.len(), 100);
        for (i, z) in zeros.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((z.log_t - 3.0 * n.ln()).abs() < 1e-12, "zero {n}: {}", z.log_t);
        }
    }

    #[test]
    fn small_eps_exponent() {
        let d = regular_zeros(&EpsSpec::Constant { eps: 0.01 }, 20.0).unwrap();
        let ZeroDistribution::Explicit { zeros } = d else { panic!() };
        for (i, z) in zeros.iter().enumerate().skip(1) {
            let n = (i + 1) as f64;
            assert!((z.log_t - n.ln() / 0.49).abs() < 1e-12);
        }
    }

    #[test]
    fn k_family_count_at_e10() {
        let spec = EpsSpec::KFamily { alpha: 1.0, beta: 1.0, depth: 2 };
        assert!((spec.log_n_target(10.0).unwrap().exp() - 5f64.exp() / 10.0).abs() < 1e-12);
        let d = regular_zeros(&spec, 12.0).unwrap();
        let c = d.count_up_to(10.0);
        assert!(c == 14.0 || c == 15.0, "{c}");
    }

    #[test]
    fn domain_floor_of_k_family_is_near_e() {
        let spec = EpsSpec::KFamily { alpha: 1.0, beta: 1.0, depth: 2 };
        let f = spec.domain_floor(30.0).unwrap();
        assert!((f - std::f64::consts::E).abs() < 0.01, "{f}");
    }

    #[test]
    fn table_interpolates() {
        let spec = EpsSpec::Table { points: vec![(1.0, 0.3), (3.0, 0.1)] };
        assert!((spec.eps(2.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(spec.eps(4.0), None);
    }

    #[test]
    fn non_monotone_table_rejected() {
        // n_target = lr (1/2 - eps) falls when eps jumps
        let spec = EpsSpec::Table { points: vec![(1.0, 0.1), (2.0, 0.45), (5.0, 0.45)] };
        assert!(matches!(regular_zeros(&spec, 5.0), Err(Error::NonMonotoneSpec(_))));
    }

    #[test]
    fn minimal_type_first_step() {
        let seq = minimal_type_bands(&DeltaSpec::InverseLog { scale: 1.0 }, 1.0, 2.0, 2, 10.0).unwrap();
        let la1 = seq.bands[1].a.log().unwrap();
        let lb1 = seq.bands[1].b.log().unwrap();
        let want_la1 = std::f64::consts::LN_2 + 40.0 * 2f64.exp() / 2.0;
        assert!((la1 - want_la1).abs() <= 1e-12 * want_la1);
        assert!((lb1 - 2f64.exp() / 2.0 * want_la1).abs() <= 1e-12 * lb1);
        assert!(seq.verify_minimal_type().unwrap().iter().all(StepCheck::all));
    }

    #[test]
    fn minimal_type_reaches_horizon() {
        let err = minimal_type_bands(&DeltaSpec::InverseLog { scale: 1.0 }, 1.0, 2.0, 10, 10.0).unwrap_err();
        match err {
            Error::OverflowHorizon { representable, partial } => {
                assert_eq!(representable, partial.bands.len());
                assert!(representable >= 3);
                assert!(partial.is_interlaced());
                assert!(partial.verify_minimal_type().unwrap().iter().all(StepCheck::all));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_delta_rejected() {
        let r = minimal_type_bands(&DeltaSpec::Constant { delta: 0.01 }, 1.0, 2.0, 3, 2.0);
        assert!(matches!(r, Err(Error::NonMonotoneSpec(_))));
    }

    #[test]
    fn lower_half_first_step() {
        let seq = lower_order_half_bands(0.0, 1.0, 2).unwrap();
        let la1 = seq.bands[1].a.log().unwrap();
        let lb1 = seq.bands[1].b.log().unwrap();
        assert!((la1 - (1.0 + std::f64::consts::LN_2)).abs() < 1e-15);
        let g1 = 2f64.max((2.0 * 1f64.exp()).sqrt());
        assert!((lb1 - (la1 + g1)).abs() < 1e-14);
        assert!((lb1 - 4.03).abs() < 0.01);
    }

    #[test]
    fn lower_half_invariants_until_horizon() {
        let seq = match lower_order_half_bands(0.0, 1.0, 20) {
            Ok(s) => s,
            Err(Error::OverflowHorizon { partial, .. }) => *partial,
            Err(e) => panic!("{e}"),
        };
        assert!(seq.bands.len() >= 4);
        assert!(seq.is_interlaced());
        assert!(seq.verify_lower_order_half().iter().all(StepCheck::all));
    }

    #[test]
    fn uniform_placement_uses_half_cell_offsets() {
        let seq = BandSequence {
            bands: vec![BandEnds { a: Magnitude::Log(0.0), b: Magnitude::Log(1.0) }],
            delta_spec: None,
            kind: BandKind::LowerOrderHalf,
            moderation_exponent: 2.0,
        };
        let r = realize_bands(&seq, &DensityRule::Counts { counts: vec![3] }, 100, 0).unwrap();
        let mut logs = vec![];
        r.function.zeros.for_each_zero_below(f64::INFINITY, 10, |lt, _| logs.push(lt)).unwrap();
        let want = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        for (g, w) in logs.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn counts_step_by_band() {
        let seq = BandSequence {
            bands: vec![
                BandEnds { a: Magnitude::Log(0.0), b: Magnitude::Log(1.0) },
                BandEnds { a: Magnitude::Log(2.0), b: Magnitude::Log(3.0) },
            ],
            delta_spec: None,
            kind: BandKind::LowerOrderHalf,
            moderation_exponent: 2.0,
        };
        let r = realize_bands(&seq, &DensityRule::Counts { counts: vec![2, 4] }, 100, 0).unwrap();
        assert_eq!(r.function.zeros.count_up_to(1.5), 2.0);
        assert_eq!(r.function.zeros.count_up_to(3.0), 6.0);
        let dropped = realize_bands(&seq, &DensityRule::Counts { counts: vec![2, 4] }, 100, 1).unwrap();
        assert_eq!(dropped.function.zeros.count_up_to(3.0), 5.0);
    }

    #[test]
    fn growth_cap_switches_to_continuous_over_budget() {
        let seq = minimal_type_bands(&DeltaSpec::InverseLog { scale: 1.0 }, 1.0, 2.0, 2, 10.0).unwrap();
        let r = realize_bands(&seq, &DensityRule::GrowthCap { delta: DeltaSpec::InverseLog { scale: 1.0 } }, 1000, 0)
            .unwrap();
        assert!(r.continuous);
        assert_eq!(r.realized_bands, 2);
    }
}
