//! Maximum modulus `M(r)`, minimum modulus `m(r)` and the running maximum
//! `m~(r) = max{ m(s) : 0 <= s <= r }`.
//!
//! For products over negative zeros `theta -> log|f(r e^{i theta})|` is
//! nonincreasing on `[0, pi]`, so `M(r) = f(r)` and `m(r) = |f(-r)|`.
//! [`brute_force_extrema`] checks that shortcut against a full angular grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golden;
use crate::logdomain::{LogRadius, LogValue};
use crate::product::{EntireProductFunction, EvalSettings, ZeroLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub points_per_decade: u32,
    /// Bracket width (in log r) at which golden-section refinement stops.
    pub refine_tol: f64,
    pub refine_iters: usize,
    /// Refine gap by gap when at most this many zeros lie in the window.
    pub gap_limit: usize,
    /// How many of the best grid local maxima get refined.
    pub refine_top: usize,
    /// Window width in decades for continuous counting laws.
    pub span_decades: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            points_per_decade: 64,
            refine_tol: 1e-10,
            refine_iters: 200,
            gap_limit: 512,
            refine_top: 8,
            span_decades: 8.0,
        }
    }
}

/// Where `m~(r)` is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ArgMax {
    /// The `s -> 0+` limit, where `m(s) -> c`.
    Origin,
    At(LogRadius),
}

impl ArgMax {
    pub fn log_radius(self) -> Option<LogRadius> {
        match self {
            ArgMax::Origin => None,
            ArgMax::At(lr) => Some(lr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MTilde {
    pub log_value: LogValue,
    pub argmax: ArgMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtildeCheckpoint {
    pub lr: LogRadius,
    pub log_mtilde: LogValue,
    pub argmax: ArgMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtildeProfile {
    pub checkpoints: Vec<MtildeCheckpoint>,
}

impl EntireProductFunction {
    /// `log M(r) = log f(r)`.
    pub fn log_max_modulus(&self, lr: LogRadius, settings: &EvalSettings) -> Result<LogValue> {
        self.log_abs_at_angle(lr, 0.0, settings)
    }

    /// `log m(r) = log|f(-r)|`; `NegInfinity` exactly at zeros.
    pub fn log_min_modulus(&self, lr: LogRadius, settings: &EvalSettings) -> Result<LogValue> {
        self.log_abs_at_angle(lr, std::f64::consts::PI, settings)
    }

    fn log_min_f64(&self, lr: f64, settings: &EvalSettings) -> Result<f64> {
        Ok(self.log_min_modulus(LogRadius::new(lr)?, settings)?.as_f64())
    }
}

/// Extrema of `log|f|` over a uniform grid of `grid_points` angles on `[0, pi]`.
pub fn brute_force_extrema(
    f: &EntireProductFunction,
    lr: LogRadius,
    grid_points: usize,
    settings: &EvalSettings,
) -> Result<(LogValue, LogValue)> {
    if grid_points < 16 {
        return Err(Error::InvalidInput(format!("grid_points = {grid_points} < 16")));
    }
    let mut lo = LogValue::Finite(f64::INFINITY);
    let mut hi = LogValue::NegInfinity;
    for i in 0..grid_points {
        let theta = if i + 1 == grid_points {
            std::f64::consts::PI
        } else {
            std::f64::consts::PI * i as f64 / (grid_points - 1) as f64
        };
        let v = f.log_abs_at_angle(lr, theta, settings)?;
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Ok((lo, hi))
}

/// `log m~(r)` and where it is attained.
pub fn m_tilde(f: &EntireProductFunction, lr: LogRadius, scan: &ScanSettings, settings: &EvalSettings) -> Result<MTilde> {
    let mut best = MTilde { log_value: LogValue::Finite(f.log_c), argmax: ArgMax::Origin };
    let top = lr.get();
    let consider = |lr_s: f64, v: f64, best: &mut MTilde| {
        let v = LogValue::from_f64(v);
        if v > best.log_value {
            *best = MTilde { log_value: v, argmax: ArgMax::At(LogRadius::of(lr_s)) };
        }
    };

    // m is decreasing below the first zero, so the window starts there.
    let first_zero = first_zero_log(f);
    let lo = match first_zero {
        Some(z) => z,
        None => top - scan.span_decades * std::f64::consts::LN_10,
    };
    if lo >= top {
        let v = f.log_min_f64(top, settings)?;
        consider(top, v, &mut best);
        return Ok(best);
    }

    let eta = 4.0 * settings.singularity_exclusion;
    match f.zeros.layout_between(lo, top, scan.gap_limit) {
        ZeroLayout::Discrete(zs) if !zs.is_empty() => {
            let mut pieces: Vec<(f64, f64)> = zs.windows(2).map(|w| (w[0] + eta, w[1] - eta)).collect();
            let last = *zs.last().unwrap();
            if top > last + eta {
                pieces.push((last + eta, top));
            }
            for (a, b) in pieces {
                if b <= a {
                    continue;
                }
                let mut err = None;
                let ext = golden::maximize(
                    |x| match f.log_min_f64(x, settings) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    },
                    a,
                    b,
                    scan.refine_tol,
                    scan.refine_iters,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                consider(ext.x, ext.value, &mut best);
            }
        }
        _ => {
            let grid = scan_grid(f, lo, top, scan, settings);
            let mut samples = Vec::with_capacity(grid.len());
            for &x in &grid {
                samples.push((x, f.log_min_f64(x, settings)?));
            }
            for &(x, v) in &samples {
                consider(x, v, &mut best);
            }
            // local maxima of the grid, best first
            let mut peaks: Vec<usize> = (0..samples.len())
                .filter(|&i| {
                    let v = samples[i].1;
                    (i == 0 || samples[i - 1].1 <= v) && (i + 1 == samples.len() || samples[i + 1].1 <= v)
                })
                .collect();
            peaks.sort_by(|&a, &b| samples[b].1.partial_cmp(&samples[a].1).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            for &i in peaks.iter().take(scan.refine_top) {
                let a = samples[i.saturating_sub(1)].0;
                let b = samples[(i + 1).min(samples.len() - 1)].0;
                let mut err = None;
                let ext = golden::maximize(
                    |x| match f.log_min_f64(x, settings) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    },
                    a,
                    b,
                    scan.refine_tol,
                    scan.refine_iters,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                consider(ext.x, ext.value, &mut best);
            }
        }
    }
    Ok(best)
}

/// `m~` at each of the (ascending) radii, forced nondecreasing.
pub fn m_tilde_profile(
    f: &EntireProductFunction,
    lrs: &[LogRadius],
    scan: &ScanSettings,
    settings: &EvalSettings,
) -> Result<MtildeProfile> {
    let mut checkpoints: Vec<MtildeCheckpoint> = Vec::with_capacity(lrs.len());
    for &lr in lrs {
        if let Some(prev) = checkpoints.last() {
            if lr <= prev.lr {
                return Err(Error::InvalidInput("m~ profile radii must be strictly ascending".into()));
            }
        }
        let mt = m_tilde(f, lr, scan, settings)?;
        let cp = match checkpoints.last() {
            Some(prev) if prev.log_mtilde > mt.log_value => MtildeCheckpoint { lr, ..*prev },
            _ => MtildeCheckpoint { lr, log_mtilde: mt.log_value, argmax: mt.argmax },
        };
        checkpoints.push(cp);
    }
    Ok(MtildeProfile { checkpoints })
}

fn first_zero_log(f: &EntireProductFunction) -> Option<f64> {
    let mut first = None;
    let _ = f.zeros.for_each_zero_below(f64::INFINITY, 1, |lt, _| {
        first.get_or_insert(lt);
    });
    first
}

/// Log-spaced grid on `[lo, hi]` (endpoint included), nudged off zeros.
pub(crate) fn scan_grid(f: &EntireProductFunction, lo: f64, hi: f64, scan: &ScanSettings, settings: &EvalSettings) -> Vec<f64> {
    let step = std::f64::consts::LN_10 / scan.points_per_decade.max(1) as f64;
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let jitter = 4.0 * settings.singularity_exclusion;
    (0..=n)
        .map(|i| {
            let x = if i == n { hi } else { lo + i as f64 * step };
            match f.zeros.nearest_zero_distance(x) {
                Some(d) if d < 2.0 * settings.singularity_exclusion && i != n => x + jitter,
                _ => x,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::ZeroDistribution;

    fn one_plus_z() -> EntireProductFunction {
        EntireProductFunction::new(0.0, ZeroDistribution::explicit(&[1.0]).unwrap()).unwrap()
    }

    fn lr(r: f64) -> LogRadius {
        LogRadius::from_radius(r).unwrap()
    }

    #[test]
    fn single_factor_moduli() {
        let f = one_plus_z();
        let s = EvalSettings::default();
        assert!((f.log_max_modulus(lr(3.0), &s).unwrap().as_f64() - 4f64.ln()).abs() < 1e-15);
        assert!(f.log_min_modulus(lr(2.0), &s).unwrap().as_f64().abs() < 1e-15);
    }

    #[test]
    fn m_tilde_single_factor() {
        let f = one_plus_z();
        let s = EvalSettings::default();
        let scan = ScanSettings::default();
        let a = m_tilde(&f, lr(1.5), &scan, &s).unwrap();
        assert_eq!(a.argmax, ArgMax::Origin);
        assert_eq!(a.log_value, LogValue::Finite(0.0));
        let b = m_tilde(&f, lr(10.0), &scan, &s).unwrap();
        assert!((b.log_value.as_f64() - 9f64.ln()).abs() < 1e-12);
        assert!((b.argmax.log_radius().unwrap().get() - 10f64.ln()).abs() < 1e-12);
        // below the first zero only the origin counts
        let c = m_tilde(&f, lr(0.5), &scan, &s).unwrap();
        assert_eq!(c.argmax, ArgMax::Origin);
    }

    #[test]
    fn brute_force_needs_sixteen_points() {
        assert!(brute_force_extrema(&one_plus_z(), lr(2.0), 8, &EvalSettings::default()).is_err());
        let (lo, hi) = brute_force_extrema(&one_plus_z(), lr(2.0), 4096, &EvalSettings::default()).unwrap();
        assert!(lo.as_f64().abs() < 1e-12);
        assert!((hi.as_f64() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn profile_is_monotone_and_rejects_unsorted() {
        let f = one_plus_z();
        let lrs: Vec<LogRadius> = [0.5, 1.5, 3.0, 10.0].iter().map(|&r| lr(r)).collect();
        let p = m_tilde_profile(&f, &lrs, &ScanSettings::default(), &EvalSettings::default()).unwrap();
        for w in p.checkpoints.windows(2) {
            assert!(w[1].log_mtilde >= w[0].log_mtilde);
        }
        let bad = [lr(3.0), lr(2.0)];
        assert!(m_tilde_profile(&f, &bad, &ScanSettings::default(), &EvalSettings::default()).is_err());
    }
}
