//! Greedy balanced placement: each new zero goes where
//! `phi(y) = sum log|1 - e^{y - lt}|` climbs back to zero.
//!
//! Zeros end up roughly evenly spaced in `t`, so almost all of them stay
//! "near" in log terms. `phi` is evaluated with block moment expansions in
//! `tau = e^{lt - base}`, merging old blocks once they are far from `r`.

use crate::product::Band;
use crate::golden::bisect;
use crate::logdomain::log_abs_one_minus_exp;

const CHUNK: usize = 128;
const ORDER: usize = 30;
/// Block radius over distance below which the expansion is used.
const RATIO: f64 = 0.25;
/// `e^{width}` must stay finite.
const MAX_WIDTH: f64 = 700.0;

struct Block {
    lo: usize,
    hi: usize,
    c: f64,
    rho: f64,
    /// `sum u^m` for `u = (tau - c) / rho`, `m = 1..=ORDER`.
    moments: [f64; ORDER],
    /// `sum (lt - base)`.
    sum_rel: f64,
}

struct Balancer<'a> {
    logs: &'a mut Vec<f64>,
    base: f64,
    blocks: Vec<Block>,
    covered: usize,
}

impl<'a> Balancer<'a> {
    fn tau(&self, i: usize) -> f64 {
        (self.logs[i] - self.base).exp()
    }

    fn block(&self, lo: usize, hi: usize) -> Block {
        let (a, b) = (self.tau(lo), self.tau(hi - 1));
        let c = 0.5 * (a + b);
        let rho = 0.5 * (b - a);
        let mut moments = [0.0; ORDER];
        let mut sum_rel = 0.0;
        for i in lo..hi {
            sum_rel += self.logs[i] - self.base;
            let u = if rho > 0.0 { (self.tau(i) - c) / rho } else { 0.0 };
            let mut p = 1.0;
            for m in moments.iter_mut() {
                p *= u;
                *m += p;
            }
        }
        Block { lo, hi, c, rho, moments, sum_rel }
    }

    /// Absorbs full chunks of the tail, then merges neighbours that are far
    /// enough from `r` to stay expandable (`r` only grows).
    fn consolidate(&mut self, r: f64) {
        while self.logs.len() - self.covered >= CHUNK {
            let b = self.block(self.covered, self.covered + CHUNK);
            self.covered += CHUNK;
            self.blocks.push(b);
        }
        let mut i = 0;
        while i + 1 < self.blocks.len() {
            let (lo, hi) = (self.blocks[i].lo, self.blocks[i + 1].hi);
            let (a, b) = (self.tau(lo), self.tau(hi - 1));
            let (c, rho) = (0.5 * (a + b), 0.5 * (b - a));
            if rho <= RATIO * (r - c) {
                let merged = self.block(lo, hi);
                self.blocks.splice(i..i + 2, [merged]);
            } else {
                i += 1;
            }
        }
    }

    fn direct(&self, y: f64, lo: usize, hi: usize) -> f64 {
        self.logs[lo..hi].iter().map(|&lt| log_abs_one_minus_exp(y - lt)).sum()
    }

    fn phi(&self, y: f64) -> f64 {
        let r = (y - self.base).exp();
        let mut total = self.direct(y, self.covered, self.logs.len());
        for b in &self.blocks {
            let d = r - b.c;
            if b.rho <= RATIO * d {
                let q = b.rho / d;
                let mut series = 0.0;
                let mut qm = 1.0;
                for (m, mm) in b.moments.iter().enumerate() {
                    qm *= q;
                    series += qm * mm / (m + 1) as f64;
                }
                total += (b.hi - b.lo) as f64 * d.ln() - series - b.sum_rel;
            } else {
                total += self.direct(y, b.lo, b.hi);
            }
        }
        total
    }

    /// Smallest `y > last` with `phi(y) >= 0`, given `phi(lo) < 0 <= phi(hi)`.
    fn root(&self, mut lo: f64, mut hi: f64) -> f64 {
        let mut f_lo = self.phi(lo);
        let mut f_hi = self.phi(hi);
        let mut side = 0;
        for _ in 0..200 {
            if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                break;
            }
            let x = if f_lo.is_finite() && f_hi.is_finite() {
                let x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
                if x > lo && x < hi {
                    x
                } else {
                    0.5 * (lo + hi)
                }
            } else {
                0.5 * (lo + hi)
            };
            let fx = self.phi(x);
            if fx >= 0.0 {
                hi = x;
                f_hi = fx;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
                if fx <= 1e-13 {
                    break;
                }
            } else {
                lo = x;
                f_lo = fx;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            }
        }
        hi
    }
}

/// Places zeros from `band.log_a` onwards. Returns `false` (leaving extra
/// entries in `logs` for the caller to truncate) if the budget would be
/// exceeded.
pub(crate) fn place_balanced(logs: &mut Vec<f64>, band: &Band, budget: u64) -> bool {
    let width = band.log_b - band.log_a;
    if width > MAX_WIDTH || !balanced_fits(logs.len() as u64, width, budget) {
        return false;
    }
    logs.push(band.log_a);
    let mut bal = Balancer { logs, base: band.log_a, blocks: Vec::new(), covered: 0 };
    let mut last = band.log_a;
    loop {
        if bal.logs.len() as u64 > budget {
            return false;
        }
        bal.consolidate((last - bal.base).exp());
        let mut step = 1e-3;
        let mut hi = last + step;
        while bal.phi(hi) < 0.0 {
            if hi > band.log_b {
                return true;
            }
            step *= 2.0;
            hi = last + step;
        }
        let lo = if step > 1e-3 { last + step / 2.0 } else { last };
        let next = bal.root(lo, hi);
        if next > band.log_b {
            return true;
        }
        bal.logs.push(next);
        last = next;
    }
}

/// With `k` zeros below, the next greedy gap is at most the root of
/// `(k - 1) g + ln g = 0`. Summing these bounds gives the least width the
/// budget can cover; a wider band cannot be balanced within it.
pub(crate) fn balanced_fits(existing: u64, width: f64, budget: u64) -> bool {
    let mut covered = 0.0;
    let mut k = existing + 1;
    while k <= budget {
        let g = if k <= 1 {
            f64::INFINITY
        } else {
            let a = (k - 1) as f64;
            bisect(|g| a * g + g.ln() < 0.0, 1e-300, 1.0, 1e-15, 200).1
        };
        covered += g;
        if covered >= width {
            return true;
        }
        k += 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_matches_direct_sum() {
        let mut logs: Vec<f64> = (1..=2000).map(|k| (3.0 + 0.01 * k as f64).ln() + 2.0).collect();
        let base = 2.0;
        let y = logs.last().unwrap() + 0.3;
        let direct: f64 = logs.iter().map(|&lt| log_abs_one_minus_exp(y - lt)).sum();
        let mut bal = Balancer { logs: &mut logs, base, blocks: Vec::new(), covered: 0 };
        bal.consolidate((y - base).exp());
        assert!(bal.blocks.len() < 2000 / CHUNK, "{} blocks", bal.blocks.len());
        let fast = bal.phi(y);
        assert!((fast - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{fast} vs {direct}");
    }

    #[test]
    fn placed_zeros_balance_phi() {
        let mut logs = vec![0.0];
        assert!(place_balanced(&mut logs, &Band { log_a: 1.0, log_b: 6.0 }, 10_000));
        for w in logs.windows(2) {
            assert!(w[0] < w[1]);
        }
        for j in 2..logs.len() {
            let y = logs[j];
            let phi: f64 = logs[..j].iter().map(|&lt| log_abs_one_minus_exp(y - lt)).sum();
            assert!(phi.abs() < 1e-8, "zero {j}: phi = {phi}");
        }
    }
}
