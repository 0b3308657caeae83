//! Golden-section search for the maximum of a unimodal function.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

/// Maximizes `f` on `[a, b]`, assuming a single interior maximum (or a
/// monotone function, in which case the better endpoint is returned).
///
/// Stops when the bracket is narrower than `x_tol` or after `max_iter`
/// shrink steps. The endpoints themselves are compared against the interior
/// result, so a monotone `f` still yields its true maximum.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, x_tol: f64, max_iter: usize) -> Extremum {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    let mut best = if f_hi > f_lo { Extremum { x: hi, value: f_hi } } else { Extremum { x: lo, value: f_lo } };

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= x_tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.value {
            best = Extremum { x, value: v };
        }
    }
    best
}

/// Bisection for the crossing of a monotone predicate: `pred(lo)` and
/// `!pred(hi)` are assumed; returns a point within `x_tol` of the switch.
pub fn bisect<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> (f64, f64) {
    for _ in 0..max_iter {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let e = maximize(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 4.0, 1e-12, 200);
        assert!((e.x - 0.3).abs() < 1e-6);
        assert!((e.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_function_returns_endpoint() {
        let e = maximize(|x| x, 0.0, 1.0, 1e-10, 200);
        assert_eq!(e.x, 1.0);
        let e = maximize(|x| -x, 0.0, 1.0, 1e-10, 200);
        assert_eq!(e.x, 0.0);
    }

    #[test]
    fn bisect_locates_threshold() {
        let (lo, hi) = bisect(|x| x * x < 2.0, 0.0, 2.0, 1e-14, 200);
        assert!(lo <= 2f64.sqrt() && 2f64.sqrt() <= hi);
        assert!(hi - lo <= 1e-14);
    }
}
