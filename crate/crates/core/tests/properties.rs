use std::f64::consts::{LN_2, PI};

use minmod_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn settings() -> EvalSettings {
    EvalSettings::default()
}

fn zero_set() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..6.0, 1..40).prop_map(|v| v.into_iter().map(|x| 10f64.powf(x)).collect())
}

fn explicit(zeros: &[f64], log_c: f64) -> EntireProductFunction {
    EntireProductFunction::new(log_c, ZeroDistribution::explicit(zeros).unwrap()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulus_decreases_with_angle(zeros in zero_set(), lr in -3.0f64..15.0, a in 0.0f64..PI, b in 0.0f64..PI) {
        let f = explicit(&zeros, 0.0);
        let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
        let v1 = f.log_abs_at_angle(LogRadius::of(lr), t1, &settings()).unwrap().as_f64();
        let v2 = f.log_abs_at_angle(LogRadius::of(lr), t2, &settings()).unwrap().as_f64();
        prop_assert!(v1 >= v2 - 1e-10 * (1.0 + v1.abs()), "{v1} < {v2}");
    }

    #[test]
    fn min_modulus_below_max(zeros in zero_set(), lr in -3.0f64..15.0, log_c in -3.0f64..3.0) {
        let f = explicit(&zeros, log_c);
        let lo = f.log_min_modulus(LogRadius::of(lr), &settings()).unwrap();
        let hi = f.log_max_modulus(LogRadius::of(lr), &settings()).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn agrees_with_direct_complex_product(zeros in prop::collection::vec(-1.0f64..4.0, 1..25), lr in -2.0f64..8.0, theta in 0.0f64..PI) {
        let ts: Vec<f64> = zeros.iter().map(|x| 10f64.powf(*x)).collect();
        let f = explicit(&ts, 0.0);
        let z = Complex64::from_polar(lr.exp(), theta);
        let direct: f64 = ts.iter().map(|&t| (Complex64::new(1.0, 0.0) + z / t).norm().ln()).sum();
        let got = f.log_abs_at_angle(LogRadius::of(lr), theta, &settings()).unwrap();
        if let Some(v) = got.finite() {
            prop_assert!(close(v, direct, 1e-10), "{v} vs {direct}");
        }
    }

    #[test]
    fn mtilde_is_nondecreasing(zeros in zero_set(), lo in -2.0f64..4.0, span in 0.5f64..8.0) {
        let f = explicit(&zeros, 0.0);
        let lrs: Vec<LogRadius> = (0..12).map(|i| LogRadius::of(lo + span * i as f64 / 11.0)).collect();
        let prof = m_tilde_profile(&f, &lrs, &ScanSettings::default(), &settings()).unwrap();
        for w in prof.checkpoints.windows(2) {
            prop_assert!(w[1].log_mtilde >= w[0].log_mtilde);
        }
        for c in &prof.checkpoints {
            let m = f.log_min_modulus(c.lr, &settings()).unwrap();
            prop_assert!(c.log_mtilde.as_f64() >= m.as_f64() - 1e-9 * (1.0 + m.as_f64().abs()));
        }
    }

    #[test]
    fn sandwich_holds_on_random_sets(zeros in zero_set(), lr in -2.0f64..16.0, log_c in -2.0f64..2.0) {
        let f = explicit(&zeros, log_c);
        let r = sandwich_check(&f, LogRadius::of(lr), &settings(), &QuadSettings::default()).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn criterion_forms_agree(q in prop::sample::select(vec![2.0, 3.0]), ls in 1.5f64..12.0, gap in 0.1f64..10.0) {
        let f = EntireProductFunction::new(0.0, ZeroDistribution::PowerSequence { exponent: q }).unwrap();
        let c = criterion_forms(&f, LogRadius::of(ls + gap), LogRadius::of(ls), &settings()).unwrap();
        prop_assert!(close(c.main, c.eps_form, 1e-9), "{c:?}");
        prop_assert!(close(c.main, c.k_form, 1e-9), "{c:?}");
    }

    #[test]
    fn hybrid_power_sequence_within_tail_bound(q in 1.5f64..4.0, frac in 0.2f64..0.8) {
        let k = 2000usize;
        let head: Vec<f64> = (1..=k).map(|n| (n as f64).powf(q)).collect();
        let cutoff = (k as f64).ln() * q;
        let lr = frac * (cutoff - 2.0);
        let s = settings();
        let hybrid = EntireProductFunction::new(0.0, ZeroDistribution::PowerSequence { exponent: q }).unwrap();
        let trunc = explicit(&head, 0.0);
        let bound = ZeroDistribution::PowerSequence { exponent: q }.tail_bound(lr, cutoff + 1e-12).unwrap();
        for (a, b) in [
            (hybrid.log_max_modulus(LogRadius::of(lr), &s).unwrap(), trunc.log_max_modulus(LogRadius::of(lr), &s).unwrap()),
            (hybrid.log_min_modulus(LogRadius::of(lr), &s).unwrap(), trunc.log_min_modulus(LogRadius::of(lr), &s).unwrap()),
        ] {
            if let (Some(a), Some(b)) = (a.finite(), b.finite()) {
                prop_assert!((a - b).abs() <= bound + 1e-8 * (1.0 + a.abs()), "{a} vs {b}, bound {bound}");
            }
        }
    }

    #[test]
    fn regular_zero_count_tracks_target(eps in 0.05f64..0.45, frac in 0.0f64..1.0) {
        let spec = EpsSpec::Constant { eps };
        let max_lr = 12.0;
        let d = regular_zeros(&spec, max_lr).unwrap();
        let lr = 0.5 + frac * (max_lr - 0.5);
        let target = spec.log_n_target(lr).unwrap().exp();
        prop_assert!((d.count_up_to(lr) - target).abs() <= 1.0);
    }

    #[test]
    fn k_family_count_tracks_target(alpha in 0.5f64..2.0, beta in 0.5f64..1.5, frac in 0.0f64..1.0) {
        let spec = EpsSpec::KFamily { alpha, beta, depth: 2 };
        let max_lr = 14.0;
        let Ok(d) = regular_zeros(&spec, max_lr) else { return Ok(()) };
        let floor = spec.domain_floor(max_lr).unwrap();
        let lr = floor + frac * (max_lr - floor);
        let target = spec.log_n_target(lr).unwrap().exp();
        prop_assert!((d.count_up_to(lr) - target).abs() <= 1.0, "lr {lr}: {} vs {target}", d.count_up_to(lr));
    }

    #[test]
    fn lower_half_bands_keep_ratios(a0 in 0.0f64..3.0, w in 0.2f64..3.0, n in 2usize..8) {
        let seq = match lower_order_half_bands(a0, a0 + w, n) {
            Ok(s) => s,
            Err(Error::OverflowHorizon { partial, .. }) => *partial,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let bands = seq.log_level_bands();
        for p in bands.windows(2) {
            prop_assert!((p[1].log_a - p[0].log_b - LN_2).abs() <= 1e-12 * p[1].log_a.max(1.0));
            prop_assert!(p[1].log_b - p[1].log_a > p[0].log_b - p[0].log_a);
        }
        prop_assert!(seq.verify_lower_order_half().iter().all(|c| c.all()));
    }

    #[test]
    fn realized_zeros_lie_in_bands(a0 in 0.0f64..2.0, w in 0.2f64..2.0, counts in prop::collection::vec(1u64..50, 1..4)) {
        let seq = match lower_order_half_bands(a0, a0 + w, 3) {
            Ok(s) => s,
            Err(Error::OverflowHorizon { partial, .. }) => *partial,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let real = realize_bands(&seq, &DensityRule::Counts { counts: counts.clone() }, 100_000, 0).unwrap();
        let bands = &seq.log_level_bands()[..real.realized_bands];
        let ZeroLayout::Discrete(logs) = real.function.zeros.layout_between(f64::NEG_INFINITY, f64::INFINITY, 1_000_000) else {
            return Err(TestCaseError::fail("expected discrete zeros"));
        };
        prop_assert_eq!(logs.len() as u64, counts[..real.realized_bands].iter().sum::<u64>());
        for lt in logs {
            prop_assert!(bands.iter().any(|b| b.log_a <= lt && lt <= b.log_b), "{lt} outside bands");
        }
    }

    #[test]
    fn log_add_exp_matches_direct(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        let direct = (a.exp() + b.exp()).ln();
        prop_assert!(close(log_add_exp(a, b), direct, 1e-14));
        prop_assert_eq!(log_add_exp(a, b), log_add_exp(b, a));
    }

    #[test]
    fn serde_round_trips(zeros in zero_set(), log_c in -3.0f64..3.0, eps in 0.01f64..0.49) {
        let f = explicit(&zeros, log_c).with_valid_range(20.0);
        let back: EntireProductFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
        for spec in [EpsSpec::Constant { eps }, EpsSpec::KFamily { alpha: eps, beta: 1.0, depth: 2 }] {
            let back: EpsSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            prop_assert_eq!(back, spec);
        }
        let seq = lower_order_half_bands(0.0, 1.0, 3).unwrap();
        let back: BandSequence = serde_json::from_str(&serde_json::to_string(&seq).unwrap()).unwrap();
        prop_assert_eq!(back, seq);
    }
}
