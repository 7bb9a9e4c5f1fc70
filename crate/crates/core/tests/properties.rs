use counterfact::metrics::{msis, wape, wrmspe, MetricConfig};
use counterfact::panel::{make_training_windows, Panel, Role, UnitSeries};
use counterfact::probnet::forecast::extract_quantiles;
use counterfact::stats::{rank_sum, wilcoxon_signed_rank, TestMode};
use proptest::prelude::*;

fn panel(t: usize, t0: usize) -> Panel {
    let units = vec![
        UnitSeries {
            unit_id: "a".into(),
            role: Role::Treated,
            values: (0..t).map(|v| v as f64).collect(),
        },
        UnitSeries {
            unit_id: "b".into(),
            role: Role::Control,
            values: (0..t).map(|v| 2.0 * v as f64).collect(),
        },
    ];
    Panel::new(units, 0, 3600, 0, t0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_count_formula(t0 in 4usize..80, h in 1usize..10, c in 1usize..10, stride in 1usize..6) {
        let p = panel(t0 + 5, t0);
        let res = make_training_windows(&p.pre(), h, c, stride);
        if c + h > t0 {
            prop_assert!(res.is_err());
        } else {
            let w = res.unwrap();
            let per_unit = (t0 - (c + h)) / stride + 1;
            prop_assert_eq!(w.len(), 2 * per_unit);
            for win in &w {
                prop_assert!(win.start_index + c + h <= t0);
                prop_assert!(win.scale >= 1.0);
            }
        }
    }

    #[test]
    fn point_metrics_scale_invariant(
        y in prop::collection::vec(1.0f64..100.0, 1..30),
        noise in prop::collection::vec(-5.0f64..5.0, 30),
        k in 0.1f64..50.0,
    ) {
        let f: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let ky: Vec<f64> = y.iter().map(|v| k * v).collect();
        let kf: Vec<f64> = f.iter().map(|v| k * v).collect();
        let (a, b) = (wape(&y, &f).unwrap(), wape(&ky, &kf).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let (a, b) = (wrmspe(&y, &f).unwrap(), wrmspe(&ky, &kf).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn msis_linear_in_width_under_full_coverage(
        y in prop::collection::vec(0.0f64..10.0, 1..20),
        w in 0.5f64..5.0,
    ) {
        let cfg = MetricConfig { seasonality: 1, ..Default::default() };
        let ins = [0.0, 1.0, 3.0, 2.0];
        let lo: Vec<f64> = y.iter().map(|v| v - w).collect();
        let hi: Vec<f64> = y.iter().map(|v| v + w).collect();
        let lo2: Vec<f64> = y.iter().map(|v| v - 2.0 * w).collect();
        let hi2: Vec<f64> = y.iter().map(|v| v + 2.0 * w).collect();
        let a = msis(&y, &lo, &hi, &ins, &cfg).unwrap();
        let b = msis(&y, &lo2, &hi2, &ins, &cfg).unwrap();
        prop_assert!((b - 2.0 * a).abs() < 1e-9);
    }

    #[test]
    fn rank_tests_invariant_under_monotone_maps(
        a in prop::collection::vec(-5.0f64..5.0, 1..15),
        b in prop::collection::vec(-5.0f64..5.0, 1..15),
    ) {
        let g = |v: f64| v.powi(3) + 2.0 * v;
        let ga: Vec<f64> = a.iter().map(|&v| g(v)).collect();
        let gb: Vec<f64> = b.iter().map(|&v| g(v)).collect();
        let r1 = rank_sum(&a, &b, TestMode::Auto).unwrap();
        let r2 = rank_sum(&ga, &gb, TestMode::Auto).unwrap();
        prop_assert_eq!(r1.p_value, r2.p_value);
        if a.iter().any(|&v| v != 0.0) {
            // g is odd, so signs and |x| ordering are preserved.
            let s1 = wilcoxon_signed_rank(&a, TestMode::Auto).unwrap();
            let s2 = wilcoxon_signed_rank(&ga, TestMode::Auto).unwrap();
            prop_assert_eq!(s1.p_value, s2.p_value);
            let mut rev = a.clone();
            rev.reverse();
            prop_assert_eq!(wilcoxon_signed_rank(&rev, TestMode::Auto).unwrap().p_value, s1.p_value);
        }
    }

    #[test]
    fn fans_are_monotone(paths in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 5), 2..40)) {
        let grid = [0.01, 0.1, 0.33, 0.5, 0.77, 0.9, 0.99];
        let fan = extract_quantiles(&paths, &grid).unwrap();
        for t in 0..5 {
            for q in 1..grid.len() {
                prop_assert!(fan[q][t] >= fan[q - 1][t]);
            }
        }
    }
}
