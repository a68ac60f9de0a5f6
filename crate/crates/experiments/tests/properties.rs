use proptest::prelude::*;
use schrolab_experiments::report::{median, spread};
use schrolab_experiments::{ExperimentConfig, ExperimentReport, Kind, Row};

proptest! {
    #[test]
    fn spread_is_scale_free_and_at_least_one(v in prop::collection::vec(1e-6f64..1e6, 1..40), c in 1e-3f64..1e3) {
        let s = spread(&v);
        prop_assert!(s >= 1.0);
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((spread(&scaled) / s - 1.0).abs() < 1e-9);
        let m = median(&v);
        prop_assert!(v.iter().any(|&x| x <= m) && v.iter().any(|&x| x >= m));
    }

    #[test]
    fn reports_sort_rows_by_parameters(mut rows in prop::collection::vec((0u8..8, 0u8..8, 0.1f64..10.0), 1..30)) {
        let make = |rows: &[(u8, u8, f64)]| {
            let rows = rows.iter().map(|&(a, b, m)| Row::new(vec![a as f64, b as f64], m, 2.0)).collect();
            ExperimentReport::new(Kind::LpBound, vec!["a", "b"], rows)
        };
        let r = make(&rows);
        prop_assert!(r.rows.windows(2).all(|w| w[0].params <= w[1].params));
        prop_assert!(r.rows.iter().all(|row| row.ratio == row.measured / 2.0));
        rows.reverse();
        let again = make(&rows);
        let key = |r: &ExperimentReport| r.rows.iter().map(|x| x.params.clone()).collect::<Vec<_>>();
        prop_assert_eq!(key(&r), key(&again));
    }

    #[test]
    fn config_survives_a_pairs_round_trip(
        t in prop::collection::vec(0.0f64..100.0, 1..6),
        k in prop::collection::vec(-4i32..8, 1..5),
        seed in any::<u64>(),
        e in 3u32..12,
    ) {
        let mut cfg = ExperimentConfig::defaults(Kind::TailIntegral);
        cfg.t = t;
        cfg.k = k;
        cfg.seed = seed;
        cfg.points = 1 << e;
        let mut other = ExperimentConfig::defaults(Kind::CalculusOracle);
        for (key, value) in cfg.pairs() {
            other.set(key, &value).unwrap();
        }
        prop_assert_eq!(other, cfg);
    }
}
