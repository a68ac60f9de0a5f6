use std::sync::Arc;

use proptest::prelude::*;
use schrolab_core::cz::decompose;
use schrolab_core::norms::{annulus_tail_integral, lp_norm, weak_lp_quasinorm};
use schrolab_core::operators::{build_periodic, build_schrodinger};
use schrolab_core::symbols::{
    build_fk, build_gk, dyadic_bump, heat_symbol, resolvent_power, schrodinger_symbol,
};
use schrolab_core::{Complex, Direction, Field, Grid, Mask};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..=3, 3u32..=4, 0.5f64..20.0).prop_map(|(dim, e, l)| {
        let points = if dim == 3 { 8 } else { 1 << e };
        Grid::new(dim, points, l).unwrap()
    })
}

fn field_on(grid: Grid) -> impl Strategy<Value = Field> {
    let len = grid.len();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |v| {
        Field::from_values(
            &grid,
            v.into_iter().map(|(a, b)| Complex::new(a, b)).collect(),
        )
        .unwrap()
    })
}

fn grid_and_field() -> impl Strategy<Value = Field> {
    grid_strategy().prop_flat_map(field_on)
}

fn real_nonneg_field(dim: usize, points: usize, l: f64) -> impl Strategy<Value = Field> {
    let grid = Grid::new(dim, points, l).unwrap();
    prop::collection::vec(0.0f64..1.0, grid.len())
        .prop_map(move |v| Field::from_real(&grid, &v).unwrap())
}

fn brute_weak(values: &[f64], weight: f64, p: f64) -> f64 {
    values
        .iter()
        .map(|&lambda| {
            let count = values.iter().filter(|&&v| v >= lambda).count();
            lambda * (count as f64 * weight).powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn torus_distance_is_a_metric(g in grid_strategy(), a in 0usize..512, b in 0usize..512, c in 0usize..512) {
        let (a, b, c) = (a % g.len(), b % g.len(), c % g.len());
        let dab = g.distance_linear(a, b);
        prop_assert_eq!(dab, g.distance_linear(b, a));
        prop_assert!(g.distance_linear(a, c) <= dab + g.distance_linear(b, c) + 1e-12);
        prop_assert!(dab <= g.diameter() + 1e-12);
    }

    #[test]
    fn ball_volume_is_homogeneous(g in grid_strategy(), a in 0usize..512, r in 0.01f64..10.0) {
        let idx = g.multi_index(a % g.len());
        let v = g.ball_volume(&idx[..g.dim()], r).unwrap();
        let origin = [0usize; 3];
        prop_assert_eq!(v, g.ball_volume(&origin[..g.dim()], r).unwrap());
        prop_assert!(v >= g.cell_measure() && v <= g.total_measure());
    }

    #[test]
    fn transform_round_trip_and_plancherel(f in grid_and_field()) {
        let hat = f.spectral_transform(Direction::Forward).unwrap();
        let back = hat.spectral_transform(Direction::Inverse).unwrap();
        let scale = lp_norm(&f, f64::INFINITY).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale.max(1e-300));
        }
        let (l, r) = (lp_norm(&f, 2.0).unwrap(), lp_norm(&hat, 2.0).unwrap());
        prop_assert!((l - r).abs() <= 1e-12 * l);
    }

    #[test]
    fn partition_of_unity(log_lambda in -13.8f64..13.8) {
        let phi = dyadic_bump::<f64>();
        let lambda = log_lambda.exp();
        let sum: f64 = (-60..=60).map(|l| phi.eval(2f64.powi(-l) * lambda).re).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fk_plus_gk(k0 in 0i32..4, dk in 1i32..5, m in 2i32..5, n in 1i32..4, x in 0.0f64..1e4) {
        let k = k0 + dk;
        let f = build_fk::<f64>(k, k0, m, n).unwrap();
        let g = build_gk::<f64>(k, k0, m, n).unwrap();
        let total = (1.0 + x).powf(-(n as f64) / 2.0) * -(-(2f64.powi(m * k)) * x).exp_m1();
        prop_assert!((f.eval(x).re + g.eval(x).re - total).abs() <= 1e-14);
    }

    #[test]
    fn weak_quasinorm_matches_brute_force(values in prop::collection::vec(0u32..6, 8..=16), p in 1.0f64..3.0) {
        let len = if values.len() >= 16 { 16 } else { 8 };
        let v: Vec<f64> = values.iter().take(len).map(|&x| x as f64).collect();
        let g = Grid::new(1, len, 2.0 * len as f64).unwrap();
        let f = Field::from_real(&g, &v).unwrap();
        let report = weak_lp_quasinorm(&f, p).unwrap();
        prop_assert_eq!(report.weak_quasinorm, brute_weak(&v, g.cell_measure(), p));
        prop_assert!(report.weak_quasinorm <= lp_norm(&f, p).unwrap() * (1.0 + 1e-12));
        for w in report.measures.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn weak_l1_quasi_triangle(f in grid_and_field(), seed in 0u64..1000) {
        let g = f.grid().clone();
        let other = Field::from_fn(&g, |i| {
            let s = i.iter().sum::<usize>() as f64 + seed as f64;
            Complex::new((s * 1.7).sin(), 0.0)
        });
        let sum = f.add(&other).unwrap();
        let w = |x: &Field| weak_lp_quasinorm(x, 1.0).unwrap().weak_quasinorm;
        prop_assert!(w(&sum) <= 2.0 * (w(&f) + w(&other)) + 1e-12);
    }

    #[test]
    fn lp_monotone_under_domination(f in grid_and_field(), p in 1.0f64..4.0) {
        let bigger = f.map(|v| v * Complex::new(1.2, 0.5));
        prop_assert!(lp_norm(&f, p).unwrap() <= lp_norm(&bigger, p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn tail_integral_non_increasing(t in 0.01f64..2.0, r1 in 0.0f64..10.0, dr in 0.0f64..10.0) {
        let g = Grid::new(1, 64, 16.0).unwrap();
        let model = build_periodic(&g, 2).unwrap();
        let col = model.kernel_column(&heat_symbol(t), &[7]).unwrap();
        prop_assert!(annulus_tail_integral(&col, r1 + dr) <= annulus_tail_integral(&col, r1));
    }

    #[test]
    fn cz_invariants(f in real_nonneg_field(2, 16, 8.0), factor in 1.1f64..20.0) {
        let mean = lp_norm(&f, 1.0).unwrap() / f.grid().total_measure();
        prop_assume!(mean > 0.0);
        let lambda = factor * mean;
        let r = decompose(&f, lambda).unwrap();
        let l1 = lp_norm(&f, 1.0).unwrap();
        prop_assert!(r.report.passes(1e-12, lp_norm(&f, f64::INFINITY).unwrap().max(l1)));
        prop_assert!(r.report.c_good_sup <= 4.0 + 1e-12);
        prop_assert!(r.total_bad_measure() <= l1 / lambda * (1.0 + 1e-12));
        prop_assert!(r.report.c_good_l2 <= 8.0 + 1e-12);
    }

    #[test]
    fn calculus_is_multiplicative(f in field_on(Grid::new(1, 32, 10.0).unwrap()), t in -5.0f64..5.0, s in 0.0f64..2.0) {
        let model = build_periodic(f.grid(), 2).unwrap();
        let a = schrodinger_symbol(t, 0.0).unwrap();
        let b = resolvent_power(1.0, s).unwrap();
        let lhs = model.apply(&a.mul(&b), &f).unwrap();
        let rhs = model.apply(&a, &model.apply(&b, &f).unwrap()).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).norm() <= 1e-10);
        }
    }

    #[test]
    fn calculus_is_self_adjoint(f in field_on(Grid::new(2, 8, 3.0).unwrap()), seed in 0u64..100, t in 0.0f64..3.0) {
        let g = f.grid().clone();
        let h = Field::from_fn(&g, |i| Complex::new(((i[0] * 3 + i[1]) as f64 + seed as f64).cos(), (i[1] as f64).sin()));
        let symbol = schrodinger_symbol(t, 1.0).unwrap();
        let fourier = build_periodic(&g, 2).unwrap();
        let v = Field::from_fn(&g, |i| Complex::new(((i[0] + seed as usize) % 3) as f64, 0.0));
        let matrix = build_schrodinger(&g, &v).unwrap();
        for model in [&fourier, &matrix] {
            let lhs = model.apply(&symbol, &f).unwrap().inner(&h).unwrap();
            let rhs = f.inner(&model.apply(&symbol.conj(), &h).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }
    }

    #[test]
    fn heat_preserves_positivity(f in real_nonneg_field(1, 32, 6.0), t in 0.001f64..5.0) {
        let g = f.grid().clone();
        let free = build_periodic(&g, 2).unwrap();
        let v = Field::from_fn(&g, |i| Complex::new((i[0] % 5) as f64 * 0.3, 0.0));
        let schro = build_schrodinger(&g, &v).unwrap();
        for model in [&free, &schro] {
            let out = model.apply(&heat_symbol(t), &f).unwrap();
            let min = out.real_parts().into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!(min >= -1e-12);
        }
    }

    #[test]
    fn symbols_vanish_off_support(x in 0.0f64..1e3) {
        let (phi0, phi1) = schrolab_core::symbols::cutoff_pair::<f64>();
        for s in [dyadic_bump(), phi0, phi1, build_fk(5, 1, 2, 1).unwrap(), build_gk(5, 1, 2, 1).unwrap()] {
            if !s.support().contains(x) {
                prop_assert_eq!(s.eval(x), Complex::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn extension_mask_is_shared() {
    let g = Grid::new(1, 16, 4.0).unwrap();
    let mask = Arc::new(Mask::from_fn(&g, |i| i[0] < 9).unwrap());
    let f = Field::constant(&g, Complex::new(1.0, 0.0))
        .with_mask(mask.clone())
        .unwrap();
    let sub = f.restrict(mask).unwrap();
    for p in [1.0, 2.0, 3.5, f64::INFINITY] {
        assert_eq!(
            lp_norm(&sub.extend_by_zero(), p).unwrap(),
            lp_norm(&f, p).unwrap()
        );
    }
}

#[test]
fn saved_fields_load_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.bin");
    let g = Grid::new(2, 8, 3.0).unwrap();
    let f = Field::from_fn(&g, |i| {
        Complex::new((i[0] as f64).sin(), 1.0 / (1.0 + i[1] as f64))
    });
    f.save(&path).unwrap();
    let back = Field::load(&path).unwrap();
    assert_eq!(back.grid().points_per_axis(), 8);
    assert_eq!(back.grid().box_length(), 3.0);
    assert_eq!(back.values(), f.values());
}
