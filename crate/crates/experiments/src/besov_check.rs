use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schrolab_core::operators::{build_periodic, build_periodic_dense};
use schrolab_core::symbols::{
    build_fk, cutoff_pair, dyadic_bump, heat_symbol, resolvent_power, schrodinger_symbol,
};
use schrolab_core::{
    besov_norm, besov_norm_default, dyadic_piece_envelope, k0_of_t, Complex, Field, Grid, Support,
    SymbolFn,
};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{config_err, Result};
use crate::report::{Check, ExperimentReport, Plot, Row};
use crate::sweeps::stability_check;

/// Quadrature window and sample count for the dyadic pieces, which live on
/// `[1/4, 1]` and oscillate at rates up to `|t| 2^l`.
pub const PIECE_WINDOW: f64 = 8.0;
pub const PIECE_SAMPLES: usize = 1 << 15;
/// Relative slack on submultiplicativity.
pub const PRODUCT_SLACK: f64 = 1e-5;
/// Tolerance of the partition of unity.
pub const PARTITION_TOL: f64 = 1e-12;
/// Tolerance of the Fourier-versus-dense calculus comparison.
pub const ORACLE_TOL: f64 = 1e-9;

/// `G(lambda) = phi(lambda) e^{i t 2^l lambda} (1 + 2^l lambda)^{-n/2}
/// (1 - e^{-2^{mk+l} lambda}) phi0(2^{-m(k-k0)/(m-1) + l} lambda) e^lambda`.
pub fn dyadic_piece(l: i32, k: i32, k0: i32, m: i32, n: i32, t: f64) -> SymbolFn {
    let phi = dyadic_bump::<f64>();
    let phi0 = cutoff_pair::<f64>().0;
    let two_l = 2f64.powi(l);
    let rate = 2f64.powi(m * k + l);
    let cut = 2f64.powf(-(m * (k - k0)) as f64 / (m - 1) as f64 + l as f64);
    let half_n = n as f64 / 2.0;
    SymbolFn::new(
        format!("piece:l={l},k={k},k0={k0},t={t}"),
        Support::bounded(0.25, 1.0),
        move |x| {
            let amp = phi.eval(x).re
                * (1.0 + two_l * x).powf(-half_n)
                * -(-rate * x).exp_m1()
                * phi0.eval(cut * x).re
                * x.exp();
            Complex::from_polar(amp, t * two_l * x)
        },
    )
}

/// `||G||_{B^{s/2}}` of the dyadic pieces against the closed-form envelope.
pub fn besov_envelope_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let n = cfg.n as i32;
    let m = cfg.m as i32;
    if let Some(&s) = cfg
        .s
        .iter()
        .find(|&&s| !(s > n as f64 && s < n as f64 + 0.5))
    {
        return Err(config_err("s", format!("need n < s < n + 1/2 (got {s})")));
    }
    if cfg.k.iter().any(|&k| k < 1) {
        return Err(config_err("k", "offsets k - k0 must be at least 1"));
    }
    let mut tasks = Vec::new();
    for &t in &cfg.t {
        let k0 = k0_of_t(t);
        for &offset in &cfg.k {
            let top = (m * offset) as f64 / (m - 1) as f64;
            for &l in cfg.ell.iter().filter(|&&l| l as f64 <= top) {
                for &s in &cfg.s {
                    tasks.push((t, k0, k0 + offset, l, s));
                }
            }
        }
    }
    if tasks.is_empty() {
        return Err(config_err(
            "ell",
            "no l satisfies l <= m (k - k0) / (m - 1)",
        ));
    }
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(t, k0, k, l, s)| {
            let g = dyadic_piece(l, k, k0, m, n, t);
            let norm = besov_norm(&g, s / 2.0, PIECE_WINDOW, PIECE_SAMPLES)?;
            let env = dyadic_piece_envelope(l, k, m, n, s, t);
            Ok(Row::new(vec![t, (k - k0) as f64, l as f64, s], norm, env))
        })
        .collect::<Result<_>>()?;
    let mut report =
        ExperimentReport::new(Kind::BesovEnvelope, vec!["t", "k_minus_k0", "l", "s"], rows);
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    report.check(stability_check("envelope constant", &ratios, cfg.stability));
    report.value("constant", report.max_ratio());
    report.plot = Plot {
        x_label: "envelope".into(),
        y_label: "Besov norm".into(),
        points: report.rows.iter().map(|r| (r.bound, r.measured)).collect(),
        fit: None,
        reference_slope: Some(1.0),
    };
    Ok(report.finish())
}

/// The fixed symbol pairs of the product check.
pub fn product_pairs() -> Result<Vec<(SymbolFn, SymbolFn)>> {
    let bump = dyadic_bump::<f64>;
    let (phi0, _) = cutoff_pair::<f64>();
    Ok(vec![
        (bump(), phi0.dilate(2.0)),
        (bump(), bump()),
        (bump(), bump().dilate(2.0)),
        (bump(), bump().dilate(0.5)),
        (
            bump().dilate(0.25),
            schrodinger_symbol(2.0, 0.5)?.mul(&bump().dilate(0.25)),
        ),
        (
            bump().dilate(1.0 / 8.0).mul(&build_fk(3, 1, 2, 1)?),
            bump().dilate(1.0 / 16.0),
        ),
        (schrodinger_symbol(5.0, 0.0)?.mul(&bump()), bump()),
        (
            bump().dilate(2.0).mul(&heat_symbol(1.0)),
            bump().dilate(2.0),
        ),
        (
            bump().dilate(0.5),
            schrodinger_symbol(-3.0, 1.0)?.mul(&bump().dilate(0.5)),
        ),
        (bump().dilate(0.1), bump().dilate(0.125)),
    ])
}

/// `||FG||_{B^s} <= ||F||_{B^s} ||G||_{B^s}` on the fixed pairs.
pub fn besov_product(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pairs = product_pairs()?;
    let tasks: Vec<(usize, f64)> = (0..pairs.len())
        .flat_map(|i| cfg.s.iter().map(move |&s| (i, s)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(i, s)| {
            let (f, g) = &pairs[i];
            let fg = besov_norm_default(&f.mul(g), s)?;
            let bound = besov_norm_default(f, s)? * besov_norm_default(g, s)?;
            Ok(Row::new(vec![i as f64, s], fg, bound))
        })
        .collect::<Result<_>>()?;
    let report = ExperimentReport::new(Kind::BesovProduct, vec!["pair", "s"], rows)
        .with_cap(1.0 + PRODUCT_SLACK);
    Ok(report.finish())
}

/// `|sum_l phi(2^{-l} lambda) - 1|` at log-uniform seeded samples in `[1e-6, 1e6]`.
pub fn partition_of_unity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let phi = dyadic_bump::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lambdas: Vec<f64> = (0..cfg.inputs)
        .map(|_| 10f64.powf(rng.random_range(-6.0..6.0)))
        .collect();
    let rows: Vec<Row> = lambdas
        .par_iter()
        .map(|&lambda| {
            let sum: f64 = (-60..=60)
                .map(|l| phi.eval(2f64.powi(-l) * lambda).re)
                .sum();
            Row::new(vec![lambda], (sum - 1.0).abs(), PARTITION_TOL)
        })
        .collect();
    let report = ExperimentReport::new(Kind::PartitionOfUnity, vec!["lambda"], rows).with_cap(1.0);
    Ok(report.finish())
}

/// The symbols of the calculus comparison.
pub fn oracle_symbols() -> Result<Vec<SymbolFn>> {
    Ok(vec![
        heat_symbol(0.5),
        resolvent_power(1.0, 0.5)?,
        schrodinger_symbol(3.0, 0.5)?,
        dyadic_bump::<f64>().dilate(0.25),
        build_fk(2, 0, 2, 1)?,
    ])
}

/// Fourier-diagonal calculus against the dense eigendecomposition of the
/// same circulant, on `N/2` and `N` points.
pub fn calculus_oracle(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.require_free()?;
    let symbols = oracle_symbols()?;
    let mut rows = Vec::new();
    for points in [cfg.points / 2, cfg.points] {
        let grid = Grid::new(cfg.n, points, cfg.box_length)?;
        let fast = build_periodic(&grid, cfg.m)?;
        let dense = build_periodic_dense(&grid, cfg.m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ points as u64);
        let fields: Vec<Field> = (0..cfg.inputs)
            .map(|_| {
                let v = (0..grid.len())
                    .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                Field::from_values(&grid, v)
            })
            .collect::<Result<_, _>>()?;
        for (si, sym) in symbols.iter().enumerate() {
            for (fi, f) in fields.iter().enumerate() {
                let a = fast.apply(sym, f)?;
                let b = dense.apply(sym, f)?;
                let scale = b.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
                let err = a
                    .values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                rows.push(Row::new(
                    vec![points as f64, si as f64, fi as f64],
                    err / scale,
                    ORACLE_TOL,
                ));
            }
        }
    }
    let mut report =
        ExperimentReport::new(Kind::CalculusOracle, vec!["N", "symbol", "field"], rows)
            .with_cap(1.0);
    let worst = report.rows.iter().map(|r| r.measured).fold(0.0, f64::max);
    report.check(Check::at_most("max relative error", worst, ORACLE_TOL));
    report.value("max_relative_error", worst);
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piece_vanishes_off_the_bump() {
        let g = dyadic_piece(0, 3, 0, 2, 1, 4.0);
        assert_eq!(g.eval(0.2), Complex::default());
        assert_eq!(g.eval(1.5), Complex::default());
        assert!(g.eval(0.5).norm() > 0.0);
    }

    #[test]
    fn piece_modulus_matches_formula() {
        let (l, k, k0, t) = (-2, 4, 1, 5.0);
        let g = dyadic_piece(l, k, k0, 2, 1, t);
        let x: f64 = 0.6;
        let phi = dyadic_bump::<f64>().eval(x).re;
        let cut = cutoff_pair::<f64>()
            .0
            .eval(2f64.powf(-6.0 + l as f64) * x)
            .re;
        let want = phi
            * (1.0 + 0.25 * x).powf(-0.5)
            * (1.0 - (-(2f64.powi(8 + l)) * x).exp())
            * cut
            * x.exp();
        assert!((g.eval(x).norm() - want).abs() < 1e-14);
        assert!((g.eval(x).arg() - (t * 0.25 * x)).abs() < 1e-12);
    }

    #[test]
    fn s_window_enforced() {
        let mut cfg = ExperimentConfig::defaults(Kind::BesovEnvelope);
        cfg.s = vec![1.6];
        assert!(besov_envelope_check(&cfg).is_err());
    }

    #[test]
    fn vanishing_pieces_stay_bounded() {
        // Far below -mk both sides tend to zero together.
        let mut cfg = ExperimentConfig::defaults(Kind::BesovEnvelope);
        cfg.t = vec![0.0];
        cfg.k = vec![2];
        cfg.ell = vec![-20, -16, -12];
        let r = besov_envelope_check(&cfg).unwrap();
        assert!(r.rows.windows(2).all(|w| w[0].measured < w[1].measured));
        assert!(r
            .rows
            .iter()
            .all(|row| (row.ratio / r.rows[0].ratio - 1.0).abs() < 0.01));
        assert!(r.pass, "{:?}", r.summary_lines());
    }

    #[test]
    fn single_row_example() {
        let g = dyadic_piece(2, 4, 0, 2, 1, 8.0);
        let norm = besov_norm(&g, 0.625, PIECE_WINDOW, PIECE_SAMPLES).unwrap();
        let env = dyadic_piece_envelope(2, 4, 2, 1, 1.25, 8.0);
        assert!(norm > 0.0 && env > 0.0 && (norm / env).is_finite());
    }
}
