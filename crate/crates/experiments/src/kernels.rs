use rayon::prelude::*;
use schrolab_core::norms::{annulus_tail_integral, weighted_l2_kernel};
use schrolab_core::symbols::{
    build_fk, complex_heat_symbol, cutoff_pair, dyadic_bump, resolvent_power, schrodinger_symbol,
};
use schrolab_core::{
    fit_line, k0_of_t, Complex, Grid, KernelColumn, OperatorModel, Support, SymbolFn,
};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{config_err, Result};
use crate::probes::source;
use crate::report::{Check, ExperimentReport, Plot, Row};
use crate::sweeps::stability_check;

/// Slack on the annulus comparison constant `5^{n-1}`.
pub const HARNACK_SLACK: f64 = 2.0;
/// Finite-difference step for the Holder-norm proxy.
pub const HOLDER_STEP: f64 = 1e-4;
/// Kernel values below this fraction of the peak are at the discretization floor.
const NOISE_FLOOR: f64 = 1e-6;

fn model_of(cfg: &ExperimentConfig) -> Result<(Grid, OperatorModel)> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let model = cfg.single_operator()?.build(&grid, cfg.m)?;
    Ok((grid, model))
}

fn column(model: &OperatorModel, f: &SymbolFn) -> Result<KernelColumn> {
    let grid = model.grid();
    let mi = grid.multi_index(source(model));
    Ok(model.kernel_column(f, &mi[..grid.dim()])?)
}

fn ball(grid: &Grid, src: usize, r: f64) -> Result<f64> {
    let mi = grid.multi_index(src);
    Ok(grid.ball_volume(&mi[..grid.dim()], r)?)
}

fn kernel_l1(col: &KernelColumn) -> f64 {
    col.values.values().iter().map(|v| v.norm()).sum::<f64>() * col.values.grid().cell_measure()
}

fn kernel_l2_sq(col: &KernelColumn) -> f64 {
    col.values
        .values()
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        * col.values.grid().cell_measure()
}

/// Dyadic radii `2^j` with `h <= 2^j <= r_max`.
pub fn dyadic_radii(grid: &Grid, r_max: f64) -> Vec<f64> {
    let lo = grid.spacing().log2().ceil() as i32;
    let hi = r_max.log2().floor() as i32;
    (lo..=hi).map(|j| 2f64.powi(j)).collect()
}

/// `(I + tL)^{-s}` against `V(y, t^{1/m})^{-1} exp(-(d^m/t)^{1/(2(m-1))})`,
/// the integrated bounds of the majorant, and the decay fit over dyadic annuli.
pub fn resolvent_decay(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (grid, model) = model_of(cfg)?;
    let m = model.order() as f64;
    let n = cfg.n as f64;
    if cfg.s.iter().any(|&s| !(s > n / m)) {
        return Err(config_err(
            "s",
            format!("resolvent decay needs s > n/m = {}", n / m),
        ));
    }
    if cfg.t.iter().any(|&t| !(t > 0.0)) {
        return Err(config_err("t", "times must be positive"));
    }
    let src = source(&model);
    let d = grid.distances_from(src);
    let tasks: Vec<(f64, f64)> = cfg
        .t
        .iter()
        .flat_map(|&t| cfg.s.iter().map(move |&s| (t, s)))
        .collect();
    let results: Vec<(Vec<Row>, f64, f64)> = tasks
        .par_iter()
        .map(|&(t, s)| {
            let col = column(&model, &resolvent_power(t, s)?)?;
            let v = ball(&grid, src, t.powf(1.0 / m))?;
            let envelope = |r: f64| (-(r.powf(m) / t).powf(1.0 / (2.0 * (m - 1.0)))).exp() / v;
            let peak = col
                .values
                .values()
                .iter()
                .map(|k| k.norm())
                .fold(0.0, f64::max);
            let pointwise = col
                .values
                .values()
                .iter()
                .zip(&d)
                .filter(|(k, _)| k.norm() > NOISE_FLOOR * peak)
                .map(|(k, &r)| k.norm() / envelope(r))
                .fold(0.0, f64::max);
            let rows = vec![
                Row::new(vec![t, s, 0.0], pointwise, 1.0),
                Row::new(vec![t, s, 1.0], kernel_l1(&col), 1.0),
                Row::new(vec![t, s, 2.0], kernel_l2_sq(&col), 1.0 / v),
            ];
            // Mean |K| per dyadic annulus against the envelope's exponent.
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for r in dyadic_radii(&grid, grid.box_length() / 8.0) {
                let (sum, cnt, usum) = col
                    .values
                    .values()
                    .iter()
                    .zip(&d)
                    .filter(|(_, &x)| x >= r && x < 2.0 * r)
                    .fold((0.0, 0usize, 0.0), |(a, c, u), (k, &x)| {
                        (
                            a + k.norm(),
                            c + 1,
                            u + (x.powf(m) / t).powf(1.0 / (2.0 * (m - 1.0))),
                        )
                    });
                if cnt > 0 && sum / cnt as f64 > NOISE_FLOOR * peak {
                    xs.push(usum / cnt as f64);
                    ys.push((sum / cnt as f64).ln());
                }
            }
            let fit = fit_line(&xs, &ys)?;
            Ok((rows, fit.slope, fit.r_squared))
        })
        .collect::<Result<_>>()?;
    let worst_slope = results
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_r2 = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let rows: Vec<Row> = results.into_iter().flat_map(|r| r.0).collect();
    let mut report = ExperimentReport::new(Kind::ResolventDecay, vec!["t", "s", "quantity"], rows);
    for (q, name) in ["pointwise", "L1", "L2"].iter().enumerate() {
        let ratios: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.params[2] == q as f64)
            .map(|r| r.ratio)
            .collect();
        report.check(stability_check(
            &format!("{name} constant"),
            &ratios,
            cfg.stability,
        ));
    }
    report.check(Check::negative("decay slope", worst_slope));
    report.check(Check::at_least("decay fit r2", worst_r2, 0.9));
    report.value("decay_slope", worst_slope);
    report.value("decay_r2", worst_r2);
    Ok(report.finish())
}

/// `max / min` of `|K|` for `(I + tL)^{-n/2}` over each annulus `R <= d <= 2R`,
/// against `5^{n-1}` times the slack.
pub fn harnack_annulus(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (grid, model) = model_of(cfg)?;
    let half_n = cfg.n as f64 / 2.0;
    let src = source(&model);
    let d = grid.distances_from(src);
    let radii = dyadic_radii(&grid, grid.box_length() / 8.0);
    let bound = 5f64.powi(cfg.n as i32 - 1) * HARNACK_SLACK;
    let rows: Vec<Row> = cfg
        .t
        .par_iter()
        .map(|&t| {
            let col = column(&model, &resolvent_power(t, half_n)?)?;
            Ok(radii
                .iter()
                .filter_map(|&r| {
                    let (lo, hi) = col
                        .values
                        .values()
                        .iter()
                        .zip(&d)
                        .filter(|(_, &x)| x >= r && x <= 2.0 * r)
                        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (k, _)| {
                            (lo.min(k.norm()), hi.max(k.norm()))
                        });
                    (hi > 0.0).then(|| Row::new(vec![t, r], hi / lo, bound))
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report =
        ExperimentReport::new(Kind::HarnackAnnulus, vec!["t", "R"], rows).with_cap(1.0);
    report.value(
        "max_annulus_ratio",
        report.rows.iter().map(|r| r.measured).fold(0.0, f64::max),
    );
    report.plot = Plot {
        x_label: "R".into(),
        y_label: "annulus max/min".into(),
        points: report
            .rows
            .iter()
            .map(|r| (r.params[1], r.measured))
            .collect(),
        fit: None,
        reference_slope: Some(0.0),
    };
    Ok(report.finish())
}

/// `int |K(x, y)| dmu` for `(I+L)^{-n/2} (I - e^{-2^{mk} L}) phi1(c0 L)`.
pub fn q_kernel(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (_, model) = model_of(cfg)?;
    let half_n = cfg.n as f64 / 2.0;
    let m = model.order() as i32;
    if cfg.k.iter().any(|&k| k < 1) {
        return Err(config_err("k", "need k >= 1"));
    }
    let phi1 = cutoff_pair::<f64>().1;
    let tasks: Vec<(i32, f64)> = cfg
        .k
        .iter()
        .flat_map(|&k| cfg.c0.iter().map(move |&c| (k, c)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(k, c0)| {
            let rate = 2f64.powi(m * k);
            let phi1 = phi1.clone();
            let symbol = SymbolFn::real(
                format!("q:k={k},c0={c0}"),
                Support {
                    lo: 0.5 / c0,
                    hi: None,
                },
                move |x| (1.0 + x).powf(-half_n) * -(-rate * x).exp_m1() * phi1.eval(c0 * x).re,
            );
            let col = column(&model, &symbol)?;
            Ok(Row::new(vec![k as f64, c0], kernel_l1(&col), 1.0))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(Kind::QKernel, vec!["k", "c0"], rows);
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    report.check(stability_check("kernel L1", &ratios, cfg.stability));
    report.value("constant", report.max_ratio());
    Ok(report.finish())
}

/// `int |K_{e^{-(1+i tau) R^{-m} L}}(x, y)|^2 d(x, y)^s dmu(x)` against
/// `V(y, 1/R)^{-1} R^{-s} (1 + |tau|)^s`.
pub fn complex_time(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (grid, model) = model_of(cfg)?;
    let m = model.order() as i32;
    let src = source(&model);
    let d = grid.distances_from(src);
    let cell = grid.cell_measure();
    let tasks: Vec<(f64, f64)> = cfg
        .radii
        .iter()
        .flat_map(|&r| cfg.tau.iter().map(move |&tau| (r, tau)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(r, tau)| {
            let z = Complex::new(1.0, tau) * r.powi(-m);
            let col = column(&model, &complex_heat_symbol(z))?;
            let v = ball(&grid, src, 1.0 / r)?;
            cfg.s
                .iter()
                .map(|&s| {
                    let lhs = col
                        .values
                        .values()
                        .iter()
                        .zip(&d)
                        .map(|(k, &x)| k.norm_sqr() * if s == 0.0 { 1.0 } else { x.powf(s) })
                        .sum::<f64>()
                        * cell;
                    let bound = r.powf(-s) * (1.0 + tau.abs()).powf(s) / v;
                    Ok(Row::new(vec![r, tau, s], lhs, bound))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report = ExperimentReport::new(Kind::ComplexTime, vec!["R", "tau", "s"], rows);
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    report.check(stability_check(
        "complex-time constant",
        &ratios,
        cfg.stability,
    ));
    let real = report
        .rows
        .iter()
        .filter(|r| r.params[1] == 0.0)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    report.value("constant", report.max_ratio());
    report.value("real_time_constant", real);
    Ok(report.finish())
}

/// `sup |D^j g|` for `j <= order` on `[0, hi]`, by central differences.
pub fn holder_proxy(g: &dyn Fn(f64) -> f64, hi: f64, order: usize) -> f64 {
    let h = HOLDER_STEP;
    let samples = 2048;
    let mut best = 0.0f64;
    for i in 0..=samples {
        let x = hi * i as f64 / samples as f64;
        for j in 0..=order {
            // j-th central difference: sum_i (-1)^i C(j, i) g(x + (j/2 - i) h) / h^j.
            let mut binom = 1.0;
            let mut acc = 0.0;
            for i in 0..=j {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * g(x + (j as f64 / 2.0 - i as f64) * h);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
            best = best.max((acc / h.powi(j as i32)).abs());
        }
    }
    best
}

/// Weighted `L^2` kernel norms of `F(L^{1/m})` with `F = phi(./R)` supported in
/// `[R/4, R]`, against `V(y, 1/R)^{-1} ||delta_R F||^2` with a Holder proxy.
pub fn weighted_multiplier(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (grid, model) = model_of(cfg)?;
    let m = model.order() as f64;
    if cfg.s.iter().any(|&s| !(s > 0.0)) {
        return Err(config_err("s", "weights need s > 0"));
    }
    let src = source(&model);
    let bump = dyadic_bump::<f64>();
    let tasks: Vec<(f64, f64)> = cfg
        .radii
        .iter()
        .flat_map(|&r| cfg.s.iter().map(move |&s| (r, s)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(r, s)| {
            let b = bump.clone();
            let symbol = SymbolFn::real(
                format!("bump_at:R={r}"),
                Support::bounded((r / 4.0).powf(m), r.powf(m)),
                move |x| b.eval(x.powf(1.0 / m) / r).re,
            );
            let col = column(&model, &symbol)?;
            let lhs = weighted_l2_kernel(&col, r, s)?;
            let b = bump.clone();
            let order = (s / 2.0).ceil() as usize + 1;
            let norm = holder_proxy(&|x| b.eval(x).re, 1.25, order);
            let v = ball(&grid, src, 1.0 / r)?;
            Ok(Row::new(vec![r, s], lhs, norm * norm / v))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(Kind::WeightedMultiplier, vec!["R", "s"], rows);
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    report.check(stability_check(
        "weighted kernel constant",
        &ratios,
        cfg.stability,
    ));
    report.value("constant", report.max_ratio());
    Ok(report.finish())
}

/// `int_{d > c1 sqrt(1+|t|) 2^k} |K_{e^{itL} F_k(L)}(x, y)| dmu(y)` against
/// `(1 + |t|)^{n/2}`, for `k - k0` in the `k` list.
pub fn tail_integral(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (grid, model) = model_of(cfg)?;
    if cfg.k.iter().any(|&k| k < 1) {
        return Err(config_err("k", "offsets k - k0 must be at least 1"));
    }
    let half_n = cfg.n as f64 / 2.0;
    let m = model.order() as i32;
    let tasks: Vec<(f64, i32)> = cfg
        .t
        .iter()
        .flat_map(|&t| cfg.k.iter().map(move |&k| (t, k)))
        .collect();
    let reach = grid.box_length() / 2.0;
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(t, offset)| {
            let k0 = k0_of_t(t);
            let k = k0 + offset;
            let radius = cfg.c1 * (1.0 + t.abs()).sqrt() * 2f64.powi(k);
            if radius >= reach {
                return Err(config_err(
                    "L_box",
                    format!("tail radius {radius} at t={t}, k={k} does not fit in half the box"),
                ));
            }
            let symbol = build_fk::<f64>(k, k0, m, cfg.n as i32)?.mul(&schrodinger_symbol(t, 0.0)?);
            let col = column(&model, &symbol)?;
            Ok(Row::new(
                vec![t, offset as f64],
                annulus_tail_integral(&col, radius),
                (1.0 + t.abs()).powf(half_n),
            ))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(Kind::TailIntegral, vec!["t", "k_minus_k0"], rows);
    let per_t: Vec<(f64, f64)> = cfg
        .t
        .iter()
        .map(|&t| {
            let c = report
                .rows
                .iter()
                .filter(|r| r.params[0] == t)
                .map(|r| r.ratio)
                .fold(0.0, f64::max);
            (t, c)
        })
        .collect();
    let sups: Vec<f64> = per_t.iter().map(|p| p.1).collect();
    report.check(Check::finite("tail constant", report.max_ratio()));
    report.check(stability_check(
        "sup over k of tail constant",
        &sups,
        cfg.stability,
    ));
    report.value("constant", report.max_ratio());
    for &(t, c) in &per_t {
        report.value(format!("constant_t{t}"), c);
    }
    report.plot = Plot {
        x_label: "1 + t".into(),
        y_label: "sup_k tail integral".into(),
        points: per_t
            .iter()
            .map(|&(t, c)| (1.0 + t.abs(), c * (1.0 + t.abs()).powf(half_n)))
            .collect(),
        fit: None,
        reference_slope: Some(half_n),
    };
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: Kind) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(kind);
        c.points = 1024;
        c.box_length = 64.0;
        c
    }

    #[test]
    fn resolvent_matches_exponential() {
        // In one dimension the kernel of (1 + t L)^{-1} is e^{-|x|/sqrt t} / (2 sqrt t),
        // so the envelope with c = 1 is attained up to the lattice ball volume.
        let r = resolvent_decay(&cfg(Kind::ResolventDecay)).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        for row in r.rows.iter().filter(|r| r.params[2] == 1.0) {
            assert!((row.measured - 1.0).abs() < 1e-4, "{row:?}");
        }
        assert!(r.get("decay_slope").unwrap() < -0.8);
    }

    #[test]
    fn harnack_ratios_grow_with_radius() {
        let r = harnack_annulus(&cfg(Kind::HarnackAnnulus)).unwrap();
        let at_t1: Vec<f64> = r
            .rows
            .iter()
            .filter(|x| x.params[0] == 1.0)
            .map(|x| x.measured)
            .collect();
        assert!(at_t1.windows(2).all(|w| w[1] >= w[0]));
        assert!(at_t1.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn complex_time_real_case() {
        let mut c = cfg(Kind::ComplexTime);
        c.tau = vec![0.0];
        c.s = vec![0.0];
        c.radii = vec![1.0];
        let r = complex_time(&c).unwrap();
        // Oracle: int |g_{1}|^2 = (8 pi)^{-1/2} for the unit-time heat kernel,
        // and V(y, 1) = 2 up to lattice counting.
        let exact = (8.0 * std::f64::consts::PI).powf(-0.5);
        assert!(
            (r.rows[0].measured - exact).abs() < 1e-6,
            "{}",
            r.rows[0].measured
        );
    }

    #[test]
    fn holder_proxy_of_sine() {
        let v = holder_proxy(&|x: f64| (3.0 * x).sin(), 2.0, 2);
        assert!((v - 9.0).abs() < 1e-3, "{v}");
    }

    #[test]
    fn tail_needs_room() {
        let mut c = cfg(Kind::TailIntegral);
        c.t = vec![16.0];
        assert!(tail_integral(&c).is_err());
    }

    #[test]
    fn q_kernel_is_bounded() {
        let mut c = cfg(Kind::QKernel);
        c.k = vec![1, 3];
        let r = q_kernel(&c).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        assert_eq!(r.rows.len(), 6);
    }
}
