use std::collections::BTreeMap;

use rayon::prelude::*;
use schrolab_core::cz::{decompose, verify_properties};
use schrolab_core::norms::{lp_norm, weak_lp_quasinorm_above};
use schrolab_core::operators::build_schrodinger;
use schrolab_core::symbols::{heat_symbol, schrodinger_symbol};
use schrolab_core::{fit_power_law, k0_of_t, Complex, Field, Grid, OperatorModel};

use crate::config::{ExperimentConfig, Kind, OperatorSpec};
use crate::error::{config_err, mismatch, Result};
use crate::probes::{bump_input, probe_family, rough_input};
use crate::report::{spread, Check, ExperimentReport, Plot, Row};

/// Largest allowed gap between the fitted upper exponent and the exponent
/// of the witness rows.
pub const BRACKET_GAP: f64 = 0.25;
/// Slack on the unitary `L^2` case.
pub const L2_SLACK: f64 = 1e-10;
/// Entrywise tolerance of the heat-matrix comparisons.
pub const DOMINATION_TOL: f64 = 1e-10;
/// Tolerance on exact reconstruction and mean-zero bad parts.
pub const CZ_TOL: f64 = 1e-12;
/// Gaussian bumps per random input of the heat-smoothing experiment.
pub const INPUT_BUMPS: usize = 12;

/// Measure of the model's domain.
pub fn domain_measure(model: &OperatorModel) -> f64 {
    let grid = model.grid();
    match model.mask() {
        Some(mask) => mask.count() as f64 * grid.cell_measure(),
        None => grid.total_measure(),
    }
}

fn positive_times(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.t.iter().filter(|&&t| t > 0.0).count() < 3 {
        return Err(config_err(
            "t",
            "need at least three positive times for the growth fit",
        ));
    }
    Ok(())
}

/// `max` of the rows' measured values per distinct value of parameter `key`.
fn sup_by(rows: &[Row], key: usize, keep: impl Fn(&Row) -> bool) -> Vec<(f64, f64)> {
    let mut best: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| keep(r)) {
        let x = r.params[key];
        let e = best.entry(x.to_bits()).or_insert((x, f64::NEG_INFINITY));
        e.1 = e.1.max(r.measured);
    }
    let mut v: Vec<_> = best.into_values().collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// `R(t) = sup_probes ||(I+L)^{-n/2} e^{itL} f||_{1,inf} / ||f||_1`, with the
/// weak norm restricted to heights above `||f||_1 / mu(X)`.
pub fn weak11_upper(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    positive_times(cfg)?;
    let grid = cfg.grid()?;
    let model = cfg.single_operator()?.build(&grid, cfg.m)?;
    let probes = probe_family(&model, &cfg.probes, cfg.seed)?;
    let measure = domain_measure(&model);
    let prepared: Vec<(usize, f64, Vec<Complex>)> = probes
        .par_iter()
        .map(|p| Ok((p.id, lp_norm(&p.field, 1.0)?, model.analyze(&p.field)?)))
        .collect::<Result<_>>()?;
    let half_n = cfg.n as f64 / 2.0;
    let tasks: Vec<(f64, usize)> = cfg
        .t
        .iter()
        .flat_map(|&t| (0..prepared.len()).map(move |i| (t, i)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(t, i)| {
            let (id, l1, coeffs) = &prepared[i];
            let u = model.synthesize(coeffs, &schrodinger_symbol(t, half_n)?)?;
            let w = weak_lp_quasinorm_above(&u, 1.0, l1 / measure)?;
            Ok(Row::new(
                vec![t, *id as f64],
                w / l1,
                (1.0 + t.abs()).powf(half_n),
            ))
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new(Kind::Weak11Upper, vec!["t", "probe"], rows);

    let upper = sup_by(&report.rows, 0, |r| r.params[0] > 0.0);
    let lower = sup_by(&report.rows, 0, |r| r.params[0] > 0.0 && r.params[1] == 0.0);
    let upper_fit = fit_power_law(&upper)?;
    let lower_fit = fit_power_law(&lower)?;
    report.check(Check::at_most(
        "upper exponent",
        upper_fit.slope,
        half_n + cfg.tolerance,
    ));
    report.check(Check::at_most(
        "upper/lower exponent gap",
        (upper_fit.slope - lower_fit.slope).abs(),
        BRACKET_GAP,
    ));
    let max_ratio = report.max_ratio();
    report.check(Check::finite("weak-type constant", max_ratio));
    report.value("upper_slope", upper_fit.slope);
    report.value("lower_slope", lower_fit.slope);
    report.value("constant", max_ratio);
    for &(t, w) in &lower {
        report.value(format!("witness_t{t}"), w);
    }
    report.plot = Plot {
        x_label: "t".into(),
        y_label: "R(t)".into(),
        points: upper,
        fit: Some(upper_fit),
        reference_slope: Some(half_n),
    };
    Ok(report.finish())
}

/// `sup_probes ||(I+L)^{-s} e^{itL} f||_p / ||f||_p` at `s = n |1/2 - 1/p|`.
pub fn lp_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let model = cfg.single_operator()?.build(&grid, cfg.m)?;
    let probes = probe_family(&model, &cfg.probes, cfg.seed)?;
    let n = cfg.n as f64;
    let prepared: Vec<(usize, Vec<Complex>, Vec<f64>)> = probes
        .par_iter()
        .map(|pr| {
            let norms = cfg
                .p
                .iter()
                .map(|&p| lp_norm(&pr.field, p))
                .collect::<Result<_, _>>()?;
            Ok((pr.id, model.analyze(&pr.field)?, norms))
        })
        .collect::<Result<_>>()?;
    let tasks: Vec<(f64, usize)> = cfg
        .t
        .iter()
        .flat_map(|&t| (0..prepared.len()).map(move |i| (t, i)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(t, i)| {
            let (id, coeffs, norms) = &prepared[i];
            let mut out = Vec::with_capacity(cfg.p.len());
            for (j, &p) in cfg.p.iter().enumerate() {
                let s = n * (0.5 - 1.0 / p).abs();
                let u = model.synthesize(coeffs, &schrodinger_symbol(t, s)?)?;
                let ratio = lp_norm(&u, p)? / norms[j];
                out.push(Row::new(
                    vec![p, t, *id as f64],
                    ratio,
                    (1.0 + t.abs()).powf(s),
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<Row>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report = ExperimentReport::new(Kind::LpBound, vec!["p", "t", "probe"], rows);
    for &p in &cfg.p {
        let s = n * (0.5 - 1.0 / p).abs();
        let of_p = |r: &Row| r.params[0] == p;
        if p == 2.0 {
            let worst = report
                .rows
                .iter()
                .filter(|r| of_p(r))
                .map(|r| r.measured)
                .fold(0.0, f64::max);
            report.check(Check::at_most("p=2 norm ratio", worst, 1.0 + L2_SLACK));
        }
        let growth = sup_by(&report.rows, 1, |r| of_p(r) && r.params[1] >= 1.0);
        if growth.len() >= 3 {
            let fit = fit_power_law(&growth)?;
            report.check(Check::at_most(
                format!("p={p} growth exponent"),
                fit.slope,
                s + cfg.tolerance,
            ));
            report.value(format!("slope_p{p}"), fit.slope);
            if report.plot.points.is_empty() {
                report.plot = Plot {
                    x_label: "t".into(),
                    y_label: format!("Lp ratio, p={p}"),
                    points: growth,
                    fit: Some(fit),
                    reference_slope: Some(s),
                };
            }
        }
    }
    Ok(report.finish())
}

/// `sum_{k > k0} e^{-2^{mk} L} h_k`, with `h_k` the bad parts at scale `k`.
fn heat_smoothed_bad(model: &OperatorModel, f: &Field, lambda: f64, k0: i32) -> Result<Field> {
    let grid = model.grid();
    let cz = decompose(f, lambda)?;
    let mut by_scale: BTreeMap<i32, Vec<Complex>> = BTreeMap::new();
    for b in cz.bad.iter().filter(|b| b.scale > k0) {
        let acc = by_scale
            .entry(b.scale)
            .or_insert_with(|| vec![Complex::default(); grid.len()]);
        for (i, v) in b.cube.indices(grid).into_iter().zip(&b.values) {
            acc[i] += *v;
        }
    }
    let m = model.order() as i32;
    let mut total = Field::zeros(grid);
    for (k, values) in by_scale {
        let part = Field::from_values(grid, values)?;
        let part = match model.mask() {
            Some(mask) => part.with_mask(mask.clone())?,
            None => part,
        };
        let smoothed = model
            .apply(&heat_symbol(2f64.powi(m * k)), &part)?
            .unmasked();
        total = total.add(&smoothed)?;
    }
    Ok(total)
}

/// The constant `C` in `||sum_{k>k0} e^{-2^{mk}L} b_j||_2 <= C (lambda ||f||_1)^{1/2}`
/// over seeded random inputs, on the configured grid and on its refinement.
pub fn cz_heat_l2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = cfg.single_operator()?;
    let grids = [
        cfg.grid()?,
        Grid::new(cfg.n, cfg.points * 2, cfg.box_length)?,
    ];
    let models: Vec<OperatorModel> = grids
        .iter()
        .map(|g| spec.build(g, cfg.m))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|g| (0..cfg.inputs).map(move |i| (g, i)))
        .collect();
    let rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(g, i)| {
            let model = &models[g];
            let mut f = bump_input(model.grid(), INPUT_BUMPS, cfg.seed.wrapping_add(i as u64))?;
            if let Some(mask) = model.mask() {
                f = f.with_mask(mask.clone())?;
            }
            let l1 = lp_norm(&f, 1.0)?;
            let mean = l1 / model.grid().total_measure();
            let mut out = Vec::new();
            for &c in &cfg.heights {
                for &t in &cfg.t {
                    let lambda = c * mean;
                    let h = heat_smoothed_bad(model, &f.clone().unmasked(), lambda, k0_of_t(t))?;
                    let params = vec![model.grid().points_per_axis() as f64, i as f64, c, t];
                    out.push(Row::new(params, lp_norm(&h, 2.0)?, (lambda * l1).sqrt()));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<Row>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report = ExperimentReport::new(Kind::CzHeatL2, vec!["N", "input", "height", "t"], rows);
    // The constant for one input is the sup over heights and times.
    let mut per_input: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for r in &report.rows {
        let c = per_input
            .entry((r.params[0].to_bits(), r.params[1].to_bits()))
            .or_insert(0.0);
        *c = c.max(r.ratio);
    }
    let min = per_input.values().copied().fold(f64::INFINITY, f64::min);
    let max = report.max_ratio();
    report.check(Check::positive("smallest constant", min));
    report.check(Check::at_most(
        "constant spread (max/min)",
        max / min,
        cfg.stability,
    ));
    report.value("constant", max);
    report.value("constant_min", min);
    report.plot = Plot {
        x_label: "lambda ||f||_1".into(),
        y_label: "heat-smoothed bad part, L2".into(),
        points: report
            .rows
            .iter()
            .map(|r| (r.bound * r.bound, r.measured))
            .collect(),
        fit: None,
        reference_slope: Some(0.5),
    };
    Ok(report.finish())
}

/// Reconstruction, the good-part bound, the measure bound, disjointness and
/// support of the decomposition on seeded rough inputs.
pub fn cz_invariants(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let tasks: Vec<(usize, f64)> = (0..cfg.inputs)
        .flat_map(|i| cfg.heights.iter().map(move |&c| (i, c)))
        .collect();
    let results: Vec<(Row, schrolab_core::CzReport)> = tasks
        .par_iter()
        .map(|&(i, c)| {
            let f = rough_input(&grid, cfg.seed.wrapping_add(i as u64))?;
            let lambda = c * lp_norm(&f, 1.0)? / grid.total_measure();
            let cz = decompose(&f, lambda)?;
            let rep = verify_properties(&cz, &f)?;
            let row = Row::new(vec![i as f64, c], rep.c_good_sup, (1u32 << cfg.n) as f64);
            Ok((row, rep))
        })
        .collect::<Result<_>>()?;
    let worst = |g: fn(&schrolab_core::CzReport) -> f64| {
        results.iter().map(|(_, r)| g(r)).fold(0.0, f64::max)
    };
    let recon = worst(|r| r.reconstruction_error);
    let mean = worst(|r| r.max_mean);
    let measure = worst(|r| r.c_measure);
    let disjoint = results.iter().all(|(_, r)| r.disjoint);
    let supported = results.iter().all(|(_, r)| r.supported);
    let mut report = ExperimentReport::new(
        Kind::CzInvariants,
        vec!["input", "height"],
        results.into_iter().map(|(row, _)| row).collect(),
    )
    .with_cap(1.0 + CZ_TOL);
    report.check(Check::at_most("reconstruction error", recon, CZ_TOL));
    report.check(Check::at_most("bad-part mean", mean, CZ_TOL));
    report.check(Check::at_most(
        "lambda sum mu(B_j) / ||f||_1",
        measure,
        1.0 + CZ_TOL,
    ));
    report.check(Check::holds("cubes disjoint", disjoint));
    report.check(Check::holds("bad parts supported on cubes", supported));
    Ok(report.finish())
}

/// Entrywise `0 <= e^{-tH} <= e^{t Delta_h}` for Schrodinger and Dirichlet models,
/// with `Delta_h` the periodic lattice Laplacian of the same grid.
pub fn feynman_kac(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.operators.iter().any(OperatorSpec::is_free) {
        return Err(mismatch(
            Kind::FeynmanKac,
            "needs Schrodinger or Dirichlet models",
        ));
    }
    if cfg.t.iter().any(|&t| !(t > 0.0)) {
        return Err(config_err("t", "heat times must be positive"));
    }
    let grid = cfg.grid()?;
    let free = build_schrodinger(&grid, &Field::zeros(&grid))?;
    let free = free.as_matrix().expect("dense model");
    let models: Vec<OperatorModel> = cfg
        .operators
        .iter()
        .map(|s| s.build(&grid, cfg.m))
        .collect::<Result<_>>()?;
    let cell = grid.cell_measure();
    let tasks: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|i| cfg.t.iter().map(move |&t| (i, t)))
        .collect();
    let results: Vec<(Row, f64)> = tasks
        .par_iter()
        .map(|&(i, t)| {
            let dense = models[i]
                .as_matrix()
                .expect("Schrodinger and Dirichlet models are dense");
            let heat = heat_symbol(t);
            let s = dense.function_matrix(&heat)?;
            let h = free.function_matrix(&heat)?;
            let idx = dense.unknowns();
            let k = idx.len();
            let len = grid.len();
            let (mut violation, mut env) = (0.0f64, 0.0f64);
            let reach = (2.0 * t.sqrt()).max(grid.spacing());
            let n = grid.dim() as i32;
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    let sv = s[a * k + b];
                    violation = violation
                        .max(sv.re - h[ia * len + ib].re)
                        .max(-sv.re)
                        .max(sv.im.abs());
                    let d = grid.distance_linear(ia, ib);
                    if d <= reach {
                        let g = (4.0 * std::f64::consts::PI * t).powi(-n).sqrt()
                            * (-d * d / (4.0 * t)).exp();
                        env = env.max(sv.re / cell / g);
                    }
                }
            }
            Ok((
                Row::new(vec![i as f64, t], violation.max(0.0), DOMINATION_TOL),
                env,
            ))
        })
        .collect::<Result<_>>()?;
    let env = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut report = ExperimentReport::new(
        Kind::FeynmanKac,
        vec!["model", "t"],
        results.into_iter().map(|r| r.0).collect(),
    )
    .with_cap(1.0);
    report.value("gaussian_constant", env);
    Ok(report.finish())
}

/// Spread of `values` measured as `max / median`, checked against the configured factor.
pub(crate) fn stability_check(name: &str, values: &[f64], factor: f64) -> Check {
    Check::at_most(
        format!("{name} spread (max/median)"),
        spread(values),
        factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_case_is_exact() {
        let mut cfg = ExperimentConfig::defaults(Kind::LpBound);
        cfg.points = 512;
        cfg.box_length = 64.0;
        cfg.p = vec![2.0];
        cfg.t = vec![0.0, 1.0, 3.0, 100.0];
        let r = lp_bound(&cfg).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        assert!(r.rows.iter().all(|row| row.measured <= 1.0 + L2_SLACK));
        assert!(r
            .rows
            .iter()
            .filter(|row| row.params[1] == 0.0)
            .all(|row| (row.measured - 1.0).abs() < 1e-12));
    }

    #[test]
    fn weak11_on_small_box() {
        let mut cfg = ExperimentConfig::defaults(Kind::Weak11Upper);
        cfg.points = 4096;
        cfg.box_length = 128.0;
        cfg.t = vec![0.0, 2.0, 4.0, 8.0];
        cfg.probes.random = 4;
        let r = weak11_upper(&cfg).unwrap();
        assert_eq!(r.rows.len(), 4 * (1 + 4 + 4));
        let delta_t0 = r.rows.iter().find(|row| row.params == [0.0, 1.0]).unwrap();
        assert!(delta_t0.measured.is_finite() && delta_t0.measured <= r.get("constant").unwrap());
        // The witness rows sit below the supremum.
        for row in r.rows.iter().filter(|row| row.params[1] == 0.0) {
            let t = row.params[0];
            let sup = r
                .rows
                .iter()
                .filter(|x| x.params[0] == t)
                .map(|x| x.measured)
                .fold(0.0, f64::max);
            assert!(row.measured <= sup);
        }
    }

    #[test]
    fn feynman_kac_zero_potential_is_identity() {
        let mut cfg = ExperimentConfig::preset(Kind::FeynmanKac);
        cfg.operators = vec!["schrodinger:zero".parse().unwrap()];
        cfg.t = vec![0.5];
        let r = feynman_kac(&cfg).unwrap();
        assert!(r.pass);
        assert!(r.rows[0].measured < 1e-13);
        let grid = cfg.grid().unwrap();
        let a = build_schrodinger(&grid, &Field::zeros(&grid)).unwrap();
        let b = cfg.operators[0].build(&grid, 2).unwrap();
        let (sa, sb) = (
            a.as_matrix()
                .unwrap()
                .function_matrix(&heat_symbol(0.5))
                .unwrap(),
            b.as_matrix()
                .unwrap()
                .function_matrix(&heat_symbol(0.5))
                .unwrap(),
        );
        assert_eq!(sa, sb);
    }

    #[test]
    fn feynman_kac_rejects_free_model() {
        let mut cfg = ExperimentConfig::preset(Kind::FeynmanKac);
        cfg.operators = vec![OperatorSpec::Free];
        assert!(feynman_kac(&cfg).is_err());
    }

    #[test]
    fn cz_invariants_hold_on_small_sweep() {
        let mut cfg = ExperimentConfig::preset(Kind::CzInvariants);
        cfg.inputs = 4;
        let r = cz_invariants(&cfg).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        assert_eq!(r.rows.len(), 12);
    }
}
