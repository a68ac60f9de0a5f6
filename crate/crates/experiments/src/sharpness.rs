use rayon::prelude::*;
use schrolab_core::norms::{lp_norm, weak_lp_quasinorm_above};
use schrolab_core::operators::build_periodic;
use schrolab_core::symbols::schrodinger_symbol;
use schrolab_core::{fit_power_law, Field};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{config_err, mismatch, Result};
use crate::probes::{center, witness_probe};
use crate::report::{Check, ExperimentReport, Plot, Row};

/// The pointwise lower bound is checked on `C2 t <= |x| < (1 + C2) t`.
pub const ANNULUS_C2: f64 = 2.0;

/// Smallest `|u(x)| / (t |x|^{-n/2-1})` over the annulus around `source`.
pub fn tail_envelope_min(u: &Field, source: usize, t: f64) -> f64 {
    let grid = u.grid();
    let n = grid.dim() as f64;
    grid.distances_from(source)
        .iter()
        .zip(u.values())
        .filter(|(&d, _)| d >= ANNULUS_C2 * t && d < (1.0 + ANNULUS_C2) * t)
        .map(|(&d, v)| v.norm() / (t * d.powf(-n / 2.0 - 1.0)))
        .fold(f64::INFINITY, f64::min)
}

/// Weak-`L^1` growth of `(1+L)^{-n/2} e^{itL}` on the witness probe.
pub fn sharpness_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.require_free()?;
    if cfg.m != 2 {
        return Err(mismatch(
            Kind::Sharpness,
            "the probe is built for the Laplacian, m = 2",
        ));
    }
    if cfg.t.iter().any(|&t| !(t > 0.0)) {
        return Err(config_err("t", "sharpness times must be positive"));
    }
    let t_max = cfg.t.iter().copied().fold(0.0, f64::max);
    if cfg.box_length < 4.0 * (1.0 + t_max) {
        return Err(config_err(
            "L_box",
            format!(
                "box too small: need L_box >= 4 (1 + max t) = {} so the tail annulus does not wrap",
                4.0 * (1.0 + t_max)
            ),
        ));
    }
    let grid = cfg.grid()?;
    let model = build_periodic(&grid, 2)?;
    let f = witness_probe(&model)?;
    let lambda_min = lp_norm(&f, 1.0)? / grid.total_measure();
    let coeffs = model.analyze(&f)?;
    let half_n = cfg.n as f64 / 2.0;
    let src = center(&grid);
    let measured: Vec<(f64, f64, f64)> = cfg
        .t
        .par_iter()
        .map(|&t| {
            let u = model.synthesize(&coeffs, &schrodinger_symbol(t, half_n)?)?;
            let w = weak_lp_quasinorm_above(&u, 1.0, lambda_min)?;
            Ok((t, w, tail_envelope_min(&u, src, t)))
        })
        .collect::<Result<_>>()?;

    let rows = measured
        .iter()
        .map(|&(t, w, _)| Row::new(vec![t], w, t.powf(half_n)))
        .collect();
    let mut report = ExperimentReport::new(Kind::Sharpness, vec!["t"], rows);
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.params[0], r.measured))
        .collect();
    let fit = fit_power_law(&points)?;
    report.check(Check::within(
        "fitted slope",
        fit.slope,
        Some(half_n - cfg.tolerance),
        Some(half_n + cfg.tolerance),
    ));
    report.check(Check::at_least("fit r2", fit.r_squared, 0.9));
    let c_tail = measured.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    report.check(Check::positive("tail envelope constant", c_tail));
    for &(t, _, c) in &measured {
        report.value(format!("tail_constant_t{t}"), c);
    }
    report.value("slope", fit.slope);
    report.value("r2", fit.r_squared);
    report.value(
        "lower_constant",
        report
            .rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min),
    );
    report.plot = Plot {
        x_label: "t".into(),
        y_label: "weak L1 quasinorm".into(),
        points,
        fit: Some(fit),
        reference_slope: Some(half_n),
    };
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Kind::Sharpness);
        cfg.points = 1 << 13;
        cfg.box_length = 128.0;
        cfg.t = vec![2.0, 4.0, 8.0];
        cfg
    }

    #[test]
    fn small_box_rejected() {
        let mut cfg = small();
        cfg.t.push(64.0);
        let err = sharpness_experiment(&cfg).unwrap_err().to_string();
        assert!(err.contains("L_box"), "{err}");
    }

    #[test]
    fn needs_free_laplacian() {
        let mut cfg = small();
        cfg.m = 4;
        assert!(sharpness_experiment(&cfg).is_err());
        let mut cfg = small();
        cfg.operators = vec!["dirichlet:full".parse().unwrap()];
        assert!(sharpness_experiment(&cfg).is_err());
    }

    #[test]
    fn report_shape() {
        let r = sharpness_experiment(&small()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.measured > 0.0));
        assert!(r.get("tail_constant_t4").unwrap() > 0.0);
        assert!(r.fit().unwrap().slope > 0.0);
    }
}
