//! The acceptance criteria: each one runs an experiment at full size, or the
//! command line self-check, and reports a verdict with the measured values.

use std::path::Path;
use std::time::Instant;

use schrolab_experiments::{run, ExperimentConfig, ExperimentReport, Kind};

/// Verdict of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn timed(cfg: &ExperimentConfig) -> (ExperimentReport, f64) {
    let start = Instant::now();
    let report = run(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.kind));
    (report, start.elapsed().as_secs_f64())
}

fn preset(kind: Kind) -> ExperimentConfig {
    ExperimentConfig::preset(kind)
}

fn verdict(report: &ExperimentReport) -> String {
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.describe())
        .collect();
    match report.failing_row() {
        Some(row) if failed.is_empty() => format!("failing row {}", report.format_row(row)),
        Some(_) => failed.join("; "),
        None => format!("max ratio {:.4}", report.max_ratio()),
    }
}

pub fn sharpness_exponent(_out: &Path) -> Outcome {
    let cfg = preset(Kind::Sharpness);
    let (r, secs) = timed(&cfg);
    let fit = r.fit().expect("sharpness fits a line");
    Outcome {
        pass: r.pass && (0.38..=0.62).contains(&fit.slope) && fit.r_squared >= 0.9 && secs <= 120.0,
        detail: format!(
            "slope {:.4}, r2 {:.4}, {secs:.2}s",
            fit.slope, fit.r_squared
        ),
    }
}

pub fn upper_bound_exponent(_out: &Path) -> Outcome {
    let (r, _) = timed(&preset(Kind::Weak11Upper));
    let upper = r.get("upper_slope").unwrap();
    let lower = r.get("lower_slope").unwrap();
    Outcome {
        pass: r.pass && upper <= 0.62 && (upper - lower).abs() <= 0.25,
        detail: format!("upper {upper:.4}, witness {lower:.4}"),
    }
}

pub fn l2_exactness(_out: &Path) -> Outcome {
    let mut cfg = preset(Kind::LpBound);
    cfg.p = vec![2.0];
    cfg.t = (0..=1024).map(f64::from).collect();
    let (r, secs) = timed(&cfg);
    let worst = r.rows.iter().map(|row| row.measured).fold(0.0, f64::max);
    Outcome {
        pass: r.rows.len() > 1024 && worst <= 1.0 + 1e-10,
        detail: format!(
            "worst ratio 1 + {:.2e} over {} rows, {secs:.2}s",
            worst - 1.0,
            r.rows.len()
        ),
    }
}

pub fn calculus_oracle(_out: &Path) -> Outcome {
    let cfg = preset(Kind::CalculusOracle);
    let (r, _) = timed(&cfg);
    let err = r.get("max_relative_error").unwrap_or(f64::NAN);
    Outcome {
        pass: r.pass && r.rows.len() == 2 * 5 * cfg.inputs && err <= 1e-9,
        detail: format!("max relative error {err:.2e} over {} rows", r.rows.len()),
    }
}

pub fn partition_of_unity(_out: &Path) -> Outcome {
    let (r, secs) = timed(&preset(Kind::PartitionOfUnity));
    let worst = r.rows.iter().map(|row| row.measured).fold(0.0, f64::max);
    Outcome {
        pass: r.pass && r.rows.len() == 10_000 && worst <= 1e-12 && secs < 1.0,
        detail: format!("max deviation {worst:.2e}, {secs:.3}s"),
    }
}

pub fn cz_invariants(_out: &Path) -> Outcome {
    let cfg = preset(Kind::CzInvariants);
    let (r, secs) = timed(&cfg);
    Outcome {
        pass: r.pass && r.rows.len() == cfg.inputs * cfg.heights.len() && secs < 30.0,
        detail: format!(
            "{} decompositions, {}, {secs:.2}s",
            r.rows.len(),
            verdict(&r)
        ),
    }
}

pub fn heat_smoothed_bad_part(_out: &Path) -> Outcome {
    let cfg = preset(Kind::CzHeatL2);
    let (r, _) = timed(&cfg);
    let spread = r.get("constant").unwrap() / r.get("constant_min").unwrap();
    Outcome {
        pass: r.pass && cfg.inputs == 10 && spread < 3.0,
        detail: format!(
            "constant spread {spread:.3} over {} inputs x 2 grids",
            cfg.inputs
        ),
    }
}

pub fn tail_integral(_out: &Path) -> Outcome {
    let (r, _) = timed(&preset(Kind::TailIntegral));
    Outcome {
        pass: r.pass,
        detail: format!(
            "sup constant {:.4}, {}",
            r.get("constant").unwrap_or(r.max_ratio()),
            verdict(&r)
        ),
    }
}

pub fn annulus_comparison(_out: &Path) -> Outcome {
    let (r, _) = timed(&preset(Kind::HarnackAnnulus));
    Outcome {
        pass: r.pass,
        detail: format!(
            "largest max/min ratio {:.4e} against 2, {}",
            r.rows.iter().map(|x| x.measured).fold(0.0, f64::max),
            verdict(&r)
        ),
    }
}

pub fn heat_domination(_out: &Path) -> Outcome {
    let cfg = preset(Kind::FeynmanKac);
    let (r, _) = timed(&cfg);
    let size = cfg.points.pow(cfg.n as u32);
    Outcome {
        pass: r.pass && size <= 1024 && cfg.operators.len() == 6,
        detail: format!(
            "{} comparisons at matrix size {size}, worst violation {:.2e}",
            r.rows.len(),
            r.rows.iter().map(|x| x.measured).fold(0.0, f64::max)
        ),
    }
}

pub fn complex_time(_out: &Path) -> Outcome {
    let (r, _) = timed(&preset(Kind::ComplexTime));
    Outcome {
        pass: r.pass,
        detail: verdict(&r),
    }
}

pub fn besov_machinery(_out: &Path) -> Outcome {
    let (product, _) = timed(&preset(Kind::BesovProduct));
    let (envelope, _) = timed(&preset(Kind::BesovEnvelope));
    Outcome {
        pass: product.pass && product.rows.len() == 10 && envelope.pass,
        detail: format!(
            "product: {}; envelope: {}",
            verdict(&product),
            verdict(&envelope)
        ),
    }
}

/// `schrolab selfcheck` must exit with 0 within a minute.
pub fn selfcheck(out: &Path) -> Outcome {
    let start = Instant::now();
    let code = schrolab::run([
        "schrolab".as_ref(),
        "selfcheck".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    let secs = start.elapsed().as_secs_f64();
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap_or_default();
    let failing: Vec<&str> = manifest
        .lines()
        .filter_map(|l| l.strip_suffix(".pass=false"))
        .collect();
    Outcome {
        pass: code == 0 && secs < 60.0,
        detail: format!(
            "exit {code} in {secs:.2}s, failing: [{}]",
            failing.join(", ")
        ),
    }
}

/// A named criterion; `out` is a scratch directory for artifacts.
pub type Criterion = (&'static str, fn(&Path) -> Outcome);

pub fn criteria() -> [Criterion; 13] {
    [
        ("sharpness exponent", sharpness_exponent),
        ("weak (1,1) upper exponent", upper_bound_exponent),
        ("L2 exactness", l2_exactness),
        ("calculus oracle", calculus_oracle),
        ("partition of unity", partition_of_unity),
        ("decomposition invariants", cz_invariants),
        ("heat-smoothed bad part", heat_smoothed_bad_part),
        ("tail integral", tail_integral),
        ("annulus comparison", annulus_comparison),
        ("heat domination", heat_domination),
        ("complex-time bound", complex_time),
        ("Besov machinery", besov_machinery),
        ("selfcheck", selfcheck),
    ]
}
