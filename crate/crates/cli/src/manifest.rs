use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use schrolab_experiments::{ExperimentConfig, ExperimentReport, Kind};

use crate::error::Result;

/// One experiment of a run.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub kind: Kind,
    pub config: Vec<(&'static str, String)>,
    pub seconds: f64,
    pub rows: usize,
    pub max_ratio: f64,
    pub values: Vec<(String, f64)>,
    pub checks: Vec<(String, bool)>,
    pub outputs: Vec<PathBuf>,
    pub pass: bool,
}

impl ExperimentRecord {
    pub fn new(
        cfg: &ExperimentConfig,
        report: &ExperimentReport,
        seconds: f64,
        outputs: Vec<PathBuf>,
    ) -> Self {
        let mut values = report.values.clone();
        if let Some(fit) = report.fit() {
            values.push(("fit_slope".into(), fit.slope));
            values.push(("fit_r2".into(), fit.r_squared));
        }
        Self {
            kind: report.kind,
            config: cfg.pairs(),
            seconds,
            rows: report.rows.len(),
            max_ratio: report.max_ratio(),
            values,
            checks: report
                .checks
                .iter()
                .map(|c| (c.name.clone(), c.pass))
                .collect(),
            outputs,
            pass: report.pass,
        }
    }
}

/// Flat `key=value` summary of a run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: &'static str,
    pub stamp: String,
    pub records: Vec<ExperimentRecord>,
}

fn slug(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

fn join(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunManifest {
    pub fn new(subcommand: &str, stamp: &str) -> Self {
        Self {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION"),
            stamp: stamp.into(),
            records: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.pass)
    }

    pub fn outputs(&self) -> Vec<PathBuf> {
        self.records
            .iter()
            .flat_map(|r| r.outputs.iter().cloned())
            .collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let kinds: Vec<String> = self.records.iter().map(|r| r.kind.to_string()).collect();
        let _ = writeln!(s, "subcommand={}", self.subcommand);
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "stamp={}", self.stamp);
        let _ = writeln!(s, "experiments={}", kinds.join(","));
        let _ = writeln!(s, "pass={}", self.pass());
        let _ = writeln!(s, "outputs={}", join(&self.outputs()));
        for r in &self.records {
            let k = r.kind;
            let _ = writeln!(s, "{k}.pass={}", r.pass);
            let _ = writeln!(s, "{k}.wall_seconds={:.6}", r.seconds);
            let _ = writeln!(s, "{k}.rows={}", r.rows);
            let _ = writeln!(s, "{k}.max_ratio={}", r.max_ratio);
            for (name, v) in &r.values {
                let _ = writeln!(s, "{k}.value.{}={v}", slug(name));
            }
            for (name, ok) in &r.checks {
                let _ = writeln!(
                    s,
                    "{k}.check.{}={}",
                    slug(name),
                    if *ok { "ok" } else { "violated" }
                );
            }
            for (key, v) in &r.config {
                let _ = writeln!(s, "{k}.config.{key}={v}");
            }
            let _ = writeln!(s, "{k}.outputs={}", join(&r.outputs));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_flat_keys() {
        assert_eq!(slug("p=2 growth exponent"), "p_2_growth_exponent");
        assert_eq!(slug("upper/lower exponent gap"), "upper_lower_exponent_gap");
        assert_eq!(slug("constant_t0.25"), "constant_t0.25");
    }

    #[test]
    fn empty_manifest_fails() {
        let m = RunManifest::new("sharpness", "1");
        assert!(!m.pass());
        assert!(m.render().contains("pass=false\n"));
    }
}
