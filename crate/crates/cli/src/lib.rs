//! Command line driver: resolves configurations, runs the experiments and
//! writes CSV and SVG artifacts plus a `manifest.txt` summary.

pub mod config_file;
pub mod error;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use schrolab_experiments::{reduced, ExperimentConfig, Kind};

pub use config_file::{load_config, OUT_ENV};
pub use error::{CliError, Result};
pub use manifest::{ExperimentRecord, RunManifest};

macro_rules! settings {
    ($($field:ident => $key:literal: $help:literal,)*) => {
        /// Config file and per-key overrides; flags win over the file.
        #[derive(Args, Debug, Default, Clone)]
        pub struct Settings {
            /// Plain-text `key = value` config file.
            #[arg(long, value_name = "PATH")]
            pub config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long = $key, value_name = "VALUE", allow_hyphen_values = true)]
                pub $field: Option<String>,
            )*
        }

        impl Settings {
            pub fn overrides(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push(($key, v.clone()));
                    }
                )*
                out
            }
        }
    };
}

settings! {
    n => "n": "Spatial dimension (1, 2 or 3).",
    points => "N": "Points per axis, a power of two.",
    box_length => "L_box": "Side length of the periodic box.",
    m => "m": "Order of the operator.",
    operator => "operator": "free, schrodinger:<potential> or dirichlet:<mask>; comma separated.",
    t => "t": "Times.",
    k => "k": "Dyadic scales, or offsets k - k0 where the experiment uses them.",
    p => "p": "Lebesgue exponents.",
    s => "s": "Smoothness or decay exponents.",
    tau => "tau": "Imaginary parts of the complex time.",
    radii => "R": "Radii.",
    ell => "ell": "Dyadic dilation exponents.",
    c0 => "c0": "Cutoff scales.",
    heights => "heights": "Heights as multiples of the mean of |f|.",
    inputs => "inputs": "Number of seeded inputs or samples.",
    probe_deltas => "probe_deltas": "Delta probes per axis.",
    probe_random => "probe_random": "Number of random spike probes.",
    probe_spikes => "probe_spikes": "Spikes per random probe.",
    c1 => "c1": "Tail radius factor, greater than 1.",
    seed => "seed": "Seed for every random choice.",
    tolerance => "tolerance": "Allowed deviation of fitted exponents.",
    stability => "stability": "Allowed max/median spread of measured constants.",
    out => "out": "Output directory.",
}

/// A subcommand that runs several experiments.
#[derive(Args, Debug, Default, Clone)]
pub struct Multi {
    /// Run only these experiments.
    #[arg(long, value_delimiter = ',', value_name = "KIND")]
    pub only: Vec<String>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Args, Debug, Default, Clone)]
pub struct SelfcheckArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Fitted weak-L1 growth exponent on the witness probe.
    Sharpness(Settings),
    /// Weak (1,1) growth over the probe family.
    Weak11(Settings),
    /// Lp growth of the smoothed group over the probe family.
    LpBound(Settings),
    /// Kernel estimates: resolvent decay, annulus comparison, Q kernels,
    /// complex times, weighted multipliers, tails and heat domination.
    KernelCheck(Multi),
    /// Off-diagonal tail integral of the dyadic pieces.
    TailIntegral(Settings),
    /// Besov envelope, product inequality and partition of unity.
    BesovEnvelope(Multi),
    /// Decomposition invariants and the heat-smoothed bad part.
    CzCheck(Multi),
    /// Every experiment on tiny grids.
    Selfcheck(SelfcheckArgs),
    /// Every experiment at full size.
    All(Multi),
}

#[derive(Parser, Debug)]
#[command(
    name = "schrolab",
    version,
    about = "Weak-type and kernel experiments for Schrodinger groups on discrete tori"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sharpness(_) => "sharpness",
            Self::Weak11(_) => "weak11",
            Self::LpBound(_) => "lp-bound",
            Self::KernelCheck(_) => "kernel-check",
            Self::TailIntegral(_) => "tail-integral",
            Self::BesovEnvelope(_) => "besov-envelope",
            Self::CzCheck(_) => "cz-check",
            Self::Selfcheck(_) => "selfcheck",
            Self::All(_) => "all",
        }
    }

    /// The experiments the subcommand runs, before `--only`.
    pub fn kinds(&self) -> Vec<Kind> {
        match self {
            Self::Sharpness(_) => vec![Kind::Sharpness],
            Self::Weak11(_) => vec![Kind::Weak11Upper],
            Self::LpBound(_) => vec![Kind::LpBound],
            Self::KernelCheck(_) => vec![
                Kind::ResolventDecay,
                Kind::HarnackAnnulus,
                Kind::QKernel,
                Kind::ComplexTime,
                Kind::WeightedMultiplier,
                Kind::TailIntegral,
                Kind::FeynmanKac,
            ],
            Self::TailIntegral(_) => vec![Kind::TailIntegral],
            Self::BesovEnvelope(_) => vec![
                Kind::BesovEnvelope,
                Kind::BesovProduct,
                Kind::PartitionOfUnity,
            ],
            Self::CzCheck(_) => vec![Kind::CzInvariants, Kind::CzHeatL2],
            Self::Selfcheck(_) | Self::All(_) => Kind::ALL.to_vec(),
        }
    }
}

fn select(all: Vec<Kind>, only: &[String], sub: &str) -> Result<Vec<Kind>> {
    if only.is_empty() {
        return Ok(all);
    }
    only.iter()
        .map(|name| {
            let kind: Kind = name
                .parse()
                .map_err(|_| CliError::Usage(format!("unknown experiment `{name}`")))?;
            if all.contains(&kind) {
                Ok(kind)
            } else {
                Err(CliError::Usage(format!("`{name}` is not run by `{sub}`")))
            }
        })
        .collect()
}

/// The resolved configuration of every experiment the command runs.
pub fn resolve(command: &Command) -> Result<Vec<ExperimentConfig>> {
    let sub = command.name();
    let (kinds, settings) = match command {
        Command::Sharpness(s)
        | Command::Weak11(s)
        | Command::LpBound(s)
        | Command::TailIntegral(s) => (command.kinds(), s),
        Command::KernelCheck(m)
        | Command::BesovEnvelope(m)
        | Command::CzCheck(m)
        | Command::All(m) => (select(command.kinds(), &m.only, sub)?, &m.settings),
        Command::Selfcheck(args) => {
            return Ok(command
                .kinds()
                .into_iter()
                .map(|k| {
                    let mut cfg = reduced(k);
                    if let Some(dir) = std::env::var_os(OUT_ENV) {
                        cfg.out_dir = dir.into();
                    }
                    if let Some(dir) = &args.out {
                        cfg.out_dir = dir.clone();
                    }
                    cfg
                })
                .collect());
        }
    };
    let overrides = settings.overrides();
    kinds
        .into_iter()
        .map(|k| load_config(k, settings.config.as_deref(), &overrides))
        .collect()
}

fn stamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    secs.to_string()
}

/// Runs the configurations, saving artifacts and the manifest under the
/// first configuration's output directory.
pub fn execute(subcommand: &str, configs: &[ExperimentConfig]) -> Result<(RunManifest, PathBuf)> {
    let stamp = stamp();
    let mut manifest = RunManifest::new(subcommand, &stamp);
    for cfg in configs {
        let start = Instant::now();
        let report = schrolab_experiments::run(cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let outputs = report.save(cfg, &cfg.out_dir, &stamp)?;
        for line in report.summary_lines() {
            println!("{line}");
        }
        println!("  wall time {seconds:.3}s");
        if let Some(row) = report.failing_row() {
            eprintln!("{} failed at {}", report.kind, report.format_row(row));
        }
        manifest
            .records
            .push(ExperimentRecord::new(cfg, &report, seconds, outputs));
    }
    let dir = configs
        .first()
        .map_or_else(|| Path::new(".").to_path_buf(), |c| c.out_dir.clone());
    let path = dir.join("manifest.txt");
    manifest.write(&path)?;
    Ok((manifest, path))
}

/// Parses `argv` (program name first) and runs it; returns the exit code:
/// 0 when every experiment passes, 1 on a violated bound, 2 on usage or
/// configuration errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = resolve(&cli.command).and_then(|configs| execute(cli.command.name(), &configs));
    match outcome {
        Ok((manifest, path)) => {
            let pass = manifest.pass();
            println!("overall: {}", if pass { "PASS" } else { "FAIL" });
            println!("manifest: {}", path.display());
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("schrolab").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn flags_map_to_config_keys() {
        let cmd = parse(&[
            "lp-bound", "--N", "512", "--L_box", "64", "--t", "0,1", "--tau", "-1,1", "--p", "2",
        ]);
        let cfgs = resolve(&cmd).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert_eq!((cfgs[0].points, cfgs[0].box_length), (512, 64.0));
        assert_eq!(cfgs[0].tau, vec![-1.0, 1.0]);
        assert_eq!(cfgs[0].p, vec![2.0]);
    }

    #[test]
    fn only_restricts_and_is_checked() {
        let cmd = parse(&["kernel-check", "--only", "q_kernel,complex_time"]);
        let kinds: Vec<Kind> = resolve(&cmd).unwrap().iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [Kind::QKernel, Kind::ComplexTime]);
        let err = resolve(&parse(&["cz-check", "--only", "q_kernel"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(resolve(&parse(&["all", "--only", "nope"])).is_err());
    }

    #[test]
    fn selfcheck_uses_tiny_grids() {
        let cfgs = resolve(&parse(&["selfcheck"])).unwrap();
        assert_eq!(cfgs.len(), Kind::ALL.len());
        for c in &cfgs {
            assert!(c.points <= 256, "{}", c.kind);
            assert!(c.points.pow(c.n as u32) <= 256 || c.n == 1, "{}", c.kind);
        }
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["schrolab", "frobnicate"]), 2);
        assert_eq!(run(["schrolab", "sharpness", "--width", "3"]), 2);
        assert_eq!(run(["schrolab", "tail-integral", "--c1", "0.5"]), 2);
    }
}
