use crate::besov_check::{
    besov_envelope_check, besov_product, calculus_oracle, partition_of_unity,
};
use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;
use crate::kernels::{
    complex_time, harnack_annulus, q_kernel, resolvent_decay, tail_integral, weighted_multiplier,
};
use crate::report::ExperimentReport;
use crate::sharpness::sharpness_experiment;
use crate::sweeps::{cz_heat_l2, cz_invariants, feynman_kac, lp_bound, weak11_upper};

/// Runs the experiment named by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        Kind::Sharpness => sharpness_experiment(cfg),
        Kind::Weak11Upper => weak11_upper(cfg),
        Kind::LpBound => lp_bound(cfg),
        Kind::CzHeatL2 => cz_heat_l2(cfg),
        Kind::CzInvariants => cz_invariants(cfg),
        Kind::FeynmanKac => feynman_kac(cfg),
        Kind::ResolventDecay => resolvent_decay(cfg),
        Kind::HarnackAnnulus => harnack_annulus(cfg),
        Kind::QKernel => q_kernel(cfg),
        Kind::ComplexTime => complex_time(cfg),
        Kind::WeightedMultiplier => weighted_multiplier(cfg),
        Kind::TailIntegral => tail_integral(cfg),
        Kind::BesovEnvelope => besov_envelope_check(cfg),
        Kind::BesovProduct => besov_product(cfg),
        Kind::PartitionOfUnity => partition_of_unity(cfg),
        Kind::CalculusOracle => calculus_oracle(cfg),
    }
}

/// The kind on tiny grids: at most 256 points per axis for sweeps and 32
/// for dense models.
pub fn reduced(kind: Kind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.points = 256;
    cfg.box_length = 64.0;
    match kind {
        Kind::Sharpness => {
            cfg.box_length = 512.0;
            cfg.t = vec![8.0, 16.0, 32.0, 64.0];
        }
        Kind::Weak11Upper => {
            cfg.t = vec![0.0, 2.0, 4.0, 8.0];
            cfg.probes.random = 8;
        }
        Kind::LpBound => cfg.t = (0..=64).map(f64::from).collect(),
        Kind::CzHeatL2 => {
            cfg.points = 128;
            cfg.box_length = 128.0;
            cfg.inputs = 6;
        }
        Kind::CzInvariants => {
            cfg = ExperimentConfig::preset(kind);
            cfg.points = 16;
            cfg.box_length = 16.0;
            cfg.inputs = 10;
        }
        Kind::FeynmanKac | Kind::CalculusOracle => cfg = ExperimentConfig::preset(kind),
        Kind::TailIntegral => {
            cfg.box_length = 128.0;
            cfg.t = vec![0.0, 1.0];
            cfg.k = vec![1, 2];
        }
        Kind::BesovEnvelope => {
            cfg.t = vec![0.0, 4.0];
            cfg.k = vec![1, 2];
            cfg.ell = (-4..=2).collect();
        }
        Kind::PartitionOfUnity => cfg.inputs = 10_000,
        Kind::ResolventDecay => {
            cfg.box_length = 16.0;
            cfg.t = vec![0.25, 1.0, 4.0];
        }
        Kind::HarnackAnnulus
        | Kind::QKernel
        | Kind::ComplexTime
        | Kind::WeightedMultiplier
        | Kind::BesovProduct => {}
    }
    cfg
}

/// Every kind at reduced size.
pub fn selfcheck_configs() -> Vec<ExperimentConfig> {
    Kind::ALL.iter().map(|&k| reduced(k)).collect()
}
