use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use schrolab_core::operators::{build_dirichlet, build_periodic, build_schrodinger};
use schrolab_core::potentials::{mask_from_spec, potential_from_spec};
use schrolab_core::{Grid, OperatorModel};

use crate::error::{config_err, mismatch, Result};

macro_rules! kinds {
    ($($variant:ident => $name:literal,)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Kind {
            $($variant,)*
        }

        impl Kind {
            pub const ALL: &'static [Kind] = &[$(Kind::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Kind::$variant => $name,)*
                }
            }
        }

        impl FromStr for Kind {
            type Err = crate::error::ExperimentError;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok(Kind::$variant),)*
                    other => Err(config_err("kind", format!("unknown experiment `{other}`"))),
                }
            }
        }
    };
}

kinds! {
    Sharpness => "sharpness",
    Weak11Upper => "weak11_upper",
    LpBound => "lp_bound",
    CzHeatL2 => "cz_heat_l2",
    CzInvariants => "cz_invariants",
    FeynmanKac => "feynman_kac",
    ResolventDecay => "resolvent_decay",
    HarnackAnnulus => "harnack_annulus",
    QKernel => "q_kernel",
    ComplexTime => "complex_time",
    WeightedMultiplier => "weighted_multiplier",
    TailIntegral => "tail_integral",
    BesovEnvelope => "besov_envelope",
    BesovProduct => "besov_product",
    PartitionOfUnity => "partition_of_unity",
    CalculusOracle => "calculus_oracle",
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which non-negative self-adjoint operator an experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    /// `|xi|^m` on the torus, diagonal in Fourier space.
    Free,
    /// `-Delta_h + V` with `V` given by a potential spec.
    Schrodinger(String),
    /// `-Delta_h` on a masked subdomain with zero exterior values.
    Dirichlet(String),
}

impl OperatorSpec {
    pub fn build(&self, grid: &Grid, m: u32) -> Result<OperatorModel> {
        Ok(match self {
            Self::Free => build_periodic(grid, m)?,
            Self::Schrodinger(v) => build_schrodinger(grid, &potential_from_spec(grid, v)?)?,
            Self::Dirichlet(mask) => build_dirichlet(grid, Arc::new(mask_from_spec(grid, mask)?))?,
        })
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Self::Free)
    }
}

impl FromStr for OperatorSpec {
    type Err = crate::error::ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None if s == "free" => Ok(Self::Free),
            Some(("schrodinger", v)) if !v.is_empty() => Ok(Self::Schrodinger(v.to_string())),
            Some(("dirichlet", m)) if !m.is_empty() => Ok(Self::Dirichlet(m.to_string())),
            _ => Err(config_err(
                "operator",
                format!("`{s}` is not one of free, schrodinger:<potential>, dirichlet:<mask>"),
            )),
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Free => f.write_str("free"),
            Self::Schrodinger(v) => write!(f, "schrodinger:{v}"),
            Self::Dirichlet(m) => write!(f, "dirichlet:{m}"),
        }
    }
}

/// Probe family for the lower bounds on operator quasinorms: unit-mass
/// deltas on a coarse sublattice, the witness probe and seeded sparse spikes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub deltas_per_axis: usize,
    pub random: usize,
    pub spikes: usize,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            deltas_per_axis: 4,
            random: 32,
            spikes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: usize,
    pub points: usize,
    pub box_length: f64,
    /// Order of the free operator.
    pub m: u32,
    pub operators: Vec<OperatorSpec>,
    pub t: Vec<f64>,
    pub k: Vec<i32>,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub tau: Vec<f64>,
    pub radii: Vec<f64>,
    pub ell: Vec<i32>,
    pub c0: Vec<f64>,
    /// CZ heights as multiples of the mean `||f||_1 / mu(X)`.
    pub heights: Vec<f64>,
    /// Number of random inputs or random trials.
    pub inputs: usize,
    pub probes: ProbeSpec,
    pub c1: f64,
    pub seed: u64,
    /// Allowed excess of a fitted exponent over its reference.
    pub tolerance: f64,
    /// Allowed max/median spread of a measured constant.
    pub stability: f64,
    pub out_dir: PathBuf,
}

fn geometric(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 2f64.powi(e)).collect()
}

impl ExperimentConfig {
    /// Built-in defaults: `n = 1`, `N = 4096`, `L_box = 256`, `m = 2`,
    /// `c1 = 2`, `seed = 7`, with sweep lists chosen per kind.
    pub fn defaults(kind: Kind) -> Self {
        let mut cfg = Self {
            kind,
            n: 1,
            points: 4096,
            box_length: 256.0,
            m: 2,
            operators: vec![OperatorSpec::Free],
            t: geometric(0, 5),
            k: vec![1, 2, 3, 4],
            p: vec![1.5, 2.0, 3.0],
            s: vec![1.25],
            tau: vec![0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0],
            radii: vec![1.0, 2.0, 4.0],
            ell: (-6..=4).collect(),
            c0: vec![1.0, 0.25, 1.0 / 16.0],
            heights: vec![4.0],
            inputs: 10,
            probes: ProbeSpec::default(),
            c1: 2.0,
            seed: 7,
            tolerance: 0.12,
            stability: 10.0,
            out_dir: PathBuf::from("schrolab-out"),
        };
        match kind {
            Kind::Sharpness | Kind::Weak11Upper => cfg.t = geometric(2, 6),
            Kind::LpBound => cfg.t = std::iter::once(0.0).chain(geometric(0, 10)).collect(),
            Kind::CzHeatL2 => {
                cfg.t = vec![0.0];
                cfg.inputs = 10;
                cfg.heights = geometric(1, 6);
                cfg.stability = 3.0;
            }
            Kind::CzInvariants => {
                cfg.inputs = 50;
                cfg.heights = vec![2.0, 8.0, 32.0];
            }
            Kind::FeynmanKac => {
                cfg.t = vec![0.1, 1.0, 5.0];
                cfg.operators = (1..=5)
                    .map(|i| OperatorSpec::Schrodinger(format!("randnonneg:{i}")))
                    .chain(std::iter::once(OperatorSpec::Dirichlet("lshape".into())))
                    .collect();
            }
            Kind::ResolventDecay => {
                cfg.t = vec![0.25, 1.0, 4.0, 16.0];
                cfg.s = vec![1.0];
            }
            Kind::HarnackAnnulus => cfg.t = vec![0.25, 1.0, 4.0],
            Kind::ComplexTime => cfg.s = vec![0.0, 1.0, 2.0],
            Kind::WeightedMultiplier => {
                cfg.radii = vec![1.0, 2.0, 4.0, 8.0];
                cfg.s = vec![1.0, 2.0];
            }
            Kind::TailIntegral => {
                cfg.t = vec![1.0, 4.0, 16.0];
                cfg.k = vec![1, 2, 3, 4];
            }
            Kind::BesovEnvelope => {
                cfg.t = vec![0.0, 1.0, 4.0, 16.0];
                cfg.k = vec![1, 2, 3];
            }
            Kind::BesovProduct => cfg.s = vec![1.5],
            Kind::PartitionOfUnity => cfg.inputs = 10_000,
            Kind::CalculusOracle => cfg.inputs = 5,
            Kind::QKernel => {}
        }
        cfg
    }

    /// Defaults with the grid resized to what the kind needs to resolve
    /// its sweep at full scale.
    pub fn preset(kind: Kind) -> Self {
        let mut cfg = Self::defaults(kind);
        match kind {
            Kind::Sharpness | Kind::Weak11Upper => {
                cfg.points = 1 << 16;
                cfg.box_length = 512.0;
            }
            Kind::TailIntegral => {
                cfg.points = 1 << 15;
                cfg.box_length = 4096.0;
            }
            Kind::CzHeatL2 => cfg.points = 256,
            Kind::CzInvariants => {
                cfg.n = 2;
                cfg.points = 32;
                cfg.box_length = 32.0;
            }
            Kind::FeynmanKac => {
                cfg.n = 2;
                cfg.points = 16;
                cfg.box_length = 16.0;
            }
            Kind::CalculusOracle => {
                cfg.points = 32;
                cfg.box_length = 32.0;
            }
            _ => {}
        }
        cfg
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.n, self.points, self.box_length)?)
    }

    /// The single operator of kinds that do not sweep over models.
    pub fn single_operator(&self) -> Result<&OperatorSpec> {
        match self.operators.as_slice() {
            [op] => Ok(op),
            _ => Err(mismatch(self.kind, "expects exactly one operator")),
        }
    }

    pub fn require_free(&self) -> Result<()> {
        if self.single_operator()?.is_free() {
            Ok(())
        } else {
            Err(mismatch(self.kind, "needs the free model"))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(config_err("n", "dimension must be 1, 2 or 3"));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(config_err(
                "N",
                "points per axis must be a power of two, at least 8",
            ));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(config_err("L_box", "box length must be positive"));
        }
        if self.m < 2 {
            return Err(config_err("m", "operator order must be at least 2"));
        }
        if !(self.c1 > 1.0) {
            return Err(config_err(
                "c1",
                format!("constraint c1 > 1 violated (got {})", self.c1),
            ));
        }
        if !(self.stability > 1.0) {
            return Err(config_err("stability", "stability factor must exceed 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(config_err("tolerance", "tolerance must be non-negative"));
        }
        if self.inputs == 0 {
            return Err(config_err("inputs", "need at least one input"));
        }
        let lists: [(&str, usize); 10] = [
            ("operator", self.operators.len()),
            ("t", self.t.len()),
            ("k", self.k.len()),
            ("p", self.p.len()),
            ("s", self.s.len()),
            ("tau", self.tau.len()),
            ("R", self.radii.len()),
            ("ell", self.ell.len()),
            ("c0", self.c0.len()),
            ("heights", self.heights.len()),
        ];
        for (key, len) in lists {
            if len == 0 {
                return Err(config_err(key, "sweep list must not be empty"));
            }
        }
        let finite = |key: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(config_err(key, "values must be finite"))
            }
        };
        finite("t", &self.t)?;
        finite("s", &self.s)?;
        finite("tau", &self.tau)?;
        if self.p.iter().any(|&p| !(p >= 1.0)) {
            return Err(config_err("p", "exponents must satisfy p >= 1"));
        }
        if self.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(config_err("R", "scales must be positive"));
        }
        if self.c0.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(config_err("c0", "need 0 < c0 <= 1"));
        }
        if self.heights.iter().any(|&h| !(h > 1.0 && h.is_finite())) {
            return Err(config_err("heights", "height multiples must exceed 1"));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        fn one<T: FromStr>(key: &str, v: &str, what: &str) -> Result<T> {
            v.parse()
                .map_err(|_| config_err(key, format!("expected {what}, got `{v}`")))
        }
        fn list<T: FromStr>(key: &str, v: &str, what: &str) -> Result<Vec<T>> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| one(key, s.trim(), what))
                .collect()
        }
        match key.trim() {
            "kind" => self.kind = value.parse()?,
            "n" => self.n = one(key, value, "an integer")?,
            "N" => self.points = one(key, value, "an integer")?,
            "L_box" => self.box_length = one(key, value, "a number")?,
            "m" => self.m = one(key, value, "an integer")?,
            "operator" => {
                self.operators = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "t" => self.t = list(key, value, "numbers")?,
            "k" => self.k = list(key, value, "integers")?,
            "p" => self.p = list(key, value, "numbers")?,
            "s" => self.s = list(key, value, "numbers")?,
            "tau" => self.tau = list(key, value, "numbers")?,
            "R" => self.radii = list(key, value, "numbers")?,
            "ell" => self.ell = list(key, value, "integers")?,
            "c0" => self.c0 = list(key, value, "numbers")?,
            "heights" => self.heights = list(key, value, "numbers")?,
            "inputs" => self.inputs = one(key, value, "an integer")?,
            "probe_deltas" => self.probes.deltas_per_axis = one(key, value, "an integer")?,
            "probe_random" => self.probes.random = one(key, value, "an integer")?,
            "probe_spikes" => self.probes.spikes = one(key, value, "an integer")?,
            "c1" => self.c1 = one(key, value, "a number")?,
            "seed" => self.seed = one(key, value, "an integer")?,
            "tolerance" => self.tolerance = one(key, value, "a number")?,
            "stability" => self.stability = one(key, value, "a number")?,
            "out" => self.out_dir = PathBuf::from(value),
            other => return Err(config_err(other, "unknown key")),
        }
        Ok(())
    }

    /// Every setting as `(key, value)` in the syntax accepted by [`set`](Self::set).
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        }
        vec![
            ("kind", self.kind.to_string()),
            ("n", self.n.to_string()),
            ("N", self.points.to_string()),
            ("L_box", self.box_length.to_string()),
            ("m", self.m.to_string()),
            ("operator", join(&self.operators)),
            ("t", join(&self.t)),
            ("k", join(&self.k)),
            ("p", join(&self.p)),
            ("s", join(&self.s)),
            ("tau", join(&self.tau)),
            ("R", join(&self.radii)),
            ("ell", join(&self.ell)),
            ("c0", join(&self.c0)),
            ("heights", join(&self.heights)),
            ("inputs", self.inputs.to_string()),
            ("probe_deltas", self.probes.deltas_per_axis.to_string()),
            ("probe_random", self.probes.random.to_string()),
            ("probe_spikes", self.probes.spikes.to_string()),
            ("c1", self.c1.to_string()),
            ("seed", self.seed.to_string()),
            ("tolerance", self.tolerance.to_string()),
            ("stability", self.stability.to_string()),
            ("out", self.out_dir.display().to_string()),
        ]
    }
}
