//! Numerical laboratory for spectral multipliers of non-negative
//! self-adjoint operators on discrete tori.
//!
//! Everything is generic over the scalar type; the aliases at the crate
//! root fix it to `f64`.

pub mod besov;
pub mod cz;
pub mod error;
pub mod field;
pub mod grid;
pub mod norms;
pub mod operators;
pub mod potentials;
pub mod scalar;
pub mod symbols;
pub mod transform;

pub use besov::{besov_norm, besov_norm_default};
pub use cz::Cube;
pub use error::{Error, Result};
pub use field::{Direction, Mask, Space};
pub use norms::{fit_line, fit_power_law, FitReport};
pub use scalar::Real;
pub use symbols::{dyadic_piece_envelope, k0_of_t, smooth_step, Support};

pub type Complex = num_complex::Complex<f64>;
pub type Grid = grid::Grid<f64>;
pub type DoublingReport = grid::DoublingReport<f64>;
pub type Field = field::Field<f64>;
pub type SubdomainField = field::SubdomainField<f64>;
pub type FftPlan = transform::FftPlan<f64>;
pub type SymbolFn = symbols::SymbolFn<f64>;
pub type OperatorModel = operators::OperatorModel<f64>;
pub type MatrixModel = operators::MatrixModel<f64>;
pub type KernelColumn = operators::KernelColumn<f64>;
pub type DistributionReport = norms::DistributionReport<f64>;
pub type CzResult = cz::CzResult<f64>;
pub type CzReport = cz::CzReport<f64>;
pub type BadPart = cz::BadPart<f64>;
