//! Exceptional-point analysis and open-system simulation of a single
//! lambda-type ion coupled to an optical cavity.
//!
//! All numerics are generic over the floating-point type through [`Real`]
//! (implemented for `f32` and `f64`); the aliases at the crate root fix the
//! scalar to `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod io;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{AtomicLevel, Detuning, HilbertSpaceConfig, JumpOperator, Unit};
pub use scalar::Real;

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
pub type Params = model::SystemParams<f64>;
pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Triple = spectral::ComplexTriple<f64>;
pub type Ep3 = spectral::Ep3Point<f64>;
pub type SurfaceGrid = spectral::EigenSurfaceGrid<f64>;
pub type Scaling = spectral::ScalingFit<f64>;
pub type Trace = dynamics::SpectrumTrace<f64>;
pub type TrajConfig = dynamics::TrajectoryConfig<f64>;
pub type Fit = fitting::FitResult<f64>;
