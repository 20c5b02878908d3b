//! Finite-dimensional energy full counting statistics for a small system
//! coupled to a thermal reservoir, with the modular-theory machinery that
//! expresses it and numerical checks of the identities relating the two.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod fcs;
pub mod gns;
pub mod measure;
pub mod operator;
pub mod output;
pub mod presets;
pub mod quadrature;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use measure::{Atom, AtomicMeasure};
pub use operator::Operator;
pub use scalar::{Cx, Real};
pub use states::DensityMatrix;
pub use dynamics::Scenario;
pub use verify::{run_suite, Suite, VerifyOptions, VerifyReport};

pub type Operator64 = Operator<f64>;
pub type Operator32 = Operator<f32>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
pub type AtomicMeasure64 = AtomicMeasure<f64>;
pub type AtomicMeasure32 = AtomicMeasure<f32>;
