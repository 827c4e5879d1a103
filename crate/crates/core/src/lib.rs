//! Effective Hamiltonian and large-deviation toolkit for velocity jump
//! processes, with solvers for the hyperbolic-scaled kinetic equation and
//! its Hamilton-Jacobi limit.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases below fix the scalar to `f64`, which is what the command-line
//! tool and the acceptance suite use.

pub mod error;
pub mod field;
pub mod hamiltonian;
pub mod hj;
pub mod kinetic;
pub mod measure;
pub mod pdmp;
pub mod profile;
pub mod quadrature;
pub mod roots;
pub mod scalar;

pub use error::{Error, Result};
pub use field::GridField;
pub use hamiltonian::{EigenPair, HamiltonianEval, LegendreEval, Regime};
pub use hj::{Boundary, HopfLax, LaxFriedrichsOptions};
pub use kinetic::{ConvergenceReport, KineticField, KineticOptions, LinearField};
pub use measure::{Atom, Maximizers, MeasureKind, Moments, SupportQuery, VelocityMeasure};
pub use pdmp::{MomentReport, TrajectoryBatch};
pub use profile::InitialProfile;
pub use scalar::Scalar;

pub type VelocityMeasure64 = measure::VelocityMeasure<f64>;
pub type VelocityMeasure32 = measure::VelocityMeasure<f32>;
pub type HamiltonianEval64 = hamiltonian::HamiltonianEval<f64>;
pub type EigenPair64 = hamiltonian::EigenPair<f64>;
pub type LegendreEval64 = hamiltonian::LegendreEval<f64>;
pub type GridField64 = field::GridField<f64>;
pub type KineticField64 = kinetic::KineticField<f64>;
