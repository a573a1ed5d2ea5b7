//! Boundary-flux tracking control for the 1D heat equation.
//!
//! Given a target flux trajectory w on the observation end x = 0, this crate
//! synthesizes Dirichlet boundary controls at x = L by three routes:
//!
//! * a flatness power series driven by high-order derivatives of a Gevrey
//!   mollification of the target, with an explicit growth-function bound on
//!   the control cost;
//! * transmutation of wave-equation controls through the Gaussian heat
//!   kernel;
//! * dual (HUM-style) synthesis by conjugate-gradient minimization of the
//!   adjoint functional, with the control read off the adjoint flux.
//!
//! Independent Crank-Nicolson and leapfrog solvers act as verification
//! oracles throughout. The numeric kernels are generic over the scalar type
//! via [`scalar::Real`]; `f64` aliases are exported at the crate root.

pub mod bump;
pub mod csvio;
pub mod error;
pub mod field;
pub mod flatness;
pub mod grid;
pub mod heat;
pub mod hum;
pub mod jet;
pub mod mollify;
pub mod quadrature;
pub mod scalar;
pub mod signal;
pub mod special;
pub mod target;
pub mod transmute;
pub mod verify;
pub mod wave;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the core types.
pub type TimeGrid64 = grid::TimeGrid<f64>;
pub type SpaceGrid64 = grid::SpaceGrid<f64>;
pub type Signal64 = signal::Signal<f64>;
pub type HeatField64 = field::HeatField<f64>;
pub type WaveField64 = field::WaveField<f64>;
pub type Jet64 = jet::Jet<f64>;
pub type GevreyBump64 = bump::GevreyBump<f64>;
pub type MollifiedTarget64 = mollify::MollifiedTarget<f64>;
pub type Target64 = target::Target<f64>;
pub type FlatTarget64 = flatness::FlatTarget<f64>;
pub type HeatProblem64 = heat::HeatProblem<f64>;
pub type AdjointProblem64 = heat::AdjointProblem<f64>;
pub type WaveProblem64 = wave::WaveProblem<f64>;
pub type TransmutationPlan64 = transmute::TransmutationPlan<f64>;
pub type DualConfig64 = hum::DualConfig<f64>;
