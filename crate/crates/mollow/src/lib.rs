//! Lindblad simulation and spectral analysis for a resonantly driven
//! quantum dot strongly coupled to an optical cavity.
//!
//! The crate covers the full path from system parameters to physical
//! observables:
//!
//! * [`operators`], [`params`]: truncated Jaynes-Cummings operator algebra
//!   and the experiment parameter set (all rates in GHz, times in ns);
//! * [`liouvillian`]: the vectorized master-equation generator with
//!   radiative, dephasing and phonon-assisted channels;
//! * [`expm`], [`steady`]: scaling-and-squaring matrix exponential and the
//!   dense steady-state solve;
//! * [`correlation`], [`spectrum`]: quantum-regression first-order
//!   coherence g(τ) and its finite-window Fourier transform;
//! * [`pipeline`]: grid selection, tail control and Fock-truncation
//!   convergence wrapped into one spectrum call;
//! * [`lorentz`], [`analysis`]: multi-Lorentzian fits and extraction of
//!   sideband splitting, intensity ratio and linewidths;
//! * [`calibrate`], [`breakpoint`]: phonon-rate calibration against
//!   measured linewidth curves and the power-broadening transition
//!   locator.

pub mod analysis;
pub mod breakpoint;
pub mod calibrate;
pub mod correlation;
pub mod density;
pub mod error;
pub mod expm;
pub mod liouvillian;
pub mod lorentz;
pub mod operators;
pub mod params;
pub mod pipeline;
pub mod spectrum;
pub mod steady;

pub use error::{Error, Result};
pub use params::{DriveTarget, SystemParams};
pub use pipeline::{simulate_spectrum, GridOptions, SimulatedSpectrum};
