//! Surface-corrected Cauchy-Born modelling of a semi-infinite 1D EAM
//! chain.
//!
//! The crate builds three energies over bond strains -- the atomistic
//! chain energy, its Cauchy-Born (local) approximation, and a surface
//! corrector energy on a boundary layer -- plus the machinery to minimize
//! them, compare their minimizers, and measure the exponential decay of
//! surface effects. The headline object is the predictor-corrector
//! approximation: the Cauchy-Born minimizer plus a compactly supported
//! corrector, assembled strain-wise.

pub mod atomistic;
pub mod cauchy_born;
pub mod chain;
pub mod corrector;
pub mod decay;
pub mod experiments;
pub mod force;
pub mod optimize;
pub mod potential;
pub mod tridiag;

pub use chain::{strain_l2_distance, Displacement};
pub use decay::{fit_decay, DecayFit, FitError};
pub use force::ExternalForce;
pub use optimize::{SolveReport, SolverConfig};
pub use potential::{Deriv, PotentialParams};
pub use tridiag::SymTridiag;
