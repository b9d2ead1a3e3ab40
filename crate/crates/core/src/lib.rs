//! Zero-temperature transfer-matrix quantum Monte Carlo for the
//! infinite-range ±J transverse-field Ising spin glass.
//!
//! The simulator works on a ring of `L` identical spin clusters (plackets)
//! whose transfer matrix is the shifted operator `W = C·I - H_tot`. Sampling
//! the ring with restricted single-spin-flip moves draws placket
//! configurations from the squared amplitudes of the dominant eigenstate of
//! `W`, i.e. the ground state of `H_tot`; annealing the transverse field to
//! zero relaxes the chain into classical ground states. Exact oracles
//! (exhaustive search, dense diagonalization, chain enumeration) back every
//! claim at desk scale.

pub mod anneal;
pub mod chain;
pub mod error;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod transfer;

pub use error::{Error, Result};
pub use instance::{SpinConfiguration, SpinGlassInstance};
