//! Purification dynamics of a single continuously monitored qubit.
//!
//! The crate provides three trajectory backends and the exact
//! probability densities they should reproduce:
//!
//! * [`collisional`]: sequential weak collisions with measured ancilla qubits,
//!   simulated with full 4x4 joint density matrices.
//! * [`integrator`]: Euler–Maruyama for the multiplicative-noise equation
//!   `dq = (1 - q²) dW` and for the additive-noise form
//!   `dQ = η tanh Q dt + dW` with `Q = atanh q`.
//! * [`analytic`]: closed-form densities of `Q`, the effective rate `Ω = Q/t`,
//!   the state coordinate `q` and the purity `τ`, plus the action landscape,
//!   mean purity and the Fokker–Planck residual.
//!
//! [`stats`] compares ensembles against the analytic results.

pub mod analytic;
pub mod collisional;
pub mod error;
pub mod integrator;
pub mod quadrature;
pub mod rng;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use state::{DensityMatrix, Purity, Rate, StateCoord, TransformedCoord};
