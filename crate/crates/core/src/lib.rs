//! Steady-state transport engine for non-interacting fermionic junctions
//! under continuous monitoring of a quadratic observable.
//!
//! A two-terminal junction (Hermitian single-particle Hamiltonian, two
//! biased thermal reservoirs, monitored observable O at strength gamma) is
//! solved exactly: the monitoring enters the retarded Green's functions as
//! a frequency-independent lifetime and the Keldysh sector through a linear
//! self-consistency for the stationary correlation matrix. Particle and
//! heat currents split into an elastic Landauer-type channel and an
//! inelastic monitor-mediated channel.
//!
//! Modules:
//! - [`model`]: junction definition and validation, Fermi functions,
//!   hybridization kernels.
//! - [`numerics`]: adaptive frequency quadrature with controlled tails.
//! - [`greens`]: self-energies, dressed Green's functions, spectral and
//!   transmission functions.
//! - [`selfconsistent`]: the linear solve for the correlation matrix.
//! - [`currents`]: exact currents and engine-level derived quantities
//!   (conductance, power, stopping voltage, cooling maps, COP).
//! - [`analytic`]: closed-form single-level and two-site models used as
//!   oracles and fast paths.
//! - [`oracle`]: brute-force finite-lead validation of the whole engine.
//! - [`scenarios`]: ready-made builders for the reference devices.

pub mod analytic;
pub mod currents;
pub mod error;
pub mod greens;
mod linalg;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod scenarios;
pub mod selfconsistent;

pub use currents::{transport, TransportResult};
pub use error::{Error, Result};
pub use model::{Junction, Lead, Moment};
pub use numerics::QuadratureSpec;
