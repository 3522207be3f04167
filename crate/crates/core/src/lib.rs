//! Traveling wavefronts of the delayed monostable reaction-diffusion equation
//!
//! ```text
//! u_t = u_xx − u + g(u(t − h, x))
//! ```
//!
//! and of its nonlocal lattice analogue. A front `u = φ(x + ct)` solves the
//! profile equation `φ″ − cφ′ − φ + g(φ(t − ch)) = 0` with `φ(−∞) = 0` and
//! `φ(+∞) = κ`.
//!
//! The crate covers the characteristic equation and its critical speeds,
//! profiles with analytic exponential tails, the two-sided Green's kernel
//! operator, the monotone upper/lower squeeze that produces fronts, explicit
//! direct simulation, lattice characteristic data, minimal-speed estimation
//! and pushed/pulled classification.

pub mod charspec;
pub mod cli;
pub mod dns;
mod error;
pub mod greens;
mod interp;
pub mod lattice;
pub mod nonlinearity;
pub mod profile;
pub mod solver;
pub mod speedscan;

pub use error::{Error, Result};
pub use interp::Pchip;
pub use nonlinearity::{NonlinearitySpec, Reaction};
pub use profile::Profile;
