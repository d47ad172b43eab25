//! Simulation laboratory for annealed Langevin dynamics of contrastive
//! embeddings on product spheres.
//!
//! The crate provides the InfoNCE potential with exact gradients and
//! per-anchor Hessians ([`potential`]), the product-sphere geometry the
//! dynamics live on ([`geometry`]), inverse-temperature schedules and their
//! classification against the critical logarithmic rate ([`schedules`]),
//! the annealed SGLD integrator with seeded ensembles ([`dynamics`]),
//! analytic benchmark landscapes on the circle with known barriers and
//! Kramers prefactors ([`landscapes`]), and the statistical estimators that
//! turn escape-time and convergence predictions into testable numbers
//! ([`diagnostics`]).

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod landscapes;
pub mod potential;
pub mod schedules;

pub use error::{Error, Result};
