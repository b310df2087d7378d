//! Core numerics for the 2x2-periodic weighted lozenge tiling model of the
//! regular hexagon: lattice model, exact enumeration, MCMC sampling,
//! finite-N correlation kernel and the liquid-region asymptotics.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;

pub mod asymptotics;
pub mod enumerate;
pub mod kernel;
pub mod model;
pub mod mp;
pub mod roots;
pub mod sample;

mod error;

pub use error::Error;
pub use model::{Alpha, DensityTriple, LozengeType, ModelParams, TilingState};

pub type Result<T> = core::result::Result<T, Error>;
