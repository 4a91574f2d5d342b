//! Finite volume discretization of the compressible Navier-Stokes-Fourier
//! system on the flat torus `[0,1]^d`, `d = 2, 3`.
//!
//! The crate provides the building blocks of a structure-preserving implicit
//! upwind scheme on a uniform periodic Cartesian grid:
//!
//! * [`mesh`] — the grid, its faces and the face-centered dual cells,
//! * [`fields`] — piecewise constant cell/face data and the `L^2` projections,
//! * [`operators`] — discrete gradient, divergence and Laplacian with their
//!   summation-by-parts dualities,
//! * [`thermo`] — perfect-gas state functions, entropy Hessian bounds and the
//!   ballistic-free-energy based relative energy,
//! * [`flux`] — the diffusive upwind numerical flux,
//! * [`scheme`] — one fully implicit time step and the time loop,
//! * [`diagnostics`] — mass/energy/entropy balances and weak-form
//!   consistency defects,
//! * [`convergence`] — grid transfer, error norms, EOC tables and the
//!   self-convergence study driver,
//! * [`checks`] — a seeded, randomized suite of the discrete identities.
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature instead of `std` for builds without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("torusfv-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod checks;
pub mod consistency;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flux;
pub mod linsolve;
pub(crate) mod math;
pub mod mesh;
pub mod operators;
pub mod rng;
pub mod scheme;
pub mod thermo;

pub use error::Error;
pub use mesh::{Face, Grid};
pub use scheme::State;
