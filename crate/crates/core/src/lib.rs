//! Reconstruction of third-order cumulants and diagonal cumulant slices of a
//! stationary signal from compressive (sub-Nyquist) block measurements.
//!
//! The crate is `no_std` with `alloc`. File formats, the experiment runner and
//! the command-line front-end live in the `cumsense` crate.
//!
//! ```
//! use cumsense_core::c3cs::AlternativeSolver;
//! use cumsense_core::cumulant::empirical_third_moment_vector;
//! use cumsense_core::mapping::{build_p, principal_to_cumulant};
//! use cumsense_core::sampler::{compress, gaussian_sampler};
//! use cumsense_core::signal::{generate_ma_blocks, MaModel};
//!
//! let (n, m) = (20, 12);
//! let x = generate_ma_blocks(&MaModel::skewed_ma3(), n, 2_000, 1)?;
//! let phi = gaussian_sampler(m, n, 1)?;
//! let y = compress(&phi, &x)?;
//!
//! let map = build_p(n);
//! let solver = AlternativeSolver::new(&phi, &map)?;
//! let result = solver.solve(&empirical_third_moment_vector(&y)?)?;
//! let c3 = principal_to_cumulant(n, &result.values)?;
//! assert!(c3.get(1, 2).is_finite());
//! # Ok::<(), cumsense_core::Error>(())
//! ```

#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod c3cs;
pub mod ccss;
pub mod cumulant;
pub mod error;
pub mod mapping;
pub mod music;
pub mod numerics;
pub mod rng;
pub mod sampler;
pub mod signal;

pub use error::{Error, Result};
