//! Mean spectral densities of generalized Bures products.
//!
//! The crate evaluates the N-transform master relations for products of
//! weighted sums of Haar unitaries and rectangular Ginibre matrices, solves
//! them for the radial eigenvalue density and the singular-value density, and
//! provides a Monte Carlo simulator plus an edge form-factor fit to check the
//! theory at finite matrix size.
//!
//! Modules, bottom to top: [`model`] (specifications and structural
//! constants), [`transforms`] (factor N-transforms and their composition),
//! [`solver`] (densities and support geometry), [`mc`] (sampling and
//! estimators) and [`fit`] (the erfc borderline form factor).

pub mod continuation;
pub mod fit;
pub mod mc;
pub mod model;
pub mod numeric;
pub mod solver;
pub mod transforms;

pub use num_complex::Complex64;
