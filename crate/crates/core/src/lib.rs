//! Spectral computations for potentials on hyperbolic space `H^n`.
//!
//! * [`geometry`]: half-space and ball models, distances, the radial variable
//!   `rho = (cosh r - 1) / 2` and its volume weight.
//! * [`special_functions`]: `2F1` for conjugate parameters on the negative axis.
//! * [`operators`]: the free operator `H_0`, its conformal generalisation
//!   `H_K`, and numerical checks of the conjugation and Green identities.
//! * [`radial_tev`]: transmission eigenvalues of constant potentials on balls
//!   from the hypergeometric matching determinant.
//! * [`spectral_curves`]: the fourth-order quadratic-form family `T_lambda`
//!   on the radial subspace and its eigencurves.
//! * [`corner_laplace`]: harmonic polynomials and Laplace transforms over
//!   sectors and orthants.

pub mod corner_laplace;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod quadrature;
pub mod radial_tev;
pub mod special_functions;
pub mod spectral_curves;

pub use error::{Error, Result};
