//! Numerical core for probing the decay condition on the subprincipal
//! coefficient of `p`-evolution operators
//!
//! ```text
//! P = D_t + a_p(t) D_x^p + sum_{j<p} a_j(t, x) D_x^j
//! ```
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! laboratory: the trajectory integrals of `Im a_{p-1}` and the decay-condition
//! checker, the extraction of the concentration points `(x_k, rho_k)`, the
//! cutoff `h` and packet profile `psi`, the localizing symbols transported by the
//! Hamilton flow of `a_p(t) xi^p`, a periodic Kohn-Nirenberg quantization with
//! its composition and Calderon-Vaillancourt harnesses, an integrating-factor
//! pseudo-spectral solver, and the growth pipeline that assembles `sigma_k(t)`.
//!
//! IO, configuration and the command line live in the `pevol-lab` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coefficients;
pub mod cutoff;
pub mod error;
pub mod fft;
pub mod fit;
pub mod grid;
pub mod lab;
pub mod probes;
pub mod psdo;
pub mod quadrature;
pub mod solver;
pub mod symbols;

pub use error::{Error, Result};
pub use num_complex::Complex64;
