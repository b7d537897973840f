//! Numerical laboratory for the massless spin-boson model on a truncated,
//! discretized Fock space: complex-dilated resonances, resolvent matrix
//! elements, the one-boson scattering kernel, and the distributional and
//! multiscale machinery used to cross-validate them.
//!
//! Module map:
//! - [`modes`]: radial discretization, form factor, dilated family
//! - [`fock`]: occupation-number basis and ladder operators
//! - [`hamiltonian`]: assembly of H^theta on C^2 (x) Fock
//! - [`spectral`]: resonance eigensolving, resolvents, u(z), region checks
//! - [`contour`]: the concatenated contour and the Laplace propagator check
//! - [`distributions`]: Fourier / Heaviside / principal-value calculus
//! - [`multiscale`]: scale sequences and the two estimate-lemma experiments
//! - [`scattering`]: kernel T(k,k'), smeared matrix elements, time-domain
//!   oracle, line-shape analysis

pub mod contour;
pub mod distributions;
pub mod error;
pub mod fit;
pub mod fock;
pub mod hamiltonian;
pub mod linalg;
pub mod modes;
pub mod multiscale;
pub mod quad;
// pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
