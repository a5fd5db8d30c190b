//! Constructive and approximate Wiener-Hopf / Riemann-Hilbert factorization
//! on closed contours.
//!
//! All computations live on the unit circle: functions are held as finite
//! Laurent coefficient windows, real-line problems are transported through
//! the ratio `(alpha - i)/(alpha + i)` before processing, and the additive
//! Plemelj splitting is an exact coefficient partition. On top of that
//! spectral calculus the crate provides
//!
//! - scalar Riemann-Hilbert factorization and solves ([`scalar_rh`]),
//! - exact factorization of rational matrix functions by root elimination
//!   and the pole-removal solver ([`rational_wh`]),
//! - canonical-matrix factorization of triangular matrices
//!   ([`triangular_wh`]),
//! - commutative classes: 2x2 kernels split through hyperbolic scalars,
//!   their n x n generalization, and functionally commutative matrices
//!   ([`commutative_wh`]),
//! - discrete (Toeplitz) systems with a truncated direct-solve oracle
//!   ([`discrete_wh`]),
//! - approximate schemes: near-identity asymptotics, rational fitting, and
//!   the iterative solver for exponentially coupled triangular systems
//!   ([`approx_wh`]),
//! - partial-index diagnostics ([`stability`]).
//!
//! Everything is pure and deterministic: values are immutable after
//! construction and safe to use from multiple threads.

pub mod config;
pub mod contour;
pub mod error;
#[doc(hidden)]
pub mod linalg;
pub mod poly;

pub mod approx_wh;
pub mod commutative_wh;
pub mod discrete_wh;
pub mod json;
pub mod rational_wh;
pub mod scalar_rh;
pub mod stability;
pub mod triangular_wh;

pub use config::Tolerances;
pub use contour::{Domain, FactorOrder, Factorization, LaurentFunction, MatrixFunction};
pub use error::{WhError, WhResult};
