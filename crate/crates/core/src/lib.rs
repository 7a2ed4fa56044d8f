//! Value-at-Risk and Conditional Value-at-Risk estimation for expensive
//! stochastic models with dependent, high-dimensional random inputs.
//!
//! The pipeline builds measure-consistent orthonormal polynomial bases by
//! whitening sampled monomial moment matrices, fits dimensionally decomposed
//! polynomial-chaos surrogates by least squares, and estimates VaR/CVaR by
//! sampling the cheap surrogate. A bi-fidelity mode corrects a low-fidelity
//! surrogate with a univariate Fourier-polynomial link fitted from a handful
//! of high-fidelity runs.

pub mod error;
pub mod stats;
pub mod multiindex;
pub mod sobol_seq;
pub mod distributions;
pub mod orthopoly;
pub mod surrogate;
pub mod risk;
pub mod models;
pub mod bifidelity;
pub mod archive;
pub mod config;
pub mod external;
pub mod pipeline;

pub use error::{Error, Result};
