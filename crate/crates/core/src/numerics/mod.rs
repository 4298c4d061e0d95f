//! Special functions, random streams, samplers and quadrature shared by all
//! model kernels.

mod quad;
mod rng;
mod sample;
mod special;

pub use quad::{integrate_01, QuadratureResult};
pub use rng::RngStream;
pub use sample::{
    geometric_pmf, geometric_quantile, negative_binomial_pmf, negative_binomial_quantile,
    sample_beta, sample_gamma, sample_geometric_mean, sample_negative_binomial, sample_poisson,
};
pub use special::{beta_binomial_pmf, digamma, log_beta, log_gamma, trigamma};
