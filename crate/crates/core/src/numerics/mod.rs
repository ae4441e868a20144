//! Numerical building blocks shared by the models: adaptive quadrature,
//! Gaussian distribution functions, small regression/summary statistics and
//! the seeded random-stream scheme used for replications.

pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use normal::{norm_cdf, norm_pdf, norm_quantile};
pub use quadrature::{integrate, integrate_pieces, integrate_real_line, Quadrature};
pub use rng::{stream_rng, StreamRng};
pub use stats::{linear_fit, mean, sample_variance, LinearFit};
