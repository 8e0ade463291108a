//! Finite-size and large-system analysis of randomly spread binary CDMA:
//! exact posterior enumeration, replica-symmetric capacity formulas,
//! Monte Carlo experiments and the interpolating system used to bound the
//! capacity.

pub mod channel;
pub mod error;
pub mod interpolation;
mod lse;
pub mod montecarlo;
pub mod params;
pub mod posterior;
pub mod quadrature;
pub mod rates;
pub mod replica;
pub mod rng;
pub mod spreading;
pub mod stats;

pub use channel::{channel_output, channel_output_rng, channel_output_with_noise, Instance};
pub use error::{Error, Result};
pub use params::SystemParams;
pub use posterior::{enumerate_posterior, enumerate_posterior_limited, mutual_info_sample, PosteriorStats};
pub use quadrature::{gauss_hermite, GaussianIntegrator, QuadratureRule};
pub use rates::{concentration_rate_constants, RateConstants};
pub use replica::{capacity_bound, c_rs, solve_fixed_points, FixedPoint, ReplicaSolution};
pub use spreading::{sample_spreading, Matrix, SpreadingDistribution, SymmetricTable};
pub use stats::RunningStats;
