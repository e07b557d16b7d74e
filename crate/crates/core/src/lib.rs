//! Experience rating of insurance claim counts under two mixed Poisson
//! models: Poisson–gamma (negative binomial) and Poisson–inverse-gamma.
//!
//! All probability and Bessel arithmetic is carried out on the natural-log
//! scale so that the heavy-tailed model can be evaluated at claim counts in
//! the hundreds of thousands, where `K_ν(x)` overflows any float format.

pub mod error;
pub mod estimation;
pub mod model;
pub mod poisson_gamma;
pub mod poisson_inv_gamma;
pub mod pricing;
pub mod resolution;
pub mod series;
pub mod simulation;
pub mod special;
pub mod tail;

pub use error::{Error, Result};
pub use model::{
    AtExposure, ClaimRecord, Exposure, Family, LogPmf, MixParams, MixedPoissonModel, Moment,
    MomentSummary, Poisson, PosteriorMoments,
};
pub use poisson_gamma::{GammaMixParams, GammaPosterior};
pub use poisson_inv_gamma::{GigPosterior, InvGammaMixParams};
pub use special::LogValue;
