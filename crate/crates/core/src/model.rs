//! Types shared by both mixed Poisson families.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::poisson_gamma::GammaMixParams;
use crate::poisson_inv_gamma::InvGammaMixParams;
use crate::special::ln_gamma;

/// Observation window length in years (`J`, `J1` or `J2`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Exposure(f64);

impl Exposure {
    pub fn new(years: f64) -> Result<Self> {
        ensure_positive("exposure years", years)?;
        Ok(Exposure(years))
    }

    #[inline]
    pub fn years(self) -> f64 {
        self.0
    }
}

/// A moment that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn finite(self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(v),
            Moment::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Moment::Infinite)
    }

    /// `f64::INFINITY` for the infinite marker.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: Moment,
    pub variance: Moment,
}

impl MomentSummary {
    pub fn finite(mean: f64, variance: f64) -> Self {
        MomentSummary {
            mean: Moment::Finite(mean),
            variance: Moment::Finite(variance),
        }
    }
}

/// Mean and variance of the risk parameter `Θ` given observed claims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMoments {
    pub mean: f64,
    pub variance: f64,
}

/// A claim-count law with a log probability mass function.
pub trait LogPmf {
    fn log_pmf(&self, n: u64) -> Result<f64>;
}

impl<T: LogPmf + ?Sized> LogPmf for &T {
    fn log_pmf(&self, n: u64) -> Result<f64> {
        (**self).log_pmf(n)
    }
}

/// Plain Poisson law, used as the thin-tailed reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poisson {
    lambda: f64,
}

impl Poisson {
    pub fn new(lambda: f64) -> Result<Self> {
        ensure_positive("Poisson mean", lambda)?;
        Ok(Poisson { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl LogPmf for Poisson {
    fn log_pmf(&self, n: u64) -> Result<f64> {
        let n = n as f64;
        Ok(n * self.lambda.ln() - self.lambda - ln_gamma(n + 1.0))
    }
}

/// The experience-rating surface common to both mixing families.
pub trait MixedPoissonModel: Send + Sync {
    /// `ln P(N = n)` over an exposure window.
    fn log_pmf(&self, exposure: Exposure, n: u64) -> Result<f64>;

    /// Unconditional count mean and variance over an exposure window.
    fn moments(&self, exposure: Exposure) -> MomentSummary;

    /// Moments of `Θ | N = n` after `exposure` years.
    fn posterior_moments(&self, exposure: Exposure, n: u64) -> Result<PosteriorMoments>;

    /// `ln P(N2 = n2 | N1 = n1)`.
    fn predictive_log_pmf(&self, j1: Exposure, n1: u64, j2: Exposure, n2: u64) -> Result<f64>;

    /// `E(N2 | N1 = n1)` and `Var(N2 | N1 = n1)`.
    fn predictive_moments(&self, j1: Exposure, n1: u64, j2: Exposure) -> Result<MomentSummary>;

    /// Mean of the mixing law, `E(Θ)`.
    fn mixing_mean(&self) -> Moment;

    fn family(&self) -> Family;
}

/// A model bound to one exposure window, viewed as a count law.
#[derive(Debug, Clone, Copy)]
pub struct AtExposure<M> {
    pub model: M,
    pub exposure: Exposure,
}

impl<M: MixedPoissonModel> LogPmf for AtExposure<M> {
    fn log_pmf(&self, n: u64) -> Result<f64> {
        self.model.log_pmf(self.exposure, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gamma,
    InvGamma,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Gamma => "gamma",
            Family::InvGamma => "inv-gamma",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(Family::Gamma),
            "invgamma" | "inv-gamma" | "inverse-gamma" => Ok(Family::InvGamma),
            other => Err(Error::domain(format!(
                "unknown family '{other}' (expected gamma or invgamma)"
            ))),
        }
    }
}

/// Parameters of either mixing family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MixParams {
    Gamma(GammaMixParams),
    InvGamma(InvGammaMixParams),
}

impl MixParams {
    fn inner(&self) -> &dyn MixedPoissonModel {
        match self {
            MixParams::Gamma(p) => p,
            MixParams::InvGamma(p) => p,
        }
    }

    /// The two parameters in declaration order: `(α, β)` or `(m, s)`.
    pub fn values(&self) -> (f64, f64) {
        match self {
            MixParams::Gamma(p) => (p.alpha(), p.beta()),
            MixParams::InvGamma(p) => (p.m(), p.s()),
        }
    }

    pub fn from_values(family: Family, a: f64, b: f64) -> Result<Self> {
        Ok(match family {
            Family::Gamma => MixParams::Gamma(GammaMixParams::new(a, b)?),
            Family::InvGamma => MixParams::InvGamma(InvGammaMixParams::new(a, b)?),
        })
    }
}

impl From<GammaMixParams> for MixParams {
    fn from(p: GammaMixParams) -> Self {
        MixParams::Gamma(p)
    }
}

impl From<InvGammaMixParams> for MixParams {
    fn from(p: InvGammaMixParams) -> Self {
        MixParams::InvGamma(p)
    }
}

impl MixedPoissonModel for MixParams {
    fn log_pmf(&self, exposure: Exposure, n: u64) -> Result<f64> {
        self.inner().log_pmf(exposure, n)
    }
    fn moments(&self, exposure: Exposure) -> MomentSummary {
        self.inner().moments(exposure)
    }
    fn posterior_moments(&self, exposure: Exposure, n: u64) -> Result<PosteriorMoments> {
        self.inner().posterior_moments(exposure, n)
    }
    fn predictive_log_pmf(&self, j1: Exposure, n1: u64, j2: Exposure, n2: u64) -> Result<f64> {
        self.inner().predictive_log_pmf(j1, n1, j2, n2)
    }
    fn predictive_moments(&self, j1: Exposure, n1: u64, j2: Exposure) -> Result<MomentSummary> {
        self.inner().predictive_moments(j1, n1, j2)
    }
    fn mixing_mean(&self) -> Moment {
        self.inner().mixing_mean()
    }
    fn family(&self) -> Family {
        self.inner().family()
    }
}

/// One policy's observation: exposure years and claim count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub policy_id: String,
    pub exposure_years: f64,
    pub claim_count: u64,
}

impl ClaimRecord {
    pub fn new(
        policy_id: impl Into<String>,
        exposure_years: f64,
        claim_count: u64,
    ) -> Result<Self> {
        ensure_positive("exposure_years", exposure_years)?;
        Ok(ClaimRecord {
            policy_id: policy_id.into(),
            exposure_years,
            claim_count,
        })
    }
}
