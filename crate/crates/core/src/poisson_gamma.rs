//! Poisson–gamma model: gamma mixing with shape `α` and rate `β`, giving a
//! negative binomial count law, a gamma posterior and a negative binomial
//! predictive law.
//!
//! `β` reads as the number of observation years after which individual
//! experience and the portfolio mean carry equal credibility weight; `α` is
//! the expected claim count over `β` years for the portfolio-average risk.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};
use crate::model::{Exposure, Family, MixedPoissonModel, Moment, MomentSummary, PosteriorMoments};
use crate::special::{ln_gamma, LogValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaMixParams {
    alpha: f64,
    beta: f64,
}

impl GammaMixParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        ensure_positive("beta", beta)?;
        Ok(GammaMixParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Gamma posterior of `Θ` given `n` claims in `J` years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPosterior {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPosteriorMoments {
    pub mean: f64,
    pub variance: f64,
    /// Credibility factor `z = J/(β+J)`.
    pub credibility_weight: f64,
}

/// Negative binomial `ln P(N = n)` with `p = β/(β+J)`.
pub fn nb_log_pmf(params: GammaMixParams, exposure: Exposure, n: u64) -> LogValue {
    let (a, b, j) = (params.alpha, params.beta, exposure.years());
    let nf = n as f64;
    let coef = if n == 0 {
        0.0
    } else {
        ln_gamma(nf + a) - ln_gamma(a) - ln_gamma(nf + 1.0)
    };
    let ln_p = (b / (b + j)).ln();
    let ln_q = (j / (b + j)).ln();
    LogValue(coef + a * ln_p + nf * ln_q)
}

pub fn nb_moments(params: GammaMixParams, exposure: Exposure) -> MomentSummary {
    let j = exposure.years();
    let mean = j * params.alpha / params.beta;
    MomentSummary::finite(mean, mean * (1.0 + j / params.beta))
}

pub fn posterior(params: GammaMixParams, exposure: Exposure, n: u64) -> GammaPosterior {
    GammaPosterior {
        shape: params.alpha + n as f64,
        rate: params.beta + exposure.years(),
    }
}

pub fn posterior_moments(
    params: GammaMixParams,
    exposure: Exposure,
    n: u64,
) -> GammaPosteriorMoments {
    let post = posterior(params, exposure, n);
    GammaPosteriorMoments {
        mean: post.shape / post.rate,
        variance: post.shape / (post.rate * post.rate),
        credibility_weight: exposure.years() / post.rate,
    }
}

/// Predictive law of `N2` given `N1 = n1`: the negative binomial of the
/// updated parameters `(α+n1, β+J1)` over `J2` years.
pub fn predictive_log_pmf(
    params: GammaMixParams,
    j1: Exposure,
    n1: u64,
    j2: Exposure,
    n2: u64,
) -> LogValue {
    nb_log_pmf(updated(params, j1, n1), j2, n2)
}

pub fn predictive_moments(
    params: GammaMixParams,
    j1: Exposure,
    n1: u64,
    j2: Exposure,
) -> MomentSummary {
    let rate = params.beta + j1.years();
    let mean = j2.years() * (n1 as f64 + params.alpha) / rate;
    MomentSummary::finite(mean, mean * (rate + j2.years()) / rate)
}

/// Prior parameters after observing `n1` claims in `j1` years.
pub fn updated(params: GammaMixParams, j1: Exposure, n1: u64) -> GammaMixParams {
    GammaMixParams {
        alpha: params.alpha + n1 as f64,
        beta: params.beta + j1.years(),
    }
}

impl MixedPoissonModel for GammaMixParams {
    fn log_pmf(&self, exposure: Exposure, n: u64) -> Result<f64> {
        Ok(nb_log_pmf(*self, exposure, n).get())
    }

    fn moments(&self, exposure: Exposure) -> MomentSummary {
        nb_moments(*self, exposure)
    }

    fn posterior_moments(&self, exposure: Exposure, n: u64) -> Result<PosteriorMoments> {
        let pm = posterior_moments(*self, exposure, n);
        Ok(PosteriorMoments {
            mean: pm.mean,
            variance: pm.variance,
        })
    }

    fn predictive_log_pmf(&self, j1: Exposure, n1: u64, j2: Exposure, n2: u64) -> Result<f64> {
        Ok(predictive_log_pmf(*self, j1, n1, j2, n2).get())
    }

    fn predictive_moments(&self, j1: Exposure, n1: u64, j2: Exposure) -> Result<MomentSummary> {
        Ok(predictive_moments(*self, j1, n1, j2))
    }

    fn mixing_mean(&self) -> Moment {
        Moment::Finite(self.alpha / self.beta)
    }

    fn family(&self) -> Family {
        Family::Gamma
    }
}
