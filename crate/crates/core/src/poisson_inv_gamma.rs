//! Poisson–inverse-gamma model.
//!
//! The mixing density is `f(θ) = m^s θ^{-s-1} e^{-m/θ} / Γ(s)`, with mean
//! `m/(s-1)` for `s > 1` and variance `(m/(s-1))²/(s-2)` for `s > 2`. The
//! count law is
//!
//! ```text
//! P(N = n) = 2 (Jm)^{(s+n)/2} K_{s-n}(2 sqrt(Jm)) / (n! Γ(s))
//! ```
//!
//! and the posterior of `Θ` after `n` claims in `J` years is the generalized
//! inverse Gaussian density `∝ θ^{n-s-1} exp(-Jθ - m/θ)`, normalized with
//! `∫ θ^{λ-1} e^{-aθ-b/θ} dθ = 2 (b/a)^{λ/2} K_λ(2 sqrt(ab))`.
//!
//! The count law decays like `n^{-(s+1)}`, so moments of order `k` exist only
//! for `s > k`. Divergent moments are reported as [`Moment::Infinite`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::model::{Exposure, Family, MixedPoissonModel, Moment, MomentSummary, PosteriorMoments};
use crate::special::{bessel_k_log_ratio, ln_gamma, ln_k, LogValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaMixParams {
    m: f64,
    s: f64,
}

impl InvGammaMixParams {
    pub fn new(m: f64, s: f64) -> Result<Self> {
        ensure_positive("m", m)?;
        ensure_positive("s", s)?;
        Ok(InvGammaMixParams { m, s })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Mean of the inverse-gamma mixing law.
    pub fn mixing_mean(&self) -> Moment {
        if self.s > 1.0 {
            Moment::Finite(self.m / (self.s - 1.0))
        } else {
            Moment::Infinite
        }
    }

    pub fn mixing_variance(&self) -> Moment {
        if self.s > 2.0 {
            let mean = self.m / (self.s - 1.0);
            Moment::Finite(mean * mean / (self.s - 2.0))
        } else {
            Moment::Infinite
        }
    }
}

/// Generalized inverse Gaussian posterior: density proportional to
/// `θ^{order-1} exp(-lin_coeff·θ - inv_coeff/θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigPosterior {
    pub order: f64,
    pub lin_coeff: f64,
    pub inv_coeff: f64,
}

impl GigPosterior {
    /// `ln ∫ θ^{order-1} exp(-aθ - b/θ) dθ`.
    pub fn log_normalizer(&self) -> f64 {
        let (a, b) = (self.lin_coeff, self.inv_coeff);
        std::f64::consts::LN_2
            + 0.5 * self.order * (b / a).ln()
            + ln_k(self.order.abs(), 2.0 * (a * b).sqrt())
    }

    pub fn log_pdf(&self, theta: f64) -> Result<LogValue> {
        ensure_positive("theta", theta)?;
        let kernel =
            (self.order - 1.0) * theta.ln() - self.lin_coeff * theta - self.inv_coeff / theta;
        Ok(LogValue(kernel - self.log_normalizer()))
    }

    /// `ln E(Θ^k)` for integer `k`.
    pub fn log_raw_moment(&self, k: i64) -> f64 {
        let omega = 2.0 * (self.lin_coeff * self.inv_coeff).sqrt();
        // E(Θ^k) = (b/a)^{k/2} K_{λ+k}(ω) / K_λ(ω)
        0.5 * k as f64 * (self.inv_coeff / self.lin_coeff).ln()
            + ln_k((self.order + k as f64).abs(), omega)
            - ln_k(self.order.abs(), omega)
    }
}

/// `ln P(N = n)` over `J` exposure years.
pub fn pig_log_pmf(params: InvGammaMixParams, exposure: Exposure, n: u64) -> LogValue {
    let (m, s) = (params.m, params.s);
    let jm = exposure.years() * m;
    let nf = n as f64;
    LogValue(
        std::f64::consts::LN_2 + 0.5 * (s + nf) * jm.ln() - ln_gamma(nf + 1.0) - ln_gamma(s)
            + ln_k((s - nf).abs(), 2.0 * jm.sqrt()),
    )
}

/// Unconditional count moments: `E(N) = Jm/(s-1)` for `s > 1`,
/// `Var(N) = E(N) + E(N)²/(s-2)` for `s > 2`.
pub fn pig_moments(params: InvGammaMixParams, exposure: Exposure) -> MomentSummary {
    let s = params.s;
    let mean = if s > 1.0 {
        Moment::Finite(exposure.years() * params.m / (s - 1.0))
    } else {
        Moment::Infinite
    };
    let variance = match mean {
        Moment::Finite(mu) if s > 2.0 => Moment::Finite(mu + mu * mu / (s - 2.0)),
        _ => Moment::Infinite,
    };
    MomentSummary { mean, variance }
}

pub fn posterior(params: InvGammaMixParams, exposure: Exposure, n: u64) -> GigPosterior {
    GigPosterior {
        order: n as f64 - params.s,
        lin_coeff: exposure.years(),
        inv_coeff: params.m,
    }
}

/// `ln` of the posterior density of `Θ` at `theta` after `n` claims.
pub fn posterior_log_pdf(
    params: InvGammaMixParams,
    exposure: Exposure,
    n: u64,
    theta: f64,
) -> Result<LogValue> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::domain(format!(
            "theta must be finite and > 0 (got {theta})"
        )));
    }
    posterior(params, exposure, n).log_pdf(theta)
}

/// Posterior mean and variance from Bessel ratios:
/// `E = sqrt(m/J) K_{s-n-1}/K_{s-n}`,
/// `Var = (m/J) [K_{s-n-2}/K_{s-n} - (K_{s-n-1}/K_{s-n})²]`, all at `2 sqrt(Jm)`.
pub fn posterior_moments(
    params: InvGammaMixParams,
    exposure: Exposure,
    n: u64,
) -> Result<PosteriorMoments> {
    let j = exposure.years();
    let omega = 2.0 * (j * params.m).sqrt();
    let order = params.s - n as f64;
    let r1 = bessel_k_log_ratio(order, omega, 1)?;
    let r2 = bessel_k_log_ratio(order, omega, 2)?;
    let scale = params.m / j;
    let mean = scale.sqrt() * r1.exp();
    // r2 - 2 r1 > 0 by log-convexity of K in the order; expm1 keeps the
    // small-variance regime accurate.
    let variance = scale * (2.0 * r1).exp() * (r2 - 2.0 * r1).exp_m1();
    Ok(PosteriorMoments { mean, variance })
}

/// `ln P(N2 = n2 | N1 = n1)`. With `λ = n1 - s`,
///
/// ```text
/// P = J2^{n2} / n2! · ((J1+J2)/m)^{-(λ+n2)/2} K_{λ+n2}(2 sqrt(m(J1+J2)))
///                   / ((J1/m)^{-λ/2} K_λ(2 sqrt(m J1)))
/// ```
pub fn predictive_log_pmf(
    params: InvGammaMixParams,
    j1: Exposure,
    n1: u64,
    j2: Exposure,
    n2: u64,
) -> LogValue {
    let m = params.m;
    let (a1, a2) = (j1.years(), j2.years());
    let a12 = a1 + a2;
    let lambda = n1 as f64 - params.s;
    let n2f = n2 as f64;
    let num =
        -0.5 * (lambda + n2f) * (a12 / m).ln() + ln_k((lambda + n2f).abs(), 2.0 * (m * a12).sqrt());
    let den = -0.5 * lambda * (a1 / m).ln() + ln_k(lambda.abs(), 2.0 * (m * a1).sqrt());
    LogValue(n2f * a2.ln() - ln_gamma(n2f + 1.0) + num - den)
}

/// `E(N2|N1=n1) = J2·E(Θ|n1)`, `Var(N2|N1=n1) = J2·E(Θ|n1) + J2²·Var(Θ|n1)`.
pub fn predictive_moments(
    params: InvGammaMixParams,
    j1: Exposure,
    n1: u64,
    j2: Exposure,
) -> Result<MomentSummary> {
    let post = posterior_moments(params, j1, n1)?;
    let j2 = j2.years();
    let mean = j2 * post.mean;
    Ok(MomentSummary::finite(mean, mean + j2 * j2 * post.variance))
}

impl MixedPoissonModel for InvGammaMixParams {
    fn log_pmf(&self, exposure: Exposure, n: u64) -> Result<f64> {
        Ok(pig_log_pmf(*self, exposure, n).get())
    }

    fn moments(&self, exposure: Exposure) -> MomentSummary {
        pig_moments(*self, exposure)
    }

    fn posterior_moments(&self, exposure: Exposure, n: u64) -> Result<PosteriorMoments> {
        posterior_moments(*self, exposure, n)
    }

    fn predictive_log_pmf(&self, j1: Exposure, n1: u64, j2: Exposure, n2: u64) -> Result<f64> {
        Ok(predictive_log_pmf(*self, j1, n1, j2, n2).get())
    }

    fn predictive_moments(&self, j1: Exposure, n1: u64, j2: Exposure) -> Result<MomentSummary> {
        predictive_moments(*self, j1, n1, j2)
    }

    fn mixing_mean(&self) -> Moment {
        InvGammaMixParams::mixing_mean(self)
    }

    fn family(&self) -> Family {
        Family::InvGamma
    }
}
