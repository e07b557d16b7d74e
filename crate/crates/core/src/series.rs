//! Adaptive summation of count laws: total mass and first two moments.
//!
//! The negative binomial tail is bounded geometrically from the pmf ratio
//! `P(n+1)/P(n) = q (n+α)/(n+1)`. The Poisson–inverse-gamma tail is only
//! polynomial (`~ n^{-s-1}`), so brute summation cannot reach 1e-9 for small
//! `s`. Past a cut-off `N` its tail is summed in closed form instead: with
//! `c = Jm`,
//!
//! ```text
//! P(n) = c^s/Γ(s) · (1/n!) ∫ t^{n-s-1} e^{-t} e^{-c/t} dt
//! ```
//!
//! and expanding `e^{-c/t}` gives an alternating series whose partial sums
//! bracket the truth for every `n`. Each term sums over `n` exactly via
//! `Σ_{n>=N} Γ(n+a)/Γ(n+b) = Γ(N+a) / ((b-a-1) Γ(N+b-1))`.

use crate::error::{Error, Result};
use crate::model::{Exposure, Moment};
use crate::poisson_gamma::{nb_log_pmf, GammaMixParams};
use crate::poisson_inv_gamma::{pig_log_pmf, InvGammaMixParams};
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSummary {
    /// Best estimate of `Σ P(n)`.
    pub total: f64,
    /// Rigorous enclosure of `Σ P(n)` (up to float rounding).
    pub total_bounds: (f64, f64),
    pub mean: Moment,
    pub variance: Moment,
    /// Number of pmf terms summed explicitly.
    pub terms: u64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums the negative binomial until the geometric tail bound on both the
/// mass and `Σ n² P(n)` falls below `tol`.
pub fn nb_series(params: GammaMixParams, exposure: Exposure, tol: f64) -> Result<SeriesSummary> {
    let j = exposure.years();
    let q = j / (params.beta() + j);
    let alpha = params.alpha();
    let (mut s0, mut s1, mut s2) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    let max_terms: u64 = 500_000_000;
    for n in 0..max_terms {
        let p = nb_log_pmf(params, exposure, n).exp();
        let nf = n as f64;
        s0.add(p);
        s1.add(nf * p);
        s2.add(nf * nf * p);
        let ratio = q * (nf + alpha) / (nf + 1.0);
        let rho = ratio.max(q);
        if rho < 1.0 && ratio < 1.0 {
            let g = rho / (1.0 - rho);
            let mass_tail = p * g;
            // Σ_{j>=1} (n+j)² ρ^j
            let sq_tail = p
                * (nf * nf * g
                    + 2.0 * nf * g / (1.0 - rho)
                    + rho * (1.0 + rho) / (1.0 - rho).powi(3));
            if mass_tail < tol && sq_tail < tol * s2.value().max(1.0) {
                let total = s0.value();
                let mean = s1.value();
                return Ok(SeriesSummary {
                    total,
                    total_bounds: (total, total + mass_tail),
                    mean: Moment::Finite(mean),
                    variance: Moment::Finite(s2.value() - mean * mean),
                    terms: n + 1,
                });
            }
        }
    }
    Err(Error::NonConvergence(
        "negative binomial series did not reach tolerance".into(),
    ))
}

/// `Σ_{n>=start} n^{(order)} P(n)` for the Poisson–inverse-gamma law, where
/// `n^{(i)} = n!/(n-i)!`, as `(estimate, error bound)`. `None` when the sum
/// diverges (`s <= order`).
///
/// `start` must exceed `s + 64`; callers pick it well above `Jm` so the
/// alternating expansion converges quickly.
pub fn pig_factorial_tail(
    params: InvGammaMixParams,
    exposure: Exposure,
    start: u64,
    order: u32,
) -> Result<Option<(f64, f64)>> {
    let s = params.s();
    let i = order as f64;
    if s <= i {
        return Ok(None);
    }
    let c = exposure.years() * params.m();
    let nf = start as f64;
    const MAX_K: usize = 64;
    if nf - s - MAX_K as f64 <= 1.0 {
        return Err(Error::domain(format!(
            "tail start {start} too small for s = {s}"
        )));
    }
    let ln_pref = s * c.ln() - ln_gamma(s) - ln_gamma(nf - i);
    let mut sum = KahanSum::default();
    let mut last = f64::INFINITY;
    for k in 0..MAX_K {
        let kf = k as f64;
        let ln_term =
            ln_pref + kf * c.ln() - ln_gamma(kf + 1.0) + ln_gamma(nf - s - kf) - (s + kf - i).ln();
        let term = ln_term.exp();
        let signed = if k % 2 == 0 { term } else { -term };
        sum.add(signed);
        last = term;
        if term <= 1e-18 * sum.value().abs() || term == 0.0 {
            break;
        }
    }
    Ok(Some((sum.value(), last)))
}

/// Sums the Poisson–inverse-gamma law: explicit head plus closed-form tail.
pub fn pig_series(params: InvGammaMixParams, exposure: Exposure) -> Result<SeriesSummary> {
    let s = params.s();
    let c = exposure.years() * params.m();
    let start = (s + 128.0).max(16.0 * c).max(2000.0).ceil() as u64;
    let (mut s0, mut s1, mut s2) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    for n in 0..start {
        let p = pig_log_pmf(params, exposure, n).exp();
        let nf = n as f64;
        s0.add(p);
        s1.add(nf * p);
        s2.add(nf * (nf - 1.0) * p);
    }
    let (t0, e0) = pig_factorial_tail(params, exposure, start, 0)?.expect("s > 0 always");
    let total = s0.value() + t0;
    let mean = match pig_factorial_tail(params, exposure, start, 1)? {
        Some((t1, _)) => Moment::Finite(s1.value() + t1),
        None => Moment::Infinite,
    };
    let variance = match (mean, pig_factorial_tail(params, exposure, start, 2)?) {
        (Moment::Finite(mu), Some((t2, _))) => Moment::Finite(s2.value() + t2 + mu - mu * mu),
        _ => Moment::Infinite,
    };
    Ok(SeriesSummary {
        total,
        total_bounds: (total - e0, total + e0),
        mean,
        variance,
        terms: start,
    })
}

/// Sums a light-tailed count law given by `log_pmf` (e.g. a predictive law)
/// until past the mode the terms shrink geometrically and their
/// contribution to `Σ n² P(n)` drops below `tol`.
pub fn light_tail_series<F>(log_pmf: F, tol: f64, max_terms: u64) -> Result<SeriesSummary>
where
    F: Fn(u64) -> Result<f64>,
{
    let (mut s0, mut s1, mut s2) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    let mut prev = 0.0;
    for n in 0..max_terms {
        let p = log_pmf(n)?.exp();
        let nf = n as f64;
        s0.add(p);
        s1.add(nf * p);
        s2.add(nf * nf * p);
        if n > 0 && p < prev {
            let rho = p / prev;
            let g = rho / (1.0 - rho);
            let sq_tail = p
                * (nf * nf * g
                    + 2.0 * nf * g / (1.0 - rho)
                    + rho * (1.0 + rho) / (1.0 - rho).powi(3));
            if p * g < tol && sq_tail < tol * s2.value().max(1.0) && n > 20 {
                let mean = s1.value();
                let total = s0.value();
                return Ok(SeriesSummary {
                    total,
                    total_bounds: (total, total + p * g),
                    mean: Moment::Finite(mean),
                    variance: Moment::Finite(s2.value() - mean * mean),
                    terms: n + 1,
                });
            }
        }
        prev = p;
    }
    Err(Error::NonConvergence(format!(
        "series not settled after {max_terms} terms"
    )))
}
