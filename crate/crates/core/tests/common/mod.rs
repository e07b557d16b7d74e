//! Independent quadrature oracles. Every integral over `θ > 0` is taken in
//! `t = ln θ`, where the integrands below are log-concave, and summed by
//! the trapezoid rule in log space.

#![allow(dead_code)]

use claimrate_core::special::{log_gamma, log_integrate, QuadConfig};

pub fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn lg(x: f64) -> f64 {
    log_gamma(x).unwrap().get()
}

/// Mode in `t` of `a t - lin e^t - inv e^{-t}`.
pub fn mode_hint(a: f64, lin: f64, inv: f64) -> f64 {
    if lin > 0.0 {
        ((a + (a * a + 4.0 * lin * inv).sqrt()) / (2.0 * lin)).ln()
    } else {
        (inv / -a).ln()
    }
}

/// `ln ∫ θ^{a-1} exp(-lin θ - inv/θ) dθ` by quadrature.
pub fn ln_gig_integral(a: f64, lin: f64, inv: f64) -> f64 {
    let g = |t: f64| a * t - lin * t.exp() - if inv == 0.0 { 0.0 } else { inv * (-t).exp() };
    log_integrate(g, mode_hint(a, lin, inv), &cfg()).unwrap()
}

/// `ln ∫ Poisson(n; Jθ) Gamma(θ; α, β) dθ`.
pub fn ln_mix_pmf_gamma(alpha: f64, beta: f64, j: f64, n: u64) -> f64 {
    let nf = n as f64;
    let prefix = nf * j.ln() - lg(nf + 1.0) + alpha * beta.ln() - lg(alpha);
    prefix + ln_gig_integral(nf + alpha, j + beta, 0.0)
}

/// `ln ∫ Poisson(n; Jθ) InvGamma(θ; s, m) dθ`.
pub fn ln_mix_pmf_invgamma(m: f64, s: f64, j: f64, n: u64) -> f64 {
    let nf = n as f64;
    let prefix = nf * j.ln() - lg(nf + 1.0) + s * m.ln() - lg(s);
    prefix + ln_gig_integral(nf - s, j, m)
}

/// Mean and variance of the density `∝ θ^{a-1} e^{-lin θ - inv/θ}`.
pub fn gig_moments(a: f64, lin: f64, inv: f64) -> (f64, f64) {
    let z = ln_gig_integral(a, lin, inv);
    let mean = (ln_gig_integral(a + 1.0, lin, inv) - z).exp();
    let second = (ln_gig_integral(a + 2.0, lin, inv) - z).exp();
    (mean, second - mean * mean)
}

/// `ln P(N2 = n2 | N1 = n1)` for the inverse-gamma model, from the
/// unnormalized posterior `θ^{n1-s-1} e^{-J1 θ - m/θ}` and the Poisson law.
pub fn ln_predictive_invgamma(m: f64, s: f64, j1: f64, n1: u64, j2: f64, n2: u64) -> f64 {
    let a = n1 as f64 - s;
    let n2f = n2 as f64;
    n2f * j2.ln() - lg(n2f + 1.0) + ln_gig_integral(a + n2f, j1 + j2, m) - ln_gig_integral(a, j1, m)
}

/// Same for the gamma model, posterior `θ^{α+n1-1} e^{-(β+J1) θ}`.
pub fn ln_predictive_gamma(alpha: f64, beta: f64, j1: f64, n1: u64, j2: f64, n2: u64) -> f64 {
    let a = alpha + n1 as f64;
    let n2f = n2 as f64;
    n2f * j2.ln() - lg(n2f + 1.0) + ln_gig_integral(a + n2f, beta + j1 + j2, 0.0)
        - ln_gig_integral(a, beta + j1, 0.0)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}
