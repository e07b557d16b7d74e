//! Trapezoidal quadrature over the whole real line, accumulated in log space.
//!
//! Integrands here are `exp(g(u))` with `g` smooth and concave after the
//! substitution `θ = e^u` (or `y = e^t` for the Bessel integral), so the
//! trapezoid rule converges geometrically in the step size. The routine
//! locates the mode, truncates where `g` has fallen by `cutoff` below its
//! maximum, and halves the step until two successive sums agree.

use super::LogValue;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Stop when successive `ln I` estimates differ by less than this.
    pub tol: f64,
    /// Maximum number of step halvings after the initial grid.
    pub max_levels: u32,
    /// Truncate the domain where `g` drops this far below its maximum.
    pub cutoff: f64,
    /// Number of intervals on the initial grid.
    pub initial_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: 1e-14,
            max_levels: 22,
            cutoff: 60.0,
            initial_intervals: 32,
        }
    }
}

/// `ln ∫_{-∞}^{∞} exp(g(u)) du` for a unimodal log-integrand `g`.
///
/// `hint` is any point near the mode; the search walks from there.
pub fn log_integrate<G: Fn(f64) -> f64>(g: G, hint: f64, cfg: &QuadConfig) -> Result<f64> {
    let (mode, gmax) = find_mode(&g, hint)?;
    let lo = find_edge(&g, mode, gmax - cfg.cutoff, -1.0)?;
    let hi = find_edge(&g, mode, gmax - cfg.cutoff, 1.0)?;

    // Trapezoid in scaled space: Σ exp(g - gmax), endpoints carry weight ½.
    let mut n = cfg.initial_intervals.max(2);
    let mut h = (hi - lo) / n as f64;
    let mut sum = 0.5 * ((g(lo) - gmax).exp() + (g(hi) - gmax).exp());
    for i in 1..n {
        sum += (g(lo + i as f64 * h) - gmax).exp();
    }
    let mut prev = gmax + (h * sum).ln();
    for level in 0..cfg.max_levels {
        // Add the midpoints of the current grid.
        let mut mid = 0.0;
        for i in 0..n {
            mid += (g(lo + (i as f64 + 0.5) * h) - gmax).exp();
        }
        sum += mid;
        n *= 2;
        h *= 0.5;
        let cur = gmax + (h * sum).ln();
        if level >= 2 && (cur - prev).abs() <= cfg.tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "trapezoid quadrature did not settle after {} halvings (last estimate {prev})",
        cfg.max_levels
    )))
}

fn find_mode<G: Fn(f64) -> f64>(g: &G, hint: f64) -> Result<(f64, f64)> {
    let g0 = g(hint);
    if g0.is_nan() {
        return Err(Error::domain(format!("log-integrand is NaN at {hint}")));
    }
    // Expand a bracket [a, c] around a point b with g(b) >= g(a), g(c).
    let mut step = 1.0;
    let (mut a, mut b, mut c) = (hint - step, hint, hint + step);
    let (mut ga, mut gb, mut gc) = (g(a), g0, g(c));
    let mut guard = 0;
    while !(gb >= ga && gb >= gc) {
        guard += 1;
        if guard > 200 {
            return Err(Error::NonConvergence(
                "could not bracket integrand mode".into(),
            ));
        }
        step *= 2.0;
        if ga > gb {
            c = b;
            gc = gb;
            b = a;
            gb = ga;
            a = b - step;
            ga = g(a);
        } else {
            a = b;
            ga = gb;
            b = c;
            gb = gc;
            c = b + step;
            gc = g(c);
        }
    }
    // Golden-section refinement.
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-9 * (1.0 + lo.abs()) {
            break;
        }
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        }
    }
    let (mode, gm) = if g1 >= g2 { (x1, g1) } else { (x2, g2) };
    let (mode, gm) = if gb > gm { (b, gb) } else { (mode, gm) };
    if !gm.is_finite() {
        return Err(Error::domain("log-integrand maximum is not finite"));
    }
    Ok((mode, gm))
}

fn find_edge<G: Fn(f64) -> f64>(g: &G, mode: f64, level: f64, dir: f64) -> Result<f64> {
    let mut step = 0.125;
    let mut inner = mode;
    for _ in 0..2000 {
        let u = inner + dir * step;
        let gu = g(u);
        if gu.is_nan() || gu < level {
            return Ok(u);
        }
        inner = u;
        step *= 1.5;
    }
    Err(Error::NonConvergence("log-integrand does not decay".into()))
}

/// `ln K_ν(x)` by direct quadrature of `½ ∫_0^∞ exp(-½x(y + 1/y)) y^{ν-1} dy`,
/// after `y = e^t`: `½ ∫ exp(-x cosh t + ν t) dt`.
///
/// Independent of the series/asymptotic evaluation in [`log_bessel_k`].
///
/// [`log_bessel_k`]: super::log_bessel_k
pub fn quad_bessel_oracle(order: f64, arg: f64, cfg: &QuadConfig) -> Result<LogValue> {
    if !order.is_finite() || !(arg.is_finite() && arg > 0.0) {
        return Err(Error::domain(format!(
            "quad_bessel_oracle needs finite order and arg > 0 (got {order}, {arg})"
        )));
    }
    let hint = (order / arg).asinh();
    let ln_int = log_integrate(|t| -arg * t.cosh() + order * t, hint, cfg)?;
    Ok(LogValue(ln_int - std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let v = log_integrate(|u| -0.5 * u * u, 3.0, &QuadConfig::default()).unwrap();
        assert!((v - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn oracle_half_order() {
        let got = quad_bessel_oracle(0.5, 1.0, &QuadConfig::default())
            .unwrap()
            .get();
        let want = 0.5 * (std::f64::consts::PI / 2.0).ln() - 1.0;
        assert!((got - want).abs() < 1e-13);
        assert!((got + 0.77427).abs() < 1e-4);
    }

    #[test]
    fn oracle_self_consistent_across_refinement() {
        // K_0(1) ≈ 0.42102; a coarser and finer tolerance agree to 1e-10.
        let fine = quad_bessel_oracle(0.0, 1.0, &QuadConfig::default())
            .unwrap()
            .get();
        let coarse = quad_bessel_oracle(
            0.0,
            1.0,
            &QuadConfig {
                tol: 1e-11,
                ..Default::default()
            },
        )
        .unwrap()
        .get();
        assert!((fine - coarse).abs() < 1e-10);
        assert!((fine.exp() - 0.42102).abs() < 1e-5);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let cfg = QuadConfig {
            max_levels: 0,
            ..Default::default()
        };
        assert!(matches!(
            quad_bessel_oracle(3.0, 0.5, &cfg),
            Err(Error::NonConvergence(_))
        ));
    }
}
