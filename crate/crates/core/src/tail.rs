//! Log-log tail study of count laws.
//!
//! With `x = ln n` and `y = ln P(N = n)`, a power-law tail `P ~ n^{-1/ξ}`
//! shows up as a straight line of slope `-1/ξ`. For the
//! Poisson–inverse-gamma law the slope approaches `-(s+1)`; Poisson and
//! negative binomial curves bend down without limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AtExposure, Exposure, LogPmf, Moment};
use crate::poisson_gamma::GammaMixParams;
use crate::poisson_inv_gamma::{pig_moments, InvGammaMixParams};
use crate::special::ln_gamma;

/// Relative half-width of the default finite-difference stencil.
pub const DEFAULT_SLOPE_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailScanRow {
    pub params: InvGammaMixParams,
    pub mean: Moment,
    pub variance: Moment,
    /// `(x, dy/dx)` for each requested abscissa.
    pub slopes: Vec<(f64, f64)>,
}

impl TailScanRow {
    pub fn slope_at_x(&self, x: f64) -> Option<f64> {
        self.slopes.iter().find(|(xi, _)| *xi == x).map(|&(_, s)| s)
    }
}

/// `(ln n, ln P(N=n))` for each `n`.
pub fn loglog_curve<M: LogPmf>(model: &M, n_values: &[u64]) -> Result<Vec<LogLogPoint>> {
    if n_values.is_empty() {
        return Err(Error::domain("n_values must not be empty"));
    }
    n_values
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::domain("log-log points need n >= 1"));
            }
            Ok(LogLogPoint {
                x: (n as f64).ln(),
                y: model.log_pmf(n)?,
            })
        })
        .collect()
}

/// Secant slope of `y(x)` between `n1 = round(e^x (1-δ))` and
/// `n2 = round(e^x (1+δ))`.
pub fn slope_at<M: LogPmf>(model: &M, x: f64, delta: f64) -> Result<f64> {
    if !(x.is_finite() && x >= std::f64::consts::LN_2) {
        return Err(Error::domain(format!(
            "slope abscissa must be >= ln 2 (got {x})"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!(
            "relative half-width must lie in (0, 0.5) (got {delta})"
        )));
    }
    let centre = x.exp();
    let n1 = (centre * (1.0 - delta)).round().max(1.0) as u64;
    let n2 = (centre * (1.0 + delta)).round() as u64;
    if n1 == n2 {
        return Err(Error::domain(format!(
            "stencil collapses at x = {x}, δ = {delta}: n1 = n2 = {n1}"
        )));
    }
    let y1 = model.log_pmf(n1)?;
    let y2 = model.log_pmf(n2)?;
    Ok((y2 - y1) / ((n2 as f64).ln() - (n1 as f64).ln()))
}

/// Moments and tail slopes for each parameter row. Rows are independent
/// and evaluated in parallel; a failing row does not stop the scan.
pub fn tail_scan(
    rows: &[InvGammaMixParams],
    exposure: Exposure,
    x_points: &[f64],
    delta: f64,
) -> Vec<Result<TailScanRow>> {
    rows.par_iter()
        .map(|&params| {
            let moments = pig_moments(params, exposure);
            let model = AtExposure {
                model: params,
                exposure,
            };
            let slopes = x_points
                .iter()
                .map(|&x| slope_at(&model, x, delta).map(|s| (x, s)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TailScanRow {
                params,
                mean: moments.mean,
                variance: moments.variance,
                slopes,
            })
        })
        .collect()
}

/// Leading large-`n` form of the Poisson–inverse-gamma law,
/// `ln P(n) ≈ s ln(Jm) - ln Γ(s) + ln Γ(n-s) - ln Γ(n+1)`, from the
/// large-order behaviour `K_ν(x) ≈ Γ(ν) (2/x)^ν / 2`. Valid for `n > s`.
#[derive(Debug, Clone, Copy)]
pub struct PigLargeCountAsymptote {
    pub params: InvGammaMixParams,
    pub exposure: Exposure,
}

impl LogPmf for PigLargeCountAsymptote {
    fn log_pmf(&self, n: u64) -> Result<f64> {
        let (m, s) = (self.params.m(), self.params.s());
        let nf = n as f64;
        if nf <= s {
            return Err(Error::domain(format!(
                "asymptotic form needs n > s (n = {n}, s = {s})"
            )));
        }
        Ok(
            s * (self.exposure.years() * m).ln() - ln_gamma(s) + ln_gamma(nf - s)
                - ln_gamma(nf + 1.0),
        )
    }
}

/// Constants `(c̄0, c̄1)` of the Poisson log-log curve
/// `y ≈ c̄0 + c̄1 e^x - (e^x + ½) x`.
///
/// From `ln P(n) = -λ + n ln λ - ln n!` and Stirling,
/// `ln n! ≈ (n + ½) ln n - n + ½ ln 2π`:
/// `c̄0 = -λ - ½ ln 2π`, `c̄1 = 1 + ln λ`. The dropped term is `-1/(12n)`.
pub fn poisson_loglog_constants(lambda: f64) -> (f64, f64) {
    (
        -lambda - 0.5 * (2.0 * std::f64::consts::PI).ln(),
        1.0 + lambda.ln(),
    )
}

pub fn poisson_loglog_approx(lambda: f64, x: f64) -> f64 {
    let (c0, c1) = poisson_loglog_constants(lambda);
    let n = x.exp();
    c0 + c1 * n - (n + 0.5) * x
}

/// Constants `[c0, c1, c2, c3]` of the negative binomial log-log curve
/// `y ≈ c0 + c1 e^x + (c2 + e^x) ln(c3 + e^x) - (e^x + ½) x`.
///
/// Apply Stirling to both gamma functions in
/// `ln P(n) = ln Γ(n+α) - ln Γ(α) - ln n! + α ln p + n ln(1-p)`:
/// `ln Γ(z) ≈ (z - ½) ln z - z + ½ ln 2π` with `z = n + α`, and
/// `ln n! ≈ (n + ½) ln n - n + ½ ln 2π`. Collecting terms,
///
/// * `c0 = α ln p - ln Γ(α) - α`
/// * `c1 = ln(1-p)`
/// * `c2 = α - ½`
/// * `c3 = α`
///
/// Expanding instead `ln Γ((n+α-1)+1)` yields `c3 = α - 1` with a different
/// `c0`; the `c3 = α` form is kept because the `1/(12z)` remainders of the
/// two Stirling terms cancel to `O(α/n²)`.
pub fn nb_loglog_constants(params: GammaMixParams, exposure: Exposure) -> [f64; 4] {
    let (a, b, j) = (params.alpha(), params.beta(), exposure.years());
    let ln_p = (b / (b + j)).ln();
    let ln_q = (j / (b + j)).ln();
    [a * ln_p - ln_gamma(a) - a, ln_q, a - 0.5, a]
}

pub fn nb_loglog_approx(params: GammaMixParams, exposure: Exposure, x: f64) -> f64 {
    let [c0, c1, c2, c3] = nb_loglog_constants(params, exposure);
    let n = x.exp();
    c0 + c1 * n + (c2 + n) * (c3 + n).ln() - (n + 0.5) * x
}

/// Distinct integers `round(e^x)` for `x` on a uniform grid.
pub fn log_grid(x_min: f64, x_max: f64, points: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..points)
        .map(|i| {
            let t = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            (x_min + t * (x_max - x_min)).exp().round().max(1.0) as u64
        })
        .collect();
    out.dedup();
    out
}

/// The two comparison series of the moment-matched log-log plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSeries {
    pub inv_gamma: Vec<LogLogPoint>,
    pub gamma: Vec<LogLogPoint>,
}

pub fn figure_series(
    pig: InvGammaMixParams,
    nb: GammaMixParams,
    exposure: Exposure,
    n_grid: &[u64],
) -> Result<ComparisonSeries> {
    Ok(ComparisonSeries {
        inv_gamma: loglog_curve(
            &AtExposure {
                model: pig,
                exposure,
            },
            n_grid,
        )?,
        gamma: loglog_curve(
            &AtExposure {
                model: nb,
                exposure,
            },
            n_grid,
        )?,
    })
}

/// Least-squares line through the points: `(slope, intercept, R²)`.
pub fn linear_fit(points: &[LogLogPoint]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::domain("linear fit needs at least two points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, my - slope * mx, r2))
}

pub mod reference {
    //! Reference scan of 48 Poisson–inverse-gamma parameter points with
    //! their moments and log-log slopes at `x = 10` and `x = 13`, as printed
    //! to three or four significant figures (`J = 1`).

    use crate::error::Result;
    use crate::poisson_inv_gamma::InvGammaMixParams;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct ReferenceRow {
        /// `m` as printed (at most nine significant digits, some truncated).
        pub m_printed: f64,
        /// `s` as printed (rounded to four significant digits).
        pub s_printed: f64,
        pub mean: f64,
        /// `None` where the variance is infinite.
        pub variance: Option<f64>,
        pub slope_x10: f64,
        pub slope_x13: f64,
    }

    impl ReferenceRow {
        /// Exact parameters behind the row. The printed `s` is rounded, so
        /// where the variance is finite `(m, s)` are recovered from the
        /// moments: `s = 2 + mean²/(var - mean)`, `m = mean (s-1)`. Rows with
        /// infinite variance print exact values.
        pub fn params(&self) -> Result<InvGammaMixParams> {
            match self.variance {
                Some(var) => {
                    let s = 2.0 + self.mean / (var / self.mean - 1.0);
                    InvGammaMixParams::new(self.mean * (s - 1.0), s)
                }
                None => InvGammaMixParams::new(self.m_printed, self.s_printed),
            }
        }
    }

    const fn row(
        m: f64,
        s: f64,
        mean: f64,
        variance: Option<f64>,
        s10: f64,
        s13: f64,
    ) -> ReferenceRow {
        ReferenceRow {
            m_printed: m,
            s_printed: s,
            mean,
            variance,
            slope_x10: s10,
            slope_x13: s13,
        }
    }

    pub const ROWS: [ReferenceRow; 48] = [
        row(0.0011, 2.100, 0.001, Some(0.00101), -3.100, -3.109),
        row(0.00101, 2.010, 0.001, Some(0.0011), -3.010, -3.020),
        row(0.001001, 2.001, 0.001, Some(0.002), -3.001, -3.011),
        row(0.001000111, 2.000, 0.001, Some(0.01), -3.000, -3.011),
        row(0.00100001, 2.000, 0.001, Some(0.1), -3.000, -3.010),
        row(0.001000001, 2.000, 0.001, Some(1.0), -3.000, -3.010),
        row(0.0001, 1.100, 0.001, None, -2.100, -2.110),
        row(0.001, 2.000, 0.001, None, -3.000, -3.010),
        row(0.02, 3.000, 0.01, Some(0.0101), -4.000, -4.009),
        row(0.011, 2.100, 0.01, Some(0.011), -3.100, -3.109),
        row(0.0101, 2.010, 0.01, Some(0.02), -3.010, -3.019),
        row(0.010011111, 2.001, 0.01, Some(0.1), -3.001, -3.010),
        row(0.01000101, 2.000, 0.01, Some(1.0), -3.000, -3.010),
        row(0.0100001, 2.000, 0.01, Some(10.0), -3.000, -3.009),
        row(0.001, 1.100, 0.01, None, -2.100, -2.110),
        row(0.01, 2.000, 0.01, None, -3.000, -3.009),
        row(1.1, 12.00, 0.1, Some(0.101), -13.00, -13.01),
        row(0.2, 3.000, 0.1, Some(0.11), -4.000, -4.008),
        row(0.11, 2.100, 0.1, Some(0.2), -3.100, -3.108),
        row(0.101111111, 2.011, 0.1, Some(1.0), -3.011, -3.020),
        row(0.10010101, 2.001, 0.1, Some(10.0), -3.001, -3.010),
        row(0.10001001, 2.000, 0.1, Some(100.0), -3.000, -3.009),
        row(0.01, 1.100, 0.1, None, -2.100, -2.109),
        row(0.1, 2.000, 0.1, None, -3.000, -3.009),
        row(101.0, 102.0, 1.0, Some(1.01), -103.2, -103.0),
        row(11.0, 12.00, 1.0, Some(1.1), -13.00, -13.01),
        row(2.0, 3.000, 1.0, Some(2.0), -4.000, -4.008),
        row(1.111111111, 2.111, 1.0, Some(10.0), -3.111, -3.119),
        row(1.01010101, 2.010, 1.0, Some(100.0), -3.010, -3.018),
        row(1.001001001, 2.001, 1.0, Some(1000.0), -3.001, -3.009),
        row(0.1, 1.100, 1.0, None, -2.100, -2.108),
        row(1.0, 2.000, 1.0, None, -3.000, -3.008),
        row(10010.0, 1002.0, 10.0, Some(10.1), -1026.0, -1004.0),
        row(1010.0, 102.0, 10.0, Some(11.0), -103.2, -103.0),
        row(110.0, 12.00, 10.0, Some(20.0), -13.00, -13.01),
        row(21.11111111, 3.111, 10.0, Some(100.0), -4.111, -4.119),
        row(11.01010101, 2.101, 10.0, Some(1000.0), -3.101, -3.108),
        row(10.1001001, 2.010, 10.0, Some(10000.0), -3.010, -3.017),
        row(1.0, 1.100, 10.0, None, -2.100, -2.108),
        row(10.0, 2.000, 10.0, None, -3.000, -3.007),
        row(1211.111111, 13.11, 100.0, Some(1000.0), -14.06, -14.11),
        row(516.6666667, 6.167, 100.0, Some(2500.0), -7.144, -7.172),
        row(201.010101, 3.010, 100.0, Some(10000.0), -4.001, -4.016),
        row(10.0, 1.100, 100.0, None, -2.100, -2.107),
        row(100.0, 2.000, 100.0, None, -2.996, -3.006),
        row(11101.0101, 12.10, 1000.0, Some(100000.0), -12.60, -13.08),
        row(100.0, 1.100, 1000.0, None, -2.096, -2.106),
        row(1000.0, 2.000, 1000.0, None, -2.955, -3.004),
    ];

    pub fn params() -> Result<Vec<InvGammaMixParams>> {
        ROWS.iter().map(ReferenceRow::params).collect()
    }
}
