//! Log-scale special functions: `ln Γ`, `ln K_ν` for real order, and a
//! trapezoidal quadrature used as an independent oracle.

mod bessel;
pub mod quad;

pub use bessel::{bessel_k_log_ratio, log_bessel_k, log_integral_identity, DEBYE_MIN_ORDER};
pub use quad::{log_integrate, quad_bessel_oracle, QuadConfig};

pub(crate) use bessel::ln_k;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Natural logarithm of a positive quantity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue(pub f64);

impl LogValue {
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Leaves log space. Large values overflow to `inf`.
    #[inline]
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<LogValue> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!(
            "log_gamma requires finite x > 0 (got {x})"
        )));
    }
    Ok(LogValue(ln_gamma(x)))
}

/// Unchecked `ln Γ(x)`; callers guarantee `x > 0`.
///
/// Near the zeros at 1 and 2 the general routine keeps only absolute
/// accuracy, so there `ln Γ(1+z)` is summed from its zeta series.
#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if (x - 1.0).abs() < 0.2 {
        ln_gamma_1p(x - 1.0)
    } else if (x - 2.0).abs() < 0.2 {
        let z = x - 2.0;
        ln_gamma_1p(z) + z.ln_1p()
    } else {
        libm::lgamma_r(x).0
    }
}

/// `ζ(k) - 1` for `k = 2..=30`.
#[allow(clippy::excessive_precision)]
const ZETA_MINUS_ONE: [f64; 29] = [
    0.6449340668482264,
    0.2020569031595943,
    0.08232323371113819,
    0.03692775514336993,
    0.01734306198444914,
    0.008349277381922827,
    0.00407735619794434,
    0.0020083928260822143,
    0.0009945751278180853,
    0.0004941886041194645,
    0.0002460865533080483,
    0.00012271334757848915,
    6.124813505870483e-05,
    3.058823630702049e-05,
    1.528225940865187e-05,
    7.637197637899763e-06,
    3.81729326499984e-06,
    1.908212716553939e-06,
    9.539620338727962e-07,
    4.769329867878064e-07,
    2.38450502727733e-07,
    1.1921992596531106e-07,
    5.960818905125948e-08,
    2.980350351465228e-08,
    1.4901554828365043e-08,
    7.45071178983543e-09,
    3.725334024788457e-09,
    1.862659723513049e-09,
    9.313274324196682e-10,
];

/// `ln Γ(1+z) = -γz + (z - ln(1+z)) + Σ_{k>=2} (-z)^k (ζ(k)-1)/k`, for small `|z|`.
fn ln_gamma_1p(z: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut acc = 0.0;
    for (i, c) in ZETA_MINUS_ONE.iter().enumerate().rev() {
        let k = (i + 2) as f64;
        acc = acc * -z + c / k;
    }
    -EULER_GAMMA * z + (z - z.ln_1p()) + acc * z * z
}

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // 40-digit references.
    const LGAMMA_REF: &[(f64, f64)] = &[
        (1e-6, 13.815_509_980_749_431_67),
        (1e-3, 6.907_178_885_383_853_662),
        (0.5, 0.572_364_942_924_700_087_1),
        (1.000_000_1, -5.772_155_829_918_507_097e-8),
        (1.5, -0.120_782_237_635_245_222_3),
        (2.000_000_1, 4.227_843_666_532_497_923e-8),
        (2.5, 0.284_682_870_472_919_159_6),
        (3.7, 1.428_072_326_665_388_129),
        (10.0, 12.801_827_480_081_469_61),
        (123.456, 469.605_547_129_929_468_7),
        (1e4, 82_099.717_496_442_377_27),
        (1e6, 12_815_504.569_147_611_66),
    ];

    #[test]
    fn log_gamma_reference_values() {
        for &(x, want) in LGAMMA_REF {
            let got = log_gamma(x).unwrap().get();
            assert!(rel(got, want) <= 1e-13, "x={x}: {got} vs {want}");
        }
        assert_eq!(log_gamma(1.0).unwrap().get(), 0.0);
        assert_eq!(log_gamma(2.0).unwrap().get(), 0.0);
        assert!((log_gamma(0.5).unwrap().get() - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-15);
        assert!((log_gamma(10.0).unwrap().get() - 362_880f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_rejects_bad_input() {
        for x in [0.0, -1.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(log_gamma(x), Err(Error::Domain(_))), "x={x}");
        }
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-3.0, -4.0) - ((-3f64).exp() + (-4f64).exp()).ln()).abs() < 1e-15);
    }
}
