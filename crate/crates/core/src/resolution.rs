//! Resolution: how far apart the predictive means of neighbouring claim
//! classes `n1` and `n1 + 1` sit, in units of the predictive standard
//! deviation at `n1`. Values of 1 or more mean the two classes are
//! distinguishable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exposure, Family, MixedPoissonModel, MomentSummary};
use crate::poisson_gamma::GammaMixParams;

pub const DEFAULT_THRESHOLD: f64 = 1.0;

/// Which predictive variance goes into the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// `Var(N2 | N1 = n1)` only.
    #[default]
    Lower,
    /// Average of the variances at `n1` and `n1 + 1`.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub n1: u64,
    pub resolution: f64,
    pub high_resolution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionProfile {
    pub family: Family,
    pub threshold: f64,
    pub reports: Vec<ResolutionReport>,
    /// Largest `n1` whose resolution reaches the threshold.
    pub largest_resolved_n1: Option<u64>,
}

fn finite_moments(m: MomentSummary) -> Result<(f64, f64)> {
    match (m.mean.finite(), m.variance.finite()) {
        (Some(mean), Some(var)) => Ok((mean, var)),
        _ => Err(Error::domain("predictive moments are infinite")),
    }
}

pub fn resolution_value<M: MixedPoissonModel + ?Sized>(
    model: &M,
    j1: Exposure,
    j2: Exposure,
    n1: u64,
    mode: VarianceMode,
) -> Result<f64> {
    let (mean_lo, var_lo) = finite_moments(model.predictive_moments(j1, n1, j2)?)?;
    let (mean_hi, var_hi) = finite_moments(model.predictive_moments(j1, n1 + 1, j2)?)?;
    let var = match mode {
        VarianceMode::Lower => var_lo,
        VarianceMode::Pooled => 0.5 * (var_lo + var_hi),
    };
    Ok((mean_hi - mean_lo) / var.sqrt())
}

/// Resolution at `n1` from the model's predictive moments, flagged against
/// the default threshold of 1.
pub fn resolution_generic<M: MixedPoissonModel + ?Sized>(
    model: &M,
    j1: Exposure,
    j2: Exposure,
    n1: u64,
) -> Result<ResolutionReport> {
    let resolution = resolution_value(model, j1, j2, n1, VarianceMode::Lower)?;
    Ok(ResolutionReport {
        n1,
        resolution,
        high_resolution: resolution >= DEFAULT_THRESHOLD,
    })
}

/// Gamma-model closed form `sqrt(J2 / ((n1+α)(β+J1+J2)))`.
pub fn resolution_gamma_closed_form(
    params: GammaMixParams,
    j1: Exposure,
    j2: Exposure,
    n1: u64,
) -> f64 {
    let j2 = j2.years();
    (j2 / ((n1 as f64 + params.alpha()) * (params.beta() + j1.years() + j2))).sqrt()
}

pub fn resolution_profile<M: MixedPoissonModel + ?Sized>(
    model: &M,
    j1: Exposure,
    j2: Exposure,
    n1_max: u64,
    threshold: f64,
    mode: VarianceMode,
) -> Result<ResolutionProfile> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::domain(format!(
            "threshold must be finite and > 0 (got {threshold})"
        )));
    }
    let reports = (0..=n1_max)
        .map(|n1| {
            let resolution = resolution_value(model, j1, j2, n1, mode)?;
            Ok(ResolutionReport {
                n1,
                resolution,
                high_resolution: resolution >= threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let largest_resolved_n1 = reports
        .iter()
        .filter(|r| r.high_resolution)
        .map(|r| r.n1)
        .max();
    Ok(ResolutionProfile {
        family: model.family(),
        threshold,
        reports,
        largest_resolved_n1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(j: f64) -> Exposure {
        Exposure::new(j).unwrap()
    }

    #[test]
    fn unit_gamma_example() {
        let p = GammaMixParams::new(1.0, 1.0).unwrap();
        let r = resolution_generic(&p, ex(1.0), ex(1.0), 0).unwrap();
        assert!((r.resolution - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(!r.high_resolution);
        assert!(
            (resolution_gamma_closed_form(p, ex(1.0), ex(1.0), 0) - 0.577_350_269_189_625_8).abs()
                < 1e-15
        );
    }

    #[test]
    fn near_one_case() {
        let p = GammaMixParams::new(0.5, 0.5).unwrap();
        let v = resolution_gamma_closed_form(p, ex(1.0), ex(1.0), 0);
        assert!((v - (1.0f64 / 1.25).sqrt()).abs() < 1e-15);
        assert!((v - 0.894).abs() < 1e-3);
        assert!(resolution_gamma_closed_form(p, ex(1.0), ex(1.0), 5) < v);
    }

    #[test]
    fn pooled_variance_is_smaller_resolution() {
        let p = GammaMixParams::new(1.0, 1.0).unwrap();
        let lo = resolution_value(&p, ex(1.0), ex(1.0), 2, VarianceMode::Lower).unwrap();
        let pooled = resolution_value(&p, ex(1.0), ex(1.0), 2, VarianceMode::Pooled).unwrap();
        assert!(pooled < lo);
    }

    #[test]
    fn bad_threshold() {
        let p = GammaMixParams::new(1.0, 1.0).unwrap();
        assert!(resolution_profile(&p, ex(1.0), ex(1.0), 3, 0.0, VarianceMode::Lower).is_err());
    }
}
