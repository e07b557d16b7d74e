//! Premiums from posterior moments and bonus-malus relativity tables.
//!
//! Premiums are expressed per unit of the a priori premium `E(Θ)`, so the
//! expectation-principle premium of a class equals its relativity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exposure, MixedPoissonModel, Moment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PremiumPrinciple {
    Expectation,
    /// `mean + loading · variance`
    VarianceLoaded {
        loading: f64,
    },
    /// `mean + loading · sqrt(variance)`
    StdDevLoaded {
        loading: f64,
    },
}

impl PremiumPrinciple {
    pub fn variance_loaded(loading: f64) -> Result<Self> {
        check_loading(loading)?;
        Ok(PremiumPrinciple::VarianceLoaded { loading })
    }

    pub fn stddev_loaded(loading: f64) -> Result<Self> {
        check_loading(loading)?;
        Ok(PremiumPrinciple::StdDevLoaded { loading })
    }
}

fn check_loading(loading: f64) -> Result<()> {
    if loading.is_finite() && loading >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "premium loading must be finite and >= 0 (got {loading})"
        )))
    }
}

/// Applies a premium principle to a risk with the given mean and variance.
/// Infinite variance is allowed only under the expectation principle.
pub fn premium(mean: f64, variance: f64, principle: PremiumPrinciple) -> Result<f64> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::domain(format!(
            "premium needs a finite mean > 0 (got {mean})"
        )));
    }
    if variance.is_nan() || variance < 0.0 {
        return Err(Error::domain(format!(
            "variance must be >= 0 (got {variance})"
        )));
    }
    match principle {
        PremiumPrinciple::Expectation => Ok(mean),
        PremiumPrinciple::VarianceLoaded { loading }
        | PremiumPrinciple::StdDevLoaded { loading } => {
            check_loading(loading)?;
            if variance.is_infinite() {
                return Err(Error::domain(
                    "loaded premium principle needs a finite variance",
                ));
            }
            Ok(match principle {
                PremiumPrinciple::VarianceLoaded { .. } => mean + loading * variance,
                _ => mean + loading * variance.sqrt(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmsTableRow {
    pub n1: u64,
    pub posterior_mean: f64,
    pub posterior_variance: f64,
    /// `E(Θ | N1 = n1) / E(Θ)`.
    pub relativity: f64,
    /// Principle premium divided by `E(Θ)`.
    pub premium: f64,
}

pub fn bms_table<M: MixedPoissonModel + ?Sized>(
    model: &M,
    j1: Exposure,
    n1_max: u64,
    principle: PremiumPrinciple,
) -> Result<Vec<BmsTableRow>> {
    let base = match model.mixing_mean() {
        Moment::Finite(v) => v,
        Moment::Infinite => {
            return Err(Error::domain(
                "portfolio mean E(Θ) is infinite (inverse-gamma needs s > 1)",
            ));
        }
    };
    (0..=n1_max)
        .map(|n1| {
            let post = model.posterior_moments(j1, n1)?;
            Ok(BmsTableRow {
                n1,
                posterior_mean: post.mean,
                posterior_variance: post.variance,
                relativity: post.mean / base,
                premium: premium(post.mean, post.variance, principle)? / base,
            })
        })
        .collect()
}
