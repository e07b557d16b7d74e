//! Fitting mixing parameters to portfolio claim data, by moment matching
//! and by maximum likelihood.

mod nelder_mead;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use nelder_mead::{minimize, SimplexConfig, SimplexResult};

use crate::error::{Error, Result};
use crate::model::{ClaimRecord, Exposure, Family, MixParams, MixedPoissonModel, Moment};
use crate::poisson_gamma::{nb_moments, GammaMixParams};
use crate::poisson_inv_gamma::{pig_moments, InvGammaMixParams};
use crate::series::KahanSum;

/// Relative tolerance under which two exposures count as the same.
pub const EXPOSURE_RTOL: f64 = 1e-12;

/// Sample summary of claim counts observed over a common exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub exposure: Exposure,
    pub records: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Moments,
    Mle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MixParams,
    pub method: FitMethod,
    /// Log-likelihood of the records at `params`.
    pub log_likelihood: Option<f64>,
    /// Standard errors of the two parameters, in declaration order. Delta
    /// method for moment fits, observed information for likelihood fits.
    pub std_errors: Option<[f64; 2]>,
    /// The optimum lies far out along a parameter ray (log-parameter beyond
    /// [`MleConfig::boundary_log`]); the data do not pin the parameters down.
    pub boundary: bool,
    pub evaluations: usize,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.params.family()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub simplex: SimplexConfig,
    /// Absolute log-parameter value beyond which a solution is flagged as
    /// boundary-hugging.
    pub boundary_log: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            simplex: SimplexConfig::default(),
            boundary_log: 20.0,
        }
    }
}

/// The exposure shared by all records.
pub fn common_exposure(records: &[ClaimRecord]) -> Result<Exposure> {
    let first = records
        .first()
        .ok_or_else(|| Error::domain("no records"))?
        .exposure_years;
    for r in records {
        if (r.exposure_years - first).abs() > EXPOSURE_RTOL * first.abs() {
            return Err(Error::HeterogeneousExposure {
                first,
                other: r.exposure_years,
            });
        }
    }
    Exposure::new(first)
}

struct CentralMoments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

fn central_moments(records: &[ClaimRecord]) -> CentralMoments {
    let n = records.len() as f64;
    let mut s = KahanSum::default();
    for r in records {
        s.add(r.claim_count as f64);
    }
    let mean = s.value() / n;
    let (mut s2, mut s3, mut s4) = (
        KahanSum::default(),
        KahanSum::default(),
        KahanSum::default(),
    );
    for r in records {
        let d = r.claim_count as f64 - mean;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    CentralMoments {
        n,
        mean,
        m2: s2.value() / n,
        m3: s3.value() / n,
        m4: s4.value() / n,
    }
}

/// Sample mean and unbiased variance of the claim counts.
pub fn empirical_moments(records: &[ClaimRecord]) -> Result<EmpiricalMoments> {
    let exposure = common_exposure(records)?;
    if records.len() < 2 {
        return Err(Error::NonIdentifiable(
            "sample variance needs at least two records".into(),
        ));
    }
    let c = central_moments(records);
    let variance = c.m2 * c.n / (c.n - 1.0);
    if variance <= c.mean {
        return Err(Error::NoOverdispersion {
            mean: c.mean,
            variance,
        });
    }
    Ok(EmpiricalMoments {
        mean: c.mean,
        variance,
        exposure,
        records: records.len(),
    })
}

fn check_overdispersed(mean: f64, variance: f64) -> Result<()> {
    if !(mean.is_finite() && mean > 0.0 && variance.is_finite()) {
        return Err(Error::domain(format!(
            "moments must be finite with mean > 0 (got {mean}, {variance})"
        )));
    }
    if variance <= mean {
        return Err(Error::NoOverdispersion { mean, variance });
    }
    Ok(())
}

/// `β = J·mean/(var-mean)`, `α = mean²/(var-mean)`.
pub fn fit_moments_gamma(mean: f64, variance: f64, exposure: Exposure) -> Result<GammaMixParams> {
    check_overdispersed(mean, variance)?;
    // Excess dispersion var/mean - 1 keeps round values round.
    let excess = variance / mean - 1.0;
    GammaMixParams::new(mean / excess, exposure.years() / excess)
}

/// `s = 2 + mean²/(var-mean)`, `m = mean·(s-1)/J`, evaluated through var/mean.
pub fn fit_moments_invgamma(
    mean: f64,
    variance: f64,
    exposure: Exposure,
) -> Result<InvGammaMixParams> {
    check_overdispersed(mean, variance)?;
    let s = 2.0 + mean / (variance / mean - 1.0);
    InvGammaMixParams::new(mean * (s - 1.0) / exposure.years(), s)
}

/// Gradients of the two fitted parameters with respect to (mean, variance).
fn moment_fit_gradients(family: Family, mean: f64, variance: f64, j: f64) -> [[f64; 2]; 2] {
    let d = variance - mean;
    let dq_dmean = 2.0 * mean / d + mean * mean / (d * d);
    let dq_dvar = -mean * mean / (d * d);
    match family {
        Family::Gamma => [
            [dq_dmean, dq_dvar],
            [j / d + j * mean / (d * d), -j * mean / (d * d)],
        ],
        Family::InvGamma => {
            let s = 2.0 + mean * mean / d;
            [
                [(s - 1.0 + mean * dq_dmean) / j, mean * dq_dvar / j],
                [dq_dmean, dq_dvar],
            ]
        }
    }
}

/// Moment-matching fit with delta-method standard errors.
pub fn fit_moments(family: Family, records: &[ClaimRecord]) -> Result<FitResult> {
    let em = empirical_moments(records)?;
    let params = match family {
        Family::Gamma => MixParams::from(fit_moments_gamma(em.mean, em.variance, em.exposure)?),
        Family::InvGamma => {
            MixParams::from(fit_moments_invgamma(em.mean, em.variance, em.exposure)?)
        }
    };
    let c = central_moments(records);
    let cov = [
        [c.m2 / c.n, c.m3 / c.n],
        [c.m3 / c.n, (c.m4 - c.m2 * c.m2) / c.n],
    ];
    let grads = moment_fit_gradients(family, em.mean, em.variance, em.exposure.years());
    let se = grads.map(|g| {
        let v = g[0] * g[0] * cov[0][0] + 2.0 * g[0] * g[1] * cov[0][1] + g[1] * g[1] * cov[1][1];
        v.max(0.0).sqrt()
    });
    let ll = log_likelihood(&params, records)?;
    Ok(FitResult {
        params,
        method: FitMethod::Moments,
        log_likelihood: Some(ll),
        std_errors: Some(se),
        boundary: false,
        evaluations: 1,
    })
}

/// Records collapsed to counts of identical `(exposure, claims)` pairs, in
/// a fixed order so sums do not depend on the input ordering.
struct Groups(Vec<(Exposure, u64, f64)>);

impl Groups {
    fn new(records: &[ClaimRecord]) -> Result<Self> {
        let mut map: BTreeMap<(u64, u64), f64> = BTreeMap::new();
        for r in records {
            Exposure::new(r.exposure_years)?;
            *map.entry((r.exposure_years.to_bits(), r.claim_count))
                .or_insert(0.0) += 1.0;
        }
        Ok(Groups(
            map.into_iter()
                .map(|((bits, n), w)| {
                    (
                        Exposure::new(f64::from_bits(bits)).expect("validated"),
                        n,
                        w,
                    )
                })
                .collect(),
        ))
    }

    fn log_likelihood<M: MixedPoissonModel + ?Sized>(&self, model: &M) -> Result<f64> {
        let terms = self
            .0
            .par_iter()
            .map(|&(j, n, w)| model.log_pmf(j, n).map(|l| w * l))
            .collect::<Result<Vec<f64>>>()?;
        let mut sum = KahanSum::default();
        for t in terms {
            sum.add(t);
        }
        Ok(sum.value())
    }
}

/// `Σ ln P(N = nᵢ)` over records, each with its own exposure.
pub fn log_likelihood<M: MixedPoissonModel + ?Sized>(
    model: &M,
    records: &[ClaimRecord],
) -> Result<f64> {
    Groups::new(records)?.log_likelihood(model)
}

fn starting_point(family: Family, records: &[ClaimRecord]) -> Result<[f64; 2]> {
    if let Ok(em) = empirical_moments(records) {
        let p = match family {
            Family::Gamma => MixParams::from(fit_moments_gamma(em.mean, em.variance, em.exposure)?),
            Family::InvGamma => {
                MixParams::from(fit_moments_invgamma(em.mean, em.variance, em.exposure)?)
            }
        };
        let (a, b) = p.values();
        return Ok([a.ln(), b.ln()]);
    }
    let claims: f64 = records.iter().map(|r| r.claim_count as f64).sum();
    let years: f64 = records.iter().map(|r| r.exposure_years).sum();
    let rate = claims / years;
    Ok(match family {
        Family::Gamma => [0.0, -rate.ln()],
        Family::InvGamma => [(2.0 * rate).ln(), 3f64.ln()],
    })
}

fn params_at(family: Family, x: &[f64]) -> Result<MixParams> {
    MixParams::from_values(family, x[0].exp(), x[1].exp())
}

/// Standard errors from the observed information, by central differences
/// of the log-likelihood in log-parameter coordinates.
fn observed_info_se(groups: &Groups, family: Family, x: [f64; 2]) -> Option<[f64; 2]> {
    let h = 1e-4;
    let f = |dx: f64, dy: f64| -> Option<f64> {
        let p = params_at(family, &[x[0] + dx, x[1] + dy]).ok()?;
        groups.log_likelihood(&p).ok().filter(|v| v.is_finite())
    };
    let f0 = f(0.0, 0.0)?;
    let hxx = -(f(h, 0.0)? - 2.0 * f0 + f(-h, 0.0)?) / (h * h);
    let hyy = -(f(0.0, h)? - 2.0 * f0 + f(0.0, -h)?) / (h * h);
    let hxy = -(f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h);
    let det = hxx * hyy - hxy * hxy;
    if !(det > 0.0 && hxx > 0.0) {
        return None;
    }
    let var_x = hyy / det;
    let var_y = hxx / det;
    Some([x[0].exp() * var_x.sqrt(), x[1].exp() * var_y.sqrt()])
}

const START_OFFSETS: [[f64; 2]; 4] = [[0.7, 0.7], [-0.7, -0.7], [0.7, -0.7], [-0.7, 0.7]];

/// Maximum likelihood over both parameters, multi-started from the moment
/// fit (or a rate-based guess under mixed exposures) and four perturbations.
pub fn fit_mle(family: Family, records: &[ClaimRecord], cfg: &MleConfig) -> Result<FitResult> {
    if records.len() < 2 {
        return Err(Error::NonIdentifiable(format!(
            "{} record(s): the likelihood is unbounded along a parameter ray",
            records.len()
        )));
    }
    if records.iter().all(|r| r.claim_count == 0) {
        return Err(Error::NonIdentifiable(
            "no claims observed: the likelihood increases as the mean goes to 0".into(),
        ));
    }
    let groups = Groups::new(records)?;
    let objective = |x: &[f64]| -> f64 {
        match params_at(family, x).and_then(|p| groups.log_likelihood(&p)) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };

    let base = starting_point(family, records)?;
    let mut starts = vec![base];
    starts.extend(
        START_OFFSETS
            .iter()
            .map(|o| [base[0] + o[0], base[1] + o[1]]),
    );

    let mut best: Option<SimplexResult> = None;
    let mut evaluations = 0;
    for start in &starts {
        let r = minimize(objective, start, &cfg.simplex);
        evaluations += r.evaluations;
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::NonConvergence(
            "likelihood is not finite at any start".into(),
        ));
    }
    let boundary = best.point.iter().any(|v| v.abs() > cfg.boundary_log);
    if !best.converged && !boundary {
        return Err(Error::NonConvergence(format!(
            "simplex did not shrink below {} within {} evaluations",
            cfg.simplex.diameter_tol, cfg.simplex.max_evals
        )));
    }
    let x = [best.point[0], best.point[1]];
    Ok(FitResult {
        params: params_at(family, &x)?,
        method: FitMethod::Mle,
        log_likelihood: Some(-best.value),
        std_errors: if boundary {
            None
        } else {
            observed_info_se(&groups, family, x)
        },
        boundary,
        evaluations,
    })
}

/// Model moments at a fitted parameter set, for round-trip checks.
pub fn fitted_moments(params: &MixParams, exposure: Exposure) -> (Moment, Moment) {
    let m = match params {
        MixParams::Gamma(p) => nb_moments(*p, exposure),
        MixParams::InvGamma(p) => pig_moments(*p, exposure),
    };
    (m.mean, m.variance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(j: f64) -> Exposure {
        Exposure::new(j).unwrap()
    }

    fn recs(counts: &[u64], j: f64) -> Vec<ClaimRecord> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &n)| ClaimRecord::new(i.to_string(), j, n).unwrap())
            .collect()
    }

    #[test]
    fn empirical_examples() {
        let em = empirical_moments(&recs(&[0, 0, 1, 1, 3], 1.0)).unwrap();
        assert!((em.mean - 1.0).abs() < 1e-15 && (em.variance - 1.5).abs() < 1e-15);
        assert!(matches!(
            empirical_moments(&recs(&[0, 0, 0], 1.0)),
            Err(Error::NoOverdispersion { .. })
        ));
        let mut mixed = recs(&[0, 1], 1.0);
        mixed[1].exposure_years = 2.0;
        assert!(matches!(
            empirical_moments(&mixed),
            Err(Error::HeterogeneousExposure { .. })
        ));
    }

    #[test]
    fn four_record_example_is_underdispersed() {
        // mean 0.5, variance 1/3
        let r = recs(&[0, 0, 1, 1], 1.0);
        match empirical_moments(&r) {
            Err(Error::NoOverdispersion { mean, variance }) => {
                assert!((mean - 0.5).abs() < 1e-15 && (variance - 1.0 / 3.0).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gamma_moment_examples() {
        let p = fit_moments_gamma(0.001, 0.00101, ex(1.0)).unwrap();
        assert!((p.alpha() - 0.1).abs() < 1e-12 && (p.beta() - 100.0).abs() < 1e-9);
        let p = fit_moments_gamma(1.0, 2.0, ex(1.0)).unwrap();
        assert_eq!((p.alpha(), p.beta()), (1.0, 1.0));
        assert!(fit_moments_gamma(0.5, 0.5, ex(1.0)).is_err());
    }

    #[test]
    fn invgamma_moment_examples() {
        let p = fit_moments_invgamma(0.001, 0.00101, ex(1.0)).unwrap();
        assert!((p.m() - 0.0011).abs() < 1e-15 && (p.s() - 2.1).abs() < 1e-12);
        let p = fit_moments_invgamma(1.0, 2.0, ex(1.0)).unwrap();
        assert_eq!((p.m(), p.s()), (2.0, 3.0));
        let p = fit_moments_invgamma(10.0, 20.0, ex(1.0)).unwrap();
        assert_eq!((p.m(), p.s()), (110.0, 12.0));
    }

    #[test]
    fn single_record_not_identifiable() {
        let r = recs(&[3], 1.0);
        assert!(matches!(
            fit_mle(Family::Gamma, &r, &MleConfig::default()),
            Err(Error::NonIdentifiable(_))
        ));
    }

    #[test]
    fn delta_method_gradients_match_differences() {
        for family in [Family::Gamma, Family::InvGamma] {
            let (mean, var, j) = (0.7, 1.9, 1.5);
            let g = moment_fit_gradients(family, mean, var, j);
            let fit = |m: f64, v: f64| match family {
                Family::Gamma => fit_moments_gamma(m, v, ex(j))
                    .map(MixParams::from)
                    .unwrap()
                    .values(),
                Family::InvGamma => fit_moments_invgamma(m, v, ex(j))
                    .map(MixParams::from)
                    .unwrap()
                    .values(),
            };
            let h = 1e-6;
            let (a1, b1) = fit(mean + h, var);
            let (a0, b0) = fit(mean - h, var);
            let (a3, b3) = fit(mean, var + h);
            let (a2, b2) = fit(mean, var - h);
            let num = [
                [(a1 - a0) / (2.0 * h), (a3 - a2) / (2.0 * h)],
                [(b1 - b0) / (2.0 * h), (b3 - b2) / (2.0 * h)],
            ];
            for i in 0..2 {
                for k in 0..2 {
                    assert!(
                        (g[i][k] - num[i][k]).abs() < 1e-6 * (1.0 + num[i][k].abs()),
                        "{family} {i}{k}"
                    );
                }
            }
        }
    }
}
