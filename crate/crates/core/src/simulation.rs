//! Synthetic portfolios: draw each policy's risk parameter from the mixing
//! law, then its claim count from `Poisson(J·θ)`.
//!
//! Every policy gets its own ChaCha8 stream, selected by the policy index
//! under a generator seeded from the portfolio seed, so the output does not
//! depend on how the work is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::estimation::common_exposure;
use crate::model::{ClaimRecord, Exposure, LogPmf, MixParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: MixParams,
    pub exposure: Exposure,
    pub portfolio_size: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(
        params: MixParams,
        exposure: Exposure,
        portfolio_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if portfolio_size == 0 {
            return Err(Error::domain("portfolio size must be at least 1"));
        }
        Ok(SimConfig {
            params,
            exposure,
            portfolio_size,
            seed,
        })
    }
}

/// Generator for policy `index` of a portfolio seeded with `seed`.
pub fn policy_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw of the risk parameter. Inverse-gamma draws are reciprocals of
/// gamma draws with shape `s` and rate `m`.
pub fn sample_theta<R: Rng + ?Sized>(params: &MixParams, rng: &mut R) -> f64 {
    match params {
        MixParams::Gamma(p) => Gamma::new(p.alpha(), 1.0 / p.beta())
            .expect("validated params")
            .sample(rng),
        MixParams::InvGamma(p) => {
            1.0 / Gamma::new(p.s(), 1.0 / p.m())
                .expect("validated params")
                .sample(rng)
        }
    }
}

/// Poisson draw that stays defined for intensities beyond what the sampler
/// accepts; there the relative spread is below 1e-9 and the mean is used.
fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda.is_nan() || lambda <= 0.0 {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => lambda.round() as u64,
    }
}

pub fn sample_portfolio(config: &SimConfig) -> Vec<ClaimRecord> {
    let j = config.exposure.years();
    (0..config.portfolio_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = policy_rng(config.seed, i as u64);
            let theta = sample_theta(&config.params, &mut rng);
            ClaimRecord {
                policy_id: format!("p{i}"),
                exposure_years: j,
                claim_count: sample_poisson(j * theta, &mut rng),
            }
        })
        .collect()
}

/// Claim-count bin `[lo, hi]`; `hi = None` means open to the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub lo: u64,
    pub hi: Option<u64>,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub bins: Vec<GofBin>,
}

impl GofResult {
    /// Whether the statistic exceeds the `level` quantile (e.g. 0.999) of
    /// its reference chi-square law.
    pub fn rejects_at(&self, level: f64) -> bool {
        self.chi_square > chi_square_quantile(self.degrees_of_freedom, level)
    }
}

pub fn chi_square_quantile(dof: usize, level: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(level)
}

pub const MIN_EXPECTED: f64 = 5.0;

fn merge(a: GofBin, b: GofBin) -> GofBin {
    GofBin {
        lo: a.lo,
        hi: b.hi,
        observed: a.observed + b.observed,
        expected: a.expected + b.expected,
    }
}

/// Pearson chi-square of the observed claim counts against `law`, which
/// must describe counts over the records' common exposure. Tail bins are
/// merged inward until every expected count reaches 5 (low-count bins on the
/// left are merged the same way). `fitted_params` is the number of
/// parameters estimated from these same records.
pub fn goodness_of_fit<L: LogPmf + ?Sized>(
    records: &[ClaimRecord],
    law: &L,
    fitted_params: usize,
) -> Result<GofResult> {
    common_exposure(records)?;
    let total = records.len() as f64;
    let max_n = records
        .iter()
        .map(|r| r.claim_count)
        .max()
        .expect("nonempty");
    let mut observed = vec![0u64; max_n as usize + 1];
    for r in records {
        observed[r.claim_count as usize] += 1;
    }
    let mut bins = Vec::with_capacity(observed.len());
    let mut head = 0.0;
    for (n, &obs) in observed.iter().enumerate() {
        let p = law.log_pmf(n as u64)?.exp();
        head += p;
        bins.push(GofBin {
            lo: n as u64,
            hi: Some(n as u64),
            observed: obs,
            expected: total * p,
        });
    }
    // The last bin takes the whole right tail.
    let last = bins.last_mut().expect("nonempty");
    last.hi = None;
    last.expected += total * (1.0 - head).max(0.0);

    while bins.len() > 1 && bins[bins.len() - 1].expected < MIN_EXPECTED {
        let b = bins.pop().expect("len > 1");
        let a = bins.pop().expect("len > 1");
        bins.push(merge(a, b));
    }
    while bins.len() > 1 && bins[0].expected < MIN_EXPECTED {
        let a = bins.remove(0);
        bins[0] = merge(a, bins[0]);
    }
    let mut i = 0;
    while i + 1 < bins.len() {
        if bins[i].expected < MIN_EXPECTED {
            let a = bins.remove(i);
            bins[i] = merge(a, bins[i]);
        } else {
            i += 1;
        }
    }
    if bins.len() < 2 {
        return Err(Error::TooFewBins(bins.len()));
    }
    let dof = bins.len() as i64 - 1 - fitted_params as i64;
    if dof < 1 {
        return Err(Error::domain(format!(
            "{} bins leave no degrees of freedom for {fitted_params} fitted parameter(s)",
            bins.len()
        )));
    }
    let chi_square: f64 = bins
        .iter()
        .map(|b| (b.observed as f64 - b.expected).powi(2) / b.expected)
        .sum();
    let p_value = ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .sf(chi_square);
    Ok(GofResult {
        chi_square,
        degrees_of_freedom: dof as usize,
        p_value,
        bins,
    })
}
