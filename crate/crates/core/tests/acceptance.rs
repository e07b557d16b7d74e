//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::time::Instant;

use claimrate_core::estimation::{fit_mle, fit_moments, fit_moments_invgamma, MleConfig};
use claimrate_core::poisson_gamma::{self, nb_log_pmf, nb_moments};
use claimrate_core::poisson_inv_gamma::{self, pig_log_pmf, pig_moments};
use claimrate_core::pricing::{bms_table, PremiumPrinciple};
use claimrate_core::resolution::{resolution_gamma_closed_form, resolution_generic};
use claimrate_core::series::{nb_series, pig_series};
use claimrate_core::simulation::{sample_portfolio, SimConfig};
use claimrate_core::special::{log_bessel_k, log_integral_identity, quad_bessel_oracle};
use claimrate_core::tail::{
    figure_series, linear_fit, log_grid, reference, slope_at, tail_scan, DEFAULT_SLOPE_DELTA,
};
use claimrate_core::{
    AtExposure, Exposure, GammaMixParams, InvGammaMixParams, MixParams, MixedPoissonModel, Moment,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ex(j: f64) -> Exposure {
    Exposure::new(j).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference_slopes() -> Outcome {
    let start = Instant::now();
    let rows = reference::params().map_err(|e| e.to_string())?;
    let scan = tail_scan(&rows, ex(1.0), &[10.0, 13.0], DEFAULT_SLOPE_DELTA);
    let secs = start.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (r, got) in reference::ROWS.iter().zip(scan) {
        let got = got.map_err(|e| e.to_string())?;
        for (x, want) in [(10.0, r.slope_x10), (13.0, r.slope_x13)] {
            let e = rel(got.slope_at_x(x).unwrap(), want);
            worst = worst.max(e);
            if e > 0.005 {
                bad.push(format!("m={} s={} x={x}", r.m_printed, r.s_printed));
            }
        }
    }
    check(
        bad.is_empty() && secs < 60.0,
        format!("worst rel {worst:.5}, scan {secs:.2}s, failing {bad:?}"),
    )
}

fn reference_moments() -> Outcome {
    let rows = reference::params().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut bad = 0;
    for (r, got) in
        reference::ROWS
            .iter()
            .zip(tail_scan(&rows, ex(1.0), &[10.0], DEFAULT_SLOPE_DELTA))
    {
        let got = got.map_err(|e| e.to_string())?;
        let e = rel(got.mean.as_f64(), r.mean);
        worst = worst.max(e);
        bad += (e > 1e-9) as usize;
        match r.variance {
            Some(v) => {
                let e = rel(got.variance.as_f64(), v);
                worst = worst.max(e);
                bad += (e > 1e-9) as usize;
            }
            None => bad += (!got.variance.is_infinite()) as usize,
        }
    }
    check(bad == 0, format!("worst rel {worst:.2e}, mismatches {bad}"))
}

fn tail_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut rows = 0;
    for r in reference::ROWS.iter().filter(|r| {
        [1.1, 2.0, 3.0, 12.0]
            .iter()
            .any(|s| (r.s_printed - s).abs() < 1e-9)
    }) {
        let p = r.params().map_err(|e| e.to_string())?;
        let slope = slope_at(
            &AtExposure {
                model: p,
                exposure: ex(1.0),
            },
            13.0,
            DEFAULT_SLOPE_DELTA,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((slope + p.s() + 1.0).abs() / (p.s() + 1.0));
        rows += 1;
    }
    check(
        rows > 0 && worst <= 0.01,
        format!("{rows} rows, worst {worst:.5}"),
    )
}

fn figure() -> Outcome {
    let pig = InvGammaMixParams::new(0.0011, 2.1).unwrap();
    let nb = GammaMixParams::new(0.1, 100.0).unwrap();
    let series =
        figure_series(pig, nb, ex(1.0), &log_grid(10.0, 13.0, 60)).map_err(|e| e.to_string())?;
    let (slope, _, r2) = linear_fit(&series.inv_gamma).map_err(|e| e.to_string())?;
    let nb_slope = slope_at(
        &AtExposure {
            model: nb,
            exposure: ex(1.0),
        },
        8.0,
        DEFAULT_SLOPE_DELTA,
    )
    .map_err(|e| e.to_string())?;
    check(
        r2 > 0.999 && (-3.2..=-3.0).contains(&slope) && nb_slope < -1000.0,
        format!("slope {slope:.4}, R² {r2:.6}, NB slope at 8 {nb_slope:.1}"),
    )
}

fn bessel_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..20 {
        let nu = 20.0 * i as f64 / 19.0;
        for k in 0..20 {
            let x = (1e-3f64.ln() + (30f64.ln() - 1e-3f64.ln()) * k as f64 / 19.0).exp();
            let got = log_bessel_k(nu, x).map_err(|e| e.to_string())?.get();
            let want = quad_bessel_oracle(nu, x, &cfg())
                .map_err(|e| e.to_string())?
                .get();
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_id = 0.0f64;
    for _ in 0..50 {
        let j: f64 = rng.random_range(0.05..5.0);
        let a: f64 = rng.random_range(0.05..5.0);
        let b: f64 = rng.random_range(-2.0..10.0);
        let got = log_integral_identity(j, a, b)
            .map_err(|e| e.to_string())?
            .get();
        let want = ln_gig_integral(b + 1.0, j, a);
        worst_id = worst_id.max((got - want).abs() / want.abs().max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && worst_id <= 1e-8 && secs < 30.0,
        format!("grid worst {worst:.2e}, identity worst {worst_id:.2e}, {secs:.2}s"),
    )
}

fn mixing_integrals() -> Outcome {
    let gamma = [
        (1.0, 1.0, 1.0),
        (0.1, 100.0, 1.0),
        (2.0, 4.0, 1.0),
        (1.1001, 6.458, 3.0),
        (1.107, 7.67, 1.0),
        (0.5, 0.5, 2.0),
        (5.0, 0.7, 0.5),
        (0.3, 2.0, 10.0),
        (12.0, 30.0, 1.5),
        (0.7, 3.0, 4.0),
    ];
    let invgamma = [
        (0.0011, 2.1, 1.0),
        (0.25, 0.5, 1.0),
        (1.0, 2.0, 1.0),
        (2.0, 3.0, 1.0),
        (0.0001, 1.1, 1.0),
        (110.0, 12.0, 1.0),
        (1.0, 0.5, 3.0),
        (5.0, 7.5, 0.5),
        (0.3, 1.6, 2.0),
        (40.0, 45.0, 1.0),
    ];
    let mut worst = 0.0f64;
    for (a, b, j) in gamma {
        let p = GammaMixParams::new(a, b).unwrap();
        for n in 0..=20 {
            let want = ln_mix_pmf_gamma(a, b, j, n);
            worst = worst.max((nb_log_pmf(p, ex(j), n).get() - want).abs() / want.abs().max(1.0));
        }
    }
    for (m, s, j) in invgamma {
        let p = InvGammaMixParams::new(m, s).unwrap();
        for n in 0..=20 {
            let want = ln_mix_pmf_invgamma(m, s, j, n);
            worst = worst.max((pig_log_pmf(p, ex(j), n).get() - want).abs() / want.abs().max(1.0));
        }
    }
    check(worst <= 1e-8, format!("worst {worst:.2e} over 420 points"))
}

fn posterior_predictive() -> Outcome {
    let mut worst_mom = 0.0f64;
    for (m, s, j, n) in [
        (0.0011, 2.1, 1.0, 0u64),
        (0.0011, 2.1, 1.0, 5),
        (1.0, 0.5, 1.0, 0),
        (2.0, 3.0, 1.0, 4),
        (0.0001, 1.1, 2.0, 12),
        (110.0, 12.0, 1.0, 30),
    ] {
        let p = InvGammaMixParams::new(m, s).unwrap();
        let got = poisson_inv_gamma::posterior_moments(p, ex(j), n).map_err(|e| e.to_string())?;
        let (mean, var) = gig_moments(n as f64 - s, j, m);
        worst_mom = worst_mom
            .max(rel(got.mean, mean))
            .max(rel(got.variance, var));
    }
    let mut worst_pmf = 0.0f64;
    let mut exact = true;
    for (m, s, j1, n1, j2, n2) in [
        (1.0, 2.0, 1.0, 0u64, 1.0, 0u64),
        (0.0011, 2.1, 3.0, 2, 1.0, 1),
        (0.0011, 2.1, 1.0, 0, 1.0, 4),
        (2.0, 3.0, 2.0, 5, 0.5, 7),
        (0.25, 0.5, 1.0, 1, 2.0, 0),
        (110.0, 12.0, 1.0, 15, 1.0, 20),
    ] {
        let p = InvGammaMixParams::new(m, s).unwrap();
        let got = poisson_inv_gamma::predictive_log_pmf(p, ex(j1), n1, ex(j2), n2).get();
        let want = ln_predictive_invgamma(m, s, j1, n1, j2, n2);
        worst_pmf = worst_pmf.max((got - want).abs() / want.abs().max(1.0));
        let post =
            poisson_inv_gamma::posterior_moments(p, ex(j1), n1).map_err(|e| e.to_string())?;
        let pred = poisson_inv_gamma::predictive_moments(p, ex(j1), n1, ex(j2))
            .map_err(|e| e.to_string())?;
        exact &= pred.mean.as_f64() == j2 * post.mean
            && pred.variance.as_f64() == j2 * post.mean + j2 * j2 * post.variance;
    }
    check(
        worst_mom <= 1e-7 && worst_pmf <= 1e-8 && exact,
        format!("moments worst {worst_mom:.2e}, pmf worst {worst_pmf:.2e}, moment identity exact {exact}"),
    )
}

fn resolution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = GammaMixParams::new(rng.random_range(0.01..20.0), rng.random_range(0.01..50.0))
            .unwrap();
        let (j1, j2) = (
            ex(rng.random_range(0.1..10.0)),
            ex(rng.random_range(0.1..10.0)),
        );
        let n1 = rng.random_range(0..100u64);
        let generic = resolution_generic(&p, j1, j2, n1)
            .map_err(|e| e.to_string())?
            .resolution;
        worst = worst.max(rel(generic, resolution_gamma_closed_form(p, j1, j2, n1)));
    }
    let mack = resolution_generic(
        &GammaMixParams::new(1.1001, 6.458).unwrap(),
        ex(1.0),
        ex(1.0),
        0,
    )
    .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-12 && mack.resolution < 1.0,
        format!("worst {worst:.2e}, Mack resolution {:.6}", mack.resolution),
    )
}

fn credibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (a, b, j): (f64, f64, f64) = (
            rng.random_range(0.05..20.0),
            rng.random_range(0.05..50.0),
            rng.random_range(0.1..10.0),
        );
        let p = GammaMixParams::new(a, b).unwrap();
        for n in 0..30u64 {
            let pm = poisson_gamma::posterior_moments(p, ex(j), n);
            let z = pm.credibility_weight;
            if z != j / (b + j) {
                return Err(format!("weight {z} at ({a},{b},{j})"));
            }
            worst = worst.max(rel(pm.mean, z * (n as f64 / j) + (1.0 - z) * (a / b)));
        }
    }
    // Affinity up to rounding of the relativity arithmetic.
    let mut worst_d2 = 0.0f64;
    for (a, b) in [(1.0, 1.0), (1.1001, 6.458), (0.1, 100.0)] {
        let rows = bms_table(
            &GammaMixParams::new(a, b).unwrap(),
            ex(1.0),
            20,
            PremiumPrinciple::Expectation,
        )
        .map_err(|e| e.to_string())?;
        for w in rows.windows(3) {
            worst_d2 = worst_d2.max(
                (w[2].relativity - 2.0 * w[1].relativity + w[0].relativity).abs()
                    / (f64::EPSILON * w[2].relativity),
            );
        }
    }
    let rows = bms_table(
        &InvGammaMixParams::new(0.0011, 2.1).unwrap(),
        ex(1.0),
        10,
        PremiumPrinciple::Expectation,
    )
    .map_err(|e| e.to_string())?;
    let inc: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].relativity - w[0].relativity)
        .collect();
    let (lo, hi) = inc
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = (hi - lo) / (inc.iter().sum::<f64>() / inc.len() as f64).abs();
    check(
        worst <= 1e-14 && worst_d2 <= 8.0 && spread > 0.01,
        format!("decomposition worst {worst:.2e}, gamma second differences ≤ {worst_d2:.1} ulp, inverse-gamma increment spread {spread:.3}"),
    )
}

fn normalization() -> Outcome {
    let mut lo_total = f64::MAX;
    let mut hi_total = f64::MIN;
    let mut worst = 0.0f64;
    for (a, b) in [
        (1.0, 1.0),
        (0.1, 100.0),
        (1.1001, 6.458),
        (5.0, 0.7),
        (0.3, 2.0),
    ] {
        let p = GammaMixParams::new(a, b).unwrap();
        let s = nb_series(p, ex(1.0), 1e-12).map_err(|e| e.to_string())?;
        lo_total = lo_total.min(s.total);
        hi_total = hi_total.max(s.total);
        let m = nb_moments(p, ex(1.0));
        worst = worst
            .max(rel(s.mean.as_f64(), m.mean.as_f64()))
            .max(rel(s.variance.as_f64(), m.variance.as_f64()));
    }
    for (m, s) in [
        (1.0, 0.5),
        (0.0001, 1.1),
        (0.0011, 2.1),
        (2.0, 3.0),
        (110.0, 12.0),
        (1.0, 2.0),
        (5.0, 2.5),
    ] {
        let p = InvGammaMixParams::new(m, s).unwrap();
        let sum = pig_series(p, ex(1.0)).map_err(|e| e.to_string())?;
        lo_total = lo_total.min(sum.total);
        hi_total = hi_total.max(sum.total);
        let want = pig_moments(p, ex(1.0));
        for (got, want) in [(sum.mean, want.mean), (sum.variance, want.variance)] {
            match (got, want) {
                (Moment::Finite(a), Moment::Finite(b)) => worst = worst.max(rel(a, b)),
                (Moment::Infinite, Moment::Infinite) => {}
                _ => return Err(format!("finiteness mismatch at ({m},{s})")),
            }
        }
    }
    // Terms carry log-pmf rounding of order ε·|ln p|, so the upper bound is
    // checked up to a fixed rounding allowance and the overshoot is reported.
    const ROUNDING: f64 = 1e-13;
    check(
        lo_total >= 1.0 - 1e-9 && hi_total <= 1.0 + ROUNDING && worst <= 1e-6,
        format!(
            "sums in [1 - {:.2e}, 1 + {:.2e}] (allowance {ROUNDING:e}), moments worst {worst:.2e}",
            1.0 - lo_total,
            hi_total - 1.0
        ),
    )
}

fn round_trip() -> Outcome {
    let mut notes = Vec::new();
    // s = 5 keeps the fourth count moment, and so the delta-method error, finite.
    let mut ok = true;
    for (params, seed) in [
        (
            MixParams::from(GammaMixParams::new(1.0, 1.0).unwrap()),
            100u64,
        ),
        (
            MixParams::from(InvGammaMixParams::new(4.0, 5.0).unwrap()),
            101,
        ),
    ] {
        let recs = sample_portfolio(
            &SimConfig::new(params, ex(1.0), 100_000, seed).map_err(|e| e.to_string())?,
        );
        let (ta, tb) = params.values();
        let mom = fit_moments(params.family(), &recs).map_err(|e| e.to_string())?;
        let (a, b) = mom.params.values();
        let se = mom.std_errors.ok_or("no standard errors")?;
        let za = (a - ta).abs() / se[0];
        let zb = (b - tb).abs() / se[1];
        ok &= za < 3.0 && zb < 3.0;
        let mle =
            fit_mle(params.family(), &recs, &MleConfig::default()).map_err(|e| e.to_string())?;
        let (a, b) = mle.params.values();
        let ea = rel(a, ta);
        let eb = rel(b, tb);
        ok &= ea < 0.1 && eb < 0.1;
        notes.push(format!(
            "{:?}: moment z ({za:.2}, {zb:.2}), MLE rel ({ea:.3}, {eb:.3})",
            params.family()
        ));
    }
    let p = fit_moments_invgamma(0.001, 0.00101, ex(1.0)).map_err(|e| e.to_string())?;
    let exact = p.m() == 0.0011 && p.s() == 2.1;
    ok &= exact;
    notes.push(format!("inversion ({:e}, {}) exact {exact}", p.m(), p.s()));
    check(ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("reference-table slopes", reference_slopes),
        ("reference-table moments", reference_moments),
        ("tail law slope near -(s+1)", tail_law),
        ("comparison plot series", figure),
        ("Bessel oracle suite", bessel_suite),
        ("mixing-integral equivalence", mixing_integrals),
        ("posterior and predictive consistency", posterior_predictive),
        ("resolution", resolution),
        ("credibility and affinity", credibility),
        ("normalization and moments", normalization),
        ("simulation and estimation round trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {:>2} {name} [{:.2}s]: {detail}",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
