//! `claimrate`: experience-rating computations for mixed Poisson claim
//! counts from the command line.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use claimrate_core::estimation::{fit_mle, fit_moments, FitResult, MleConfig};
use claimrate_core::pricing::{bms_table, PremiumPrinciple};
use claimrate_core::resolution::{resolution_profile, VarianceMode};
use claimrate_core::simulation::{goodness_of_fit, sample_portfolio, SimConfig};
use claimrate_core::tail::{figure_series, log_grid, tail_scan, DEFAULT_SLOPE_DELTA};
use claimrate_core::{
    poisson_gamma, AtExposure, ClaimRecord, Error, Exposure, Family, GammaMixParams,
    InvGammaMixParams, MixParams, MixedPoissonModel, Moment,
};

use output::{emit, Cell, OutputArgs, Table};

const ENV_HELP: &str = "\
Environment overrides for default tolerances:
  CLAIMRATE_SLOPE_DELTA            half-width in x of the tail-slope stencil (default 0.05)
  CLAIMRATE_RESOLUTION_THRESHOLD   resolution at which classes count as separated (default 1)
  CLAIMRATE_MLE_MAX_EVALS          likelihood evaluations per simplex start (default 10000)
  CLAIMRATE_MLE_TOL                simplex diameter in log-parameter space (default 1e-8)

Exit codes: 0 ok, 1 usage, 2 domain error, 3 numerical non-convergence.";

#[derive(Debug, Parser)]
#[command(name = "claimrate", version, about = "Experience rating under Poisson-gamma and Poisson-inverse-gamma models", after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Mixing family: gamma or invgamma.
    #[arg(long, visible_alias = "family", value_parser = parse_family)]
    model: Family,
    /// Gamma shape.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Gamma rate, in years.
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Inverse-gamma scale.
    #[arg(short = 'm', allow_negative_numbers = true)]
    m: Option<f64>,
    /// Inverse-gamma shape.
    #[arg(short = 's', allow_negative_numbers = true)]
    s: Option<f64>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

impl ModelArgs {
    fn params(&self) -> Result<MixParams, CliError> {
        let pair = match self.model {
            Family::Gamma => {
                if self.m.is_some() || self.s.is_some() {
                    return Err(CliError::Usage("-m/-s belong to the invgamma model".into()));
                }
                (self.alpha, self.beta, "--alpha and --beta")
            }
            Family::InvGamma => {
                if self.alpha.is_some() || self.beta.is_some() {
                    return Err(CliError::Usage(
                        "--alpha/--beta belong to the gamma model".into(),
                    ));
                }
                (self.m, self.s, "-m and -s")
            }
        };
        match pair {
            (Some(a), Some(b), _) => Ok(MixParams::from_values(self.model, a, b)?),
            (_, _, names) => Err(CliError::Usage(format!(
                "the {} model needs {names}",
                self.model
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Principle {
    Expectation,
    Variance,
    Stddev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMethodArg {
    Moments,
    Mle,
}

fn exposure_arg(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Claim-count probabilities P(N = n) for n = 0..=n-max.
    Pmf {
        #[command(flatten)]
        model: ModelArgs,
        /// Exposure in years.
        #[arg(short = 'J', default_value_t = 1.0, value_parser = exposure_arg, allow_negative_numbers = true)]
        j: f64,
        #[arg(long)]
        n_max: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Posterior mean and variance of the risk parameter after n claims.
    Posterior {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'J', default_value_t = 1.0, allow_negative_numbers = true)]
        j: f64,
        /// Observed claim count.
        #[arg(short = 'n')]
        n: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Predictive law of next-period claims given n1 claims observed.
    Predict {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "J1", default_value_t = 1.0, allow_negative_numbers = true)]
        j1: f64,
        #[arg(long = "J2", default_value_t = 1.0, allow_negative_numbers = true)]
        j2: f64,
        #[arg(long)]
        n1: u64,
        #[arg(long, default_value_t = 10)]
        n2_max: u64,
        /// Emit the predictive mean and variance instead of the pmf.
        #[arg(long)]
        moments: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bonus-malus relativities and premiums for n1 = 0..=n1-max.
    PremiumTable {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'J', default_value_t = 1.0, allow_negative_numbers = true)]
        j: f64,
        #[arg(long, default_value_t = 10)]
        n1_max: u64,
        #[arg(long, value_enum, default_value = "expectation")]
        principle: Principle,
        /// Loading factor for the variance and stddev principles.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        loading: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Separation of neighbouring claim classes.
    Resolution {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "J1", default_value_t = 1.0, allow_negative_numbers = true)]
        j1: f64,
        #[arg(long = "J2", default_value_t = 1.0, allow_negative_numbers = true)]
        j2: f64,
        #[arg(long, default_value_t = 10)]
        n1_max: u64,
        #[arg(long, env = "CLAIMRATE_RESOLUTION_THRESHOLD", default_value_t = 1.0)]
        threshold: f64,
        /// Average the predictive variances at n1 and n1+1.
        #[arg(long)]
        pooled: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Moments and log-log tail slopes for inverse-gamma parameter rows (CSV columns m,s).
    TailScan {
        #[arg(long)]
        input: PathBuf,
        #[arg(short = 'J', default_value_t = 1.0, allow_negative_numbers = true)]
        j: f64,
        /// Log claim counts at which to take slopes.
        #[arg(long = "x", default_values_t = [10.0, 13.0])]
        x: Vec<f64>,
        #[arg(long, env = "CLAIMRATE_SLOPE_DELTA", default_value_t = DEFAULT_SLOPE_DELTA)]
        delta: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Log-log pmf series of an inverse-gamma model and a gamma model, tagged by model.
    Figure1 {
        #[arg(short = 'm', default_value_t = 0.0011)]
        m: f64,
        #[arg(short = 's', default_value_t = 2.1)]
        s: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 100.0)]
        beta: f64,
        #[arg(short = 'J', default_value_t = 1.0)]
        j: f64,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 13.0)]
        x_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fit mixing parameters to claim records (CSV: policy_id,exposure_years,claim_count).
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, visible_alias = "family", value_parser = parse_family)]
        model: Family,
        #[arg(long, value_enum, default_value = "mle")]
        method: FitMethodArg,
        #[arg(long, env = "CLAIMRATE_MLE_MAX_EVALS", default_value_t = 10_000)]
        max_evals: usize,
        #[arg(long, env = "CLAIMRATE_MLE_TOL", default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Simulate a portfolio of claim records.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'J', default_value_t = 1.0, allow_negative_numbers = true)]
        j: f64,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pearson chi-square of claim records against a model.
    Gof {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of parameters that were fitted on these records.
        #[arg(long, default_value_t = 0)]
        fitted: usize,
        /// Emit the merged bins instead of the summary row.
        #[arg(long)]
        bins: bool,
        #[arg(long, default_value_t = 0.999)]
        level: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Core(Error::NonConvergence(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn exposure(years: f64) -> Result<Exposure, CliError> {
    Ok(Exposure::new(years)?)
}

fn moment_cell(m: Moment) -> Cell {
    Cell::Num(m.as_f64())
}

fn read_records(path: &Path) -> Result<Vec<ClaimRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    let mut records = Vec::new();
    for (line, row) in reader.deserialize::<ClaimRecord>().enumerate() {
        let r =
            row.map_err(|e| CliError::Core(Error::Domain(format!("record {}: {e}", line + 1))))?;
        records.push(ClaimRecord::new(
            r.policy_id,
            r.exposure_years,
            r.claim_count,
        )?);
    }
    if records.is_empty() {
        return Err(CliError::Core(Error::Domain(
            "no claim records in input".into(),
        )));
    }
    Ok(records)
}

fn read_param_rows(path: &Path) -> Result<Vec<InvGammaMixParams>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Io(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| {
                CliError::Core(Error::Domain(format!(
                    "parameter file lacks column '{name}'"
                )))
            })
    };
    let (im, is) = (col("m")?, col("s")?);
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Core(Error::Domain(e.to_string())))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Core(Error::Domain(format!("row {}: {e}", line + 1))))
        };
        rows.push(InvGammaMixParams::new(field(im)?, field(is)?)?);
    }
    Ok(rows)
}

fn param_names(family: Family) -> [&'static str; 2] {
    match family {
        Family::Gamma => ["alpha", "beta"],
        Family::InvGamma => ["m", "s"],
    }
}

fn fit_table(fit: &FitResult) -> Table {
    let [a, b] = param_names(fit.family());
    let mut t = Table::new(&[
        "family".to_string(),
        "method".to_string(),
        a.to_string(),
        b.to_string(),
        format!("se_{a}"),
        format!("se_{b}"),
        "log_likelihood".to_string(),
        "boundary".to_string(),
        "evaluations".to_string(),
    ]);
    let (pa, pb) = fit.params.values();
    let method = match fit.method {
        claimrate_core::estimation::FitMethod::Moments => "moments",
        claimrate_core::estimation::FitMethod::Mle => "mle",
    };
    t.push(vec![
        fit.family().to_string().into(),
        method.into(),
        pa.into(),
        pb.into(),
        fit.std_errors.map(|s| s[0]).into(),
        fit.std_errors.map(|s| s[1]).into(),
        fit.log_likelihood.into(),
        fit.boundary.into(),
        (fit.evaluations as u64).into(),
    ]);
    t
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Pmf {
            model,
            j,
            n_max,
            out,
        } => {
            let params = model.params()?;
            let j = exposure(j)?;
            let mut t = Table::new(&["n", "P", "logP"]);
            for n in 0..=n_max {
                let lp = params.log_pmf(j, n)?;
                t.push(vec![n.into(), lp.exp().into(), lp.into()]);
            }
            emit(&t, &out)?;
        }
        Command::Posterior { model, j, n, out } => {
            let params = model.params()?;
            let j = exposure(j)?;
            match params {
                MixParams::Gamma(p) => {
                    let pm = poisson_gamma::posterior_moments(p, j, n);
                    let mut t = Table::new(&["n", "mean", "variance", "credibility_weight"]);
                    t.push(vec![
                        n.into(),
                        pm.mean.into(),
                        pm.variance.into(),
                        pm.credibility_weight.into(),
                    ]);
                    emit(&t, &out)?;
                }
                MixParams::InvGamma(_) => {
                    let pm = params.posterior_moments(j, n)?;
                    let mut t = Table::new(&["n", "mean", "variance"]);
                    t.push(vec![n.into(), pm.mean.into(), pm.variance.into()]);
                    emit(&t, &out)?;
                }
            }
        }
        Command::Predict {
            model,
            j1,
            j2,
            n1,
            n2_max,
            moments,
            out,
        } => {
            let params = model.params()?;
            let (j1, j2) = (exposure(j1)?, exposure(j2)?);
            let t = if moments {
                let pm = params.predictive_moments(j1, n1, j2)?;
                let mut t = Table::new(&["n1", "mean", "variance"]);
                t.push(vec![
                    n1.into(),
                    moment_cell(pm.mean),
                    moment_cell(pm.variance),
                ]);
                t
            } else {
                let mut t = Table::new(&["n2", "P", "logP"]);
                for n2 in 0..=n2_max {
                    let lp = params.predictive_log_pmf(j1, n1, j2, n2)?;
                    t.push(vec![n2.into(), lp.exp().into(), lp.into()]);
                }
                t
            };
            emit(&t, &out)?;
        }
        Command::PremiumTable {
            model,
            j,
            n1_max,
            principle,
            loading,
            out,
        } => {
            let params = model.params()?;
            let principle = match principle {
                Principle::Expectation => PremiumPrinciple::Expectation,
                Principle::Variance => PremiumPrinciple::variance_loaded(loading)?,
                Principle::Stddev => PremiumPrinciple::stddev_loaded(loading)?,
            };
            let rows = bms_table(&params, exposure(j)?, n1_max, principle)?;
            let mut t = Table::new(&[
                "n1",
                "posterior_mean",
                "posterior_variance",
                "relativity",
                "premium",
            ]);
            for r in rows {
                t.push(vec![
                    r.n1.into(),
                    r.posterior_mean.into(),
                    r.posterior_variance.into(),
                    r.relativity.into(),
                    r.premium.into(),
                ]);
            }
            emit(&t, &out)?;
        }
        Command::Resolution {
            model,
            j1,
            j2,
            n1_max,
            threshold,
            pooled,
            out,
        } => {
            let params = model.params()?;
            let mode = if pooled {
                VarianceMode::Pooled
            } else {
                VarianceMode::Lower
            };
            let profile = resolution_profile(
                &params,
                exposure(j1)?,
                exposure(j2)?,
                n1_max,
                threshold,
                mode,
            )?;
            let mut t = Table::new(&["n1", "resolution", "high_resolution"]);
            for r in &profile.reports {
                t.push(vec![
                    r.n1.into(),
                    r.resolution.into(),
                    r.high_resolution.into(),
                ]);
            }
            emit(&t, &out)?;
            match profile.largest_resolved_n1 {
                Some(n) => eprintln!("largest n1 with resolution >= {threshold}: {n}"),
                None => eprintln!("no n1 in 0..={n1_max} reaches resolution {threshold}"),
            }
        }
        Command::TailScan {
            input,
            j,
            x,
            delta,
            out,
        } => {
            let rows = read_param_rows(&input)?;
            let results = tail_scan(&rows, exposure(j)?, &x, delta);
            let mut headers: Vec<String> = ["m", "s", "mean", "variance"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            headers.extend(
                x.iter()
                    .map(|x| format!("slope_x{}", output::format_num(*x))),
            );
            let mut t = Table::new(&headers);
            for r in results {
                let r = r?;
                let mut row: Vec<Cell> = vec![
                    r.params.m().into(),
                    r.params.s().into(),
                    moment_cell(r.mean),
                    moment_cell(r.variance),
                ];
                row.extend(r.slopes.iter().map(|&(_, s)| Cell::Num(s)));
                t.push(row);
            }
            emit(&t, &out)?;
        }
        Command::Figure1 {
            m,
            s,
            alpha,
            beta,
            j,
            x_min,
            x_max,
            points,
            out,
        } => {
            let pig = InvGammaMixParams::new(m, s)?;
            let nb = GammaMixParams::new(alpha, beta)?;
            if !(x_min.is_finite()
                && x_max.is_finite()
                && x_min >= 0.0
                && x_max > x_min
                && points >= 2)
            {
                return Err(CliError::Usage(
                    "need 0 <= x-min < x-max and at least 2 points".into(),
                ));
            }
            let series = figure_series(pig, nb, exposure(j)?, &log_grid(x_min, x_max, points))?;
            let mut t = Table::new(&["model", "x", "y"]);
            for (tag, pts) in [("invgamma", &series.inv_gamma), ("gamma", &series.gamma)] {
                for p in pts {
                    t.push(vec![tag.into(), p.x.into(), p.y.into()]);
                }
            }
            emit(&t, &out)?;
        }
        Command::Fit {
            input,
            model,
            method,
            max_evals,
            tol,
            out,
        } => {
            let records = read_records(&input)?;
            let fit = match method {
                FitMethodArg::Moments => fit_moments(model, &records)?,
                FitMethodArg::Mle => {
                    let mut cfg = MleConfig::default();
                    cfg.simplex.max_evals = max_evals;
                    cfg.simplex.diameter_tol = tol;
                    fit_mle(model, &records, &cfg)?
                }
            };
            if fit.boundary {
                eprintln!("warning: optimum lies on a parameter boundary; the data do not identify both parameters");
            }
            emit(&fit_table(&fit), &out)?;
        }
        Command::Simulate {
            model,
            j,
            size,
            seed,
            out,
        } => {
            let config = SimConfig::new(model.params()?, exposure(j)?, size, seed)?;
            let mut t = Table::new(&["policy_id", "exposure_years", "claim_count"]);
            for r in sample_portfolio(&config) {
                t.push(vec![
                    r.policy_id.into(),
                    r.exposure_years.into(),
                    r.claim_count.into(),
                ]);
            }
            emit(&t, &out)?;
        }
        Command::Gof {
            input,
            model,
            fitted,
            bins,
            level,
            out,
        } => {
            if !(level > 0.0 && level < 1.0) {
                return Err(CliError::Usage("--level must lie in (0, 1)".into()));
            }
            let records = read_records(&input)?;
            let params = model.params()?;
            let j = exposure(records[0].exposure_years)?;
            let g = goodness_of_fit(
                &records,
                &AtExposure {
                    model: params,
                    exposure: j,
                },
                fitted,
            )?;
            let t = if bins {
                let mut t = Table::new(&["lo", "hi", "observed", "expected"]);
                for b in &g.bins {
                    let hi = b.hi.map_or(Cell::Text("infinity".into()), Cell::Int);
                    t.push(vec![b.lo.into(), hi, b.observed.into(), b.expected.into()]);
                }
                t
            } else {
                let mut t = Table::new(&[
                    "chi_square",
                    "degrees_of_freedom",
                    "p_value",
                    "bins",
                    "rejected",
                ]);
                t.push(vec![
                    g.chi_square.into(),
                    (g.degrees_of_freedom as u64).into(),
                    g.p_value.into(),
                    (g.bins.len() as u64).into(),
                    g.rejects_at(level).into(),
                ]);
                t
            };
            emit(&t, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("claimrate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
