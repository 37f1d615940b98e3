//! Monte Carlo harness: simulate continuous paths once per rate, resample
//! them on every grid size, run the selected estimators and aggregate
//! bias, √MSE, extremes and validity.
//!
//! Replication `r` of the `k`-th rate draws from the ChaCha stream
//! `(k << 32) | r` of the master seed, and results are gathered in
//! replication order, so the output does not depend on the worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    lambda_argmax, lambda_dot, lambda_least_squares, lambda_oracle_result, lambda_score_root,
    sigma_hat, EstimateResult, EstimatorOptions, LogReturns, Method,
};
use crate::likelihood::decompose;
use crate::sim::{replication_rng, simulate_path, to_geometric, GeometricParams, ModelParams};

/// Tolerance used when merging per-`n` volatility rows that coincide.
const SAME_ACROSS_N_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub lambda_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub horizon: f64,
    pub v: f64,
    pub replications: usize,
    pub seed: u64,
    pub geometric: Option<GeometricParams>,
    pub options: EstimatorOptions,
    pub methods: Vec<Method>,
}

impl ExperimentSpec {
    /// The grid used throughout the published tables: `T = 500`, `v = 1`,
    /// `n ∈ {50, 100, 500, 1000}`.
    pub fn table_defaults(lambda_grid: Vec<f64>, replications: usize, seed: u64) -> Self {
        Self {
            lambda_grid,
            n_grid: vec![50, 100, 500, 1000],
            horizon: 500.0,
            v: 1.0,
            replications,
            seed,
            geometric: None,
            options: EstimatorOptions::default(),
            methods: vec![Method::ScoreRoot, Method::LeastSquares],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() || self.n_grid.is_empty() {
            return Err(Error::Config("lambda and n grids must be non-empty".into()));
        }
        if let Some(l) = self
            .lambda_grid
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::Config(format!(
                "lambda grid entries must be positive, got {l}"
            )));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::Config("n grid entries must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Config(format!("v must be positive, got {}", self.v)));
        }
        if self.replications == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.lambda_grid.len() > u32::MAX as usize || self.replications > u32::MAX as usize {
            return Err(Error::Config("grid or replication count too large".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        if self.methods.iter().any(|m| m.is_geometric()) {
            let geo = self.geometric.ok_or_else(|| {
                Error::Config("sigma_hat and lambda_dot need --mu, --sigma and --s0".into())
            })?;
            GeometricParams::new(geo.mu, geo.sigma, geo.s0)?;
            let log_range = geo.s0.ln().abs()
                + geo.alpha().abs() * self.horizon
                + geo.sigma * self.v * self.horizon;
            if log_range > 700.0 {
                return Err(Error::Config(
                    "geometric parameters let prices overflow over the horizon".into(),
                ));
            }
        }
        self.options.validate()
    }

    fn stream(lambda_index: usize, rep: usize) -> u64 {
        ((lambda_index as u64) << 32) | rep as u64
    }
}

/// Aggregate of one estimator over the valid replications of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub method: Method,
    pub lambda: f64,
    /// Grid sizes this row covers (several when the estimates coincide).
    pub n: Vec<usize>,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pct_valid: f64,
    #[serde(rename = "N")]
    pub n_used: usize,
    /// Standard error of the bias (sample sd of the estimates over `√N`).
    pub mc_se: Option<f64>,
    /// Delta-method standard error of the √MSE.
    #[serde(skip)]
    pub rmse_se: Option<f64>,
}

/// Bias, √MSE, extremes and validity of `estimates` against `truth`.
///
/// Only valid results enter the statistics; with none, the statistics are
/// `None` and `pct_valid` is 0.
pub fn summarize(estimates: &[EstimateResult], truth: f64) -> Result<McSummary> {
    let first = estimates
        .first()
        .ok_or_else(|| Error::Config("cannot summarize an empty list".into()))?;
    let valid: Vec<f64> = estimates
        .iter()
        .filter(|e| e.valid)
        .map(|e| e.estimate)
        .collect();
    let total = estimates.len();
    let k = valid.len();
    let pct_valid = 100.0 * k as f64 / total as f64;
    let mut out = McSummary {
        method: first.method,
        lambda: truth,
        n: Vec::new(),
        bias: None,
        rmse: None,
        min: None,
        max: None,
        pct_valid,
        n_used: k,
        mc_se: None,
        rmse_se: None,
    };
    if k == 0 {
        return Ok(out);
    }
    let kf = k as f64;
    let mean = valid.iter().sum::<f64>() / kf;
    let mse = valid.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / kf;
    let rmse = mse.sqrt();
    out.bias = Some(mean - truth);
    out.rmse = Some(rmse);
    out.min = Some(valid.iter().copied().fold(f64::INFINITY, f64::min));
    out.max = Some(valid.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if k >= 2 {
        let var = valid.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (kf - 1.0);
        out.mc_se = Some((var / kf).sqrt());
        let sq_var = valid
            .iter()
            .map(|e| {
                let s = (e - truth) * (e - truth) - mse;
                s * s
            })
            .sum::<f64>()
            / (kf - 1.0);
        out.rmse_se = Some(if rmse > 0.0 {
            (sq_var / kf).sqrt() / (2.0 * rmse)
        } else {
            0.0
        });
    }
    Ok(out)
}

/// One estimate of one replication, as written to the replication dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub lambda: f64,
    pub n: usize,
    pub method: Method,
    pub estimate: f64,
    pub valid: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub summaries: Vec<McSummary>,
    pub replications: Vec<ReplicationRecord>,
}

/// `[n index][method index]`
type RepEstimates = Vec<Vec<EstimateResult>>;

fn run_replication(spec: &ExperimentSpec, lambda_index: usize, rep: usize) -> Result<RepEstimates> {
    let lambda = spec.lambda_grid[lambda_index];
    let mut params = ModelParams::new(lambda, spec.v)?;
    if let Some(geo) = spec.geometric {
        params = params.with_geometric(geo);
    }
    let mut rng = replication_rng(spec.seed, ExperimentSpec::stream(lambda_index, rep));
    let path = simulate_path(&params, spec.horizon, &mut rng)?;
    let opts = &spec.options;
    let needs_decomp = spec
        .methods
        .iter()
        .any(|m| matches!(m, Method::ScoreRoot | Method::Argmax));
    let needs_geo = spec.methods.iter().any(|m| m.is_geometric());

    let mut out = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let sample = path.sample_on_grid(n)?;
        let decomp = if needs_decomp {
            Some(decompose(&sample)?)
        } else {
            None
        };
        let returns = if needs_geo {
            let geo = to_geometric(&sample, &params)?;
            Some(LogReturns::from_sample(&geo)?)
        } else {
            None
        };
        let sigma = returns.as_ref().map(sigma_hat);
        let mut row = Vec::with_capacity(spec.methods.len());
        for &method in &spec.methods {
            let est = match method {
                Method::ScoreRoot => lambda_score_root(decomp.as_ref().expect("decomposed"), opts)?,
                Method::Argmax => lambda_argmax(decomp.as_ref().expect("decomposed"), opts)?,
                Method::LeastSquares => lambda_least_squares(&sample, opts)?,
                Method::Oracle => lambda_oracle_result(&path),
                Method::SigmaHat => sigma.expect("geometric sample"),
                Method::LambdaDot => lambda_dot(
                    returns.as_ref().expect("geometric sample"),
                    sigma.as_ref().expect("geometric sample"),
                    spec.v,
                    opts,
                )?,
            };
            row.push(est);
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_all(
    spec: &ExperimentSpec,
    lambda_index: usize,
    jobs: Option<usize>,
) -> Result<Vec<RepEstimates>> {
    use rayon::prelude::*;
    let work = || {
        (0..spec.replications)
            .into_par_iter()
            .map(|rep| run_replication(spec, lambda_index, rep))
            .collect::<Result<Vec<_>>>()
    };
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_all(
    spec: &ExperimentSpec,
    lambda_index: usize,
    _jobs: Option<usize>,
) -> Result<Vec<RepEstimates>> {
    (0..spec.replications)
        .map(|rep| run_replication(spec, lambda_index, rep))
        .collect()
}

/// Runs the experiment. `jobs` bounds the worker count (`None`: all cores);
/// results are identical for every value.
pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentOutput> {
    run_experiment_with(spec, jobs, false)
}

/// As [`run_experiment`], optionally keeping every replication-level estimate.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    jobs: Option<usize>,
    keep_replications: bool,
) -> Result<ExperimentOutput> {
    spec.validate()?;
    let mut summaries = Vec::new();
    let mut replications = Vec::new();
    for (li, &lambda) in spec.lambda_grid.iter().enumerate() {
        let results = run_all(spec, li, jobs)?;
        for (mi, &method) in spec.methods.iter().enumerate() {
            let truth = match method {
                Method::SigmaHat => spec.geometric.expect("validated").sigma,
                _ => lambda,
            };
            let mut rows = Vec::with_capacity(spec.n_grid.len());
            for (ni, &n) in spec.n_grid.iter().enumerate() {
                let column: Vec<EstimateResult> = results.iter().map(|r| r[ni][mi]).collect();
                let mut s = summarize(&column, truth)?;
                s.lambda = lambda;
                s.n = vec![n];
                rows.push(s);
            }
            if matches!(method, Method::SigmaHat | Method::Oracle) {
                rows = merge_identical_rows(rows);
            }
            summaries.extend(rows);
        }
        if keep_replications {
            for (rep, r) in results.iter().enumerate() {
                for (ni, &n) in spec.n_grid.iter().enumerate() {
                    for (mi, &method) in spec.methods.iter().enumerate() {
                        let e = r[ni][mi];
                        replications.push(ReplicationRecord {
                            rep,
                            lambda,
                            n,
                            method,
                            estimate: e.estimate,
                            valid: e.valid,
                            converged: e.converged,
                        });
                    }
                }
            }
        }
    }
    Ok(ExperimentOutput {
        summaries,
        replications,
    })
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= SAME_ACROSS_N_TOL * (1.0 + x.abs()),
        (None, None) => true,
        _ => false,
    }
}

/// Collapses rows of an estimator that does not depend on `n` into one row
/// listing every grid size, when their statistics agree.
fn merge_identical_rows(rows: Vec<McSummary>) -> Vec<McSummary> {
    let Some(first) = rows.first() else {
        return rows;
    };
    let all_same = rows.iter().all(|r| {
        r.n_used == first.n_used
            && close(r.bias, first.bias)
            && close(r.rmse, first.rmse)
            && close(r.min, first.min)
            && close(r.max, first.max)
    });
    if !all_same {
        return rows;
    }
    let mut merged = first.clone();
    merged.n = rows.iter().flat_map(|r| r.n.iter().copied()).collect();
    vec![merged]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(estimate: f64, valid: bool) -> EstimateResult {
        EstimateResult {
            estimate,
            method: Method::ScoreRoot,
            converged: true,
            valid,
            iterations: 0,
            bounds: (0.0, 1.0),
        }
    }

    #[test]
    fn summary_arithmetic() {
        let s = summarize(&[est(0.4, true), est(0.6, true)], 0.5).unwrap();
        assert!(s.bias.unwrap().abs() < 1e-15);
        assert!((s.rmse.unwrap() - 0.1).abs() < 1e-15);
        assert_eq!((s.min, s.max), (Some(0.4), Some(0.6)));
        assert_eq!(s.pct_valid, 100.0);

        let s = summarize(&[est(0.5, true); 3], 0.5).unwrap();
        assert_eq!((s.bias, s.rmse), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn summary_single_and_invalid() {
        let s = summarize(&[est(0.7, true)], 0.5).unwrap();
        assert!((s.bias.unwrap() - 0.2).abs() < 1e-15);
        assert!((s.rmse.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(s.min, s.max);
        assert_eq!(s.mc_se, None);

        let s = summarize(&[est(0.0, false), est(0.0, false)], 0.5).unwrap();
        assert_eq!(s.pct_valid, 0.0);
        assert_eq!((s.bias, s.rmse, s.n_used), (None, None, 0));

        let s = summarize(&[est(0.3, true), est(0.0, false)], 0.5).unwrap();
        assert_eq!(s.pct_valid, 50.0);
        assert!(summarize(&[], 0.5).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec::table_defaults(vec![0.5], 10, 1);
        assert!(spec.validate().is_ok());
        spec.methods.push(Method::SigmaHat);
        assert!(spec.validate().is_err());
        spec.geometric = Some(GeometricParams {
            mu: 0.2,
            sigma: 0.5,
            s0: 1.0,
        });
        assert!(spec.validate().is_ok());
        spec.n_grid = vec![];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_replication_shape() {
        let mut spec = ExperimentSpec::table_defaults(vec![0.1], 1, 7);
        spec.n_grid = vec![50];
        spec.methods = vec![Method::ScoreRoot];
        let out = run_experiment_with(&spec, Some(1), true).unwrap();
        assert_eq!(out.summaries.len(), 1);
        let s = &out.summaries[0];
        let e = out.replications[0].estimate;
        assert!((s.bias.unwrap() - (e - 0.1)).abs() < 1e-15);
        assert_eq!(s.min, Some(e));
        assert_eq!(s.max, Some(e));
    }
}
