//! File formats: grid paths (CSV `t,x[,s]` or JSON), Monte Carlo summaries
//! (CSV/JSON/text table) and the replication dump.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimateResult, Method};
use crate::montecarlo::{McSummary, ReplicationRecord};
use crate::sim::{GeometricGridSample, GridSample};

pub const SUMMARY_HEADER: &str = "method,lambda,n,bias,rmse,min,max,pct_valid,N,mc_se";
pub const REPLICATION_HEADER: &str = "rep,lambda,n,method,estimate,valid,converged";

/// Relative tolerance for the equidistance check when reading a CSV grid.
const GRID_TOL: f64 = 1e-9;

/// Full-precision float: 17 significant digits, lossless through parsing.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Grid observations as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub delta: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

impl PathFile {
    pub fn from_samples(sample: &GridSample, geo: Option<&GeometricGridSample>) -> Self {
        Self {
            delta: sample.delta(),
            n: sample.n(),
            v: Some(sample.v()),
            values: sample.values().to_vec(),
            prices: geo.map(|g| g.prices().to_vec()),
        }
    }

    /// Grid sample with speed `v` (falls back to the stored speed).
    pub fn grid_sample(&self, v: Option<f64>) -> Result<GridSample> {
        let v = v
            .or(self.v)
            .ok_or_else(|| Error::Config("speed v unknown: pass --v or --estimate-v".into()))?;
        GridSample::new(self.values.clone(), self.delta, v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.n + 1));
        out.push_str(if self.prices.is_some() {
            "t,x,s\n"
        } else {
            "t,x\n"
        });
        let horizon = self.n as f64 * self.delta;
        for (i, x) in self.values.iter().enumerate() {
            let t = if i == self.n {
                horizon
            } else {
                i as f64 * horizon / self.n as f64
            };
            let _ = write!(out, "{},{}", full(t), full(*x));
            if let Some(p) = &self.prices {
                let _ = write!(out, ",{}", full(p[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PathFile = serde_json::from_str(text)?;
        if file.values.len() != file.n + 1 {
            return Err(Error::Data(format!(
                "expected n + 1 = {} values, found {}",
                file.n + 1,
                file.values.len()
            )));
        }
        if let Some(p) = &file.prices {
            if p.len() != file.values.len() {
                return Err(Error::Data("prices and values differ in length".into()));
            }
        }
        Ok(file)
    }

    /// Parses the `t,x` / `t,x,s` CSV layout. `Δ` is recovered as `t_n / n`
    /// and every `t_i` must match `iΔ`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty path file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let with_prices = match cols.as_slice() {
            ["t", "x"] => false,
            ["t", "x", "s"] => true,
            _ => {
                return Err(Error::Data(format!(
                    "unexpected header `{header}`, expected `t,x` or `t,x,s`"
                )))
            }
        };
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut prices = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Data(format!(
                    "row {row}: expected {} fields, found {}",
                    cols.len(),
                    fields.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Data(format!("row {row}: cannot parse `{s}`: {e}")))
            };
            times.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
            if with_prices {
                prices.push(parse(fields[2])?);
            }
        }
        if values.len() < 2 {
            return Err(Error::Data("a path needs at least two rows".into()));
        }
        let n = values.len() - 1;
        let delta = times[n] / n as f64;
        if !(delta > 0.0) {
            return Err(Error::Data("time column must increase".into()));
        }
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * delta).abs() > GRID_TOL * times[n] {
                return Err(Error::Data(format!(
                    "row {i}: t = {t} is not on the grid iΔ"
                )));
            }
        }
        Ok(Self {
            delta,
            n,
            v: None,
            values,
            prices: with_prices.then_some(prices),
        })
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn n_label(n: &[usize], sep: &str) -> String {
    n.iter().map(usize::to_string).collect::<Vec<_>>().join(sep)
}

pub fn summaries_to_csv(rows: &[McSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.lambda,
            n_label(&r.n, ";"),
            opt(r.bias),
            opt(r.rmse),
            opt(r.min),
            opt(r.max),
            r.pct_valid,
            r.n_used,
            opt(r.mc_se)
        );
    }
    out
}

pub fn summaries_to_json(rows: &[McSummary]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn replications_to_csv(rows: &[ReplicationRecord]) -> String {
    let mut out = String::from(REPLICATION_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rep, r.lambda, r.n, r.method, r.estimate, r.valid, r.converged
        );
    }
    out
}

fn method_title(m: Method) -> &'static str {
    match m {
        Method::ScoreRoot => "score root (lambda hat)",
        Method::Argmax => "likelihood argmax (lambda bar)",
        Method::LeastSquares => "least squares (lambda tilde)",
        Method::SigmaHat => "volatility (sigma hat)",
        Method::LambdaDot => "log-return variance (lambda dot)",
        Method::Oracle => "continuous observation N(T)/T",
    }
}

fn fixed(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) => {
            let s = format!("{v:.digits$}");
            // print -0.000 for small negative values, as tables usually do
            if v < 0.0 && !s.starts_with('-') {
                format!("-{s}")
            } else {
                s
            }
        }
        None => "NA".into(),
    }
}

/// Renders summaries as one text table per method, rows grouped by rate.
pub fn summaries_to_table(rows: &[McSummary]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = String::new();
    for m in methods {
        let _ = writeln!(out, "{}", method_title(m));
        let _ = writeln!(
            out,
            "{:>6} | {:>7} {:>7} {:>6} {:>6} | {:>7} | n",
            "lambda", "bias", "rmse", "min", "max", "% valid"
        );
        let _ = writeln!(out, "{}", "-".repeat(64));
        let mut last_lambda = None;
        for r in rows.iter().filter(|r| r.method == m) {
            let lambda = if last_lambda == Some(r.lambda) {
                String::new()
            } else {
                format!("{:.2}", r.lambda)
            };
            last_lambda = Some(r.lambda);
            let _ = writeln!(
                out,
                "{:>6} | {:>7} {:>7} {:>6} {:>6} | {:>7.0} | {}",
                lambda,
                fixed(r.bias, 3),
                fixed(r.rmse, 3),
                fixed(r.min, 2),
                fixed(r.max, 2),
                r.pct_valid,
                n_label(&r.n, ", ")
            );
        }
        out.push('\n');
    }
    out
}

/// One record per estimator, as reported by the `estimate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub method: Method,
    pub estimate: f64,
    pub valid: bool,
    pub converged: bool,
    pub iterations: usize,
    pub lower: f64,
    pub upper: f64,
}

impl From<&EstimateResult> for EstimateRecord {
    fn from(e: &EstimateResult) -> Self {
        Self {
            method: e.method,
            estimate: e.estimate,
            valid: e.valid,
            converged: e.converged,
            iterations: e.iterations,
            lower: e.bounds.0,
            upper: e.bounds.1,
        }
    }
}

pub const ESTIMATE_HEADER: &str = "method,estimate,valid,converged,iterations,lower,upper";

pub fn estimates_to_csv(rows: &[EstimateRecord]) -> String {
    let mut out = String::from(ESTIMATE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method, r.estimate, r.valid, r.converged, r.iterations, r.lower, r.upper
        );
    }
    out
}

pub fn estimates_to_json(rows: &[EstimateRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn estimates_to_table(rows: &[EstimateRecord]) -> String {
    let mut out = format!(
        "{:<14} {:>14} {:>6} {:>9} {:>6}\n",
        "method", "estimate", "valid", "converged", "iters"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14} {:>14.8} {:>6} {:>9} {:>6}",
            r.method.as_str(),
            r.estimate,
            r.valid,
            r.converged,
            r.iterations
        );
    }
    out
}
