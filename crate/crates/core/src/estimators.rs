//! Point estimators for the switching rate `λ`, the speed `v` and, for the
//! geometric process, the volatility `σ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, score, IncrementDecomposition};
use crate::sim::{variance_shape, GeometricGridSample, GridSample, TelegraphPath};
use crate::solve::{find_root, minimize_bounded};

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ScoreRoot,
    Argmax,
    LeastSquares,
    SigmaHat,
    LambdaDot,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ScoreRoot,
        Method::Argmax,
        Method::LeastSquares,
        Method::SigmaHat,
        Method::LambdaDot,
        Method::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ScoreRoot => "score_root",
            Method::Argmax => "argmax",
            Method::LeastSquares => "least_squares",
            Method::SigmaHat => "sigma_hat",
            Method::LambdaDot => "lambda_dot",
            Method::Oracle => "oracle",
        }
    }

    /// Needs log-returns of the geometric process.
    pub fn is_geometric(self) -> bool {
        matches!(self, Method::SigmaHat | Method::LambdaDot)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Outcome of one estimator on one sample.
///
/// When `valid` is false the estimate is the sentinel 0: the estimator does
/// not exist for this sample (no switches observed, moment target outside
/// the model range, or `μ <= Ȳ_n/Δ` for the volatility).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub method: Method,
    pub converged: bool,
    pub valid: bool,
    pub iterations: usize,
    pub bounds: (f64, f64),
}

impl EstimateResult {
    fn invalid(method: Method, bounds: (f64, f64)) -> Self {
        Self {
            estimate: 0.0,
            method,
            converged: true,
            valid: false,
            iterations: 0,
            bounds,
        }
    }
}

/// Search brackets, caps and tolerances shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// Lower end of the initial bracket for the score root and argmax.
    pub lambda_lo: f64,
    /// Upper end of the initial bracket, doubled until the sign changes.
    pub lambda_hi: f64,
    /// Hard limit for the bracket expansion.
    pub lambda_max: f64,
    /// Search cap for the least-squares estimator.
    pub lambda_cap: f64,
    /// Search cap for the log-return variance estimator.
    pub lambda_dot_cap: f64,
    /// Absolute tolerance on `λ`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            lambda_lo: 1e-8,
            lambda_hi: 1.0,
            lambda_max: 1e4,
            lambda_cap: 3.0,
            lambda_dot_cap: 10.0,
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

impl EstimatorOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_lo", self.lambda_lo),
            ("lambda_hi", self.lambda_hi),
            ("lambda_max", self.lambda_max),
            ("lambda_cap", self.lambda_cap),
            ("lambda_dot_cap", self.lambda_dot_cap),
            ("tol", self.tol),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.lambda_lo < self.lambda_hi && self.lambda_hi <= self.lambda_max) {
            return Err(Error::Config(
                "need lambda_lo < lambda_hi <= lambda_max".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Root of the score function. The score tends to `+∞` as `λ → 0⁺` when at
/// least one switch is observed and has a single sign change, so the upper
/// end of the bracket is doubled until the score turns negative.
pub fn lambda_score_root(
    decomp: &IncrementDecomposition,
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    let method = Method::ScoreRoot;
    if decomp.n_plus() == 0 {
        return Ok(EstimateResult::invalid(method, (0.0, opts.lambda_lo)));
    }
    let f = |l: f64| score(decomp, l).expect("lambda is positive");
    let mut lo = opts.lambda_lo;
    let mut hi = opts.lambda_hi;
    let mut expansions = 0;
    while f(hi) > 0.0 {
        if hi >= opts.lambda_max {
            return Ok(EstimateResult {
                estimate: opts.lambda_max,
                method,
                converged: false,
                valid: true,
                iterations: expansions,
                bounds: (lo, opts.lambda_max),
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(opts.lambda_max);
        expansions += 1;
    }
    match find_root(f, lo, hi, opts.tol, opts.max_iter) {
        Some(out) => Ok(EstimateResult {
            estimate: out.x,
            method,
            converged: out.converged,
            valid: true,
            iterations: expansions + out.iterations,
            bounds: (lo, hi),
        }),
        // score(lo) <= 0 as well: the root lies below lambda_lo
        None => Ok(EstimateResult {
            estimate: lo,
            method,
            converged: false,
            valid: true,
            iterations: expansions,
            bounds: (lo, hi),
        }),
    }
}

/// Maximizer of the approximated log-likelihood by bounded golden-section
/// search. The bracket is grown by doubling until the likelihood decreases;
/// by concavity the maximizer then lies below the last point.
pub fn lambda_argmax(
    decomp: &IncrementDecomposition,
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    let method = Method::Argmax;
    if decomp.n_plus() == 0 {
        return Ok(EstimateResult::invalid(method, (0.0, opts.lambda_lo)));
    }
    let ll = |l: f64| log_likelihood(decomp, l).expect("lambda is positive");
    let lo = opts.lambda_lo;
    let mut hi = opts.lambda_hi;
    let mut f_hi = ll(hi);
    let mut expansions = 0;
    while hi < opts.lambda_max {
        let next = (2.0 * hi).min(opts.lambda_max);
        let f_next = ll(next);
        expansions += 1;
        hi = next;
        if f_next <= f_hi {
            break;
        }
        f_hi = f_next;
    }
    let out = minimize_bounded(|l| -ll(l), lo, hi, opts.tol, opts.max_iter);
    let at_cap = hi >= opts.lambda_max && (opts.lambda_max - out.x) <= opts.tol.max(1e-8 * hi);
    Ok(EstimateResult {
        estimate: out.x,
        method,
        converged: out.converged && !at_cap,
        valid: true,
        iterations: expansions + out.iterations,
        bounds: (lo, hi),
    })
}

/// Mean of the squared increments.
pub fn second_moment(sample: &GridSample) -> f64 {
    sample.increments().map(|d| d * d).sum::<f64>() / sample.n() as f64
}

/// `f(λ) = (v²/λ)(Δ - (1 - e^{-2λΔ}) / (2λ))`, the variance of `X(Δ)`.
pub fn increment_variance(lambda: f64, v: f64, delta: f64) -> f64 {
    v * v * delta * delta * variance_shape(2.0 * lambda * delta)
}

/// Solves `f(λ) = target` on `[0, cap]`; `f` decreases strictly from `v²Δ²`.
fn invert_increment_variance(
    target: f64,
    v: f64,
    delta: f64,
    cap: f64,
    method: Method,
    opts: &EstimatorOptions,
) -> EstimateResult {
    let bounds = (0.0, cap);
    if target >= v * v * delta * delta {
        return EstimateResult::invalid(method, bounds);
    }
    let h = |l: f64| increment_variance(l, v, delta) - target;
    if h(cap) > 0.0 {
        return EstimateResult {
            estimate: cap,
            method,
            converged: false,
            valid: true,
            iterations: 0,
            bounds,
        };
    }
    let out = find_root(h, 0.0, cap, opts.tol, opts.max_iter)
        .expect("h(0) > 0 >= h(cap) brackets the root");
    EstimateResult {
        estimate: out.x,
        method,
        converged: out.converged,
        valid: true,
        iterations: out.iterations,
        bounds,
    }
}

/// Least-squares estimator matching the mean squared increment to the model
/// variance of `X(Δ)`; the squared residual is zero at the solution.
pub fn lambda_least_squares(
    sample: &GridSample,
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    let m2 = second_moment(sample);
    if m2 == 0.0 {
        return Err(Error::Data(
            "all increments are zero, impossible for a telegraph path".into(),
        ));
    }
    Ok(invert_increment_variance(
        m2,
        sample.v(),
        sample.delta(),
        opts.lambda_cap,
        Method::LeastSquares,
        opts,
    ))
}

/// Log-returns `Y_i = log(S_i / S_{i-1})` together with the known drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReturns {
    values: Vec<f64>,
    delta: f64,
    mu: f64,
}

impl LogReturns {
    pub fn new(values: Vec<f64>, delta: f64, mu: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("no log-returns".into()));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite log-return at row {}",
                i + 1
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::Config(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { values, delta, mu })
    }

    /// Log-returns of a price sample, with drift `mu`.
    pub fn from_prices(prices: &[f64], delta: f64, mu: f64) -> Result<Self> {
        if let Some(i) = prices.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::Data(format!("price at row {i} must be positive")));
        }
        let values = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        Self::new(values, delta, mu)
    }

    pub fn from_sample(sample: &GeometricGridSample) -> Result<Self> {
        Self::from_prices(sample.prices(), sample.delta(), sample.params().mu)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `Ȳ_n`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    /// `s̄²_Y = (1/n) Σ (Y_i - Ȳ_n)²`.
    pub fn centered_second_moment(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / self.n() as f64
    }
}

/// `σ̂ = √(2(μ - Ȳ_n/Δ))`, defined only when `μ > Ȳ_n/Δ`.
pub fn sigma_hat(returns: &LogReturns) -> EstimateResult {
    let s2 = 2.0 * (returns.mu - returns.mean() / returns.delta);
    if s2 > 0.0 {
        EstimateResult {
            estimate: s2.sqrt(),
            method: Method::SigmaHat,
            converged: true,
            valid: true,
            iterations: 0,
            bounds: (0.0, f64::INFINITY),
        }
    } else {
        EstimateResult::invalid(Method::SigmaHat, (0.0, f64::INFINITY))
    }
}

/// Rate estimator from the variance of the log-returns: solves
/// `σ̂² f(λ) = s̄²_Y` given a volatility estimate and the speed `v`.
pub fn lambda_dot(
    returns: &LogReturns,
    sigma: &EstimateResult,
    v: f64,
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("v must be positive, got {v}")));
    }
    if !sigma.valid || sigma.estimate <= 0.0 {
        return Ok(EstimateResult::invalid(
            Method::LambdaDot,
            (0.0, opts.lambda_dot_cap),
        ));
    }
    let target = returns.centered_second_moment() / (sigma.estimate * sigma.estimate);
    Ok(invert_increment_variance(
        target,
        v,
        returns.delta,
        opts.lambda_dot_cap,
        Method::LambdaDot,
        opts,
    ))
}

/// Reconstructs the telegraph states from log-returns:
/// `Ẑ_i = (Y_i - Ȳ_n)/σ̂`, `X̂_i = Σ_{j<=i} Ẑ_j`, with `X̂_0 = 0`.
pub fn filter_states(returns: &LogReturns, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let mean = returns.mean();
    let mut states = Vec::with_capacity(returns.n() + 1);
    states.push(0.0);
    let mut acc = 0.0;
    for y in &returns.values {
        acc += (y - mean) / sigma;
        states.push(acc);
    }
    Ok(states)
}

/// Grid sample of the filtered states. Without a known speed, `v` is taken
/// as [`v_hat`] of the filtered increments.
pub fn filtered_sample(returns: &LogReturns, sigma: f64, v: Option<f64>) -> Result<GridSample> {
    let states = filter_states(returns, sigma)?;
    let delta = returns.delta;
    let v = match v {
        Some(v) => v,
        None => {
            let max_step = states
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max);
            max_step / delta
        }
    };
    GridSample::new(states, delta, v)
}

/// `max_i |X_i - X_{i-1}| / Δ`: equal to `v` as soon as one increment
/// contains no switch, strictly smaller otherwise.
pub fn v_hat(sample: &GridSample) -> f64 {
    sample.increments().map(f64::abs).fold(0.0, f64::max) / sample.delta()
}

/// `N(T)/T`, the estimator under continuous observation.
pub fn lambda_oracle(path: &TelegraphPath) -> f64 {
    path.event_count() as f64 / path.horizon()
}

/// Oracle wrapped as an [`EstimateResult`].
pub fn lambda_oracle_result(path: &TelegraphPath) -> EstimateResult {
    EstimateResult {
        estimate: lambda_oracle(path),
        method: Method::Oracle,
        converged: true,
        valid: true,
        iterations: 0,
        bounds: (0.0, f64::INFINITY),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Sign;

    #[test]
    fn no_switch_sentinels() {
        let p = TelegraphPath::new(Sign::Plus, vec![], 10.0, 1.0).unwrap();
        let g = p.sample_on_grid(10).unwrap();
        let d = crate::likelihood::decompose(&g).unwrap();
        let opts = EstimatorOptions::default();
        for r in [
            lambda_score_root(&d, &opts).unwrap(),
            lambda_argmax(&d, &opts).unwrap(),
        ] {
            assert_eq!(r.estimate, 0.0);
            assert!(!r.valid);
        }
        let ls = lambda_least_squares(&g, &opts).unwrap();
        assert_eq!((ls.estimate, ls.valid), (0.0, false));
        assert_eq!(v_hat(&g), 1.0);
        assert_eq!(lambda_oracle(&p), 0.0);
    }

    #[test]
    fn least_squares_round_trip() {
        let opts = EstimatorOptions::default();
        let m2 = increment_variance(1.0, 1.0, 1.0);
        let r = invert_increment_variance(m2, 1.0, 1.0, 3.0, Method::LeastSquares, &opts);
        assert!(r.valid && r.converged);
        assert!((r.estimate - 1.0).abs() < 1e-8);
    }

    #[test]
    fn least_squares_cap_and_degenerate() {
        let opts = EstimatorOptions::default();
        let m2 = increment_variance(5.0, 1.0, 1.0);
        let r = invert_increment_variance(m2, 1.0, 1.0, 3.0, Method::LeastSquares, &opts);
        assert_eq!((r.estimate, r.converged, r.valid), (3.0, false, true));
        let g = GridSample::new(vec![0.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        assert!(matches!(
            lambda_least_squares(&g, &opts),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn sigma_hat_at_zero_endpoint() {
        // Ȳ_n = αΔ exactly: σ̂ = √(2(μ - α)) = σ
        let (mu, sigma, delta) = (0.3, 0.5, 0.5);
        let alpha = mu - 0.5 * sigma * sigma;
        let y = vec![alpha * delta + 0.2, alpha * delta - 0.2];
        let r = sigma_hat(&LogReturns::new(y, delta, mu).unwrap());
        assert!(r.valid);
        assert!((r.estimate - sigma).abs() < 1e-14);
    }

    #[test]
    fn sigma_hat_invalid_when_drift_too_small() {
        let r = sigma_hat(&LogReturns::new(vec![0.5, 0.5], 1.0, 0.4).unwrap());
        assert!(!r.valid);
        let opts = EstimatorOptions::default();
        let rets = LogReturns::new(vec![0.5, 0.5], 1.0, 0.4).unwrap();
        let l = lambda_dot(&rets, &r, 1.0, &opts).unwrap();
        assert!(!l.valid);
    }

    #[test]
    fn lambda_dot_round_trip_and_range() {
        let opts = EstimatorOptions::default();
        let sigma = EstimateResult {
            estimate: 0.4,
            method: Method::SigmaHat,
            converged: true,
            valid: true,
            iterations: 0,
            bounds: (0.0, f64::INFINITY),
        };
        let target = 0.16 * increment_variance(0.75, 1.0, 1.0);
        // two returns with centred second moment equal to the target
        let y = vec![0.1 + target.sqrt(), 0.1 - target.sqrt()];
        let rets = LogReturns::new(y, 1.0, 1.0).unwrap();
        let r = lambda_dot(&rets, &sigma, 1.0, &opts).unwrap();
        assert!(r.valid);
        assert!((r.estimate - 0.75).abs() < 1e-8, "{}", r.estimate);

        let big = LogReturns::new(vec![1.0, -1.0], 1.0, 1.0).unwrap();
        let r = lambda_dot(&big, &sigma, 1.0, &opts).unwrap();
        assert_eq!((r.estimate, r.valid), (0.0, false));
    }

    #[test]
    fn filter_inverts_affine_map() {
        let (mu, sigma, delta) = (0.2, 0.5, 1.0);
        let alpha = mu - 0.5 * sigma * sigma;
        let x = [0.0, 1.0, 0.5, 0.0];
        let y: Vec<f64> = x
            .windows(2)
            .map(|w| alpha * delta + sigma * (w[1] - w[0]))
            .collect();
        let rets = LogReturns::new(y, delta, mu).unwrap();
        let states = filter_states(&rets, sigma).unwrap();
        for (a, b) in states.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(filter_states(&rets, 0.0).is_err());
        let g = filtered_sample(&rets, sigma, None).unwrap();
        assert!((g.v() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn options_validation() {
        let mut o = EstimatorOptions::default();
        assert!(o.validate().is_ok());
        o.lambda_cap = -1.0;
        assert!(o.validate().is_err());
    }
}
