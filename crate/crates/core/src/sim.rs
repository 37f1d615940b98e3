//! Exact event-driven simulation of the telegraph process and its
//! geometric counterpart, plus resampling onto an equidistant grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `u / (vΔ)^2` below which an increment is treated as
/// a straight (no-switch) segment.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Drift, volatility and initial price of the geometric process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParams {
    pub mu: f64,
    pub sigma: f64,
    pub s0: f64,
}

impl GeometricParams {
    pub fn new(mu: f64, sigma: f64, s0: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Config(format!("mu must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::Config(format!("s0 must be positive, got {s0}")));
        }
        Ok(Self { mu, sigma, s0 })
    }

    /// `α = μ - σ²/2`.
    pub fn alpha(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }
}

/// Switching rate and speed, with an optional geometric block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub v: f64,
    pub geometric: Option<GeometricParams>,
}

impl ModelParams {
    pub fn new(lambda: f64, v: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("v must be positive, got {v}")));
        }
        Ok(Self {
            lambda,
            v,
            geometric: None,
        })
    }

    pub fn with_geometric(mut self, geometric: GeometricParams) -> Self {
        self.geometric = Some(geometric);
        self
    }
}

/// Initial direction of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// A continuous-time trajectory on `[0, T]` starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelegraphPath {
    initial_sign: Sign,
    event_times: Vec<f64>,
    horizon: f64,
    v: f64,
}

impl TelegraphPath {
    /// Builds a path from explicit switching times.
    pub fn new(initial_sign: Sign, event_times: Vec<f64>, horizon: f64, v: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("v must be positive, got {v}")));
        }
        let mut prev = 0.0;
        for &s in &event_times {
            if !(s > prev && s <= horizon) {
                return Err(Error::Config(format!(
                    "event times must be strictly increasing in (0, {horizon}], got {s} after {prev}"
                )));
            }
            prev = s;
        }
        Ok(Self {
            initial_sign,
            event_times,
            horizon,
            v,
        })
    }

    pub fn initial_sign(&self) -> Sign {
        self.initial_sign
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn event_count(&self) -> usize {
        self.event_times.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    /// Position at time `t`, exact up to rounding.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        let mut x = 0.0;
        let mut prev = 0.0;
        let mut sign = self.initial_sign;
        for &s in &self.event_times {
            if s >= t {
                break;
            }
            x += sign.value() * self.v * (s - prev);
            prev = s;
            sign = sign.flip();
        }
        Ok(x + sign.value() * self.v * (t - prev))
    }

    /// Resamples the path at `t_i = i T / n`, `i = 0..=n`.
    pub fn sample_on_grid(&self, n: usize) -> Result<GridSample> {
        if n == 0 {
            return Err(Error::Config("grid size n must be at least 1".into()));
        }
        let t_end = self.horizon;
        let nf = n as f64;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);

        // Position at the most recent event and the direction after it.
        let mut anchor_x = 0.0;
        let mut anchor_t = 0.0;
        let mut sign = self.initial_sign;
        let mut events = self.event_times.iter().copied().peekable();
        for i in 1..=n {
            let t = if i == n { t_end } else { i as f64 * t_end / nf };
            while let Some(&s) = events.peek() {
                if s >= t {
                    break;
                }
                anchor_x += sign.value() * self.v * (s - anchor_t);
                anchor_t = s;
                sign = sign.flip();
                events.next();
            }
            values.push(anchor_x + sign.value() * self.v * (t - anchor_t));
        }
        Ok(GridSample {
            values,
            delta: t_end / nf,
            v: self.v,
        })
    }
}

/// Builds the random stream for one replication: ChaCha8 keyed by the master
/// seed with the stream id as its 64-bit stream selector.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates a trajectory on `[0, horizon]` with exponential inter-switch
/// times of rate `λ` and a fair initial direction.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    rng: &mut R,
) -> Result<TelegraphPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let initial_sign = if rng.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    };
    let gap = Exp::new(params.lambda)
        .map_err(|e| Error::Config(format!("bad rate {}: {e}", params.lambda)))?;
    let mut event_times = Vec::with_capacity((params.lambda * horizon * 1.2) as usize + 4);
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            break;
        }
        event_times.push(t);
    }
    Ok(TelegraphPath {
        initial_sign,
        event_times,
        horizon,
        v: params.v,
    })
}

/// Observations `X_0..X_n` on an equidistant grid with step `Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    values: Vec<f64>,
    delta: f64,
    v: f64,
}

impl GridSample {
    /// Validates the structural invariants (`X_0 = 0`, finite values, `n >= 1`).
    /// The velocity cone is checked separately by [`GridSample::check_cone`].
    pub fn new(values: Vec<f64>, delta: f64, v: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Data(
                "a grid sample needs at least two points".into(),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::Data(format!("X_0 must be 0, got {}", values[0])));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!("non-finite observation at row {i}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("v must be positive, got {v}")));
        }
        Ok(Self { values, delta, v })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.n() as f64 * self.delta
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Same observations with a different speed.
    pub fn with_v(&self, v: f64) -> Result<Self> {
        Self::new(self.values.clone(), self.delta, v)
    }

    /// Fails on the first increment with `|ΔX| > vΔ (1 + τ)`, naming its row.
    pub fn check_cone(&self) -> Result<()> {
        let bound = self.v * self.delta * (1.0 + SINGULAR_TOL);
        for (i, d) in self.increments().enumerate() {
            if d.abs() > bound {
                return Err(Error::Data(format!(
                    "row {}: |X_{} - X_{}| = {} exceeds v*delta = {}",
                    i + 1,
                    i + 1,
                    i,
                    d.abs(),
                    self.v * self.delta
                )));
            }
        }
        Ok(())
    }
}

/// Prices `S_0..S_n` of the geometric process on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricGridSample {
    prices: Vec<f64>,
    delta: f64,
    params: GeometricParams,
}

impl GeometricGridSample {
    pub fn new(prices: Vec<f64>, delta: f64, params: GeometricParams) -> Result<Self> {
        if prices.len() < 2 {
            return Err(Error::Data(
                "a price sample needs at least two points".into(),
            ));
        }
        if let Some(i) = prices.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Data(format!(
                "price at row {i} must be positive and finite, got {}",
                prices[i]
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            prices,
            delta,
            params,
        })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn params(&self) -> &GeometricParams {
        &self.params
    }
}

/// `S_i = s_0 exp(α iΔ + σ X_i)`.
pub fn to_geometric(sample: &GridSample, params: &ModelParams) -> Result<GeometricGridSample> {
    let geo = params
        .geometric
        .ok_or_else(|| Error::Config("geometric parameters (mu, sigma, s0) are required".into()))?;
    let alpha = geo.alpha();
    let delta = sample.delta();
    let prices = sample
        .values()
        .iter()
        .enumerate()
        .map(|(i, &x)| geo.s0 * (alpha * i as f64 * delta + geo.sigma * x).exp())
        .collect();
    GeometricGridSample::new(prices, delta, geo)
}

/// `E X(t)`; the process is centred.
pub fn moment_mean(_t: f64) -> f64 {
    0.0
}

/// `g(z) = 2 (z - 1 + e^{-z}) / z²`, continuous at 0 with `g(0) = 1`.
pub(crate) fn variance_shape(z: f64) -> f64 {
    if z < 0.1 {
        // 2 Σ_{k>=0} (-z)^k / (k+2)!
        let mut term = 1.0; // (-z)^0 * 2 / 2!
        let mut sum = term;
        for k in 1..16 {
            term *= -z / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        2.0 * (z - 1.0 + (-z).exp()) / (z * z)
    }
}

/// `E X²(t) = (v²/λ)(t - (1 - e^{-2λt}) / (2λ))`, evaluated as
/// `v² t² g(2λt)` so that the `λt → 0` limit `v² t²` is exact.
pub fn moment_var(lambda: f64, v: f64, t: f64) -> f64 {
    v * v * t * t * variance_shape(2.0 * lambda * t)
}
