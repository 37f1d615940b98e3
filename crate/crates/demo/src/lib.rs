//! Browser bindings: simulate a path, profile its likelihood, and draw the
//! transition law. Build with `wasm-pack build --target web --out-dir www/pkg`.

use telegraph_core::{
    decompose, lambda_least_squares, lambda_oracle, lambda_score_root, log_likelihood,
    replication_rng, score, simulate_path, transition_density, EstimatorOptions, GridSample,
    IncrementDecomposition, ModelParams, TelegraphPath,
};
use wasm_bindgen::prelude::*;

/// One simulated path observed on a regular grid.
#[wasm_bindgen]
pub struct Demo {
    path: TelegraphPath,
    sample: GridSample,
    decomp: IncrementDecomposition,
}

impl Demo {
    pub fn create(
        lambda: f64,
        v: f64,
        horizon: f64,
        n: usize,
        seed: u32,
    ) -> telegraph_core::Result<Self> {
        let params = ModelParams::new(lambda, v)?;
        let path = simulate_path(&params, horizon, &mut replication_rng(u64::from(seed), 0))?;
        let sample = path.sample_on_grid(n)?;
        let decomp = decompose(&sample)?;
        Ok(Self {
            path,
            sample,
            decomp,
        })
    }

    fn profile(
        &self,
        lambdas: &[f64],
        f: fn(&IncrementDecomposition, f64) -> telegraph_core::Result<f64>,
    ) -> Vec<f64> {
        lambdas
            .iter()
            .map(|&l| f(&self.decomp, l).unwrap_or(f64::NAN))
            .collect()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(lambda: f64, v: f64, horizon: f64, n: usize, seed: u32) -> Result<Demo, JsError> {
        Self::create(lambda, v, horizon, n, seed).map_err(JsError::from)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.sample.n())
            .map(|i| i as f64 * self.sample.delta())
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.sample.values().to_vec()
    }

    /// Switching times of the continuous path.
    pub fn events(&self) -> Vec<f64> {
        self.path.event_times().to_vec()
    }

    pub fn n_plus(&self) -> usize {
        self.decomp.n_plus()
    }

    pub fn lambda_oracle(&self) -> f64 {
        lambda_oracle(&self.path)
    }

    /// Root of the score, NaN when no switch was observed.
    pub fn score_root(&self) -> f64 {
        match lambda_score_root(&self.decomp, &EstimatorOptions::default()) {
            Ok(e) if e.valid => e.estimate,
            _ => f64::NAN,
        }
    }

    /// Least-squares estimate, NaN when it does not exist.
    pub fn least_squares(&self) -> f64 {
        match lambda_least_squares(&self.sample, &EstimatorOptions::default()) {
            Ok(e) if e.valid => e.estimate,
            _ => f64::NAN,
        }
    }

    pub fn log_likelihood_profile(&self, lambdas: &[f64]) -> Vec<f64> {
        self.profile(lambdas, log_likelihood)
    }

    pub fn score_profile(&self, lambdas: &[f64]) -> Vec<f64> {
        self.profile(lambdas, score)
    }
}

/// Absolutely continuous part of the law of `X(t)` from 0 at the midpoints
/// of `points` equal cells covering `[-vt, vt]`.
#[wasm_bindgen]
pub fn density_curve(lambda: f64, v: f64, t: f64, points: usize) -> Result<Vec<f64>, JsError> {
    density_values(lambda, v, t, points).map_err(JsError::from)
}

pub fn density_values(
    lambda: f64,
    v: f64,
    t: f64,
    points: usize,
) -> telegraph_core::Result<Vec<f64>> {
    let params = ModelParams::new(lambda, v)?;
    let reach = v * t;
    let cells = points.max(1);
    let width = 2.0 * reach / cells as f64;
    (0..cells)
        .map(|k| {
            let x = -reach + (k as f64 + 0.5) * width;
            transition_density(x, t, 0.0, &params).map(|d| d.ac_density)
        })
        .collect()
}

/// Mass of each atom at `±vt`.
#[wasm_bindgen]
pub fn atom_mass(lambda: f64, t: f64) -> f64 {
    0.5 * (-lambda * t).exp()
}
