//! Transition law of the telegraph process and the approximated
//! likelihood built from treating grid increments as independent copies of
//! `X(Δ)`.
//!
//! With `x_i = (λ/v) √u_i` every continuous factor of the likelihood is
//! written as `λ (I_0(x_i) + λΔ I_1(x_i)/x_i)`, which stays finite as
//! `u_i → 0` and is evaluated through the scaled Bessel functions.

use serde::{Deserialize, Serialize};

use crate::bessel::{i1_over_x_scaled, i_scaled};
use crate::error::{Error, Result};
use crate::sim::{GridSample, ModelParams, SINGULAR_TOL};

/// Value of the transition law at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    /// Absolutely continuous part (per unit length).
    pub ac_density: f64,
    /// Mass of each of the two atoms at `x_0 ± vt`.
    pub atom_mass: f64,
    /// `x` sits on one of the atoms (within the classification tolerance).
    pub is_on_boundary: bool,
}

/// Transition law of `X(t)` started at `x0`.
pub fn transition_density(x: f64, t: f64, x0: f64, params: &ModelParams) -> Result<DensityValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let (lambda, v) = (params.lambda, params.v);
    let reach = v * t;
    let d = (x - x0).abs();
    let u = (reach - d) * (reach + d);
    let rel = u / (reach * reach);
    let atom_mass = 0.5 * (-lambda * t).exp();
    let is_on_boundary = rel.abs() <= SINGULAR_TOL;
    let ac_density = if u > 0.0 {
        let z = lambda * u.sqrt() / v;
        let bracket = i_scaled(0, z) + lambda * t * i1_over_x_scaled(z);
        lambda / (2.0 * v) * (z - lambda * t).exp() * bracket
    } else {
        0.0
    };
    Ok(DensityValue {
        ac_density,
        atom_mass,
        is_on_boundary,
    })
}

/// Split of a grid sample into straight (no-switch) increments and the
/// cone slacks `u = v²Δ² - (ΔX)²` of the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementDecomposition {
    continuous: Vec<f64>,
    n_total: usize,
    delta: f64,
    v: f64,
}

impl IncrementDecomposition {
    /// Builds a decomposition directly from slack values (all must lie in
    /// `(τ (vΔ)², (vΔ)²]`).
    pub fn from_parts(continuous: Vec<f64>, n_total: usize, delta: f64, v: f64) -> Result<Self> {
        if !(delta > 0.0 && v > 0.0) {
            return Err(Error::Config("delta and v must be positive".into()));
        }
        if continuous.len() > n_total {
            return Err(Error::Config(format!(
                "{} continuous increments out of n = {n_total}",
                continuous.len()
            )));
        }
        let cap = (v * delta) * (v * delta);
        if let Some(u) = continuous
            .iter()
            .find(|&&u| !(u > SINGULAR_TOL * cap && u <= cap))
        {
            return Err(Error::Config(format!(
                "slack {u} outside (tau*(v*delta)^2, (v*delta)^2]"
            )));
        }
        Ok(Self {
            continuous,
            n_total,
            delta,
            v,
        })
    }

    pub fn continuous_increments(&self) -> &[f64] {
        &self.continuous
    }

    /// Number of increments with at least one switch.
    pub fn n_plus(&self) -> usize {
        self.continuous.len()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Classifies each increment of `sample` as straight or continuous.
pub fn decompose(sample: &GridSample) -> Result<IncrementDecomposition> {
    sample.check_cone()?;
    let reach = sample.v() * sample.delta();
    let cap = reach * reach;
    let continuous = sample
        .increments()
        .filter_map(|dx| {
            let d = dx.abs();
            let u = (reach - d) * (reach + d);
            (u > SINGULAR_TOL * cap).then_some(u)
        })
        .collect();
    Ok(IncrementDecomposition {
        continuous,
        n_total: sample.n(),
        delta: sample.delta(),
        v: sample.v(),
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Approximated log-likelihood
/// `-λnΔ - n log 2 - n⁺ log v + Σ log{λ I_0(x_i) + (vλΔ/√u_i) I_1(x_i)}`.
pub fn log_likelihood(decomp: &IncrementDecomposition, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let IncrementDecomposition {
        continuous,
        n_total,
        delta,
        v,
    } = decomp;
    let n = *n_total as f64;
    let lambda_delta = lambda * delta;
    let mut total =
        -lambda * n * delta - n * std::f64::consts::LN_2 - continuous.len() as f64 * v.ln();
    let log_lambda = lambda.ln();
    for &u in continuous {
        let x = lambda * u.sqrt() / v;
        let bracket = i_scaled(0, x) + lambda_delta * i1_over_x_scaled(x);
        total += log_lambda + x + bracket.ln();
    }
    Ok(total)
}

/// Score `∂/∂λ log L_n(λ)` in its simplified form, each term being
/// `[(1 + λΔ) I_0(x) + x I_1(x)] / [λ (I_0(x) + λΔ I_1(x)/x)]`.
pub fn score(decomp: &IncrementDecomposition, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let lambda_delta = lambda * decomp.delta;
    let mut total = -(decomp.n_total as f64) * decomp.delta;
    for &u in &decomp.continuous {
        let x = lambda * u.sqrt() / decomp.v;
        let i0 = i_scaled(0, x);
        let i1_over_x = i1_over_x_scaled(x);
        let num = (1.0 + lambda_delta) * i0 + x * x * i1_over_x;
        let den = lambda * (i0 + lambda_delta * i1_over_x);
        total += num / den;
    }
    Ok(total)
}

/// Score obtained by differentiating the log-likelihood term by term, before
/// the `I_2` terms are eliminated through the Bessel recurrence.
pub fn score_unsimplified(decomp: &IncrementDecomposition, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let lambda_delta = lambda * decomp.delta;
    let mut total = -(decomp.n_total as f64) * decomp.delta;
    for &u in &decomp.continuous {
        let x = lambda * u.sqrt() / decomp.v;
        let i0 = i_scaled(0, x);
        let i1 = i_scaled(1, x);
        let i2 = i_scaled(2, x);
        let i1_over_x = i1_over_x_scaled(x);
        let num = i0 * (1.0 + 0.5 * lambda_delta)
            + x * i1
            + lambda_delta * i1_over_x
            + 0.5 * lambda_delta * i2;
        let den = lambda * (i0 + lambda_delta * i1_over_x);
        total += num / den;
    }
    Ok(total)
}
