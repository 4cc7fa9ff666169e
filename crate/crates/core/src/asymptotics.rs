//! Leading-order predictions for the principal eigenvalue, the boundary fluxes
//! and the exit-point law, together with the limiting exit probabilities of the
//! two shrinking-window regimes.

use thiserror::Error;

use crate::geometry::{Dimension, DomainConfig};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("scale parameter {value} of window {window} is not positive")]
    NonpositiveScale { window: usize, value: f64 },
    #[error("no windows")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticPrediction<T> {
    /// `K̄`.
    pub lambda0: T,
    /// `K̄²`, the scale of the eigenvalue error.
    pub lambda0_band: T,
    /// `1/K̄`.
    pub mean_exit_time: T,
    /// `√|Ω| K̄`.
    pub total_flux: T,
    /// `√|Ω| K_k`.
    pub per_window_flux: Vec<T>,
    /// `K_k / K̄`.
    pub exit_prob: Vec<T>,
    /// `√K̄`, the scale of the probability error.
    pub exit_prob_band: T,
}

pub fn predict<T: Scalar>(config: &DomainConfig<T>) -> AsymptoticPrediction<T> {
    let kbar = config.kbar();
    let root_volume = match config.dimension() {
        Dimension::Two => T::PI().sqrt(),
        Dimension::Three => (T::lit(4.0) * T::PI() / T::lit(3.0)).sqrt(),
    };
    let ks: Vec<T> = config.windows().iter().map(|w| w.k_eps()).collect();
    let per_window_flux: Vec<T> = ks.iter().map(|&k| root_volume * k).collect();
    let exit_prob = normalized(&ks);
    AsymptoticPrediction {
        lambda0: kbar,
        lambda0_band: kbar * kbar,
        mean_exit_time: T::one() / kbar,
        total_flux: per_window_flux.iter().fold(T::zero(), |a, &b| a + b),
        per_window_flux,
        exit_prob,
        exit_prob_band: kbar.sqrt(),
    }
}

/// Divides by the sum; the last entry absorbs rounding so the result sums to 1.
fn normalized<T: Scalar>(xs: &[T]) -> Vec<T> {
    let total = xs.iter().fold(T::zero(), |a, &b| a + b);
    let mut out: Vec<T> = xs.iter().map(|&x| x / total).collect();
    if let Some((last, head)) = out.split_last_mut() {
        *last = T::one() - head.iter().fold(T::zero(), |a, &b| a + b);
    }
    out
}

/// How the window radii shrink with a common small parameter `ε`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `e^{-1/K_k} = a_k ε`.
    Common,
    /// `e^{-1/K_k} = ε^{a_k}`.
    Power,
}

impl Scaling {
    /// Window radius for scale factor `a` at parameter `eps`.
    pub fn radius<T: Scalar>(&self, a: T, eps: T) -> T {
        match self {
            Scaling::Common => a * eps,
            Scaling::Power => eps.powf(a),
        }
    }
}

/// Limit of the exit probabilities as `ε → 0`.
pub fn regime_limit<T: Scalar>(scaling: &Scaling, params: &[T]) -> Result<Vec<T>, AsymptoticsError> {
    if params.is_empty() {
        return Err(AsymptoticsError::Empty);
    }
    if let Some((i, &a)) = params.iter().enumerate().find(|(_, &a)| !(a > T::zero())) {
        return Err(AsymptoticsError::NonpositiveScale {
            window: i,
            value: a.to_f64_lossy(),
        });
    }
    let weights: Vec<T> = match scaling {
        Scaling::Common => vec![T::one(); params.len()],
        Scaling::Power => params.iter().map(|&a| T::one() / a).collect(),
    };
    Ok(normalized(&weights))
}
