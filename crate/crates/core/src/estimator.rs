//! Linear observation model `Y = Hθ + W` over a node's most recent crossing
//! times and the least-squares predictors of its next crossing.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FIFO of a node's `m` most recent observed crossing times, in its own clock.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    values: VecDeque<f64>,
    m: usize,
}

impl ObservationWindow {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(format!("observation window needs m >= 2, got {m}")));
        }
        Ok(ObservationWindow { values: VecDeque::with_capacity(m), m })
    }

    /// A full window holding `values`, oldest first.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let mut w = Self::new(values.len())?;
        w.values.extend(values);
        Ok(w)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == self.m
    }

    /// Append the newest observation, dropping the oldest once full.
    pub fn push(&mut self, x: f64) {
        if self.values.len() == self.m {
            self.values.pop_front();
        }
        self.values.push_back(x);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    pub fn newest(&self) -> Option<f64> {
        self.values.back().copied()
    }

    fn shifted(&self, delta: f64) -> Self {
        ObservationWindow { values: self.values.iter().map(|v| v + delta).collect(), m: self.m }
    }
}

/// Second column of `H` and the matching prediction row `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "offset", rename_all = "snake_case")]
pub enum DesignVariant {
    /// Abscissas `0, 1, …, m-1`; predicts at `m`.
    Standard,
    /// Abscissas `0, 2, …, 2(m-1)`; predicts at `2m-1`.
    EvenOdd,
    /// Abscissas `ε, 1+ε, …, m-1+ε`; predicts at `m`.
    Epsilon(f64),
    /// Same design as `Epsilon` with a receiver-specific offset `ε_i`.
    Boundary(f64),
}

impl DesignVariant {
    pub fn abscissa(&self, l: usize) -> f64 {
        let l = l as f64;
        match *self {
            DesignVariant::Standard => l,
            DesignVariant::EvenOdd => 2.0 * l,
            DesignVariant::Epsilon(e) | DesignVariant::Boundary(e) => l + e,
        }
    }

    /// Abscissa at which `φ̂ = θ₁ + c₂ θ₂` is evaluated.
    pub fn prediction_abscissa(&self, m: usize) -> f64 {
        match self {
            DesignVariant::EvenOdd => (2 * m - 1) as f64,
            _ => m as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DesignVariant::Epsilon(e) | DesignVariant::Boundary(e) if !e.is_finite() => {
                Err(Error::domain(format!("design offset must be finite, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    /// Predicted next crossing in the node's clock.
    pub phi_hat: f64,
    /// Skew estimate `θ̂₂`.
    pub alpha_hat: f64,
    pub theta_hat: (f64, f64),
    /// `C (HᵀH)⁻¹ Cᵀ`; multiply by σ² for the prediction variance.
    pub variance_factor: f64,
}

impl EstimateReport {
    pub fn predicted_variance(&self, sigma2: f64) -> f64 {
        sigma2 * self.variance_factor
    }
}

/// Least-squares fit of the window against the variant's design.
pub fn fit(window: &ObservationWindow, variant: DesignVariant) -> Result<EstimateReport> {
    variant.validate()?;
    let m = window.len();
    if m < 2 {
        return Err(Error::domain(format!("fit needs at least 2 observations, got {m}")));
    }
    let xs: Vec<f64> = (0..m).map(|l| variant.abscissa(l)).collect();
    let mf = m as f64;
    let xbar = xs.iter().sum::<f64>() / mf;
    let ybar = window.values().sum::<f64>() / mf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(window.values()) {
        let dx = x - xbar;
        sxx += dx * dx;
        sxy += dx * (y - ybar);
    }
    let theta2 = sxy / sxx;
    let theta1 = ybar - theta2 * xbar;
    let xp = variant.prediction_abscissa(m);
    let phi_hat = ybar + theta2 * (xp - xbar);
    Ok(EstimateReport {
        phi_hat,
        alpha_hat: theta2,
        theta_hat: (theta1, theta2),
        variance_factor: 1.0 / mf + (xp - xbar) * (xp - xbar) / sxx,
    })
}

/// Closed-form `σ² C (HᵀH)⁻¹ Cᵀ` for each variant.
pub fn predicted_variance(variant: DesignVariant, m: usize, sigma2: f64) -> Result<f64> {
    variant.validate()?;
    if m < 2 {
        return Err(Error::domain(format!("variance needs m >= 2, got {m}")));
    }
    let mf = m as f64;
    let standard = 2.0 * (2.0 * mf + 1.0) / (mf * (mf - 1.0));
    let factor = match variant {
        DesignVariant::Standard => standard,
        DesignVariant::EvenOdd => (2.0 * mf + 1.0) * (2.0 * mf - 1.0) / (mf * (mf - 1.0) * (mf + 1.0)),
        DesignVariant::Epsilon(e) | DesignVariant::Boundary(e) => {
            standard + 12.0 * e * (e - 1.0 - mf) / ((mf - 1.0) * mf * (mf + 1.0))
        }
    };
    Ok(sigma2 * factor)
}

/// Variance of a node's transmit time in the reference timescale:
/// prediction error plus the fresh transmit jitter, both divided by α².
pub fn reference_fire_variance(variant: DesignVariant, m: usize, sigma2: f64, alpha: f64) -> Result<f64> {
    Ok((sigma2 + predicted_variance(variant, m, sigma2)?) / (alpha * alpha))
}

/// `σ̄²` for the no-delay scheme: `σ² (1 + 2(2m+1)/(m(m-1)))`.
pub fn effective_variance(m: usize, sigma2: f64) -> Result<f64> {
    Ok(sigma2 + predicted_variance(DesignVariant::Standard, m, sigma2)?)
}

/// `Var(α̂) = 12σ²/((m-1)m(m+1))` for unit-spaced designs.
pub fn alpha_variance(m: usize, sigma2: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::domain(format!("variance needs m >= 2, got {m}")));
    }
    let mf = m as f64;
    Ok(12.0 * sigma2 / ((mf - 1.0) * mf * (mf + 1.0)))
}

/// Move boundary observations (taken at offsets `ε_i`) to the common `ε`
/// frame by adding `α_i (ε - ε_i)` to every entry.
pub fn shift_to_epsilon_frame(
    window: &ObservationWindow,
    alpha_known: Option<f64>,
    eps_i: f64,
    eps: f64,
) -> Result<ObservationWindow> {
    let alpha = alpha_known
        .ok_or_else(|| Error::config("boundary node needs its own skew to shift observations"))?;
    Ok(window.shifted(alpha * (eps - eps_i)))
}
