//! Hop-count scaling and the cascaded pairwise skew estimator.
//!
//! Node 1 emits `m` pulses at unit spacing of its own clock. Every later
//! node fits the arrivals of its predecessor's pulses, then re-emits `m`
//! pulses spaced by its own slope estimate, so estimation noise compounds
//! along the chain.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::ClockParams;
use crate::error::{Error, Result};
use crate::estimator::{alpha_variance, fit, DesignVariant, ObservationWindow};
use crate::output;
use crate::rng::{stream, Stream};
use crate::stats::{self, LineFit};

/// `(d_N, ℓ_N)` with `d_N = sqrt(ln N / (π N))` and `ℓ_N = 1 / d_N`.
pub fn hop_count_estimate(n: f64) -> Result<(f64, f64)> {
    if !(n >= 2.0 && n.is_finite()) {
        return Err(Error::domain(format!("hop count needs N >= 2, got {n}")));
    }
    let d = (n.ln() / (std::f64::consts::PI * n)).sqrt();
    Ok((d, 1.0 / d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopChainConfig {
    /// Number of nodes in the chain, node 1 included.
    pub hops: usize,
    pub m: usize,
    pub sigma2: f64,
    /// Per-node skews, node 1 first; all ones when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for HopChainConfig {
    fn default() -> Self {
        HopChainConfig { hops: 10, m: 3, sigma2: 1.0, alphas: None, trials: 10_000, seed: 0 }
    }
}

impl HopChainConfig {
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone().unwrap_or_else(|| vec![1.0; self.hops])
    }

    pub fn validate(&self) -> Result<()> {
        if self.hops < 2 {
            return Err(Error::config(format!("a chain needs at least 2 nodes, got {}", self.hops)));
        }
        if self.m < 2 {
            return Err(Error::config(format!("m must be at least 2, got {}", self.m)));
        }
        if self.trials < 2 {
            return Err(Error::config("a variance needs at least 2 trials"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::config(format!("sigma2 must be nonnegative, got {}", self.sigma2)));
        }
        let a = self.alphas();
        if a.len() != self.hops || a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::config("alphas needs one positive skew per node"));
        }
        Ok(())
    }

    fn unit_skews(&self) -> bool {
        self.alphas().iter().all(|a| *a == 1.0)
    }
}

/// Per-node statistics of `α̂` over the trials; index 0 is node 2.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeReport {
    /// `alpha_hats[k][t]`: estimate of node `k + 2` in trial `t`.
    pub alpha_hats: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub empirical_variances: Vec<f64>,
    /// `12σ²/D + (ℓ-2) 24σ²/D` when every skew is 1.
    pub predicted_variances: Option<Vec<f64>>,
}

impl CascadeReport {
    /// Hop index `ℓ` of entry `k`.
    pub fn hop(k: usize) -> usize {
        k + 2
    }

    /// Straight line through `(ℓ - 2, Var α̂_ℓ)`, weighting each point by
    /// the inverse square of its variance (a sample variance's spread is
    /// proportional to the variance itself).
    pub fn variance_fit(&self) -> LineFit {
        let x: Vec<f64> = (0..self.empirical_variances.len()).map(|k| k as f64).collect();
        let w: Vec<f64> = self.empirical_variances.iter().map(|v| 1.0 / (v * v)).collect();
        stats::weighted_linear_fit(&x, &self.empirical_variances, &w)
    }
}

/// Simulate `config.trials` independent chains.
pub fn run_cascade(config: &HopChainConfig) -> Result<CascadeReport> {
    config.validate()?;
    let alphas = config.alphas();
    let m = config.m;
    let clocks: Vec<ClockParams> = alphas
        .iter()
        .map(|&a| ClockParams::new(a, 0.0, config.sigma2))
        .collect::<Result<_>>()?;
    let per_trial: Vec<Vec<f64>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let mut rng = stream(config.seed, Stream::Trial, t, 0);
            // node 1 transmits exactly at its clock ticks 0, 1, …, m-1
            let mut emitted: Vec<f64> = (0..m).map(|l| clocks[0].to_reference(l as f64)).collect();
            let mut hats = Vec::with_capacity(config.hops - 1);
            for clock in &clocks[1..] {
                let obs: Vec<f64> = emitted.iter().map(|&x| clock.read(x, &mut rng)).collect();
                let alpha_hat = fit(&ObservationWindow::from_values(obs)?, DesignVariant::Standard)?.alpha_hat;
                hats.push(alpha_hat);
                emitted = (0..m)
                    .map(|l| {
                        let target = l as f64 * alpha_hat;
                        clock.to_reference(target - clock.jitter(&mut rng))
                    })
                    .collect();
            }
            Ok(hats)
        })
        .collect::<Result<_>>()?;
    let hops = config.hops - 1;
    let alpha_hats: Vec<Vec<f64>> = (0..hops).map(|k| per_trial.iter().map(|h| h[k]).collect()).collect();
    let (means, empirical_variances) = alpha_hats.iter().map(|xs| stats::mean_var(xs)).unzip();
    let predicted_variances = if config.unit_skews() {
        let base = alpha_variance(m, config.sigma2)?;
        Some((0..hops).map(|k| base + k as f64 * 2.0 * base).collect())
    } else {
        None
    };
    Ok(CascadeReport { alpha_hats, means, empirical_variances, predicted_variances })
}

/// `hop,alpha_mean,empirical_variance,predicted_variance` rows.
pub fn write_cascade_csv<W: Write>(w: &mut W, report: &CascadeReport) -> std::io::Result<()> {
    let rows = (0..report.empirical_variances.len()).map(|k| {
        vec![
            CascadeReport::hop(k).to_string(),
            output::float(report.means[k]),
            output::float(report.empirical_variances[k]),
            output::opt_float(report.predicted_variances.as_ref().map(|p| p[k])),
        ]
    });
    output::write_csv(w, &["hop", "alpha_mean", "empirical_variance", "predicted_variance"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_count_examples() {
        let (d, l) = hop_count_estimate(1000.0).unwrap();
        assert!((d - 0.046_89).abs() < 1e-5);
        assert!((l - 21.33).abs() < 0.01);
        let (d, _) = hop_count_estimate(std::f64::consts::E).unwrap();
        assert!((d - (1.0 / (std::f64::consts::E * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
        assert!(hop_count_estimate(1.0).is_err());
        let ls: Vec<f64> = (2..=6).map(|k| hop_count_estimate(10f64.powi(k)).unwrap().1).collect();
        assert!(ls.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn noiseless_chain_is_exact() {
        let cfg = HopChainConfig { sigma2: 0.0, trials: 4, alphas: Some(vec![1.0, 1.01, 0.99, 1.02, 0.98]), hops: 5, ..HopChainConfig::default() };
        let r = run_cascade(&cfg).unwrap();
        // each node measures its own skew relative to its predecessor's estimate,
        // which telescopes to its absolute skew
        for (k, a) in [1.01, 0.99, 1.02, 0.98].iter().enumerate() {
            for v in &r.alpha_hats[k] {
                assert!((v - a).abs() < 1e-12);
            }
        }
        assert!(r.predicted_variances.is_none());
    }

    #[test]
    fn unit_chain_variance_grows_linearly() {
        let cfg = HopChainConfig { trials: 20_000, seed: 3, ..HopChainConfig::default() };
        let r = run_cascade(&cfg).unwrap();
        let p = r.predicted_variances.as_ref().unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 1.5).abs() < 1e-12);
        for k in 0..r.empirical_variances.len() {
            assert!((r.empirical_variances[k] / p[k] - 1.0).abs() < 0.05, "hop {}", k + 2);
            assert!((r.means[k] - 1.0).abs() < 4.0 * (p[k] / 20_000.0).sqrt());
        }
        let fit = r.variance_fit();
        assert!((fit.slope - 1.0).abs() < 0.05);
        assert!((fit.intercept - 0.5).abs() < 0.025);
    }

    #[test]
    fn config_checks_and_csv() {
        assert!(run_cascade(&HopChainConfig { hops: 1, ..HopChainConfig::default() }).is_err());
        assert!(run_cascade(&HopChainConfig { alphas: Some(vec![1.0; 3]), ..HopChainConfig::default() }).is_err());
        let r = run_cascade(&HopChainConfig { trials: 100, hops: 4, ..HopChainConfig::default() }).unwrap();
        let mut buf = Vec::new();
        write_cascade_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("2,"));
    }
}
