//! Affine node clocks with Gaussian read jitter.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one node clock `c_i(t) = α (t - Δ̄) + Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub alpha: f64,
    pub delta_bar: f64,
    /// Jitter variance in the node's own timescale.
    pub sigma2: f64,
}

impl ClockParams {
    /// The reference clock `c_1(t) = t`.
    pub const REFERENCE: ClockParams = ClockParams { alpha: 1.0, delta_bar: 0.0, sigma2: 0.0 };

    pub fn new(alpha: f64, delta_bar: f64, sigma2: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("clock skew must be positive, got {alpha}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("jitter variance must be finite and nonnegative, got {sigma2}")));
        }
        Ok(ClockParams { alpha, delta_bar, sigma2 })
    }

    /// Noiseless clock reading at reference time `t`.
    pub fn ideal(&self, t: f64) -> f64 {
        self.alpha * (t - self.delta_bar)
    }

    /// One fresh jitter sample `Ψ ~ N(0, σ²)`.
    pub fn jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma2 == 0.0 {
            0.0
        } else {
            let z: f64 = StandardNormal.sample(rng);
            z * self.sigma2.sqrt()
        }
    }

    /// Read the clock at reference time `t`; each read draws independent jitter.
    pub fn read<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        self.ideal(t) + self.jitter(rng)
    }

    /// Noiseless inverse of the clock: reference time at which the clock
    /// (without jitter) shows `node_time`.
    pub fn to_reference(&self, node_time: f64) -> f64 {
        node_time / self.alpha + self.delta_bar
    }

    /// Jitter variance expressed in reference time, `σ² / α²`.
    pub fn reference_variance(&self) -> f64 {
        self.sigma2 / (self.alpha * self.alpha)
    }
}

pub fn read_clock<R: Rng + ?Sized>(params: &ClockParams, t: f64, rng: &mut R) -> f64 {
    params.read(t, rng)
}

pub fn to_reference(params: &ClockParams, node_time: f64) -> f64 {
    params.to_reference(node_time)
}

/// Known population density `f_α` of clock skews.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkewPopulation {
    PointMass { alpha: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for SkewPopulation {
    fn default() -> Self {
        SkewPopulation::Uniform { low: 0.98, high: 1.02 }
    }
}

impl SkewPopulation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SkewPopulation::PointMass { alpha } if alpha > 0.0 && alpha.is_finite() => Ok(()),
            SkewPopulation::Uniform { low, high } if low > 0.0 && high >= low && high.is_finite() => Ok(()),
            other => Err(Error::config(format!("invalid skew population {other:?}"))),
        }
    }

    /// `[α_low, α_up]`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            SkewPopulation::PointMass { alpha } => (alpha, alpha),
            SkewPopulation::Uniform { low, high } => (low, high),
        }
    }

    /// Density `f_α(s)`; a point mass has no density and reports infinity at its atom.
    pub fn density(&self, s: f64) -> f64 {
        match *self {
            SkewPopulation::PointMass { alpha } => {
                if s == alpha {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            SkewPopulation::Uniform { low, high } => {
                if (low..=high).contains(&s) {
                    if high > low {
                        1.0 / (high - low)
                    } else {
                        f64::INFINITY
                    }
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            SkewPopulation::PointMass { alpha } => {
                if s >= alpha {
                    1.0
                } else {
                    0.0
                }
            }
            SkewPopulation::Uniform { low, high } => {
                if s < low {
                    0.0
                } else if s >= high {
                    1.0
                } else {
                    (s - low) / (high - low)
                }
            }
        }
    }

    /// Bound `G_α` on the density, when one exists.
    pub fn density_bound(&self) -> Option<f64> {
        match *self {
            SkewPopulation::Uniform { low, high } if high > low => Some(1.0 / (high - low)),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SkewPopulation::PointMass { alpha } => alpha,
            SkewPopulation::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// Everything needed to draw a network's clocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockPopulation {
    pub skew: SkewPopulation,
    /// Offsets `Δ̄` are drawn uniformly from this interval.
    pub offset_range: (f64, f64),
    pub sigma2: f64,
}

impl Default for ClockPopulation {
    fn default() -> Self {
        ClockPopulation { skew: SkewPopulation::default(), offset_range: (-0.5, 0.5), sigma2: 1e-4 }
    }
}

impl ClockPopulation {
    pub fn validate(&self) -> Result<()> {
        self.skew.validate()?;
        let (lo, hi) = self.offset_range;
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::config(format!("invalid offset range ({lo}, {hi})")));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::config(format!("jitter variance must be nonnegative, got {}", self.sigma2)));
        }
        Ok(())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> ClockParams {
        let alpha = self.skew.sample(rng);
        let (lo, hi) = self.offset_range;
        let delta_bar = lo + (hi - lo) * rng.random::<f64>();
        ClockParams { alpha, delta_bar, sigma2: self.sigma2 }
    }
}

/// Draw `n` clocks with i.i.d. skews from the population density.
pub fn sample_population<R: Rng + ?Sized>(pop: &ClockPopulation, n: usize, rng: &mut R) -> Result<Vec<ClockParams>> {
    if n == 0 {
        return Err(Error::domain("population size must be at least one"));
    }
    pop.validate()?;
    Ok((0..n).map(|_| pop.sample_one(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats;

    #[test]
    fn reference_clock_reads_true_time() {
        let mut rng = seeded(1);
        for t in [0.0, 1.5, 1e6] {
            assert_eq!(ClockParams::REFERENCE.read(t, &mut rng), t);
        }
    }

    #[test]
    fn affine_evaluation_and_inverse() {
        let c = ClockParams::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(read_clock(&c, 3.0, &mut seeded(0)), 4.0);
        assert_eq!(to_reference(&c, 4.0), 3.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ClockParams::new(0.0, 0.0, 0.0).is_err());
        assert!(ClockParams::new(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn jitter_variance_and_independence() {
        let c = ClockParams::new(1.0, 0.0, 0.04).unwrap();
        let mut rng = seeded(11);
        let xs: Vec<f64> = (0..100_000).map(|_| c.read(0.0, &mut rng)).collect();
        let (mean, var) = stats::mean_var(&xs);
        assert!((var / 0.04 - 1.0).abs() < 0.05);
        let lag: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>()
            / ((xs.len() - 1) as f64 * var);
        assert!(lag.abs() < 0.02, "lag-1 autocorrelation {lag}");
    }

    #[test]
    fn point_mass_population() {
        let pop = ClockPopulation { skew: SkewPopulation::PointMass { alpha: 1.0 }, ..Default::default() };
        let clocks = sample_population(&pop, 100, &mut seeded(3)).unwrap();
        assert!(clocks.iter().all(|c| c.alpha == 1.0));
        assert!(sample_population(&pop, 0, &mut seeded(3)).is_err());
    }

    #[test]
    fn uniform_population_matches_density() {
        let pop = ClockPopulation { skew: SkewPopulation::Uniform { low: 0.9, high: 1.1 }, ..Default::default() };
        let clocks = sample_population(&pop, 1_000_000, &mut seeded(4)).unwrap();
        let mut alphas: Vec<f64> = clocks.iter().map(|c| c.alpha).collect();
        let d = stats::ks_statistic(&mut alphas, |s| pop.skew.cdf(s));
        assert!(d < 0.005);
        assert!((pop.skew.density_bound().unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn population_is_seed_deterministic() {
        let pop = ClockPopulation::default();
        let a = sample_population(&pop, 10, &mut seeded(9)).unwrap();
        let b = sample_population(&pop, 10, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn noiseless_round_trip(alpha in 0.5f64..2.0, delta in -10.0f64..10.0, t in -100.0f64..100.0) {
                let c = ClockParams::new(alpha, delta, 0.0).unwrap();
                let back = c.to_reference(c.read(t, &mut seeded(0)));
                prop_assert!((back - t).abs() < 1e-12);
            }
        }
    }
}
