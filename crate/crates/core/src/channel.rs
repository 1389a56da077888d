//! Pathloss and propagation-delay models, and the per-receiver random
//! variables built from them.
//!
//! Both random variables are driven by the law of the distance from a
//! receiver to a uniformly placed transmitter, `P(dist <= r) = A(j, r) / A_T`.
//! Sampling inverts that law by bisection on the radius (closed form while
//! the disk stays inside the region) and maps the radius through `K` or `δ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{disk_area_unchecked, NodePosition, Region};
use crate::quadrature;

/// Absolute tolerance of the radius bisection.
const QUANTILE_TOL: f64 = 1e-12;

/// Deterministic pathloss `K(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pathloss {
    /// `K(d) = 1` everywhere, infinite range.
    Unity,
    /// `K(d) = max(0, 1 - d / range)`.
    Linear { range: f64 },
}

impl Pathloss {
    pub fn gain(&self, d: f64) -> f64 {
        match *self {
            Pathloss::Unity => 1.0,
            Pathloss::Linear { range } => (1.0 - d / range).max(0.0),
        }
    }

    /// `R = sup{d : K(d) > 0}`.
    pub fn range(&self) -> f64 {
        match *self {
            Pathloss::Unity => f64::INFINITY,
            Pathloss::Linear { range } => range,
        }
    }

    /// `sup{d : K(d) > k}`, zero when the set is empty.
    pub fn threshold_radius(&self, k: f64) -> f64 {
        match *self {
            Pathloss::Unity => {
                if k < 1.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Pathloss::Linear { range } => {
                if k < 0.0 {
                    f64::INFINITY
                } else {
                    (range * (1.0 - k)).max(0.0)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Pathloss::Unity => Ok(()),
            Pathloss::Linear { range } if range > 0.0 && range.is_finite() => Ok(()),
            Pathloss::Linear { range } => Err(Error::config(format!("pathloss range must be positive, got {range}"))),
        }
    }
}

/// Deterministic propagation delay `δ(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayModel {
    /// `δ(d) = d / speed`.
    Linear { speed: f64 },
}

impl DelayModel {
    pub fn delay(&self, d: f64) -> f64 {
        match *self {
            DelayModel::Linear { speed } => d / speed,
        }
    }

    /// `δ⁻¹(x)`.
    pub fn inverse(&self, x: f64) -> f64 {
        match *self {
            DelayModel::Linear { speed } => x * speed,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DelayModel::Linear { speed } if speed > 0.0 && speed.is_finite() => Ok(()),
            DelayModel::Linear { speed } => Err(Error::config(format!("propagation speed must be positive, got {speed}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub pathloss: Pathloss,
    pub delay: DelayModel,
    /// Width `ΔR` of the linear tail of the delay CDF; `None` means `0.1 R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    /// Reception threshold `γ`.
    #[serde(default)]
    pub gamma: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            pathloss: Pathloss::Linear { range: 0.25 },
            delay: DelayModel::Linear { speed: 10.0 },
            delta_r: None,
            gamma: 0.0,
        }
    }
}

impl ChannelModel {
    /// Pathloss-only channel without delay, as used by the no-delay regimes.
    pub fn no_pathloss() -> Self {
        ChannelModel { pathloss: Pathloss::Unity, ..ChannelModel::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.pathloss.validate()?;
        self.delay.validate()?;
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::config(format!("threshold gamma must be nonnegative, got {}", self.gamma)));
        }
        if let Some(dr) = self.delta_r {
            if !(dr > 0.0 && dr.is_finite()) {
                return Err(Error::config(format!("delta_r must be positive, got {dr}")));
            }
        }
        Ok(())
    }

    pub fn range(&self) -> f64 {
        self.pathloss.range()
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r.unwrap_or(0.1 * self.range())
    }

    /// `K(δ⁻¹(x))`.
    pub fn gain_at_delay(&self, x: f64) -> f64 {
        self.pathloss.gain(self.delay.inverse(x))
    }

    /// Whether a receiver at `p` is an interior node (at least `R` from every edge).
    pub fn is_interior(&self, region: &Region, p: NodePosition) -> bool {
        region.distance_to_edge(p) >= self.range()
    }
}

/// Law of the distance from a receiver to a uniformly placed point.
#[derive(Debug, Clone, Copy)]
struct DistanceLaw {
    region: Region,
    receiver: NodePosition,
    edge: f64,
    far: f64,
}

impl DistanceLaw {
    fn new(region: Region, receiver: NodePosition) -> Result<Self> {
        if !region.contains(receiver) {
            return Err(Error::domain(format!(
                "receiver ({}, {}) lies outside the region",
                receiver.x, receiver.y
            )));
        }
        Ok(DistanceLaw {
            region,
            receiver,
            edge: region.distance_to_edge(receiver),
            far: region.farthest_corner_distance(receiver),
        })
    }

    fn cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        disk_area_unchecked(&self.region, self.receiver, r) / self.region.area()
    }

    /// Smallest radius whose area fraction reaches `u`.
    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.far;
        }
        let target = u * self.region.area();
        let inner = std::f64::consts::PI * self.edge * self.edge;
        if target <= inner {
            return (target / std::f64::consts::PI).sqrt();
        }
        let (mut lo, mut hi) = (self.edge, self.far);
        while hi - lo > QUANTILE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Distribution of the pathloss factor `K_j` seen by one receiver.
#[derive(Debug, Clone, Copy)]
pub struct PathlossDistribution {
    law: DistanceLaw,
    pathloss: Pathloss,
}

impl PathlossDistribution {
    pub fn new(model: &ChannelModel, region: &Region, receiver: NodePosition) -> Result<Self> {
        model.validate()?;
        Ok(PathlossDistribution { law: DistanceLaw::new(*region, receiver)?, pathloss: model.pathloss })
    }

    pub fn receiver(&self) -> NodePosition {
        self.law.receiver
    }

    /// `F_{K_j}(k)`.
    pub fn cdf(&self, k: f64) -> f64 {
        if k < 0.0 {
            0.0
        } else if k > 1.0 {
            1.0
        } else {
            1.0 - self.law.cdf(self.pathloss.threshold_radius(k))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Pathloss::Unity = self.pathloss {
            return 1.0;
        }
        let u: f64 = rng.random();
        self.pathloss.gain(self.law.quantile(u))
    }

    /// `E(K_j) = ∫_0^1 (1 - F(k)) dk`.
    pub fn mean(&self) -> Result<f64> {
        match self.pathloss {
            Pathloss::Unity => Ok(1.0),
            Pathloss::Linear { .. } => quadrature::integrate(|k| 1.0 - self.cdf(k), 0.0, 1.0, 1e-11),
        }
    }
}

/// `F_{K_j}(k)` for the receiver at `receiver`.
pub fn pathloss_cdf(model: &ChannelModel, region: &Region, receiver: NodePosition, k: f64) -> Result<f64> {
    Ok(PathlossDistribution::new(model, region, receiver)?.cdf(k))
}

pub fn sample_pathloss<R: Rng + ?Sized>(dist: &PathlossDistribution, rng: &mut R) -> f64 {
    dist.sample(rng)
}

/// Distribution of the delay `D_j` seen by one receiver, including the
/// linear tail on `(δ(R), δ(R + ΔR)]` that carries the unreachable mass.
#[derive(Debug, Clone, Copy)]
pub struct DelayDistribution {
    law: DistanceLaw,
    model: ChannelModel,
    interior: bool,
    /// `A(j, R) / A_T`.
    reach: f64,
    slope: f64,
}

impl DelayDistribution {
    pub fn new(model: &ChannelModel, region: &Region, receiver: NodePosition) -> Result<Self> {
        model.validate()?;
        let law = DistanceLaw::new(*region, receiver)?;
        let range = model.range();
        let reach = if range.is_finite() { law.cdf(range) } else { 1.0 };
        let slope = if range.is_finite() && reach < 1.0 {
            let dr = model.delta_r();
            (1.0 - reach) / (model.delay.delay(range + dr) - model.delay.delay(range))
        } else {
            0.0
        };
        Ok(DelayDistribution { law, model: *model, interior: model.is_interior(region, receiver), reach, slope })
    }

    pub fn receiver(&self) -> NodePosition {
        self.law.receiver
    }

    pub fn is_interior(&self) -> bool {
        self.interior
    }

    /// Slope `a` of the linear tail.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// `r' = sup{r : δ(r) <= x}`.
    pub fn radius_for_delay(&self, x: f64) -> f64 {
        self.model.delay.inverse(x)
    }

    /// `F_{D_j}(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let range = self.model.range();
        if !range.is_finite() {
            return self.law.cdf(self.radius_for_delay(x));
        }
        let d_r = self.model.delay.delay(range);
        if x <= d_r {
            self.law.cdf(self.radius_for_delay(x))
        } else if x <= self.model.delay.delay(range + self.model.delta_r()) {
            (self.slope * (x - d_r) + self.reach).min(1.0)
        } else {
            1.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let range = self.model.range();
        if u <= self.reach || !range.is_finite() {
            self.model.delay.delay(self.law.quantile(u))
        } else {
            self.model.delay.delay(range) + (u - self.reach) / self.slope
        }
    }

    /// Draw `(D_j, K_j)` with `K_j = K(δ⁻¹(D_j))`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let d = self.sample(rng);
        (d, self.model.gain_at_delay(d))
    }
}

pub fn delay_cdf(model: &ChannelModel, region: &Region, receiver: NodePosition, x: f64) -> Result<f64> {
    Ok(DelayDistribution::new(model, region, receiver)?.cdf(x))
}

/// Draw a coupled `(D_j, K_j)` pair. `model` must be the channel `dist` was built from.
pub fn sample_delay_pathloss_pair<R: Rng + ?Sized>(dist: &DelayDistribution, model: &ChannelModel, rng: &mut R) -> (f64, f64) {
    let d = dist.sample(rng);
    (d, model.gain_at_delay(d))
}

/// Artificial delay shift and matching amplitude scale applied by a transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixSample {
    pub d_fix: f64,
    pub k_fix: f64,
}

/// Draw `D_fix` with density `f_{D_j}(-x)` of an interior receiver, and
/// `K_fix = K(δ⁻¹(-D_fix))`.
pub fn sample_fix<R: Rng + ?Sized>(interior_dist: &DelayDistribution, model: &ChannelModel, rng: &mut R) -> Result<FixSample> {
    if !interior_dist.is_interior() {
        return Err(Error::domain(
            "D_fix requires the delay distribution of an interior receiver",
        ));
    }
    let d = interior_dist.sample(rng);
    let d_fix = -d;
    Ok(FixSample { d_fix, k_fix: model.gain_at_delay(-d_fix) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disk_intersection_area;
    use crate::rng::seeded;
    use crate::stats;

    fn linear_model() -> ChannelModel {
        ChannelModel {
            pathloss: Pathloss::Linear { range: 1.0 },
            delay: DelayModel::Linear { speed: 1.0 },
            delta_r: None,
            gamma: 0.0,
        }
    }

    fn center() -> NodePosition {
        NodePosition::new(0.5, 0.5)
    }

    #[test]
    fn unity_pathloss_is_degenerate_at_one() {
        let m = ChannelModel::no_pathloss();
        let r = Region::unit_square();
        for k in [0.0, 0.3, 0.999] {
            assert_eq!(pathloss_cdf(&m, &r, center(), k).unwrap(), 0.0);
        }
        assert_eq!(pathloss_cdf(&m, &r, center(), 1.0).unwrap(), 1.0);
        let d = PathlossDistribution::new(&m, &r, center()).unwrap();
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 1.0));
    }

    #[test]
    fn linear_pathloss_cdf_matches_geometry() {
        let m = linear_model();
        let r = Region::unit_square();
        let f = pathloss_cdf(&m, &r, center(), 0.5).unwrap();
        let a = disk_intersection_area(&r, center(), 0.5).unwrap();
        assert!((f - (1.0 - a)).abs() < 1e-15);
        assert_eq!(pathloss_cdf(&m, &r, center(), -1e-12).unwrap(), 0.0);
        assert_eq!(pathloss_cdf(&m, &r, center(), 1.5).unwrap(), 1.0);
    }

    #[test]
    fn pathloss_samples_follow_cdf() {
        let m = linear_model();
        let r = Region::unit_square();
        let d = PathlossDistribution::new(&m, &r, center()).unwrap();
        let mut rng = seeded(2);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
        assert!(xs.iter().all(|k| (0.0..=1.0).contains(k)));
        let ks = stats::ks_statistic(&mut xs, |k| d.cdf(k));
        assert!(ks < 0.005, "KS distance {ks}");
    }

    #[test]
    fn pathloss_streams_are_reproducible() {
        let m = linear_model();
        let r = Region::unit_square();
        let d = PathlossDistribution::new(&m, &r, NodePosition::new(0.05, 0.9)).unwrap();
        let a: Vec<f64> = { let mut g = seeded(3); (0..50).map(|_| d.sample(&mut g)).collect() };
        let b: Vec<f64> = { let mut g = seeded(3); (0..50).map(|_| d.sample(&mut g)).collect() };
        assert_eq!(a, b);
    }

    #[test]
    fn delay_cdf_support_and_saturation() {
        let m = linear_model();
        let r = Region::unit_square();
        let p = NodePosition::new(0.3, 0.6);
        assert_eq!(delay_cdf(&m, &r, p, -0.01).unwrap(), 0.0);
        let end = m.delay.delay(m.range() + m.delta_r());
        assert!((delay_cdf(&m, &r, p, end).unwrap() - 1.0).abs() < 1e-12);
        // interior of the first piece follows the area function
        let f = delay_cdf(&m, &r, center(), 0.3).unwrap();
        let a = disk_intersection_area(&r, center(), 0.3).unwrap();
        assert!((f - a).abs() < 1e-15);
    }

    #[test]
    fn delay_cdf_is_continuous_at_tail_start() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.2 }, ..linear_model() };
        let r = Region::unit_square();
        let d = DelayDistribution::new(&m, &r, NodePosition::new(0.1, 0.1)).unwrap();
        let x = m.delay.delay(0.2);
        assert!((d.cdf(x) - d.cdf(x + 1e-12)).abs() < 1e-9);
        let expected_slope = (1.0 - disk_intersection_area(&r, d.receiver(), 0.2).unwrap())
            / (m.delay.delay(0.22) - m.delay.delay(0.2));
        assert!((d.slope() - expected_slope).abs() < 1e-9 * expected_slope);
    }

    #[test]
    fn delay_samples_follow_cdf_and_tail_has_zero_gain() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.3 }, ..linear_model() };
        let r = Region::unit_square();
        let d = DelayDistribution::new(&m, &r, NodePosition::new(0.2, 0.7)).unwrap();
        let mut rng = seeded(4);
        let pairs: Vec<(f64, f64)> = (0..1_000_000).map(|_| sample_delay_pathloss_pair(&d, &m, &mut rng)).collect();
        let d_r = m.delay.delay(0.3);
        for &(x, k) in &pairs {
            assert_eq!(k, m.pathloss.gain(m.delay.inverse(x)));
            if x > d_r {
                assert_eq!(k, 0.0);
            }
        }
        let zero_frac = pairs.iter().filter(|p| p.1 == 0.0).count() as f64 / pairs.len() as f64;
        let expected = 1.0 - disk_intersection_area(&r, d.receiver(), 0.3).unwrap();
        assert!((zero_frac - expected).abs() < 0.005, "{zero_frac} vs {expected}");
        let mut xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ks = stats::ks_statistic(&mut xs, |x| d.cdf(x));
        assert!(ks < 0.005, "KS distance {ks}");
    }

    #[test]
    fn composed_pair_example() {
        let m = linear_model();
        assert_eq!(m.gain_at_delay(0.25), 0.75);
    }

    #[test]
    fn tail_width_is_inert_for_gain() {
        let r = Region::unit_square();
        let p = NodePosition::new(0.2, 0.2);
        let mut zero_fracs = Vec::new();
        for dr in [0.01, 0.1, 1.0] {
            let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.3 }, delta_r: Some(dr), ..linear_model() };
            let d = DelayDistribution::new(&m, &r, p).unwrap();
            let mut rng = seeded(5);
            let ks: Vec<f64> = (0..10_000).map(|_| d.sample_pair(&mut rng).1).collect();
            zero_fracs.push(ks.iter().filter(|k| **k == 0.0).count());
        }
        // the same uniforms land in the tail regardless of its width
        assert!(zero_fracs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn fix_requires_interior_receiver() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.2 }, ..linear_model() };
        let r = Region::unit_square();
        let boundary = DelayDistribution::new(&m, &r, NodePosition::new(0.1, 0.5)).unwrap();
        assert!(matches!(sample_fix(&boundary, &m, &mut seeded(1)), Err(Error::Domain(_))));
        let unity = ChannelModel::no_pathloss();
        let d = DelayDistribution::new(&unity, &r, center()).unwrap();
        assert!(!d.is_interior());
    }

    #[test]
    fn fix_with_vanishing_range_is_zero() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 1e-9 }, delta_r: Some(1e-9), ..linear_model() };
        let r = Region::unit_square();
        let d = DelayDistribution::new(&m, &r, center()).unwrap();
        let f = sample_fix(&d, &m, &mut seeded(2)).unwrap();
        assert!(f.d_fix.abs() < 1e-8);
        assert!((0.0..=1.0).contains(&f.k_fix));
    }

    #[test]
    fn fix_plus_delay_is_centered_and_symmetric() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.25 }, ..linear_model() };
        let r = Region::unit_square();
        let d = DelayDistribution::new(&m, &r, center()).unwrap();
        let mut rng = seeded(6);
        let n = 1_000_000;
        let mut total: Vec<f64> = (0..n)
            .map(|_| sample_fix(&d, &m, &mut rng).unwrap().d_fix + d.sample(&mut rng))
            .collect();
        let (mean, var) = stats::mean_var(&total);
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
        let resid = stats::reflection_residual(&mut total, 200);
        assert!(resid < 0.01, "reflection residual {resid}");
    }

    #[test]
    fn pathloss_mean_is_positive() {
        let m = ChannelModel { pathloss: Pathloss::Linear { range: 0.25 }, ..linear_model() };
        let d = PathlossDistribution::new(&m, &Region::unit_square(), center()).unwrap();
        let mean = d.mean().unwrap();
        // interior receiver: E K = (1/A_T) ∫_0^R (1 - r/R) 2πr dr = πR²/3
        let expected = std::f64::consts::PI * 0.0625 / 3.0;
        assert!((mean - expected).abs() < 1e-9, "{mean} vs {expected}");
    }
}
