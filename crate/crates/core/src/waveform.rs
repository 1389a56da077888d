//! Synchronization pulses, aggregate received waveforms and zero-crossing
//! detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clock::SkewPopulation;
use crate::error::{Error, Result};
use crate::output;
use crate::quadrature;

/// Absolute amplitude / interval tolerance of the crossing bisection.
const CROSSING_TOL: f64 = 1e-12;

/// Half-waveform `q(t)` on `(-τ_nz, 0)`; every shape is positive there with supremum 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// `q(t) = sin(-π t / τ_nz)`.
    Sine,
    /// Tent peaking at `-τ_nz / 2`.
    Triangle,
    /// `q(t) = 1`; the pulse then jumps at `0` and `±τ_nz`.
    Rectangular,
}

/// Odd pulse `p(t)`: `q(t)` on `(-τ_nz, 0)`, `-q(-t)` on `(0, τ_nz)`, zero elsewhere and at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub shape: PulseShape,
    pub tau_nz: f64,
    pub a_max: f64,
}

impl Pulse {
    pub fn new(shape: PulseShape, tau_nz: f64, a_max: f64) -> Result<Self> {
        if !(tau_nz > 0.0 && tau_nz.is_finite()) {
            return Err(Error::domain(format!("pulse half-width must be positive, got {tau_nz}")));
        }
        if !(a_max > 0.0 && a_max.is_finite()) {
            return Err(Error::domain(format!("pulse amplitude must be positive, got {a_max}")));
        }
        Ok(Pulse { shape, tau_nz, a_max })
    }

    /// `q(t)`, zero outside `(-τ_nz, 0)`.
    pub fn half_shape(&self, t: f64) -> f64 {
        if !(t > -self.tau_nz && t < 0.0) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Sine => (-std::f64::consts::PI * t / self.tau_nz).sin(),
            PulseShape::Triangle => 1.0 - (2.0 * t / self.tau_nz + 1.0).abs(),
            PulseShape::Rectangular => 1.0,
        }
    }

    /// `p(t)` without the amplitude factor.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            self.half_shape(t)
        } else if t > 0.0 {
            -self.half_shape(-t)
        } else {
            0.0
        }
    }
}

/// One transmitted pulse as seen by a particular receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitEvent {
    pub fire_time: f64,
    pub amplitude_scale: f64,
    pub extra_delay: f64,
}

impl TransmitEvent {
    pub fn new(fire_time: f64, amplitude_scale: f64) -> Self {
        TransmitEvent { fire_time, amplitude_scale, extra_delay: 0.0 }
    }

    pub fn arrival(&self) -> f64 {
        self.fire_time + self.extra_delay
    }
}

/// Direct superposition `Σ a_max scale_i p(t - fire_i - delay_i)`.
pub fn evaluate_aggregate(events: &[TransmitEvent], pulse: &Pulse, t: f64) -> Result<f64> {
    if events.is_empty() {
        return Err(Error::domain("aggregate of an empty event list"));
    }
    Ok(events
        .iter()
        .map(|e| pulse.a_max * e.amplitude_scale * pulse.value(t - e.arrival()))
        .sum())
}

/// Preprocessed aggregate waveform supporting fast repeated evaluation.
///
/// Arrivals are sorted so only pulses whose support covers `t` are visited.
/// For the sine shape every covering pulse is `-sin(π (t - s) / τ)`, so the
/// sum over a contiguous run of arrivals collapses to two prefix sums.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pulse: Pulse,
    arrivals: Vec<f64>,
    weights: Vec<f64>,
    anchor: f64,
    cos_prefix: Vec<f64>,
    sin_prefix: Vec<f64>,
}

impl Aggregate {
    pub fn new(events: &[TransmitEvent], pulse: Pulse) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::domain("aggregate of an empty event list"));
        }
        let mut pairs: Vec<(f64, f64)> = events
            .iter()
            .map(|e| (e.arrival(), pulse.a_max * e.amplitude_scale))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let arrivals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let anchor = 0.5 * (arrivals[0] + arrivals[arrivals.len() - 1]);
        let (mut cos_prefix, mut sin_prefix) = (Vec::new(), Vec::new());
        if pulse.shape == PulseShape::Sine {
            cos_prefix.reserve(arrivals.len() + 1);
            sin_prefix.reserve(arrivals.len() + 1);
            let (mut c, mut s) = (0.0, 0.0);
            cos_prefix.push(c);
            sin_prefix.push(s);
            let k = std::f64::consts::PI / pulse.tau_nz;
            for (a, w) in arrivals.iter().zip(&weights) {
                let (sn, cs) = (k * (a - anchor)).sin_cos();
                c += w * cs;
                s += w * sn;
                cos_prefix.push(c);
                sin_prefix.push(s);
            }
        }
        Ok(Aggregate { pulse, arrivals, weights, anchor, cos_prefix, sin_prefix })
    }

    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Amplitude at reference time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let tau = self.pulse.tau_nz;
        let lo = self.arrivals.partition_point(|s| *s <= t - tau);
        let hi = self.arrivals.partition_point(|s| *s < t + tau);
        if lo >= hi {
            return 0.0;
        }
        if self.pulse.shape == PulseShape::Sine {
            let k = std::f64::consts::PI / tau;
            let (sn, cs) = (k * (t - self.anchor)).sin_cos();
            let c = self.cos_prefix[hi] - self.cos_prefix[lo];
            let s = self.sin_prefix[hi] - self.sin_prefix[lo];
            -(sn * c - cs * s)
        } else {
            (lo..hi)
                .map(|i| self.weights[i] * self.pulse.value(t - self.arrivals[i]))
                .sum()
        }
    }

    /// Sample the waveform on `[start, end]` with `points` equally spaced samples.
    pub fn trace(&self, start: f64, end: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|k| {
                let t = start + (end - start) * k as f64 / (n - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }

    /// Locate the first positive-to-negative zero-crossing in
    /// `(center - τ_nz, center + τ_nz)`.
    pub fn find_crossing(&self, center: f64, gamma: f64, grid_step: f64) -> Result<CrossingReport> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::domain(format!("grid step must be positive, got {grid_step}")));
        }
        let tau = self.pulse.tau_nz;
        let half = ((tau / grid_step).ceil() as i64 - 1).max(1);
        let grid: Vec<(f64, f64)> = (-half..=half)
            .map(|j| {
                let t = center + j as f64 * grid_step;
                (t, self.eval(t))
            })
            .filter(|(t, _)| *t > center - tau && *t < center + tau)
            .collect();
        let max_amplitude = grid.iter().fold(0.0f64, |m, (_, a)| m.max(a.abs()));
        if max_amplitude < gamma || max_amplitude == 0.0 {
            return Ok(CrossingReport { location: None, max_amplitude, outcome: CrossingOutcome::Gated });
        }
        for k in 0..grid.len() {
            if grid[k].1 <= 0.0 {
                continue;
            }
            let Some(j) = (k + 1..grid.len()).find(|&j| grid[j].1 != 0.0) else {
                break;
            };
            if grid[j].1 > 0.0 {
                continue;
            }
            let location = if j > k + 1 {
                grid[k + 1].0
            } else {
                self.bisect(grid[k].0, grid[j].0)
            };
            return Ok(CrossingReport { location: Some(location), max_amplitude, outcome: CrossingOutcome::Detected });
        }
        Ok(CrossingReport { location: None, max_amplitude, outcome: CrossingOutcome::NoCrossing })
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo < CROSSING_TOL || mid <= lo || mid >= hi {
                return mid;
            }
            let a = self.eval(mid);
            if a.abs() < CROSSING_TOL {
                return mid;
            }
            if a > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingOutcome {
    Detected,
    /// Peak amplitude below the reception threshold; no observation is made.
    Gated,
    /// Signal heard but no positive-to-negative transition in the window.
    NoCrossing,
}

impl CrossingOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            CrossingOutcome::Detected => "detected",
            CrossingOutcome::Gated => "gated",
            CrossingOutcome::NoCrossing => "no_crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingReport {
    pub location: Option<f64>,
    pub max_amplitude: f64,
    pub outcome: CrossingOutcome,
}

impl CrossingReport {
    pub fn gated(&self) -> bool {
        self.outcome == CrossingOutcome::Gated
    }
}

pub fn find_zero_crossing(
    events: &[TransmitEvent],
    pulse: &Pulse,
    search_center: f64,
    gamma: f64,
    grid_step: f64,
) -> Result<CrossingReport> {
    Aggregate::new(events, *pulse)?.find_crossing(search_center, gamma, grid_step)
}

/// Parameters of the large-population limit waveform
/// `η(t) = A_max E(K) ∫ f_α(s) ∫ p(t - τ₀ - ψ) φ(ψ; σ̄/s) dψ ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitWaveform {
    pub pulse: Pulse,
    pub tau0: f64,
    /// `σ̄²`; node `i` transmits with error variance `σ̄² / α_i²`.
    pub sigma_bar2: f64,
    pub skew: SkewPopulation,
    pub mean_pathloss: f64,
}

const INNER_TOL: f64 = 1e-11;
const OUTER_TOL: f64 = 1e-10;

impl LimitWaveform {
    /// `∫ p(x) φ(u - x; sd) dx`: the pulse smoothed by a centered Gaussian.
    fn smoothed_pulse(&self, u: f64, sd: f64) -> Result<f64> {
        if sd == 0.0 {
            return Ok(self.pulse.value(u));
        }
        let tau = self.pulse.tau_nz;
        let lo = (-tau).max(u - 12.0 * sd);
        let hi = tau.min(u + 12.0 * sd);
        if lo >= hi {
            return Ok(0.0);
        }
        let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
        let integrand = |x: f64| {
            let z = (u - x) / sd;
            self.pulse.value(x) * norm * (-0.5 * z * z).exp()
        };
        let mut breaks = vec![0.0];
        for k in [1.0, 2.0, 4.0, 8.0] {
            breaks.push(u - k * sd);
            breaks.push(u + k * sd);
        }
        breaks.push(u);
        quadrature::integrate_with_breaks(integrand, lo, hi, &breaks, INNER_TOL)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let u = t - self.tau0;
        let sigma_bar = self.sigma_bar2.sqrt();
        let scale = self.pulse.a_max * self.mean_pathloss;
        match self.skew {
            SkewPopulation::PointMass { alpha } => Ok(scale * self.smoothed_pulse(u, sigma_bar / alpha)?),
            SkewPopulation::Uniform { low, high } if high == low => {
                Ok(scale * self.smoothed_pulse(u, sigma_bar / low)?)
            }
            SkewPopulation::Uniform { low, high } => {
                let density = 1.0 / (high - low);
                let failure = std::cell::RefCell::new(None);
                let v = quadrature::integrate(
                    |s| match self.smoothed_pulse(u, sigma_bar / s) {
                        Ok(g) => g * density,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    },
                    low,
                    high,
                    OUTER_TOL,
                );
                // inner failures surface as NaN; report the original diagnostic
                match (v, failure.into_inner()) {
                    (_, Some(e)) => Err(e),
                    (v, None) => Ok(scale * v?),
                }
            }
        }
    }
}

pub fn limit_waveform(limit: &LimitWaveform, t: f64) -> Result<f64> {
    limit.eval(t)
}

/// Write `(t, amplitude)` rows as CSV.
pub fn write_trace_csv<W: Write>(w: &mut W, samples: &[(f64, f64)]) -> std::io::Result<()> {
    output::write_csv(
        w,
        &["t", "amplitude"],
        samples.iter().map(|(t, a)| vec![output::float(*t), output::float(*a)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn sine(tau: f64) -> Pulse {
        Pulse::new(PulseShape::Sine, tau, 1.0).unwrap()
    }

    #[test]
    fn pulse_is_odd_and_bounded() {
        let mut rng = seeded(1);
        for shape in [PulseShape::Sine, PulseShape::Triangle, PulseShape::Rectangular] {
            let p = Pulse::new(shape, 0.7, 1.0).unwrap();
            for _ in 0..10_000 {
                let t: f64 = rng.random_range(-1.0..1.0);
                assert_eq!(p.value(t) + p.value(-t), 0.0);
                assert!(p.value(t).abs() <= 1.0);
            }
            assert_eq!(p.value(0.0), 0.0);
            assert_eq!(p.value(0.7), 0.0);
            assert_eq!(p.value(-0.7), 0.0);
            assert!(p.half_shape(-0.35) > 0.0);
        }
        assert!((sine(0.7).half_shape(-0.35) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_event_is_the_pulse() {
        let p = sine(0.5);
        let e = [TransmitEvent::new(0.0, 1.0)];
        let v = evaluate_aggregate(&e, &p, -0.25).unwrap();
        assert_eq!(v, p.half_shape(-0.25));
        assert!(evaluate_aggregate(&[], &p, 0.0).is_err());
    }

    #[test]
    fn identical_events_sum_to_one_pulse() {
        let p = Pulse::new(PulseShape::Triangle, 0.5, 2.0).unwrap();
        let n = 50;
        let events: Vec<_> = (0..n).map(|_| TransmitEvent::new(1.0, 1.0 / n as f64)).collect();
        for t in [0.6, 0.8, 1.0, 1.1, 1.4] {
            let v = evaluate_aggregate(&events, &p, t).unwrap();
            assert!((v - 2.0 * p.value(t - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_and_direct_evaluation_agree() {
        let mut rng = seeded(2);
        let normal = Normal::new(0.0, 0.1).unwrap();
        for shape in [PulseShape::Sine, PulseShape::Triangle, PulseShape::Rectangular] {
            let p = Pulse::new(shape, 0.4, 1.0).unwrap();
            let events: Vec<_> = (0..500)
                .map(|_| TransmitEvent {
                    fire_time: 3.0 + normal.sample(&mut rng),
                    amplitude_scale: rng.random::<f64>() / 500.0,
                    extra_delay: 0.05 * rng.random::<f64>(),
                })
                .collect();
            let agg = Aggregate::new(&events, p).unwrap();
            for k in 0..200 {
                let t = 2.4 + 1.2 * k as f64 / 199.0;
                let direct = evaluate_aggregate(&events, &p, t).unwrap();
                assert!((agg.eval(t) - direct).abs() < 1e-13, "{shape:?} t={t}");
            }
        }
    }

    #[test]
    fn noiseless_crossing_is_exact() {
        let p = sine(0.3);
        let events: Vec<_> = (0..10).map(|_| TransmitEvent::new(2.0, 0.1)).collect();
        let r = find_zero_crossing(&events, &p, 2.0, 0.0, 0.3 / 1000.0).unwrap();
        assert_eq!(r.outcome, CrossingOutcome::Detected);
        assert_eq!(r.location, Some(2.0));
    }

    #[test]
    fn symmetric_pair_crosses_at_center() {
        for shape in [PulseShape::Sine, PulseShape::Triangle] {
            let p = Pulse::new(shape, 0.5, 1.0).unwrap();
            let events = [TransmitEvent::new(1.0 - 0.07, 0.5), TransmitEvent::new(1.0 + 0.07, 0.5)];
            let r = find_zero_crossing(&events, &p, 1.0, 0.0, 0.5 / 1000.0).unwrap();
            assert!((r.location.unwrap() - 1.0).abs() < 1e-12, "{shape:?} {:?}", r.location);
        }
    }

    #[test]
    fn gating_and_missing_crossings() {
        let p = sine(0.5);
        let events = [TransmitEvent::new(1.0, 0.01)];
        let r = find_zero_crossing(&events, &p, 1.0, 0.5, 0.0005).unwrap();
        assert!(r.gated());
        assert!(r.location.is_none());
        // a pulse far from the window center shows only its negative lobe
        let r = find_zero_crossing(&[TransmitEvent::new(0.4, 1.0)], &p, 1.0, 0.0, 0.0005).unwrap();
        assert_eq!(r.outcome, CrossingOutcome::NoCrossing);
        assert!(find_zero_crossing(&events, &p, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn sparse_realization_crosses_near_one() {
        let mut rng = seeded(7);
        let normal = Normal::new(0.0, 0.1).unwrap();
        let p = Pulse::new(PulseShape::Sine, 0.5, 1.0).unwrap();
        let n = 400;
        let events: Vec<_> = (0..n)
            .map(|_| TransmitEvent::new(1.0 + normal.sample(&mut rng), 1.0 / n as f64))
            .collect();
        let r = find_zero_crossing(&events, &p, 1.0, 0.0, p.tau_nz / 1000.0).unwrap();
        assert!((r.location.unwrap() - 1.0).abs() < 0.02);
    }

    /// First positive-to-negative transition on a dense grid, evaluated by
    /// the direct sum.
    fn dense_grid_crossing(events: &[TransmitEvent], p: &Pulse, center: f64, points: usize) -> (f64, f64) {
        let lo = center - p.tau_nz;
        let h = 2.0 * p.tau_nz / points as f64;
        let mut prev = f64::NAN;
        for k in 1..points {
            let t = lo + k as f64 * h;
            let a = evaluate_aggregate(events, p, t).unwrap();
            if prev > 0.0 && a <= 0.0 {
                return (t - h, t);
            }
            prev = a;
        }
        panic!("no crossing on the dense grid");
    }

    #[test]
    fn bisection_matches_dense_grid_oracle() {
        let mut rng = seeded(21);
        let normal = Normal::new(0.0, 0.05).unwrap();
        let p = Pulse::new(PulseShape::Triangle, 0.5, 1.0).unwrap();
        let events: Vec<_> = (0..1000)
            .map(|_| TransmitEvent {
                fire_time: 5.0 + normal.sample(&mut rng),
                amplitude_scale: rng.random::<f64>() / 1000.0,
                extra_delay: 0.0,
            })
            .collect();
        let r = find_zero_crossing(&events, &p, 5.0, 0.0, p.tau_nz / 1000.0).unwrap();
        let (a, b) = dense_grid_crossing(&events, &p, 5.0, 1_000_000);
        let x = r.location.unwrap();
        assert!(x >= a - 1e-12 && x <= b + 1e-12, "{x} not in [{a}, {b}]");
    }

    fn uniform_limit(sigma_bar2: f64) -> LimitWaveform {
        LimitWaveform {
            pulse: sine(0.5),
            tau0: 1.0,
            sigma_bar2,
            skew: SkewPopulation::Uniform { low: 0.98, high: 1.02 },
            mean_pathloss: 1.0,
        }
    }

    #[test]
    fn limit_waveform_zero_at_center_and_odd() {
        let lw = uniform_limit(0.01);
        assert!(limit_waveform(&lw, 1.0).unwrap().abs() < 1e-8);
        for k in 1..=9 {
            let xi = 0.1 * k as f64 * 0.5;
            let a = lw.eval(1.0 + xi).unwrap();
            let b = lw.eval(1.0 - xi).unwrap();
            assert!((a + b).abs() < 1e-8, "xi={xi}: {a} {b}");
            assert!(b > 0.0 && a < 0.0);
        }
    }

    #[test]
    fn limit_waveform_point_mass_matches_closed_form_for_tiny_noise() {
        let lw = LimitWaveform { skew: SkewPopulation::PointMass { alpha: 1.0 }, ..uniform_limit(1e-12) };
        for t in [0.7, 0.9, 1.2] {
            assert!((lw.eval(t).unwrap() - lw.pulse.value(t - 1.0)).abs() < 1e-5);
        }
    }

    #[test]
    fn limit_waveform_is_continuous_for_jump_pulse() {
        let lw = LimitWaveform {
            pulse: Pulse::new(PulseShape::Rectangular, 0.5, 1.0).unwrap(),
            skew: SkewPopulation::PointMass { alpha: 1.0 },
            ..uniform_limit(0.01)
        };
        let mut last = f64::INFINITY;
        for points in [50, 100, 200, 400] {
            let h = 1.2 / points as f64;
            let vals: Vec<f64> = (0..=points).map(|k| lw.eval(0.4 + k as f64 * h).unwrap()).collect();
            let jump = vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            // the smoothed step has slope at most 2 / (σ̄ √(2π)) per unit amplitude
            assert!(jump <= h * 2.0 / (0.1 * (2.0 * std::f64::consts::PI).sqrt()) + 1e-9);
            assert!(jump < last);
            last = jump;
        }
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let agg = Aggregate::new(&[TransmitEvent::new(1.0, 1.0)], sine(0.5)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &agg.trace(0.5, 1.5, 11)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,amplitude\n"));
        assert_eq!(text.lines().count(), 12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn shape() -> impl Strategy<Value = PulseShape> {
            prop_oneof![Just(PulseShape::Sine), Just(PulseShape::Triangle), Just(PulseShape::Rectangular)]
        }

        proptest! {
            #[test]
            fn pulse_is_odd_and_unit_bounded(s in shape(), tau in 0.01f64..10.0, t in -20.0f64..20.0) {
                let p = Pulse::new(s, tau, 1.0).unwrap();
                prop_assert_eq!(p.value(t), -p.value(-t));
                prop_assert!(p.value(t).abs() <= 1.0);
            }

            #[test]
            fn mirrored_events_give_an_odd_aggregate(
                offsets in proptest::collection::vec((0.0f64..0.3, 0.1f64..2.0), 1..30),
                t in 0.0f64..1.0,
            ) {
                let mut events = Vec::new();
                for &(d, k) in &offsets {
                    events.push(TransmitEvent::new(5.0 + d, k));
                    events.push(TransmitEvent::new(5.0 - d, k));
                }
                let agg = Aggregate::new(&events, Pulse::new(PulseShape::Sine, 1.0, 1.0).unwrap()).unwrap();
                let scale: f64 = offsets.iter().map(|o| o.1).sum();
                prop_assert!((agg.eval(5.0 + t) + agg.eval(5.0 - t)).abs() < 1e-9 * scale);
            }

            #[test]
            fn detected_crossings_stay_in_the_window(
                fires in proptest::collection::vec(-0.4f64..0.4, 1..50),
                center in -3.0f64..3.0,
            ) {
                let events: Vec<TransmitEvent> = fires.iter().map(|f| TransmitEvent::new(center + f, 1.0)).collect();
                let agg = Aggregate::new(&events, Pulse::new(PulseShape::Sine, 0.5, 1.0).unwrap()).unwrap();
                let r = agg.find_crossing(center, 0.0, 5e-4).unwrap();
                if let Some(x) = r.location {
                    prop_assert!(x > center - 0.5 && x < center + 0.5);
                    prop_assert!(agg.eval(x).abs() < 1e-6);
                }
            }
        }
    }
}
