//! Steady-state synchronization phases.
//!
//! A [`Network`] holds every node's clock, position and observation window.
//! Each call to [`Network::run_phase`] lets the nodes predict the next
//! crossing, fire, superimposes the pulses at the receivers and appends the
//! detected crossing to the listeners' windows.
//!
//! In the delay regime only a handful of probe receivers synthesize their
//! aggregate waveform (each one costs `O(N)` channel draws). The remaining
//! nodes record the crossing they assume, `τ_u + ε_i`, with fresh jitter.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_fix, ChannelModel, DelayDistribution, PathlossDistribution};
use crate::clock::{ClockParams, ClockPopulation};
use crate::error::{Error, Result};
use crate::estimator::{self, fit, shift_to_epsilon_frame, DesignVariant, ObservationWindow};
use crate::geometry::{place_nodes, NodePosition, Region};
use crate::output;
use crate::rng::{derive_seed, stream, Stream};
use crate::waveform::{Aggregate, CrossingOutcome, CrossingReport, Pulse, PulseShape, TransmitEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    NoDelay,
    EvenOdd,
    Delay,
}

/// Skew used to scale `D_fix` in the delay regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// The node's own estimate `α̂_i`.
    #[default]
    Estimated,
    /// The true `α_i`.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub m: usize,
    pub regime: Regime,
    pub clocks: ClockPopulation,
    pub region: Region,
    /// `None` picks a unity-gain channel for the no-delay regimes and the
    /// default linear channel for the delay regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelModel>,
    pub pulse_shape: PulseShape,
    /// `None` means `100 σ̄ / α_low` (0.1 when there is no jitter).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_nz: Option<f64>,
    pub a_max: f64,
    pub phases: usize,
    /// Every amplitude is divided by this factor.
    pub v_factor: f64,
    pub seed: u64,
    /// Reference time of the first phase's crossing.
    pub first_center: f64,
    /// `None` means `τ_nz / 1000`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    pub alpha_mode: AlphaMode,
    /// Apply the `D_fix`/`K_fix` correction in the delay regime.
    pub fix: bool,
    /// Assumed crossing offset `ε` of interior nodes.
    pub epsilon: f64,
    pub interior_probes: usize,
    pub boundary_probes: usize,
    /// Boundary nodes know their own skew.
    pub boundary_alpha_known: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_nodes: 10_000,
            m: 3,
            regime: Regime::NoDelay,
            clocks: ClockPopulation::default(),
            region: Region::unit_square(),
            channel: None,
            pulse_shape: PulseShape::Sine,
            tau_nz: None,
            a_max: 1.0,
            phases: 1,
            v_factor: 1.0,
            seed: 0,
            first_center: 10.0,
            grid_step: None,
            alpha_mode: AlphaMode::Estimated,
            fix: true,
            epsilon: 0.0,
            interior_probes: 4,
            boundary_probes: 2,
            boundary_alpha_known: true,
        }
    }
}

impl ScenarioConfig {
    pub fn for_regime(regime: Regime) -> Self {
        ScenarioConfig { regime, ..ScenarioConfig::default() }
    }

    pub fn channel_model(&self) -> ChannelModel {
        self.channel.unwrap_or_else(|| match self.regime {
            Regime::Delay => ChannelModel::default(),
            _ => ChannelModel::no_pathloss(),
        })
    }

    /// Design used by the nodes' predictors in this regime.
    pub fn design(&self) -> DesignVariant {
        match self.regime {
            Regime::NoDelay => DesignVariant::Standard,
            Regime::EvenOdd => DesignVariant::EvenOdd,
            Regime::Delay => DesignVariant::Epsilon(self.epsilon),
        }
    }

    /// `σ̄²`: node-timescale variance of a transmit time around its target.
    pub fn effective_sigma2(&self) -> Result<f64> {
        let s2 = self.clocks.sigma2;
        Ok(s2 + estimator::predicted_variance(self.design(), self.m, s2)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::config("n_nodes must be at least 1"));
        }
        if self.m < 2 {
            return Err(Error::config(format!("m must be at least 2, got {}", self.m)));
        }
        if self.phases == 0 {
            return Err(Error::config("phases must be at least 1"));
        }
        if !(self.v_factor > 0.0 && self.v_factor.is_finite()) {
            return Err(Error::config(format!("v_factor must be positive, got {}", self.v_factor)));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return Err(Error::config(format!("a_max must be positive, got {}", self.a_max)));
        }
        if !self.epsilon.is_finite() || !self.first_center.is_finite() {
            return Err(Error::config("epsilon and first_center must be finite"));
        }
        Region::new(self.region.width, self.region.height).map_err(|e| Error::config(e.to_string()))?;
        self.clocks.validate()?;
        self.channel_model().validate()?;
        for (name, v) in [("tau_nz", self.tau_nz), ("grid_step", self.grid_step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Validated copy with every defaulted field made explicit.
    pub fn resolved(&self) -> Result<ScenarioConfig> {
        self.validate()?;
        let mut c = self.clone();
        c.channel = Some(self.channel_model());
        let tau = match self.tau_nz {
            Some(t) => t,
            None => {
                let sigma_bar = self.effective_sigma2()?.sqrt();
                let (alpha_low, _) = self.clocks.skew.bounds();
                if sigma_bar > 0.0 {
                    100.0 * sigma_bar / alpha_low
                } else {
                    0.1
                }
            }
        };
        c.tau_nz = Some(tau);
        c.grid_step = Some(self.grid_step.unwrap_or(tau / 1000.0));
        Ok(c)
    }

    pub fn pulse(&self) -> Result<Pulse> {
        let tau = match self.tau_nz {
            Some(t) => t,
            None => self.resolved()?.tau_nz.unwrap_or_default(),
        };
        Pulse::new(self.pulse_shape, tau, self.a_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reference,
    Interior,
    Boundary,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Reference => "reference",
            Role::Interior => "interior",
            Role::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub clock: ClockParams,
    pub position: NodePosition,
    pub window: ObservationWindow,
    pub role: Role,
    /// Whether the node lies at least `R` from every edge.
    pub interior: bool,
    /// Offset of this node's own crossings; equals `ε` except for boundary probes.
    pub epsilon_i: f64,
    pub alpha_known: Option<f64>,
    /// Set after a missed observation; the node sits out the next phase.
    pub skip_next: bool,
}

/// Crossing detected by one receiver, or by every node at once when `node` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverCrossing {
    pub node: Option<usize>,
    pub interior: bool,
    pub expected: f64,
    pub report: CrossingReport,
}

impl ReceiverCrossing {
    pub fn offset(&self) -> Option<f64> {
        self.report.location.map(|x| x - self.expected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase_index: usize,
    /// Integer reference time `τ_u` the phase is built around.
    pub center: f64,
    /// Reference-time transmit instant per node, `None` for silent nodes.
    pub fire_times: Vec<Option<f64>>,
    pub crossings: Vec<ReceiverCrossing>,
}

impl PhaseReport {
    pub fn shared_crossing(&self) -> Option<&ReceiverCrossing> {
        self.crossings.iter().find(|c| c.node.is_none())
    }

    /// Crossing seen by `node`: the shared one, or its own when it is a probe.
    pub fn crossing_for(&self, node: usize) -> Option<&ReceiverCrossing> {
        self.shared_crossing()
            .or_else(|| self.crossings.iter().find(|c| c.node == Some(node)))
    }

    fn interior_offsets(&self) -> Vec<f64> {
        self.crossings
            .iter()
            .filter(|c| c.node.is_some() && c.interior)
            .filter_map(|c| c.offset())
            .collect()
    }

    /// Observed crossing offset from its expected location: the shared one,
    /// or the mean over interior probes.
    pub fn crossing_error(&self) -> Option<f64> {
        if let Some(c) = self.shared_crossing() {
            return c.offset();
        }
        let offs = self.interior_offsets();
        (!offs.is_empty()).then(|| offs.iter().sum::<f64>() / offs.len() as f64)
    }

    pub fn true_crossing(&self) -> Option<f64> {
        match self.shared_crossing() {
            Some(c) => c.report.location,
            None => {
                let ex = self.crossings.iter().find(|c| c.interior).map(|c| c.expected)?;
                self.crossing_error().map(|e| ex + e)
            }
        }
    }
}

/// One row per node per phase: `phase,node,fire_time,crossing,error`.
pub fn write_phase_csv<W: Write>(w: &mut W, reports: &[PhaseReport]) -> std::io::Result<()> {
    let rows = reports.iter().flat_map(|r| {
        (0..r.fire_times.len()).map(move |i| {
            let c = r.crossing_for(i);
            vec![
                r.phase_index.to_string(),
                i.to_string(),
                output::opt_float(r.fire_times[i]),
                output::opt_float(c.and_then(|c| c.report.location)),
                output::opt_float(c.and_then(|c| c.offset()).map(f64::abs)),
            ]
        })
    });
    output::write_csv(w, &["phase", "node", "fire_time", "crossing", "error"], rows)
}

/// One row per receiver per phase with the full crossing report.
pub fn write_crossing_csv<W: Write>(w: &mut W, reports: &[PhaseReport]) -> std::io::Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.crossings.iter().map(move |c| {
            vec![
                r.phase_index.to_string(),
                c.node.map(|n| n.to_string()).unwrap_or_else(|| "all".into()),
                if c.interior { "interior" } else { "boundary" }.to_string(),
                output::float(c.expected),
                output::opt_float(c.report.location),
                output::opt_float(c.offset()),
                output::float(c.report.max_amplitude),
                c.report.outcome.as_str().to_string(),
            ]
        })
    });
    output::write_csv(
        w,
        &["phase", "receiver", "position", "expected", "crossing", "offset", "max_amplitude", "outcome"],
        rows,
    )
}

#[derive(Debug, Clone, Copy)]
struct Fire {
    time: f64,
    scale: f64,
}

/// A network in steady state, advanced one synchronization phase at a time.
#[derive(Debug, Clone)]
pub struct Network {
    config: ScenarioConfig,
    channel: ChannelModel,
    pulse: Pulse,
    grid_step: f64,
    nodes: Vec<NodeState>,
    dyn_seed: u64,
    phase: usize,
    representative: PathlossDistribution,
    fix_dist: Option<DelayDistribution>,
    probes: Vec<(usize, DelayDistribution)>,
}

impl Network {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        Self::with_replicate(config, 0, &[])
    }

    /// Build a network whose placement and clocks come from `config.seed`
    /// while jitter and channel draws also depend on `replicate`.
    /// `offsets` overrides `ε_i` for the listed boundary nodes.
    pub fn with_replicate(config: &ScenarioConfig, replicate: u64, offsets: &[(usize, f64)]) -> Result<Self> {
        let config = config.resolved()?;
        let channel = config.channel_model();
        let pulse = config.pulse()?;
        let grid_step = config.grid_step.unwrap_or(pulse.tau_nz / 1000.0);
        let n = config.n_nodes;
        let region = config.region;
        let seed = config.seed;
        let positions = place_nodes(&region, n, &mut stream(seed, Stream::Placement, 0, 0))?;
        let clocks: Vec<ClockParams> = (0..n)
            .into_par_iter()
            .map(|i| {
                if i == 0 {
                    ClockParams { alpha: 1.0, delta_bar: 0.0, sigma2: config.clocks.sigma2 }
                } else {
                    config.clocks.sample_one(&mut stream(seed, Stream::Clocks, i as u64, 0))
                }
            })
            .collect();
        let dyn_seed = derive_seed(seed, Stream::Replicate, replicate, 0);

        let mut nodes = Vec::with_capacity(n);
        for (i, (clock, position)) in clocks.into_iter().zip(positions).enumerate() {
            let interior = channel.is_interior(&region, position);
            let role = if i == 0 {
                Role::Reference
            } else if interior {
                Role::Interior
            } else {
                Role::Boundary
            };
            let alpha_known = (role == Role::Boundary && config.boundary_alpha_known).then_some(clock.alpha);
            nodes.push(NodeState {
                clock,
                position,
                window: ObservationWindow::new(config.m)?,
                role,
                interior,
                epsilon_i: config.epsilon,
                alpha_known,
                skip_next: false,
            });
        }
        for &(i, e) in offsets {
            let node = nodes
                .get_mut(i)
                .ok_or_else(|| Error::config(format!("offset given for missing node {i}")))?;
            if !e.is_finite() {
                return Err(Error::config(format!("offset for node {i} must be finite")));
            }
            node.epsilon_i = e;
        }

        let representative = PathlossDistribution::new(&channel, &region, nodes[0].position)?;
        let mut fix_dist = None;
        let mut probes = Vec::new();
        if config.regime == Regime::Delay {
            if config.fix {
                let d = DelayDistribution::new(&channel, &region, region.center())?;
                if !d.is_interior() {
                    return Err(Error::config(
                        "the delay correction needs an interior position: the region must exceed 2R in both directions",
                    ));
                }
                fix_dist = Some(d);
            }
            let nodes = &nodes;
            let pick = |want_interior: bool, count: usize| {
                (1..n).filter(move |&i| nodes[i].interior == want_interior).take(count)
            };
            let chosen: Vec<usize> =
                pick(true, config.interior_probes).chain(pick(false, config.boundary_probes)).collect();
            for i in chosen {
                probes.push((i, DelayDistribution::new(&channel, &region, nodes[i].position)?));
            }
        }

        let m = config.m;
        let first = config.first_center;
        let regime = config.regime;
        nodes.par_iter_mut().enumerate().for_each(|(i, node)| {
            let mut rng = stream(dyn_seed, Stream::Window, i as u64, 0);
            for l in 0..m {
                let t = match regime {
                    Regime::NoDelay => first - (m - l) as f64,
                    Regime::Delay => first - (m - l) as f64 + node.epsilon_i,
                    // the most recent crossings produced by the other parity
                    Regime::EvenOdd => {
                        let last = if i % 2 == 0 { -1.0 } else { -2.0 };
                        first + last - 2.0 * (m - 1 - l) as f64
                    }
                };
                node.window.push(node.clock.read(t, &mut rng));
            }
        });

        Ok(Network { config, channel, pulse, grid_step, nodes, dyn_seed, phase: 0, representative, fix_dist, probes })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<NodeState> {
        self.nodes
    }

    /// Node indices whose aggregate waveform is synthesized in the delay regime.
    pub fn probes(&self) -> Vec<usize> {
        self.probes.iter().map(|p| p.0).collect()
    }

    pub fn next_phase(&self) -> usize {
        self.phase
    }

    pub fn center(&self, phase: usize) -> f64 {
        self.config.first_center + phase as f64
    }

    /// Run the configured regime for one phase.
    pub fn run_phase(&mut self) -> Result<PhaseReport> {
        match self.config.regime {
            Regime::NoDelay => self.run_phase_no_delay(),
            Regime::EvenOdd => self.run_phase_even_odd(),
            Regime::Delay => {
                let eps = self.config.epsilon;
                self.run_phase_delay(eps)
            }
        }
    }

    /// Run `config.phases` phases.
    pub fn run(&mut self) -> Result<Vec<PhaseReport>> {
        (0..self.config.phases).map(|_| self.run_phase()).collect()
    }

    fn require(&self, regime: Regime) -> Result<()> {
        if self.config.regime != regime {
            return Err(Error::config(format!(
                "network was built for {:?}, not {:?}",
                self.config.regime, regime
            )));
        }
        Ok(())
    }

    pub fn run_phase_no_delay(&mut self) -> Result<PhaseReport> {
        self.require(Regime::NoDelay)?;
        self.shared_phase(|_| true)
    }

    pub fn run_phase_even_odd(&mut self) -> Result<PhaseReport> {
        self.require(Regime::EvenOdd)?;
        let parity = self.phase % 2;
        self.shared_phase(move |i| i % 2 == parity)
    }

    /// Phase in which every receiver sees the same aggregate: the active
    /// nodes fire, everyone else (or everyone, without alternation) listens.
    fn shared_phase(&mut self, active: impl Fn(usize) -> bool + Sync) -> Result<PhaseReport> {
        let u = self.phase;
        let center = self.center(u);
        let fires = self.fire(u, &active)?;
        let report = self.receive(&fires, center)?;
        let crossing = ReceiverCrossing { node: None, interior: true, expected: center, report };
        let alternating = self.config.regime == Regime::EvenOdd;
        let design = self.config.design();
        let dyn_seed = self.dyn_seed;
        let m = self.config.m;
        self.nodes.par_iter_mut().enumerate().try_for_each(|(i, node)| -> Result<()> {
            let fired = active(i);
            if alternating && fired {
                node.skip_next = false;
                return Ok(());
            }
            match report.location {
                Some(x) => {
                    let mut rng = stream(dyn_seed, Stream::Observe, u as u64, i as u64);
                    node.window.push(node.clock.read(x, &mut rng));
                    node.skip_next = false;
                }
                None => {
                    let at = if alternating { (2 * m) as f64 } else { m as f64 };
                    let guess = predict_at(&node.window, design, at)?;
                    node.window.push(guess);
                    node.skip_next = true;
                }
            }
            Ok(())
        })?;
        self.phase += 1;
        Ok(PhaseReport {
            phase_index: u,
            center,
            fire_times: fires.iter().map(|f| f.map(|f| f.time)).collect(),
            crossings: vec![crossing],
        })
    }

    /// Delay-regime phase with interior crossing offset `eps`.
    pub fn run_phase_delay(&mut self, eps: f64) -> Result<PhaseReport> {
        self.require(Regime::Delay)?;
        if !eps.is_finite() {
            return Err(Error::domain("epsilon must be finite"));
        }
        self.config.epsilon = eps;
        let u = self.phase;
        let center = self.center(u);
        let fires = self.fire(u, &|_| true)?;

        let crossings: Vec<ReceiverCrossing> = self
            .probes
            .par_iter()
            .map(|(j, dist)| -> Result<ReceiverCrossing> {
                let j = *j;
                let mut rng = stream(self.dyn_seed, Stream::Reception, u as u64, j as u64);
                let mut events = Vec::with_capacity(fires.len());
                for (i, f) in fires.iter().enumerate() {
                    let Some(f) = f else { continue };
                    if i == j {
                        continue;
                    }
                    let (d, k) = dist.sample_pair(&mut rng);
                    events.push(TransmitEvent { fire_time: f.time, amplitude_scale: f.scale * k, extra_delay: d });
                }
                let node = &self.nodes[j];
                let expected = center + node.epsilon_i;
                let report = self.crossing_of(&events, expected)?;
                Ok(ReceiverCrossing { node: Some(j), interior: node.interior, expected, report })
            })
            .collect::<Result<_>>()?;

        let dyn_seed = self.dyn_seed;
        let m = self.config.m as f64;
        let probes = &self.probes;
        self.nodes.par_iter_mut().enumerate().try_for_each(|(i, node)| -> Result<()> {
            let mut rng = stream(dyn_seed, Stream::Observe, u as u64, i as u64);
            let observed = match probes.iter().position(|p| p.0 == i) {
                Some(k) => crossings[k].report.location,
                None => Some(center + node.epsilon_i),
            };
            match observed {
                Some(x) => {
                    node.window.push(node.clock.read(x, &mut rng));
                    node.skip_next = false;
                }
                None => {
                    let e = node.epsilon_i;
                    let guess = predict_at(&node.window, DesignVariant::Epsilon(e), m + e)?;
                    node.window.push(guess);
                    node.skip_next = true;
                }
            }
            Ok(())
        })?;
        self.phase += 1;
        Ok(PhaseReport { phase_index: u, center, fire_times: fires.iter().map(|f| f.map(|f| f.time)).collect(), crossings })
    }

    fn crossing_of(&self, events: &[TransmitEvent], center: f64) -> Result<CrossingReport> {
        if events.is_empty() {
            return Ok(CrossingReport { location: None, max_amplitude: 0.0, outcome: CrossingOutcome::Gated });
        }
        Aggregate::new(events, self.pulse)?.find_crossing(center, self.channel.gamma, self.grid_step)
    }

    fn receive(&self, fires: &[Option<Fire>], center: f64) -> Result<CrossingReport> {
        let events: Vec<TransmitEvent> = fires.iter().flatten().map(|f| TransmitEvent::new(f.time, f.scale)).collect();
        self.crossing_of(&events, center)
    }

    /// Transmit decisions of phase `u` for the nodes selected by `active`.
    fn fire(&self, u: usize, active: &(dyn Fn(usize) -> bool + Sync)) -> Result<Vec<Option<Fire>>> {
        let n = self.nodes.len() as f64;
        let base = 1.0 / (self.config.v_factor * n);
        let design = self.config.design();
        let eps = self.config.epsilon;
        self.nodes
            .par_iter()
            .enumerate()
            .map(|(i, node)| -> Result<Option<Fire>> {
                if !active(i) || node.skip_next {
                    return Ok(None);
                }
                let mut rng = stream(self.dyn_seed, Stream::Fire, u as u64, i as u64);
                let (target, scale) = match self.config.regime {
                    Regime::NoDelay | Regime::EvenOdd => {
                        let est = fit(&node.window, design)?;
                        (est.phi_hat, base * self.representative.sample(&mut rng))
                    }
                    Regime::Delay => {
                        let window = if node.role == Role::Boundary {
                            shift_to_epsilon_frame(&node.window, node.alpha_known, node.epsilon_i, eps)?
                        } else {
                            node.window.clone()
                        };
                        let est = fit(&window, DesignVariant::Epsilon(eps))?;
                        match &self.fix_dist {
                            Some(dist) => {
                                let fs = sample_fix(dist, &self.channel, &mut rng)?;
                                let alpha = match self.config.alpha_mode {
                                    AlphaMode::Estimated => est.alpha_hat,
                                    AlphaMode::Oracle => node.clock.alpha,
                                };
                                (est.phi_hat + alpha * fs.d_fix, base * fs.k_fix)
                            }
                            None => (est.phi_hat, base),
                        }
                    }
                };
                let psi = node.clock.jitter(&mut rng);
                Ok(Some(Fire { time: node.clock.to_reference(target - psi), scale }))
            })
            .collect()
    }
}

/// `θ̂₁ + θ̂₂ x` under `variant`.
fn predict_at(window: &ObservationWindow, variant: DesignVariant, x: f64) -> Result<f64> {
    let r = fit(window, variant)?;
    Ok(r.theta_hat.0 + r.theta_hat.1 * x)
}

/// Build the steady-state node set for `config`.
pub fn init_steady_state(config: &ScenarioConfig) -> Result<Vec<NodeState>> {
    Ok(Network::new(config)?.into_nodes())
}

/// Controls of the empirical `ε` fixed-point search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSearch {
    pub tolerance: f64,
    pub max_iters: usize,
    /// Independent replicates averaged per iteration.
    pub replicates: usize,
}

impl Default for EpsilonSearch {
    fn default() -> Self {
        EpsilonSearch { tolerance: 1e-4, max_iters: 20, replicates: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub epsilon: f64,
    /// `(node, ε_i)` for every boundary probe.
    pub boundary: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
    /// Interior `ε_k` sequence, starting from the configured value.
    pub history: Vec<f64>,
}

/// Iterate `ε_{k+1}` = mean observed interior crossing offset when every
/// node assumes `ε_k`, with the boundary probes' `ε_i` updated alongside.
pub fn estimate_epsilon(config: &ScenarioConfig, search: &EpsilonSearch) -> Result<EpsilonReport> {
    if config.regime != Regime::Delay {
        return Err(Error::config("epsilon search needs the delay regime"));
    }
    if search.tolerance.is_nan() || search.tolerance <= 0.0 || search.max_iters == 0 || search.replicates == 0 {
        return Err(Error::config("epsilon search needs positive tolerance, iterations and replicates"));
    }
    let mut cfg = config.resolved()?;
    cfg.phases = 1;
    let probe_net = Network::with_replicate(&cfg, 0, &[])?;
    let mut boundary: Vec<(usize, f64)> = probe_net
        .probes()
        .into_iter()
        .filter(|&i| !probe_net.nodes[i].interior)
        .map(|i| (i, cfg.epsilon))
        .collect();
    let mut eps = cfg.epsilon;
    let mut history = vec![eps];
    for iter in 1..=search.max_iters {
        cfg.epsilon = eps;
        let runs: Vec<PhaseReport> = (0..search.replicates as u64)
            .into_par_iter()
            .map(|rep| Network::with_replicate(&cfg, rep, &boundary)?.run_phase())
            .collect::<Result<_>>()?;
        let interior: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.crossings.iter().filter(|c| c.interior).filter_map(|c| c.offset()))
            .collect();
        if interior.is_empty() {
            return Err(Error::Numeric {
                routine: "estimate_epsilon",
                detail: "no interior probe detected a crossing".into(),
            });
        }
        let next = eps + interior.iter().sum::<f64>() / interior.len() as f64;
        let mut moved = (next - eps).abs();
        for (node, e) in boundary.iter_mut() {
            let offs: Vec<f64> = runs
                .iter()
                .flat_map(|r| r.crossings.iter().filter(|c| c.node == Some(*node)).filter_map(|c| c.offset()))
                .collect();
            if !offs.is_empty() {
                let updated = *e + offs.iter().sum::<f64>() / offs.len() as f64;
                moved = moved.max((updated - *e).abs());
                *e = updated;
            }
        }
        history.push(next);
        if moved < search.tolerance {
            return Ok(EpsilonReport { epsilon: eps, boundary, iterations: iter, converged: true, history });
        }
        eps = next;
    }
    Ok(EpsilonReport { epsilon: eps, boundary, iterations: search.max_iters, converged: false, history })
}
