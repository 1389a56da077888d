//! Pulse-coupled oscillators with instantaneous coupling and identical
//! clocks, driven through the pulse-connection update on next-fire times.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output;
use crate::rng::{stream, Stream};

/// Nodes whose next-fire times differ by at most this much fire as one group.
pub const MERGE_TOL: f64 = 1e-12;

/// Concave charging curve `f(φ) = ln(1 + (e^b - 1) φ) / b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingCurve {
    pub b: f64,
}

impl Default for ChargingCurve {
    fn default() -> Self {
        ChargingCurve { b: 3.0 }
    }
}

impl ChargingCurve {
    pub fn new(b: f64) -> Result<Self> {
        let c = ChargingCurve { b };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b < 700.0) {
            return Err(Error::config(format!("charging curvature must lie in (0, 700), got {}", self.b)));
        }
        Ok(())
    }

    pub fn f(&self, phi: f64) -> f64 {
        (self.b.exp_m1() * phi).ln_1p() / self.b
    }

    pub fn f_inverse(&self, x: f64) -> f64 {
        (self.b * x).exp_m1() / self.b.exp_m1()
    }

    /// Midpoint concavity on a `points`-point grid of pairs.
    pub fn is_concave_on_grid(&self, points: usize) -> bool {
        let g: Vec<f64> = (0..=points).map(|k| k as f64 / points as f64).collect();
        g.iter().all(|&a| {
            g.iter().all(|&b| self.f(0.5 * (a + b)) >= 0.5 * (self.f(a) + self.f(b)) - 1e-15)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcoConfig {
    pub n: usize,
    pub curve: ChargingCurve,
    /// Coupling strength shared by every node unless `epsilons` is given.
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Initial phases; drawn uniformly from `seed` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_phases: Option<Vec<f64>>,
    pub max_cycles: usize,
    pub seed: u64,
    /// Census size: seeds `seed, seed + 1, …` are each run to absorption.
    pub trials: usize,
}

impl Default for PcoConfig {
    fn default() -> Self {
        PcoConfig { n: 5, curve: ChargingCurve::default(), epsilon: 0.2, epsilons: None, initial_phases: None, max_cycles: 10_000, seed: 0, trials: 1 }
    }
}

impl PcoConfig {
    pub fn epsilons(&self) -> Vec<f64> {
        self.epsilons.clone().unwrap_or_else(|| vec![self.epsilon; self.n])
    }

    pub fn initial_phases(&self) -> Vec<f64> {
        self.initial_phases.clone().unwrap_or_else(|| {
            let mut rng = stream(self.seed, Stream::Phases, 0, 0);
            (0..self.n).map(|_| rng.random::<f64>()).collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("pco needs at least one oscillator"));
        }
        if self.trials == 0 {
            return Err(Error::config("pco trials must be at least 1"));
        }
        self.curve.validate()?;
        let eps = self.epsilons();
        if eps.len() != self.n || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::config("pco needs one positive coupling strength per node"));
        }
        let phases = self.initial_phases();
        if phases.len() != self.n || phases.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(Error::config("pco needs one initial phase in [0, 1) per node"));
        }
        if !self.curve.is_concave_on_grid(64) {
            return Err(Error::config("charging curve is not concave"));
        }
        Ok(())
    }

    /// Copy with drawn phases and per-node couplings written out.
    pub fn resolved(&self) -> Result<PcoConfig> {
        self.validate()?;
        Ok(PcoConfig { epsilons: Some(self.epsilons()), initial_phases: Some(self.initial_phases()), ..self.clone() })
    }
}

/// Absolute next-fire time of every oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct PcoState {
    pub time: f64,
    pub next_fire: Vec<f64>,
    /// Number of times node 0 has fired.
    pub cycles: usize,
}

impl PcoState {
    /// State at time 0: phase `φ` fires after `1 - φ`.
    pub fn new(config: &PcoConfig) -> Result<Self> {
        config.validate()?;
        Ok(PcoState { time: 0.0, next_fire: config.initial_phases().iter().map(|p| 1.0 - p).collect(), cycles: 0 })
    }

    /// Nodes grouped by coinciding next-fire time, earliest group first.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.next_fire.len()).collect();
        order.sort_by(|&a, &b| self.next_fire[a].total_cmp(&self.next_fire[b]).then(a.cmp(&b)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if self.next_fire[i] - self.next_fire[g[0]] <= MERGE_TOL => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        groups
    }

    pub fn is_synchronized(&self) -> bool {
        self.groups().len() == 1
    }
}

/// One firing instant: the group that reached threshold and the nodes it
/// (directly or through a cascade) pulled along.
#[derive(Debug, Clone, PartialEq)]
pub struct FireEvent {
    pub time: f64,
    pub initiators: Vec<usize>,
    pub absorbed: Vec<usize>,
}

impl FireEvent {
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.initiators.iter().chain(&self.absorbed).copied()
    }
}

/// Advance to the earliest firing and apply the pulse to every other node.
pub fn pco_step(state: &PcoState, config: &PcoConfig) -> (PcoState, FireEvent) {
    let curve = config.curve;
    let eps = config.epsilons();
    let z = state.next_fire.iter().copied().fold(f64::INFINITY, f64::min);
    let n = state.next_fire.len();
    let initiators: Vec<usize> = (0..n).filter(|&i| state.next_fire[i] - z <= MERGE_TOL).collect();
    let mut fired = vec![false; n];
    for &i in &initiators {
        fired[i] = true;
    }
    // states x = f(φ) of the listeners; pulses add in x
    let mut x: Vec<f64> = state
        .next_fire
        .iter()
        .map(|&t| curve.f((1.0 - (t - z)).clamp(0.0, 1.0)))
        .collect();
    let mut absorbed = Vec::new();
    let mut kick: f64 = initiators.iter().map(|&i| eps[i]).sum();
    while kick > 0.0 {
        let mut next_kick = 0.0;
        for i in 0..n {
            if fired[i] {
                continue;
            }
            x[i] += kick;
            if x[i] >= 1.0 {
                fired[i] = true;
                absorbed.push(i);
                next_kick += eps[i];
            }
        }
        kick = next_kick;
    }
    let next_fire = (0..n)
        .map(|i| if fired[i] { z + 1.0 } else { z + 1.0 - curve.f_inverse(x[i]) })
        .collect();
    let cycles = state.cycles + usize::from(fired[0]);
    (PcoState { time: z, next_fire, cycles }, FireEvent { time: z, initiators, absorbed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncOutcome {
    Synchronized { cycles: usize },
    Timeout { cycles: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcoRun {
    pub outcome: SyncOutcome,
    pub events: Vec<FireEvent>,
    pub final_state: PcoState,
}

/// Step until every node fires in one group or node 0 has fired `max_cycles` times.
pub fn pco_run_to_sync(config: &PcoConfig) -> Result<PcoRun> {
    let mut state = PcoState::new(config)?;
    let mut events = Vec::new();
    loop {
        if state.is_synchronized() {
            return Ok(PcoRun { outcome: SyncOutcome::Synchronized { cycles: state.cycles }, events, final_state: state });
        }
        if state.cycles >= config.max_cycles {
            return Ok(PcoRun { outcome: SyncOutcome::Timeout { cycles: state.cycles }, events, final_state: state });
        }
        let (next, ev) = pco_step(&state, config);
        state = next;
        events.push(ev);
    }
}

/// `time,node,kind` rows, `kind` being `initiator` or `absorbed`.
pub fn write_fires_csv<W: Write>(w: &mut W, events: &[FireEvent]) -> std::io::Result<()> {
    let rows = events.iter().flat_map(|e| {
        let a = e.initiators.iter().map(move |&i| (e.time, i, "initiator"));
        let b = e.absorbed.iter().map(move |&i| (e.time, i, "absorbed"));
        a.chain(b).map(|(t, i, k)| vec![output::float(t), i.to_string(), k.to_string()])
    });
    output::write_csv(w, &["time", "node", "kind"], rows)
}
