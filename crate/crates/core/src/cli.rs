//! Command-line front end: argument parsing, config resolution, experiment
//! dispatch and artifact writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{sample_fix, DelayDistribution, PathlossDistribution};
use crate::config::{ChannelSampleConfig, FileConfig, RunInfo, SampleKind, WaveformConfig};
use crate::engine::{self, estimate_epsilon, Network, Regime, ScenarioConfig};
use crate::error::{Error, Result};
use crate::multihop::{self, HopChainConfig};
use crate::output;
use crate::pco::{self, PcoConfig, SyncOutcome};
use crate::rng::{stream, Stream};
use crate::waveform::{self, Aggregate, CrossingReport, LimitWaveform, Pulse, TransmitEvent};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "CHRONOMESH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chronomesh", version, about = "Cooperative time synchronization simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config file (a previous run's manifest.toml also works).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub sigma2: Option<f64>,
    #[arg(long, global = true)]
    pub phases: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub hops: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One aggregate waveform, its zero-crossing and the limit waveform.
    Waveform,
    /// No-delay steady-state phases.
    Steady,
    /// Alternating even/odd phases.
    Evenodd,
    /// Propagation-delay phases.
    Delay {
        /// Solve for the crossing offset before running the phases.
        #[arg(long)]
        estimate_epsilon: bool,
    },
    /// Pulse-coupled oscillators until absorption.
    Pco,
    /// Cascaded skew estimation along a chain.
    Multihop,
    /// Draw channel samples for one receiver.
    ChannelSample,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Waveform => "waveform",
            Command::Steady => "steady",
            Command::Evenodd => "evenodd",
            Command::Delay { .. } => "delay",
            Command::Pco => "pco",
            Command::Multihop => "multihop",
            Command::ChannelSample => "channel-sample",
        }
    }
}

/// Parse `argv`, run the command and map the outcome to an exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("chronomesh: {e}");
        return 2;
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("chronomesh: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Numeric { .. } => 3,
        Error::Io(_) => 1,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a second call in one process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn reject(cli: &Cli, allowed: &[&str]) -> Result<()> {
    let given = [
        ("nodes", cli.nodes.is_some()),
        ("m", cli.m.is_some()),
        ("sigma2", cli.sigma2.is_some()),
        ("phases", cli.phases.is_some()),
        ("trials", cli.trials.is_some()),
        ("hops", cli.hops.is_some()),
    ];
    for (flag, set) in given {
        if set && !allowed.contains(&flag) {
            return Err(Error::config(format!("--{flag} does not apply to {}", cli.command.name())));
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    std::fs::create_dir_all(&cli.out)?;
    let mut manifest = FileConfig {
        run: Some(RunInfo {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: cli.command.name().to_string(),
            config_path: cli.config.as_ref().map(|p| p.display().to_string()),
            seed: 0,
            out: cli.out.display().to_string(),
        }),
        ..FileConfig::default()
    };
    let seed = match cli.command {
        Command::Waveform => {
            reject(cli, &["nodes", "sigma2"])?;
            let mut cfg = file.waveform.unwrap_or_default();
            set(&mut cfg.n_nodes, cli.nodes);
            set(&mut cfg.sigma_bar2, cli.sigma2);
            set(&mut cfg.seed, cli.seed);
            let cfg = cfg.resolved()?;
            run_waveform(&cfg, &cli.out)?;
            manifest.waveform = Some(cfg.clone());
            cfg.seed
        }
        Command::Steady | Command::Evenodd | Command::Delay { .. } => {
            reject(cli, &["nodes", "m", "sigma2", "phases"])?;
            let regime = match cli.command {
                Command::Steady => Regime::NoDelay,
                Command::Evenodd => Regime::EvenOdd,
                _ => Regime::Delay,
            };
            let mut cfg = file.scenario.unwrap_or_else(|| ScenarioConfig::for_regime(regime));
            cfg.regime = regime;
            set(&mut cfg.n_nodes, cli.nodes);
            set(&mut cfg.m, cli.m);
            set(&mut cfg.clocks.sigma2, cli.sigma2);
            set(&mut cfg.phases, cli.phases);
            set(&mut cfg.seed, cli.seed);
            let mut cfg = cfg.resolved()?;
            let mut offsets = Vec::new();
            let search_flag = matches!(cli.command, Command::Delay { estimate_epsilon: true });
            // an [epsilon_search] table also turns the search on, so manifests replay it
            if search_flag || (regime == Regime::Delay && file.epsilon_search.is_some()) {
                let search = file.epsilon_search.unwrap_or_default();
                let rep = estimate_epsilon(&cfg, &search)?;
                write_epsilon(&cli.out, &rep)?;
                if !rep.converged {
                    eprintln!("chronomesh: epsilon search did not converge after {} iterations", rep.iterations);
                }
                manifest.scenario = Some(cfg.clone());
                manifest.epsilon_search = Some(search);
                cfg.epsilon = rep.epsilon;
                offsets = rep.boundary.clone();
            } else {
                manifest.scenario = Some(cfg.clone());
            }
            let mut net = Network::with_replicate(&cfg, 0, &offsets)?;
            let reports = net.run()?;
            write_file(&cli.out.join("phases.csv"), |w| engine::write_phase_csv(w, &reports))?;
            write_file(&cli.out.join("crossings.csv"), |w| engine::write_crossing_csv(w, &reports))?;
            cfg.seed
        }
        Command::Pco => {
            reject(cli, &["nodes", "trials"])?;
            let mut cfg = file.pco.unwrap_or_default();
            if let Some(n) = cli.nodes {
                cfg.n = n;
                cfg.epsilons = None;
                cfg.initial_phases = None;
            }
            set(&mut cfg.seed, cli.seed);
            set(&mut cfg.trials, cli.trials);
            // drawn phases are only written out for a single run; a census redraws them per seed
            let cfg = if cfg.trials == 1 { cfg.resolved()? } else { cfg.validate().map(|_| cfg)? };
            run_pco(&cfg, &cli.out)?;
            manifest.pco = Some(cfg.clone());
            cfg.seed
        }
        Command::Multihop => {
            reject(cli, &["m", "sigma2", "trials", "hops"])?;
            let mut cfg = file.multihop.unwrap_or_default();
            set(&mut cfg.m, cli.m);
            set(&mut cfg.sigma2, cli.sigma2);
            set(&mut cfg.trials, cli.trials);
            if let Some(h) = cli.hops {
                cfg.hops = h;
                cfg.alphas = None;
            }
            set(&mut cfg.seed, cli.seed);
            run_multihop(&cfg, &cli.out)?;
            manifest.multihop = Some(cfg.clone());
            cfg.seed
        }
        Command::ChannelSample => {
            reject(cli, &["trials"])?;
            let mut cfg = file.channel_sample.unwrap_or_default();
            set(&mut cfg.samples, cli.trials);
            set(&mut cfg.seed, cli.seed);
            let cfg = cfg.resolved()?;
            run_channel_sample(&cfg, &cli.out)?;
            manifest.channel_sample = Some(cfg.clone());
            cfg.seed
        }
    };
    if let Some(r) = manifest.run.as_mut() {
        r.seed = seed;
    }
    std::fs::write(cli.out.join("manifest.toml"), manifest.to_toml()?)?;
    Ok(())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// One realized waveform experiment.
#[derive(Debug, Clone)]
pub struct WaveformRun {
    pub events: Vec<TransmitEvent>,
    pub pulse: Pulse,
    pub aggregate: Aggregate,
    pub crossing: CrossingReport,
    pub limit: LimitWaveform,
}

/// Draw `n_nodes` transmissions around `tau0` and locate the crossing.
pub fn simulate_waveform(cfg: &WaveformConfig) -> Result<WaveformRun> {
    let cfg = cfg.resolved()?;
    let pulse = Pulse::new(cfg.shape, cfg.tau_nz, cfg.a_max)?;
    let dist = PathlossDistribution::new(&cfg.channel, &cfg.region, cfg.receiver())?;
    let mut rng = stream(cfg.seed, Stream::Waveform, 0, 0);
    let sd = cfg.sigma_bar2.sqrt();
    let n = cfg.n_nodes as f64;
    let events: Vec<TransmitEvent> = (0..cfg.n_nodes)
        .map(|_| {
            let alpha = cfg.skew.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            let k = dist.sample(&mut rng);
            TransmitEvent::new(cfg.tau0 + sd * z / alpha, k / n)
        })
        .collect();
    let aggregate = Aggregate::new(&events, pulse)?;
    let crossing = aggregate.find_crossing(cfg.tau0, cfg.channel.gamma, cfg.tau_nz / 1000.0)?;
    let limit = LimitWaveform { pulse, tau0: cfg.tau0, sigma_bar2: cfg.sigma_bar2, skew: cfg.skew, mean_pathloss: dist.mean()? };
    Ok(WaveformRun { events, pulse, aggregate, crossing, limit })
}

fn run_waveform(cfg: &WaveformConfig, out: &Path) -> Result<()> {
    let run = simulate_waveform(cfg)?;
    let tau = cfg.tau_nz;
    let trace = run.aggregate.trace(cfg.tau0 - tau, cfg.tau0 + tau, cfg.trace_points);
    write_file(&out.join("trace.csv"), |w| waveform::write_trace_csv(w, &trace))?;
    let c = run.crossing;
    write_file(&out.join("crossing.csv"), |w| {
        output::write_csv(
            w,
            &["location", "max_amplitude", "outcome"],
            [vec![output::opt_float(c.location), output::float(c.max_amplitude), c.outcome.as_str().to_string()]],
        )
    })?;
    if cfg.limit {
        let eta: Vec<(f64, f64)> = trace
            .iter()
            .map(|(t, _)| Ok((*t, run.limit.eval(*t)?)))
            .collect::<Result<_>>()?;
        write_file(&out.join("limit.csv"), |w| waveform::write_trace_csv(w, &eta))?;
    }
    Ok(())
}

fn write_epsilon(out: &Path, rep: &engine::EpsilonReport) -> Result<()> {
    write_file(&out.join("epsilon.csv"), |w| {
        let mut rows: Vec<Vec<String>> = rep
            .history
            .iter()
            .enumerate()
            .map(|(k, e)| vec!["interior".into(), k.to_string(), output::float(*e)])
            .collect();
        rows.extend(rep.boundary.iter().map(|(node, e)| vec![format!("node_{node}"), rep.iterations.to_string(), output::float(*e)]));
        rows.push(vec!["converged".into(), rep.iterations.to_string(), u8::from(rep.converged).to_string()]);
        output::write_csv(w, &["series", "iteration", "value"], rows)
    })
}

fn run_pco(cfg: &PcoConfig, out: &Path) -> Result<()> {
    let first = pco::pco_run_to_sync(cfg)?;
    write_file(&out.join("fires.csv"), |w| pco::write_fires_csv(w, &first.events))?;
    let mut outcomes = vec![(cfg.seed, first.outcome)];
    for k in 1..cfg.trials as u64 {
        let seed = cfg.seed.wrapping_add(k);
        outcomes.push((seed, pco::pco_run_to_sync(&PcoConfig { seed, ..cfg.clone() })?.outcome));
    }
    write_file(&out.join("census.csv"), |w| {
        output::write_csv(
            w,
            &["seed", "outcome", "cycles"],
            outcomes.iter().map(|(s, o)| {
                let (name, c) = match o {
                    SyncOutcome::Synchronized { cycles } => ("synchronized", cycles),
                    SyncOutcome::Timeout { cycles } => ("timeout", cycles),
                };
                vec![s.to_string(), name.to_string(), c.to_string()]
            }),
        )
    })
}

fn run_multihop(cfg: &HopChainConfig, out: &Path) -> Result<()> {
    let report = multihop::run_cascade(cfg)?;
    write_file(&out.join("cascade.csv"), |w| multihop::write_cascade_csv(w, &report))?;
    let fit = (report.empirical_variances.len() >= 3).then(|| report.variance_fit());
    write_file(&out.join("report.txt"), |w| {
        if let Some(f) = fit {
            writeln!(w, "variance vs (hop - 2): slope {:.6} (se {:.6}), intercept {:.6} (se {:.6})", f.slope, f.slope_se, f.intercept, f.intercept_se)?;
        }
        writeln!(
            w,
            "pairwise cascade: the skew estimate variance grows by a fixed amount per hop and is unbounded in chain length."
        )?;
        writeln!(
            w,
            "cooperative scheme: every node observes the same aggregate crossing, whose error does not depend on hop distance (see the steady subcommand)."
        )
    })
}

fn run_channel_sample(cfg: &ChannelSampleConfig, out: &Path) -> Result<()> {
    let mut rng = stream(cfg.seed, Stream::Reception, 0, 0);
    let receiver = cfg.receiver();
    let rows: Vec<Vec<String>> = match cfg.kind {
        SampleKind::Pathloss => {
            let d = PathlossDistribution::new(&cfg.channel, &cfg.region, receiver)?;
            (0..cfg.samples).map(|_| vec![output::float(d.sample(&mut rng))]).collect()
        }
        SampleKind::Delay => {
            let d = DelayDistribution::new(&cfg.channel, &cfg.region, receiver)?;
            (0..cfg.samples)
                .map(|_| {
                    let (x, k) = d.sample_pair(&mut rng);
                    vec![output::float(x), output::float(k)]
                })
                .collect()
        }
        SampleKind::Fix => {
            let d = DelayDistribution::new(&cfg.channel, &cfg.region, receiver)?;
            (0..cfg.samples)
                .map(|_| {
                    let f = sample_fix(&d, &cfg.channel, &mut rng)?;
                    Ok(vec![output::float(f.d_fix), output::float(f.k_fix)])
                })
                .collect::<Result<_>>()?
        }
    };
    let header: &[&str] = match cfg.kind {
        SampleKind::Pathloss => &["gain"],
        SampleKind::Delay => &["delay", "gain"],
        SampleKind::Fix => &["d_fix", "k_fix"],
    };
    write_file(&out.join("samples.csv"), |w| output::write_csv(w, header, rows))
}
