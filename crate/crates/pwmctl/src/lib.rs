//! `pwmctl`: file-driven front end to `pwmqoc` plus the propagation benchmark.
//!
//! Exit status is 0 on success, 2 when an input file or argument is malformed
//! and 1 when a computation fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pwmqoc::algebra::MatrixJson;
use pwmqoc::device::{embed_gate, DeviceSpec, Gate};
use pwmqoc::encoding::{spectrum_compare, PulseTrain, TrainSignal, Waveform};
use pwmqoc::error::Error;
use pwmqoc::io::{
    read_system_json, read_train_csv, write_spectrum_csv, write_trace_csv, write_train_csv, UnitaryJson,
};
use pwmqoc::optimization::{optimize, random_initial_train, Objective, OptimizerConfig, Termination};
use pwmqoc::propagation::{
    jitter_expectation_train, jitter_monte_carlo, propagate_hard_pulse, propagate_higher_order, propagate_train,
    ControlSystem, EigenCache, JitterConfig, JitterSigma,
};

pub mod bench;

pub use bench::{run_bench, BenchCase, BenchReport, BenchRow};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "PWMCTL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "pwmctl", version, about = "Pulse-width-modulated control toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert waveforms to a three-level pulse train.
    Convert(ConvertArgs),
    /// Compare the spectra of a waveform and its pulse train.
    Spectrum(SpectrumArgs),
    /// Propagate a system under a pulse train.
    Propagate(PropagateArgs),
    /// Optimize the pulse widths for a gate on a transmon chain.
    Optimize(OptimizeArgs),
    /// Time PWM against staircase propagation.
    Bench(BenchArgs),
    /// Monte Carlo study of switching-time jitter.
    Jitter(JitterArgs),
}

#[derive(Debug, Args)]
struct ConvertArgs {
    /// JSON waveform, or a list of them (one per control).
    #[arg(long)]
    waveform: PathBuf,
    /// Interval length, ns.
    #[arg(long)]
    tau: f64,
    /// Pulse amplitude in rad/ns, or `auto` for max |u|.
    #[arg(long, default_value = "auto")]
    xi: String,
    /// Interval count; defaults to the waveform's natural duration over τ.
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long)]
    waveform: PathBuf,
    #[arg(long)]
    train: PathBuf,
    /// Interval length of the train, ns.
    #[arg(long)]
    tau: f64,
    /// 1-based control whose waveform is compared.
    #[arg(long, default_value_t = 1)]
    control: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PropagateArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    tau: f64,
    /// Instantaneous-kick limit instead of finite pulses.
    #[arg(long, conflicts_with = "order")]
    hard_pulse: bool,
    /// Triple-jump level `n` (order `2n+1`); 0 is the plain scheme.
    #[arg(long)]
    order: Option<usize>,
    /// NOT, CNOT or CCZ; reports the fidelity against it.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    device: PathBuf,
    #[arg(long)]
    gate: String,
    /// Gate time, ns.
    #[arg(long = "T")]
    duration: f64,
    /// Interval count.
    #[arg(long = "M")]
    intervals: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "N=1..4,K=1..8")]
    grid: String,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 100)]
    intervals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct JitterArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    tau: f64,
    /// Width standard deviation as a fraction of each |width|.
    #[arg(long)]
    sigma_rel: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Summary written next to the optimized train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub gate: String,
    pub duration_ns: f64,
    pub intervals: usize,
    pub tau_ns: f64,
    pub seed: u64,
    pub fidelity: f64,
    pub staircase_fidelity: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numeric(String),
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input<E: std::fmt::Display>(context: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", context.display()))
}

fn numeric(e: Error) -> Failure {
    if e.is_input_error() {
        Failure::Input(e.to_string())
    } else {
        Failure::Numeric(e.to_string())
    }
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(input(path))
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Numeric(format!("{}: {e}", path.display())))
}

fn check_tau(tau: f64) -> Outcome<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Failure::Input(format!("--tau {tau} must be positive")))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WaveformFile {
    One(Waveform),
    Many(Vec<Waveform>),
}

fn read_waveforms(path: &Path) -> Outcome<Vec<Waveform>> {
    let ws = match serde_json::from_reader(open(path)?).map_err(input(path))? {
        WaveformFile::One(w) => vec![w],
        WaveformFile::Many(ws) => ws,
    };
    for w in &ws {
        w.validate().map_err(input(path))?;
    }
    if ws.is_empty() {
        return Err(Failure::Input(format!("{}: no waveforms", path.display())));
    }
    Ok(ws)
}

fn read_train(path: &Path, tau: f64) -> Outcome<PulseTrain> {
    check_tau(tau)?;
    read_train_csv(open(path)?, tau).map_err(input(path))
}

/// A header-only train file stands for an empty train on any system.
fn train_for(system: &ControlSystem, train: PulseTrain) -> Outcome<PulseTrain> {
    if train.controls() == 0 && train.intervals() == 0 {
        return PulseTrain::zeros(train.tau(), system.amplitudes(), 0).map_err(numeric);
    }
    if train.controls() != system.control_count() {
        return Err(Failure::Input(format!(
            "train has {} controls, system has {}",
            train.controls(),
            system.control_count()
        )));
    }
    Ok(train)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    serde_json::to_writer_pretty(create(path)?, value).map_err(|e| Failure::Numeric(e.to_string()))
}

fn convert(a: ConvertArgs) -> Outcome<()> {
    check_tau(a.tau)?;
    let ws = read_waveforms(&a.waveform)?;
    let intervals = match a.intervals {
        Some(m) => m,
        None => (ws[0].natural_duration() / a.tau).round() as usize,
    };
    let xi = match a.xi.as_str() {
        "auto" => None,
        v => Some(vec![v.parse::<f64>().map_err(|e| Failure::Input(format!("--xi {v}: {e}")))?; ws.len()]),
    };
    let train = PulseTrain::from_waveforms(&ws, a.tau, intervals, xi.as_deref()).map_err(numeric)?;
    write_train_csv(&train, create(&a.out)?).map_err(numeric)
}

fn spectrum(a: SpectrumArgs) -> Outcome<()> {
    let ws = read_waveforms(&a.waveform)?;
    let train = read_train(&a.train, a.tau)?;
    let k = a.control.checked_sub(1).filter(|&k| k < ws.len() && k < train.controls());
    let k = k.ok_or_else(|| Failure::Input(format!("--control {} is out of range", a.control)))?;
    let report = spectrum_compare(&ws[k], &train, k, train.duration()).map_err(numeric)?;
    write_spectrum_csv(&report, create(&a.out)?).map_err(numeric)?;
    println!(
        "threshold {:.6} rad/ns, max relative deviation below guard {:.4e}",
        report.threshold, report.max_relative_deviation_below_threshold
    );
    Ok(())
}

/// Embeds a named gate into a system of dimension `levels^qubits`.
fn target_for(name: &str, dim: usize) -> Outcome<Objective> {
    let gate = Gate::from_name(name).map_err(|e| Failure::Input(e.to_string()))?;
    let q = gate.qubits().unwrap_or(1) as u32;
    let levels = (dim as f64).powf(1.0 / f64::from(q)).round() as usize;
    if levels < 2 || levels.pow(q) != dim {
        return Err(Failure::Input(format!("a {q}-qubit gate does not fit a {dim}-dimensional system")));
    }
    let spec = DeviceSpec { levels, ..DeviceSpec::chain(q as usize) };
    let target = embed_gate(&gate, &spec).map_err(numeric)?;
    // the objective only needs the system for its dimension here
    let sys = ControlSystem::new(pwmqoc::algebra::ComplexMatrix::zeros(dim, dim), vec![]).map_err(numeric)?;
    Objective::new(sys, target).map_err(numeric)
}

fn propagate(a: PropagateArgs) -> Outcome<()> {
    let system = read_system_json(open(&a.system)?).map_err(input(&a.system))?;
    let train = train_for(&system, read_train(&a.train, a.tau)?)?;
    let objective = a.target.as_deref().map(|t| target_for(t, system.dim())).transpose()?;
    let cache = EigenCache::new(&system);
    let u = if a.hard_pulse {
        propagate_hard_pulse(&system, &train, &cache)
    } else if let Some(n) = a.order {
        let signals: Vec<TrainSignal> = (0..train.controls()).map(|k| TrainSignal::new(&train, k)).collect();
        propagate_higher_order(&system, &signals, train.amplitudes(), train.tau(), train.intervals(), n, &cache)
    } else {
        propagate_train(&system, &train, &cache)
    }
    .map_err(numeric)?;
    let fidelity = objective.as_ref().map(|o| o.fidelity(&u)).transpose().map_err(numeric)?;
    if let Some(j) = fidelity {
        println!("J = {j:.10}");
    }
    write_json(&a.out, &UnitaryJson { unitary: MatrixJson::from(&u), target: a.target, fidelity })
}

fn optimize_cmd(a: OptimizeArgs) -> Outcome<()> {
    let spec: DeviceSpec = serde_json::from_reader(open(&a.device)?).map_err(input(&a.device))?;
    spec.validate().map_err(input(&a.device))?;
    let gate = Gate::from_name(&a.gate).map_err(|e| Failure::Input(e.to_string()))?;
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_reader::<_, OptimizerConfig>(open(p)?).map_err(input(p))?,
        None => OptimizerConfig::default(),
    };
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(|e| Failure::Input(e.to_string()))?;
    if !(a.duration > 0.0 && a.duration.is_finite()) || a.intervals == 0 {
        return Err(Failure::Input("--T must be positive and --M at least 1".into()));
    }
    let tau = a.duration / a.intervals as f64;
    let obj = Objective::for_device(&spec, &gate).map_err(numeric)?;
    let initial = random_initial_train(obj.system().amplitudes(), tau, a.intervals, cfg.seed).map_err(numeric)?;
    let result = optimize(&obj, &initial, &cfg).map_err(numeric)?;
    let staircase_fidelity = obj.evaluate_staircase_conversion(&result.train).map_err(numeric)?;

    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Numeric(format!("{}: {e}", a.out.display())))?;
    write_train_csv(&result.train, create(&a.out.join("train.csv"))?).map_err(numeric)?;
    write_trace_csv(&result.trace, create(&a.out.join("trace.csv"))?).map_err(numeric)?;
    let summary = OptimizeSummary {
        gate: gate.name().into(),
        duration_ns: a.duration,
        intervals: a.intervals,
        tau_ns: tau,
        seed: cfg.seed,
        fidelity: result.fidelity,
        staircase_fidelity,
        termination: result.termination,
        iterations: result.trace.last().map_or(0, |p| p.iteration),
        wall_time_s: result.wall_time.as_secs_f64(),
    };
    write_json(&a.out.join("result.json"), &summary)?;
    println!(
        "{}: J = {:.6}, staircase J = {:.6} ({:?})",
        summary.gate, summary.fidelity, summary.staircase_fidelity, summary.termination
    );
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Outcome<()> {
    let grid = bench::parse_grid(&a.grid).map_err(|e| Failure::Input(e.to_string()))?;
    let cases: Vec<BenchCase> =
        grid.into_iter().map(|(n, k)| BenchCase { n, k, m: a.intervals, reps: a.reps, seed: a.seed }).collect();
    if a.reps < 3 {
        return Err(Failure::Input("--reps must be at least 3".into()));
    }
    let mut rows = Vec::with_capacity(cases.len());
    for case in &cases {
        let row = bench::run_case(case).map_err(numeric)?;
        eprintln!("N={} K={} gamma={:.3} cross-path {:.2e}", row.n, row.k, row.gamma, row.cross_path_error);
        rows.push(row);
    }
    BenchReport { rows }.write_csv(create(&a.out)?).map_err(numeric)
}

#[derive(Serialize)]
struct JitterRow {
    m: usize,
    mc_deviation_fro: f64,
    expected_deviation_fro: f64,
}

fn jitter(a: JitterArgs) -> Outcome<()> {
    let system = read_system_json(open(&a.system)?).map_err(input(&a.system))?;
    let train = train_for(&system, read_train(&a.train, a.tau)?)?;
    if a.trials == 0 {
        return Err(Failure::Input("--trials must be at least 1".into()));
    }
    let sigma = JitterSigma::Relative(a.sigma_rel);
    let cache = EigenCache::new(&system);
    let cfg = JitterConfig { sigma: sigma.clone(), trials: a.trials, seed: a.seed };
    let report = jitter_monte_carlo(&system, &train, &cfg, &cache).map_err(numeric)?;
    let expected = jitter_expectation_train(&system, &train, &sigma).map_err(numeric)?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    for (m, (mc, ex)) in report.mean_deviation.iter().zip(&expected).enumerate() {
        let row = JitterRow { m: m + 1, mc_deviation_fro: mc.norm(), expected_deviation_fro: ex.norm() };
        w.serialize(row).map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Numeric(e.to_string()))?;
    println!(
        "mean fidelity {:.8} (std {:.3e}), relative loss {:.3e}",
        report.mean_fidelity,
        report.fidelity_std,
        report.relative_fidelity_loss()
    );
    Ok(())
}

fn configure_threads() -> Outcome<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = text.trim().parse().map_err(|_| Failure::Input(format!("{THREADS_ENV}={text} is not a count")))?;
    // a pool may already exist when called from a library user; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let run = || -> Outcome<()> {
        configure_threads()?;
        match parsed.command {
            Command::Convert(a) => convert(a),
            Command::Spectrum(a) => spectrum(a),
            Command::Propagate(a) => propagate(a),
            Command::Optimize(a) => optimize_cmd(a),
            Command::Bench(a) => bench_cmd(a),
            Command::Jitter(a) => jitter(a),
        }
    };
    match run() {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("pwmctl: {msg}");
            2
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("pwmctl: {msg}");
            1
        }
    }
}
