//! PWM vs staircase propagation timing across chain sizes and control counts.

use std::io::Write;
use std::time::Instant;

use pwmqoc::algebra::{expm_pade, frob_dist, pade_call_count, eig_call_count, Complex64, ComplexMatrix};
use pwmqoc::device::{build_chain, Axis, DeviceSpec};
use pwmqoc::encoding::{staircase_from_train, PulseTrain};
use pwmqoc::error::{Error, Result};
use pwmqoc::optimization::random_initial_train;
use pwmqoc::propagation::{
    interval_segments, propagate_staircase, propagate_train, Control, ControlSystem, EigenCache, StaircaseMethod,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Interval length used for every bench train, ns.
pub const BENCH_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchCase {
    /// Atoms in the chain; `d = 3^n`.
    pub n: usize,
    /// Number of controls.
    pub k: usize,
    /// Intervals per train.
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
}

/// One row of the γ table. Times are medians over `reps`, in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub dim: usize,
    pub t_pwm_ms: f64,
    pub t_baseline_ms: f64,
    pub gamma: f64,
    /// Generic exponentials evaluated inside the timed PWM runs.
    pub pwm_expm_calls: u64,
    /// Eigendecompositions inside the timed PWM runs.
    pub pwm_eig_calls: u64,
    pub baseline_expm_calls: u64,
    pub cache_entries: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// `‖U_pwm - U_segments‖_F` against a segment-by-segment Padé product.
    pub cross_path_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let rows = csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(BenchReport { rows })
    }
}

/// Chain drift with `k` controls, each a random real mix of the local
/// `X`, `Y`, `Z` operators of every atom.
pub fn bench_system(n: usize, k: usize, seed: u64) -> Result<ControlSystem> {
    let spec = DeviceSpec::chain(n).with_axes(&[Axis::X, Axis::Y, Axis::Z]);
    let chain = build_chain(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = chain.dim();
    let controls = (0..k)
        .map(|_| {
            let mut h = ComplexMatrix::zeros(d, d);
            for local in chain.controls() {
                h += &local.h * Complex64::from(rng.random_range(-1.0..1.0));
            }
            let xi = 2.0 * std::f64::consts::PI * rng.random_range(0.05..0.15);
            Control { h, xi }
        })
        .collect();
    ControlSystem::new(chain.h0().clone(), controls)
}

/// Product of Padé exponentials over each nested segment, an independent
/// route to the same unitary as [`propagate_train`].
pub fn segment_pade_product(system: &ControlSystem, train: &PulseTrain) -> Result<ComplexMatrix> {
    let d = system.dim();
    let mut u = ComplexMatrix::identity(d, d);
    for m in 0..train.intervals() {
        for seg in interval_segments(&train.interval_widths(m), train.tau())? {
            let key = seg.pattern.generator(train.amplitudes(), train.levels());
            u = expm_pade(&system.hamiltonian(key.drift(), &key.coefficients()), seg.duration) * u;
        }
    }
    Ok(u)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Times one case. The first run of each path is a warmup.
pub fn run_case(case: &BenchCase) -> Result<BenchRow> {
    if case.reps < 3 {
        return Err(Error::InvalidInput(format!("{} repetitions; at least 3 are needed", case.reps)));
    }
    if case.n == 0 || case.m == 0 {
        return Err(Error::InvalidInput("bench cases need at least one atom and one interval".into()));
    }
    let system = bench_system(case.n, case.k, case.seed)?;
    let train = random_initial_train(system.amplitudes(), BENCH_TAU, case.m, case.seed.wrapping_add(1))?;
    let stair = staircase_from_train(&train);
    let cache = EigenCache::new(&system);

    let u_pwm = propagate_train(&system, &train, &cache)?;
    propagate_staircase(&system, &stair, BENCH_TAU, StaircaseMethod::Pade)?;
    let cross_path_error = frob_dist(&u_pwm, &segment_pade_product(&system, &train)?)?;

    let (pade0, eig0) = (pade_call_count(), eig_call_count());
    let mut t_pwm = Vec::with_capacity(case.reps);
    for _ in 0..case.reps {
        let start = Instant::now();
        std::hint::black_box(propagate_train(&system, &train, &cache)?);
        t_pwm.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let (pwm_expm_calls, pwm_eig_calls) = (pade_call_count() - pade0, eig_call_count() - eig0);

    let pade1 = pade_call_count();
    let mut t_base = Vec::with_capacity(case.reps);
    for _ in 0..case.reps {
        let start = Instant::now();
        std::hint::black_box(propagate_staircase(&system, &stair, BENCH_TAU, StaircaseMethod::Pade)?);
        t_base.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let baseline_expm_calls = pade_call_count() - pade1;

    let (t_pwm_ms, t_baseline_ms) = (median(t_pwm), median(t_base));
    Ok(BenchRow {
        n: case.n,
        k: case.k,
        m: case.m,
        reps: case.reps,
        seed: case.seed,
        dim: system.dim(),
        t_pwm_ms,
        t_baseline_ms,
        gamma: t_pwm_ms / t_baseline_ms,
        pwm_expm_calls,
        pwm_eig_calls,
        baseline_expm_calls,
        cache_entries: cache.len(),
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
        cross_path_error,
    })
}

/// Runs the cases one after another, in order.
pub fn run_bench(cases: &[BenchCase]) -> Result<BenchReport> {
    Ok(BenchReport { rows: cases.iter().map(run_case).collect::<Result<_>>()? })
}

fn parse_range(text: &str) -> Option<(usize, usize)> {
    match text.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (a <= b).then_some((a, b))
        }
        None => text.trim().parse().ok().map(|v| (v, v)),
    }
}

/// Parses `N=1..4,K=1..8` (inclusive ranges or single values) into `(n, k)`
/// pairs, `n` outermost.
pub fn parse_grid(text: &str) -> Result<Vec<(usize, usize)>> {
    let bad = || Error::Malformed(format!("grid {text:?} is not of the form N=a..b,K=c..d"));
    let (mut n, mut k) = (None, None);
    for part in text.split(',') {
        let (name, range) = part.split_once('=').ok_or_else(bad)?;
        let range = parse_range(range).ok_or_else(bad)?;
        match name.trim() {
            "N" | "n" => n = Some(range),
            "K" | "k" => k = Some(range),
            _ => return Err(bad()),
        }
    }
    let ((n0, n1), (k0, k1)) = (n.ok_or_else(bad)?, k.ok_or_else(bad)?);
    Ok((n0..=n1).flat_map(|n| (k0..=k1).map(move |k| (n, k))).collect())
}
