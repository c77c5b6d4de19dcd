use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pwm::propagate_interval;
use super::{interval_propagators, EigenCache, ControlSystem};
use crate::algebra::{Complex64, ComplexMatrix};
use crate::encoding::{LevelScheme, PulseTrain};
use crate::error::{Error, Result};

const PAIRS_PER_CHUNK: usize = 16;

/// Standard deviation of the width error of each pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterSigma {
    /// One `σ_k` (ns) per control, shared by all its pulses.
    Absolute(Vec<f64>),
    /// `σ_{k,m} = r·|τ_{k,m}|`.
    Relative(f64),
}

impl JitterSigma {
    fn get(&self, train: &PulseTrain, k: usize, m: usize) -> f64 {
        match self {
            JitterSigma::Absolute(s) => s[k],
            JitterSigma::Relative(r) => r * train.width(k, m).abs(),
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let values: &[f64] = match self {
            JitterSigma::Absolute(s) => {
                if s.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, found: s.len() });
                }
                s
            }
            JitterSigma::Relative(r) => std::slice::from_ref(r),
        };
        if let Some(bad) = values.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("jitter deviation {bad} must be non-negative")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterConfig {
    pub sigma: JitterSigma,
    pub trials: usize,
    pub seed: u64,
}

/// Monte Carlo statistics of a jittered train.
#[derive(Debug, Clone)]
pub struct JitterReport {
    /// Sample mean of `I - U_m^jit U_m†` for each interval.
    pub mean_deviation: Vec<ComplexMatrix>,
    /// `|tr(U† U^jit)|² / d²` of the full propagator, one per trial.
    pub fidelities: Vec<f64>,
    pub mean_fidelity: f64,
    pub fidelity_std: f64,
}

impl JitterReport {
    /// `1 - mean fidelity` against the unperturbed train.
    pub fn relative_fidelity_loss(&self) -> f64 {
        1.0 - self.mean_fidelity
    }
}

/// Pulse step height: `ξ_k` for three-level trains, `ξ_k - low_k` for two-level.
fn heights(train: &PulseTrain) -> Vec<f64> {
    match train.levels() {
        LevelScheme::ThreeLevel => train.amplitudes().to_vec(),
        LevelScheme::TwoLevel { low } => train.amplitudes().iter().zip(low).map(|(x, l)| x - l).collect(),
    }
}

/// Leading-order mean deviation of interval `m`, `Σ_k σ_{k,m}² h_k² H_k² / 2`.
pub fn jitter_expectation(
    system: &ControlSystem,
    train: &PulseTrain,
    sigma: &JitterSigma,
    m: usize,
) -> Result<ComplexMatrix> {
    system.check_controls(train.controls())?;
    sigma.validate(train.controls())?;
    let d = system.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (k, (c, h)) in system.controls().iter().zip(heights(train)).enumerate() {
        let s = sigma.get(train, k, m);
        if s > 0.0 {
            out += (&c.h * &c.h) * Complex64::from(s * s * h * h / 2.0);
        }
    }
    Ok(out)
}

/// [`jitter_expectation`] for every interval.
pub fn jitter_expectation_train(
    system: &ControlSystem,
    train: &PulseTrain,
    sigma: &JitterSigma,
) -> Result<Vec<ComplexMatrix>> {
    (0..train.intervals()).map(|m| jitter_expectation(system, train, sigma, m)).collect()
}

struct Partial {
    deviation: Vec<ComplexMatrix>,
    fidelities: Vec<f64>,
}

/// Re-propagates the train with Gaussian width errors.
///
/// Draws come in antithetic pairs `(δ, -δ)` so the first-order part of the
/// deviation cancels within each pair; an odd trial count adds one unpaired
/// draw. Perturbed widths are clamped to the admissible range. Results depend
/// only on the seed, not on the thread count.
pub fn jitter_monte_carlo(
    system: &ControlSystem,
    train: &PulseTrain,
    cfg: &JitterConfig,
    cache: &EigenCache,
) -> Result<JitterReport> {
    system.check_controls(train.controls())?;
    cfg.sigma.validate(train.controls())?;
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("jitter needs at least one trial".into()));
    }
    let d = system.dim();
    let intervals = train.intervals();
    let nominal = interval_propagators(system, train, cache)?;
    let nominal_adj: Vec<ComplexMatrix> = nominal.iter().map(|u| u.adjoint()).collect();
    let total_adj = nominal.iter().fold(ComplexMatrix::identity(d, d), |acc, u| u * acc).adjoint();
    let (lo, hi) = match train.levels() {
        LevelScheme::ThreeLevel => (-train.tau(), train.tau()),
        LevelScheme::TwoLevel { .. } => (0.0, train.tau()),
    };
    let sig: Vec<Vec<f64>> =
        (0..train.controls()).map(|k| (0..intervals).map(|m| cfg.sigma.get(train, k, m)).collect()).collect();

    let groups = cfg.trials.div_ceil(2);
    let chunks: Vec<usize> = (0..groups.div_ceil(PAIRS_PER_CHUNK)).collect();
    let partials: Vec<Result<Partial>> = chunks
        .par_iter()
        .map(|&c| {
            let mut part = Partial { deviation: vec![ComplexMatrix::zeros(d, d); intervals], fidelities: Vec::new() };
            let mut widths = vec![0.0; train.controls()];
            let mut deltas = vec![vec![0.0; intervals]; train.controls()];
            for g in c * PAIRS_PER_CHUNK..((c + 1) * PAIRS_PER_CHUNK).min(groups) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(g as u64);
                for (row, srow) in deltas.iter_mut().zip(&sig) {
                    for (x, &s) in row.iter_mut().zip(srow) {
                        *x = if s > 0.0 { s * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                    }
                }
                let draws = if 2 * g + 1 < cfg.trials { 2 } else { 1 };
                for sign in [1.0, -1.0].into_iter().take(draws) {
                    let mut total = ComplexMatrix::identity(d, d);
                    for m in 0..intervals {
                        for (k, w) in widths.iter_mut().enumerate() {
                            *w = (train.width(k, m) + sign * deltas[k][m]).clamp(lo, hi);
                        }
                        let u = propagate_interval(system, train, &widths, cache)?;
                        part.deviation[m] -= &u * &nominal_adj[m];
                        part.deviation[m] += ComplexMatrix::identity(d, d);
                        total = u * total;
                    }
                    let overlap = (&total_adj * &total).trace();
                    part.fidelities.push(overlap.norm_sqr() / (d * d) as f64);
                }
            }
            Ok(part)
        })
        .collect();

    let mut deviation = vec![ComplexMatrix::zeros(d, d); intervals];
    let mut fidelities = Vec::with_capacity(cfg.trials);
    for p in partials {
        let p = p?;
        for (acc, x) in deviation.iter_mut().zip(&p.deviation) {
            *acc += x;
        }
        fidelities.extend(p.fidelities);
    }
    let n = fidelities.len() as f64;
    for dm in &mut deviation {
        *dm /= Complex64::from(n);
    }
    let mean = fidelities.iter().sum::<f64>() / n;
    let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(JitterReport { mean_deviation: deviation, fidelities, mean_fidelity: mean, fidelity_std: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, pauli_z};
    use crate::propagation::Control;

    fn qubit(xi: f64) -> ControlSystem {
        ControlSystem::new(pauli_z() * Complex64::from(0.2), vec![Control { h: pauli_x(), xi }]).unwrap()
    }

    #[test]
    fn zero_sigma() {
        let sys = qubit(1.0);
        let train = PulseTrain::three_level(0.5, vec![1.0], vec![vec![0.2, -0.3, 0.1]]).unwrap();
        let e = jitter_expectation(&sys, &train, &JitterSigma::Absolute(vec![0.0]), 1).unwrap();
        assert_eq!(e, ComplexMatrix::zeros(2, 2));
        let cfg = JitterConfig { sigma: JitterSigma::Absolute(vec![0.0]), trials: 100, seed: 1 };
        let r = jitter_monte_carlo(&sys, &train, &cfg, &EigenCache::new(&sys)).unwrap();
        assert!(r.mean_deviation.iter().all(|m| m.norm() < 1e-14));
        assert!(r.fidelity_std < 1e-14);
        assert!((r.mean_fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_expectation() {
        let sys = qubit(1.0);
        let train = PulseTrain::three_level(0.5, vec![1.0], vec![vec![0.2]]).unwrap();
        let e = jitter_expectation(&sys, &train, &JitterSigma::Absolute(vec![0.1]), 0).unwrap();
        assert!((e - ComplexMatrix::identity(2, 2) * Complex64::from(0.005)).norm() < 1e-15);
    }

    #[test]
    fn reproducible_under_seed() {
        let sys = qubit(1.0);
        let train = PulseTrain::three_level(0.5, vec![1.0], vec![vec![0.2, -0.3, 0.1, 0.45]]).unwrap();
        let cache = EigenCache::new(&sys);
        let cfg = JitterConfig { sigma: JitterSigma::Relative(0.05), trials: 101, seed: 9 };
        let a = jitter_monte_carlo(&sys, &train, &cfg, &cache).unwrap();
        let b = jitter_monte_carlo(&sys, &train, &cfg, &cache).unwrap();
        assert_eq!(a.fidelities, b.fidelities);
        assert_eq!(a.fidelities.len(), 101);
        assert_eq!(a.mean_deviation, b.mean_deviation);
    }

    #[test]
    fn sigma_validation() {
        let sys = qubit(1.0);
        let train = PulseTrain::zeros(0.5, vec![1.0], 2).unwrap();
        let bad = JitterConfig { sigma: JitterSigma::Absolute(vec![-1.0]), trials: 10, seed: 0 };
        assert!(jitter_monte_carlo(&sys, &train, &bad, &EigenCache::new(&sys)).is_err());
        let none = JitterConfig { sigma: JitterSigma::Relative(0.1), trials: 0, seed: 0 };
        assert!(jitter_monte_carlo(&sys, &train, &none, &EigenCache::new(&sys)).is_err());
    }
}
