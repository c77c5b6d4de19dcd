use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{width_bounds, Objective};
use crate::encoding::PulseTrain;
use crate::error::{Error, Result};

/// Adaptive-moment ascent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Finite-difference step, ns.
    pub fd_step: f64,
    /// Initial step length as a fraction of `τ`.
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Stop once `J` reaches this value.
    pub target_fidelity: Option<f64>,
    /// Stop when the largest gradient entry falls below this (1/ns).
    pub gradient_tolerance: f64,
    /// Stop when `J` has improved by less than this over `patience` iterations.
    pub tolerance: f64,
    pub patience: usize,
    /// Step halvings tried before an iteration counts as stalled.
    pub max_backtracks: usize,
    /// Seed for [`random_initial_train`].
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 2000,
            fd_step: 1e-4,
            learning_rate: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            target_fidelity: None,
            gradient_tolerance: 1e-7,
            tolerance: 1e-9,
            patience: 50,
            max_backtracks: 12,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.fd_step, self.learning_rate, self.gradient_tolerance, self.tolerance];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput("step sizes and tolerances must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidInput("moment decay rates must lie in [0, 1)".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidInput("patience must be at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TargetReached,
    /// Gradient below tolerance.
    Converged,
    /// No improvement within `patience` iterations, or no improving step found.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub fidelity: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub train: PulseTrain,
    pub fidelity: f64,
    /// One point per accepted iteration, starting with the initial train.
    pub trace: Vec<TracePoint>,
    pub wall_time: Duration,
    pub termination: Termination,
}

/// Three-level train with widths drawn uniformly from `[-τ/2, τ/2]`.
pub fn random_initial_train(amplitudes: Vec<f64>, tau: f64, intervals: usize, seed: u64) -> Result<PulseTrain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = PulseTrain::zeros(tau, amplitudes, intervals)?;
    for k in 0..train.controls() {
        for m in 0..intervals {
            train.set_width(k, m, rng.random_range(-tau / 2.0..=tau / 2.0))?;
        }
    }
    Ok(train)
}

/// Maximizes `J` over the pulse widths of `initial`; amplitudes stay fixed.
///
/// Each iteration takes an adaptive-moment step, projects onto the admissible
/// widths and halves the step until `J` does not decrease. Accepted iterates
/// therefore never lower `J`.
pub fn optimize(obj: &Objective, initial: &PulseTrain, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let start = Instant::now();
    let tau = initial.tau();
    let (lo, hi) = width_bounds(initial);
    let elapsed = || start.elapsed().as_secs_f64() * 1e3;

    let mut train = initial.clone();
    let mut j = obj.evaluate(&train)?;
    let mut trace = vec![TracePoint { iteration: 0, fidelity: j, wall_ms: elapsed() }];
    let (k_count, m_count) = (train.controls(), train.intervals());
    let mut first = vec![vec![0.0; m_count]; k_count];
    let mut second = vec![vec![0.0; m_count]; k_count];
    let base_step = cfg.learning_rate * tau;
    let mut step = base_step;
    let reached = |j: f64| cfg.target_fidelity.is_some_and(|t| j >= t);

    let mut termination = Termination::MaxIterations;
    let mut restarted = false;
    let mut moment_age = 0i32;
    for it in 1..=cfg.max_iterations {
        if reached(j) {
            termination = Termination::TargetReached;
            break;
        }
        let grad = obj.gradient_fd(&train, cfg.fd_step)?;
        let gmax = grad.iter().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
        if gmax <= cfg.gradient_tolerance {
            termination = Termination::Converged;
            break;
        }
        moment_age += 1;
        let (c1, c2) = (1.0 - cfg.beta1.powi(moment_age), 1.0 - cfg.beta2.powi(moment_age));
        let mut direction = vec![vec![0.0; m_count]; k_count];
        for k in 0..k_count {
            for m in 0..m_count {
                let g = grad[k][m];
                first[k][m] = cfg.beta1 * first[k][m] + (1.0 - cfg.beta1) * g;
                second[k][m] = cfg.beta2 * second[k][m] + (1.0 - cfg.beta2) * g * g;
                let scale = (second[k][m] / c2).sqrt() + 1e-3 * gmax;
                direction[k][m] = first[k][m] / c1 / scale;
            }
        }

        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let mut candidate = train.clone();
            for (k, row) in direction.iter().enumerate() {
                for (m, dir) in row.iter().enumerate() {
                    candidate.set_width(k, m, (train.width(k, m) + step * dir).clamp(lo, hi))?;
                }
            }
            let jc = obj.evaluate(&candidate)?;
            if jc >= j {
                accepted = Some((candidate, jc));
                break;
            }
            step /= 2.0;
        }
        let Some((candidate, jc)) = accepted else {
            // stale moments may no longer point uphill; restart them once
            if restarted {
                termination = Termination::Stalled;
                break;
            }
            restarted = true;
            first.iter_mut().chain(second.iter_mut()).for_each(|row| row.fill(0.0));
            moment_age = 0;
            step = base_step;
            continue;
        };
        restarted = false;
        train = candidate;
        j = jc;
        step = (step * 1.5).min(base_step);
        trace.push(TracePoint { iteration: it, fidelity: j, wall_ms: elapsed() });

        let n = trace.len();
        if n > cfg.patience && j - trace[n - 1 - cfg.patience].fidelity < cfg.tolerance {
            termination = Termination::Stalled;
            break;
        }
    }
    if termination == Termination::MaxIterations && reached(j) {
        termination = Termination::TargetReached;
    }
    Ok(OptimizationResult { train, fidelity: j, trace, wall_time: start.elapsed(), termination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, Complex64, ComplexMatrix};
    use crate::device::TargetGate;
    use crate::propagation::{Control, ControlSystem};

    fn rabi(xi: f64) -> Objective {
        let sys = ControlSystem::new(ComplexMatrix::zeros(2, 2), vec![Control { h: pauli_x() * Complex64::from(0.5), xi }])
            .unwrap();
        let target = TargetGate { name: "NOT".into(), matrix: pauli_x(), embedded: pauli_x(), qubit_indices: vec![0, 1] };
        Objective::new(sys, target).unwrap()
    }

    #[test]
    fn starts_at_optimum() {
        let obj = rabi(std::f64::consts::PI);
        let train = PulseTrain::three_level(1.0, vec![std::f64::consts::PI], vec![vec![0.5, 0.5]]).unwrap();
        let cfg = OptimizerConfig { target_fidelity: Some(0.9999), ..Default::default() };
        let r = optimize(&obj, &train, &cfg).unwrap();
        assert_eq!(r.termination, Termination::TargetReached);
        assert_eq!(r.train, train);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn climbs_monotonically() {
        let obj = rabi(1.0);
        let train = random_initial_train(vec![1.0], 1.0, 4, 2).unwrap();
        let cfg = OptimizerConfig { max_iterations: 300, ..Default::default() };
        let r = optimize(&obj, &train, &cfg).unwrap();
        assert!(r.trace.windows(2).all(|p| p[1].fidelity >= p[0].fidelity));
        assert!(r.fidelity > 0.999, "{}", r.fidelity);
    }

    #[test]
    fn initial_widths_in_range() {
        let t = random_initial_train(vec![1.0, 2.0], 0.4, 50, 7).unwrap();
        assert!(t.widths().iter().flatten().all(|w| w.abs() <= 0.2));
        assert_eq!(t, random_initial_train(vec![1.0, 2.0], 0.4, 50, 7).unwrap());
        assert_eq!(random_initial_train(vec![], 0.4, 5, 7).unwrap().intervals(), 5);
    }

    #[test]
    fn config_json() {
        let cfg: OptimizerConfig = serde_json::from_str(r#"{"max_iterations": 10, "seed": 4}"#).unwrap();
        assert_eq!(cfg.max_iterations, 10);
        assert_eq!(cfg.fd_step, OptimizerConfig::default().fd_step);
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"bogus": 1}"#).is_err());
        let bad = OptimizerConfig { fd_step: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
