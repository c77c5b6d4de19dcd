use rayon::prelude::*;

use super::ControlSystem;
use crate::algebra::{expm_pade, ComplexMatrix};
use crate::encoding::ControlSignal;
use crate::error::{Error, Result};

/// Step halvings tried before giving up.
pub const MAX_REFINEMENTS: usize = 20;
const ROMBERG_COLUMNS: usize = 4;
const CHUNK: usize = 256;

/// Outcome of a converged reference propagation.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub unitary: ComplexMatrix,
    /// Number of step halvings performed.
    pub refinements: usize,
    /// Steps used at the finest level.
    pub steps: usize,
    /// `‖U_i - U_{i-1}‖_F` of the unextrapolated results, one per halving.
    pub corrections: Vec<f64>,
    /// Final difference between successive extrapolated results.
    pub estimate: f64,
}

/// High-accuracy `U(T, 0)` for arbitrary control signals.
///
/// Each step uses the exponential of the Hamiltonian averaged over the step.
/// The grid is aligned to the signals' breakpoints and halved until two
/// successive Richardson-extrapolated results differ by less than
/// `target_accuracy` in Frobenius norm.
pub fn reference_oracle<S: ControlSignal + Sync>(
    system: &ControlSystem,
    signals: &[S],
    duration: f64,
    target_accuracy: f64,
) -> Result<ComplexMatrix> {
    reference_oracle_detailed(system, signals, duration, target_accuracy).map(|r| r.unitary)
}

/// As [`reference_oracle`], also reporting the refinement history.
pub fn reference_oracle_detailed<S: ControlSignal + Sync>(
    system: &ControlSystem,
    signals: &[S],
    duration: f64,
    target_accuracy: f64,
) -> Result<OracleRun> {
    system.check_controls(signals.len())?;
    if !(target_accuracy >= 1e-12) {
        return Err(Error::InvalidInput(format!("target accuracy {target_accuracy} is below 1e-12")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput(format!("duration {duration} must be positive")));
    }
    let pieces = pieces(signals, duration);
    let scale = system.h0().norm() + system.controls().iter().map(|c| c.xi * c.h.norm()).sum::<f64>();
    let h0 = if scale > 0.0 { (0.25 / scale).min(duration) } else { duration };
    let base: Vec<usize> = pieces.iter().map(|(a, b)| ((b - a) / h0).ceil().max(1.0) as usize).collect();

    let mut prev_row: Vec<ComplexMatrix> = Vec::new();
    let mut corrections = Vec::new();
    for level in 0..=MAX_REFINEMENTS {
        let factor = 1usize << level;
        let steps: Vec<(f64, f64)> = pieces
            .iter()
            .zip(&base)
            .flat_map(|(&(a, b), &n)| {
                let n = n * factor;
                let h = (b - a) / n as f64;
                (0..n).map(move |i| (a + i as f64 * h, if i + 1 == n { b } else { a + (i + 1) as f64 * h }))
            })
            .collect();
        let u = product(system, signals, &steps);

        let mut row = vec![u];
        for j in 1..=level.min(ROMBERG_COLUMNS - 1) {
            let f = 4f64.powi(j as i32) - 1.0;
            let next = &row[j - 1] + (&row[j - 1] - &prev_row[j - 1]) / crate::algebra::Complex64::from(f);
            row.push(next);
        }
        if level > 0 {
            corrections.push((&row[0] - &prev_row[0]).norm());
            let estimate = (row.last().unwrap() - prev_row.last().unwrap()).norm();
            if estimate < target_accuracy {
                return Ok(OracleRun {
                    unitary: row.pop().unwrap(),
                    refinements: level,
                    steps: steps.len(),
                    corrections,
                    estimate,
                });
            }
        }
        prev_row = row;
    }
    Err(Error::NoConvergence(MAX_REFINEMENTS))
}

/// `[0, T]` cut at every breakpoint of every signal.
fn pieces<S: ControlSignal>(signals: &[S], duration: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = signals.iter().flat_map(|s| s.breakpoints(duration)).filter(|&t| t > 0.0 && t < duration).collect();
    cuts.push(0.0);
    cuts.push(duration);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|b, a| *b - *a <= 1e-14 * duration);
    if *cuts.last().unwrap() != duration {
        *cuts.last_mut().unwrap() = duration;
    }
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn product<S: ControlSignal + Sync>(system: &ControlSystem, signals: &[S], steps: &[(f64, f64)]) -> ComplexMatrix {
    let d = system.dim();
    let chunks: Vec<ComplexMatrix> = steps
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut coeffs = vec![0.0; signals.len()];
            let mut u = ComplexMatrix::identity(d, d);
            for &(a, b) in chunk {
                for (c, s) in coeffs.iter_mut().zip(signals) {
                    *c = s.average(a, b);
                }
                u = expm_pade(&system.hamiltonian(true, &coeffs), b - a) * u;
            }
            u
        })
        .collect();
    chunks.iter().fold(ComplexMatrix::identity(d, d), |acc, c| c * acc)
}
