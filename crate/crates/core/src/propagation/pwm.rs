use std::sync::Arc;

use super::cache::{EigenCache, GeneratorKey};
use super::segments::{interval_segments, yoshida_scale, Segment};
use super::ControlSystem;
use crate::algebra::{Complex64, ComplexMatrix, ComplexVector, EigenPair};
use crate::encoding::{clamp_width, ControlSignal, LevelScheme, PulseShape, PulseTrain};
use crate::error::{Error, Result};

/// Applies cached exponentials to a seed matrix, one generator at a time.
///
/// The running matrix is kept in the eigenbasis of the last generator applied,
/// so switching generators costs one product with a cached overlap `P_b† P_a`
/// and applying one costs a diagonal scaling. Consecutive pushes of the same
/// generator are merged.
struct Accumulator<'a> {
    system: &'a ControlSystem,
    cache: &'a EigenCache,
    w: ComplexMatrix,
    buf: ComplexMatrix,
    phases: Vec<Complex64>,
    basis: Option<(usize, Arc<EigenPair>)>,
    pending: Option<(usize, Arc<EigenPair>, f64)>,
}

impl<'a> Accumulator<'a> {
    fn new(system: &'a ControlSystem, cache: &'a EigenCache, seed: ComplexMatrix) -> Self {
        let buf = seed.clone();
        Accumulator { system, cache, w: seed, buf, phases: Vec::new(), basis: None, pending: None }
    }

    fn push(&mut self, key: &GeneratorKey, t: f64) -> Result<()> {
        if t == 0.0 {
            return Ok(());
        }
        let (id, pair) = self.cache.lookup(self.system, key)?;
        match &mut self.pending {
            Some((pid, _, pt)) if *pid == id => *pt += t,
            _ => {
                self.flush();
                self.pending = Some((id, pair, t));
            }
        }
        Ok(())
    }

    fn flush(&mut self) {
        let Some((id, pair, t)) = self.pending.take() else { return };
        match &self.basis {
            None => pair.basis.ad_mul_to(&self.w, &mut self.buf),
            Some((prev, _)) => self.cache.overlap(id, *prev).mul_to(&self.w, &mut self.buf),
        }
        std::mem::swap(&mut self.w, &mut self.buf);
        self.phases.clear();
        self.phases.extend(pair.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)));
        for mut col in self.w.column_iter_mut() {
            for (z, p) in col.iter_mut().zip(&self.phases) {
                *z *= p;
            }
        }
        self.basis = Some((id, pair));
    }

    fn finish(mut self) -> ComplexMatrix {
        self.flush();
        match self.basis {
            None => self.w,
            Some((_, pair)) => &pair.basis * &self.w,
        }
    }
}

fn check(system: &ControlSystem, train: &PulseTrain, cache: &EigenCache) -> Result<()> {
    system.check_controls(train.controls())?;
    cache.check(system)?;
    if train.shape() != PulseShape::Rectangular {
        return Err(Error::InvalidInput("only rectangular pulse trains have a finite generator set".into()));
    }
    Ok(())
}

fn push_segments(acc: &mut Accumulator<'_>, train: &PulseTrain, segments: &[Segment]) -> Result<()> {
    for s in segments {
        acc.push(&s.pattern.generator(train.amplitudes(), train.levels()), s.duration)?;
    }
    Ok(())
}

fn push_interval(acc: &mut Accumulator<'_>, train: &PulseTrain, widths: &[f64]) -> Result<()> {
    push_segments(acc, train, &interval_segments(widths, train.tau())?)
}

/// Product of `exp(-i d_j G_j)` over `segments` in time order, generators
/// taken from the train's amplitudes and levels.
pub fn propagate_segments(
    system: &ControlSystem,
    train: &PulseTrain,
    segments: &[Segment],
    cache: &EigenCache,
) -> Result<ComplexMatrix> {
    check(system, train, cache)?;
    let d = system.dim();
    let mut acc = Accumulator::new(system, cache, ComplexMatrix::identity(d, d));
    push_segments(&mut acc, train, segments)?;
    Ok(acc.finish())
}

/// Propagator of one interval whose pulses have the given widths (the train
/// supplies `τ`, amplitudes and levels; its own widths are ignored).
pub fn propagate_interval(
    system: &ControlSystem,
    train: &PulseTrain,
    widths: &[f64],
    cache: &EigenCache,
) -> Result<ComplexMatrix> {
    check(system, train, cache)?;
    system.check_controls(widths.len())?;
    let d = system.dim();
    let mut acc = Accumulator::new(system, cache, ComplexMatrix::identity(d, d));
    push_interval(&mut acc, train, widths)?;
    Ok(acc.finish())
}

/// `U_m` for every interval of the train, in order.
pub fn interval_propagators(
    system: &ControlSystem,
    train: &PulseTrain,
    cache: &EigenCache,
) -> Result<Vec<ComplexMatrix>> {
    (0..train.intervals()).map(|m| propagate_interval(system, train, &train.interval_widths(m), cache)).collect()
}

/// `U(T, 0) = U_M ⋯ U_1` for a rectangular pulse train.
///
/// Uses only cached eigendecompositions; no generic matrix exponential is
/// evaluated.
pub fn propagate_train(system: &ControlSystem, train: &PulseTrain, cache: &EigenCache) -> Result<ComplexMatrix> {
    check(system, train, cache)?;
    let d = system.dim();
    let mut acc = Accumulator::new(system, cache, ComplexMatrix::identity(d, d));
    for m in 0..train.intervals() {
        push_interval(&mut acc, train, &train.interval_widths(m))?;
    }
    Ok(acc.finish())
}

/// `U(T, 0) ψ0` using matrix-vector products only.
pub fn propagate_state(
    system: &ControlSystem,
    train: &PulseTrain,
    cache: &EigenCache,
    psi0: &ComplexVector,
) -> Result<ComplexVector> {
    check(system, train, cache)?;
    if psi0.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: psi0.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("initial state has norm {}", psi0.norm())));
    }
    let seed = ComplexMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
    let mut acc = Accumulator::new(system, cache, seed);
    for m in 0..train.intervals() {
        push_interval(&mut acc, train, &train.interval_widths(m))?;
    }
    Ok(ComplexVector::from_column_slice(acc.finish().as_slice()))
}

/// Hard-pulse limit: each interval is a symmetric split of the drift around
/// instantaneous kicks of area `τ_{k,m} ξ_k`,
/// `e^{-iτH̃_0/2} Π_k e^{-iτ_{k,m}h_kH_k/2} Π_k^rev e^{-iτ_{k,m}h_kH_k/2} e^{-iτH̃_0/2}`.
///
/// For three-level trains `H̃_0 = H_0` and `h_k = ξ_k`. For two-level trains the
/// low levels move into the drift, `H̃_0 = H_0 + Σ low_k H_k` and `h_k = ξ_k - low_k`.
pub fn propagate_hard_pulse(system: &ControlSystem, train: &PulseTrain, cache: &EigenCache) -> Result<ComplexMatrix> {
    check(system, train, cache)?;
    let k = train.controls();
    let (base, heights): (Vec<f64>, Vec<f64>) = match train.levels() {
        LevelScheme::ThreeLevel => (vec![0.0; k], train.amplitudes().to_vec()),
        LevelScheme::TwoLevel { low } => (low.clone(), train.amplitudes().iter().zip(low).map(|(x, l)| x - l).collect()),
    };
    let drift = GeneratorKey::new(true, &base);
    let kicks: Vec<GeneratorKey> = (0..k)
        .map(|j| {
            let mut c = vec![0.0; k];
            c[j] = heights[j];
            GeneratorKey::new(false, &c)
        })
        .collect();
    let d = system.dim();
    let half = train.tau() / 2.0;
    let mut acc = Accumulator::new(system, cache, ComplexMatrix::identity(d, d));
    for m in 0..train.intervals() {
        acc.push(&drift, half)?;
        for (j, key) in kicks.iter().enumerate() {
            acc.push(key, train.width(j, m) / 2.0)?;
        }
        for (j, key) in kicks.iter().enumerate().rev() {
            acc.push(key, train.width(j, m) / 2.0)?;
        }
        acc.push(&drift, half)?;
    }
    Ok(acc.finish())
}

/// Triple-jump composition of the nested PWM step, applied to waveforms.
///
/// Every interval is split recursively into sub-steps of relative length
/// `s_j, 1-2s_j, s_j` (`j = n, …, 1`), the middle one running backward in time.
/// Each sub-step is a nested pulse step whose widths carry the waveform
/// integral over that sub-step. `n = 0` is the plain second-order scheme.
#[allow(clippy::too_many_arguments)]
pub fn propagate_higher_order<S: ControlSignal>(
    system: &ControlSystem,
    signals: &[S],
    amplitudes: &[f64],
    tau: f64,
    intervals: usize,
    n: usize,
    cache: &EigenCache,
) -> Result<ComplexMatrix> {
    system.check_controls(signals.len())?;
    system.check_controls(amplitudes.len())?;
    cache.check(system)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("interval length {tau} must be positive")));
    }
    let d = system.dim();
    let mut acc = Accumulator::new(system, cache, ComplexMatrix::identity(d, d));
    let mut ctx = SubStep { signals, amplitudes, widths: vec![0.0; signals.len()] };
    for m in 0..intervals {
        ctx.emit(&mut acc, n, m as f64 * tau, tau)?;
    }
    Ok(acc.finish())
}

struct SubStep<'s, S> {
    signals: &'s [S],
    amplitudes: &'s [f64],
    widths: Vec<f64>,
}

impl<S: ControlSignal> SubStep<'_, S> {
    /// Pushes the composed step covering `[a, a + h]` (`h` may be negative).
    fn emit(&mut self, acc: &mut Accumulator<'_>, level: usize, a: f64, h: f64) -> Result<()> {
        if level > 0 {
            let s = yoshida_scale(level);
            self.emit(acc, level - 1, a, s * h)?;
            self.emit(acc, level - 1, a + s * h, (1.0 - 2.0 * s) * h)?;
            return self.emit(acc, level - 1, a + (1.0 - s) * h, s * h);
        }
        let (lo, len) = if h < 0.0 { (a + h, -h) } else { (a, h) };
        for ((w, sig), &xi) in self.widths.iter_mut().zip(self.signals).zip(self.amplitudes) {
            *w = clamp_width(sig.average(lo, lo + len) * len / xi, len)?;
        }
        let sign = h.signum();
        for seg in interval_segments(&self.widths, len)? {
            let key = seg.pattern.generator(self.amplitudes, &LevelScheme::ThreeLevel);
            acc.push(&key, sign * seg.duration)?;
        }
        Ok(())
    }
}
