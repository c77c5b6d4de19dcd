use serde::{Deserialize, Serialize};

use super::waveform::{amplitude_from_waveform, clamp_width, widths_from_waveform, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    #[default]
    Rectangular,
    /// `ξ·sgn(τ_m)·exp(-π (t - t_m)² / τ_m²)` around each interval center.
    Gaussian,
}

/// How the switch levels of each control are arranged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LevelScheme {
    /// Values in `{-ξ, 0, +ξ}`; widths are signed and `|τ_{k,m}| ≤ τ`.
    #[default]
    ThreeLevel,
    /// Values in `{low_k, ξ_k}`; widths hold the time spent at the high level,
    /// `0 ≤ τ_{k,m} ≤ τ`, with the remainder spent at `low_k`.
    TwoLevel { low: Vec<f64> },
}

/// `M` intervals of length `τ`, each holding at most one centered pulse per control.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    tau: f64,
    intervals: usize,
    amplitudes: Vec<f64>,
    widths: Vec<Vec<f64>>,
    shape: PulseShape,
    levels: LevelScheme,
}

/// One `[on, off)` pulse of a control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch {
    /// 1-based interval index.
    pub interval: usize,
    pub on: f64,
    pub off: f64,
    /// `sgn(τ_{k,m})`; always `+1` (high level) for two-level trains.
    pub polarity: i8,
}

impl PulseTrain {
    /// Three-level train from per-control rows of signed widths.
    pub fn three_level(tau: f64, amplitudes: Vec<f64>, widths: Vec<Vec<f64>>) -> Result<Self> {
        let intervals = widths.first().map_or(0, Vec::len);
        let train = PulseTrain {
            tau,
            intervals,
            amplitudes,
            widths,
            shape: PulseShape::Rectangular,
            levels: LevelScheme::ThreeLevel,
        };
        train.validate()?;
        Ok(train)
    }

    /// All-off three-level train.
    pub fn zeros(tau: f64, amplitudes: Vec<f64>, intervals: usize) -> Result<Self> {
        let k = amplitudes.len();
        let mut train = Self::three_level(tau, amplitudes, vec![vec![0.0; intervals]; k])?;
        train.intervals = intervals;
        Ok(train)
    }

    /// Two-level train; `high_times[k][m]` is the time at `amplitudes[k]`.
    pub fn two_level(tau: f64, amplitudes: Vec<f64>, low: Vec<f64>, high_times: Vec<Vec<f64>>) -> Result<Self> {
        let intervals = high_times.first().map_or(0, Vec::len);
        let train = PulseTrain {
            tau,
            intervals,
            amplitudes,
            widths: high_times,
            shape: PulseShape::Rectangular,
            levels: LevelScheme::TwoLevel { low },
        };
        train.validate()?;
        Ok(train)
    }

    /// Converts waveforms to a three-level train over `M` intervals.
    ///
    /// `xi = None` picks `ξ_k = max |u_k|` over `[0, Mτ]`.
    pub fn from_waveforms(waveforms: &[Waveform], tau: f64, intervals: usize, xi: Option<&[f64]>) -> Result<Self> {
        let total = tau * intervals as f64;
        let amplitudes = match xi {
            Some(x) if x.len() != waveforms.len() => {
                return Err(Error::DimensionMismatch { expected: waveforms.len(), found: x.len() })
            }
            Some(x) => x.to_vec(),
            None => waveforms.iter().map(|w| amplitude_from_waveform(w, total)).collect::<Result<_>>()?,
        };
        let widths = waveforms
            .iter()
            .zip(&amplitudes)
            .map(|(w, &a)| widths_from_waveform(w, tau, intervals, a))
            .collect::<Result<Vec<_>>>()?;
        let mut train = Self::three_level(tau, amplitudes, widths)?;
        train.intervals = intervals;
        Ok(train)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!("interval length {} must be positive", self.tau)));
        }
        if self.widths.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch { expected: self.amplitudes.len(), found: self.widths.len() });
        }
        if let Some(bad) = self.amplitudes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput(format!("pulse amplitude {bad} must be positive")));
        }
        for row in &self.widths {
            if row.len() != self.intervals {
                return Err(Error::DimensionMismatch { expected: self.intervals, found: row.len() });
            }
        }
        match &self.levels {
            LevelScheme::ThreeLevel => {
                for &w in self.widths.iter().flatten() {
                    if !(w.abs() <= self.tau) {
                        return Err(Error::WidthOverflow { width: w, tau: self.tau });
                    }
                }
            }
            LevelScheme::TwoLevel { low } => {
                if low.len() != self.amplitudes.len() {
                    return Err(Error::DimensionMismatch { expected: self.amplitudes.len(), found: low.len() });
                }
                if low.iter().zip(&self.amplitudes).any(|(l, h)| !(l < h)) {
                    return Err(Error::InvalidInput("two-level low level must be below the high level".into()));
                }
                for &w in self.widths.iter().flatten() {
                    if !(0.0..=self.tau).contains(&w) {
                        return Err(Error::WidthOverflow { width: w, tau: self.tau });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of controls `K`.
    pub fn controls(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn duration(&self) -> f64 {
        self.tau * self.intervals as f64
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn shape(&self) -> PulseShape {
        self.shape
    }

    pub fn levels(&self) -> &LevelScheme {
        &self.levels
    }

    /// Width of control `k` in interval `m` (both 0-based).
    pub fn width(&self, k: usize, m: usize) -> f64 {
        self.widths[k][m]
    }

    pub fn widths(&self) -> &[Vec<f64>] {
        &self.widths
    }

    /// Widths of every control in interval `m` (0-based).
    pub fn interval_widths(&self, m: usize) -> Vec<f64> {
        self.widths.iter().map(|row| row[m]).collect()
    }

    pub fn set_width(&mut self, k: usize, m: usize, width: f64) -> Result<()> {
        let ok = match self.levels {
            LevelScheme::ThreeLevel => width.abs() <= self.tau,
            LevelScheme::TwoLevel { .. } => (0.0..=self.tau).contains(&width),
        };
        if !ok {
            return Err(Error::WidthOverflow { width, tau: self.tau });
        }
        self.widths[k][m] = width;
        Ok(())
    }

    pub fn with_shape(mut self, shape: PulseShape) -> Self {
        self.shape = shape;
        self
    }

    /// Multiplies every amplitude by `kappa` and divides every width by it.
    ///
    /// Three-level only; per-interval integrals `ξ·τ_{k,m}` are unchanged.
    pub fn stretched(&self, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("stretch factor {kappa} must be finite and >= 1")));
        }
        if self.levels != LevelScheme::ThreeLevel {
            return Err(Error::InvalidInput("only three-level trains can be stretched".into()));
        }
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a *= kappa);
        out.widths.iter_mut().flatten().for_each(|w| *w /= kappa);
        Ok(out)
    }

    /// Net pulse area `∫ s_k dt` over interval `m` (0-based).
    pub fn interval_area(&self, k: usize, m: usize) -> f64 {
        let w = self.widths[k][m];
        match &self.levels {
            LevelScheme::ThreeLevel => self.amplitudes[k] * w,
            LevelScheme::TwoLevel { low } => self.amplitudes[k] * w + low[k] * (self.tau - w),
        }
    }
}

/// Switch on/off instants of control `k`: pulse `m` is centered at `(m - 1/2)τ`.
/// Zero-width pulses are omitted.
pub fn switching_instances(train: &PulseTrain, k: usize) -> Vec<Switch> {
    let tau = train.tau;
    train.widths[k]
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(m, &w)| {
            let end = (m + 1) as f64 * tau;
            Switch {
                interval: m + 1,
                on: end - (tau + w.abs()) / 2.0,
                off: end - (tau - w.abs()) / 2.0,
                polarity: if w > 0.0 { 1 } else { -1 },
            }
        })
        .collect()
}

/// Piecewise-constant values `u_k(mτ) = ∫_interval s_k / τ`, one row per control.
///
/// For three-level trains this is `ξ_k τ_{k,m} / τ`.
pub fn staircase_from_train(train: &PulseTrain) -> Vec<Vec<f64>> {
    (0..train.controls())
        .map(|k| (0..train.intervals).map(|m| train.interval_area(k, m) / train.tau).collect())
        .collect()
}

/// Converts staircase values back to three-level widths `τ·u/ξ`.
pub fn widths_from_staircase(values: &[Vec<f64>], tau: f64, amplitudes: &[f64]) -> Result<Vec<Vec<f64>>> {
    values
        .iter()
        .zip(amplitudes)
        .map(|(row, &xi)| row.iter().map(|v| clamp_width(v * tau / xi, tau)).collect())
        .collect()
}

/// Durations `(t_high, t_low)` with `t_high + t_low = τ` and
/// `high·t_high + low·t_low = target`.
pub fn two_level_durations(target: f64, high: f64, low: f64, tau: f64) -> Result<(f64, f64)> {
    if !(high > low) || !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("need high ({high}) > low ({low}) and tau ({tau}) > 0")));
    }
    let (min, max) = (low * tau, high * tau);
    if !(min..=max).contains(&target) {
        return Err(Error::Unreachable { target, min, max });
    }
    let t_high = ((target - low * tau) / (high - low)).clamp(0.0, tau);
    Ok((t_high, tau - t_high))
}
