use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ControlSignal;
use crate::error::{Error, Result};

/// A real control signal `u(t)` (rad/ns) with a declared frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    /// `amplitude · sin(omega·t + phase)`; the declared band is `[omega, omega]`.
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
    /// Uniformly spaced point samples starting at `t = 0`, linearly
    /// interpolated between grid points and zero outside the sampled span.
    Sampled { values: Vec<f64>, step: f64, bandwidth: (f64, f64) },
}

impl Waveform {
    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        let w = Waveform::Sinusoid { amplitude, omega, phase };
        w.validate()?;
        Ok(w)
    }

    pub fn sampled(values: Vec<f64>, step: f64, bandwidth: (f64, f64)) -> Result<Self> {
        let w = Waveform::Sampled { values, step, bandwidth };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bandwidth();
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth [{lo}, {hi}] must satisfy 0 < min <= max")));
        }
        match self {
            Waveform::Sinusoid { amplitude, phase, .. } if !(amplitude.is_finite() && phase.is_finite()) => {
                Err(Error::InvalidInput("sinusoid parameters must be finite".into()))
            }
            Waveform::Sampled { values, step, .. } => {
                if !(*step > 0.0 && step.is_finite()) {
                    Err(Error::InvalidInput(format!("sample step {step} must be positive")))
                } else if values.len() < 2 {
                    Err(Error::InvalidInput("a sampled waveform needs at least 2 samples".into()))
                } else if values.iter().any(|v| !v.is_finite()) {
                    Err(Error::InvalidInput("sample values must be finite".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Declared `[ω_min, ω_max]` in rad/ns.
    pub fn bandwidth(&self) -> (f64, f64) {
        match self {
            Waveform::Sinusoid { omega, .. } => (*omega, *omega),
            Waveform::Sampled { bandwidth, .. } => *bandwidth,
        }
    }

    /// One period for a sinusoid, the sampled span otherwise.
    pub fn natural_duration(&self) -> f64 {
        match self {
            Waveform::Sinusoid { omega, .. } => 2.0 * PI / omega,
            Waveform::Sampled { values, step, .. } => (values.len() - 1) as f64 * step,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Waveform::Sampled { values, step, .. } => {
                let x = t / step;
                let last = (values.len() - 1) as f64;
                if !(0.0..=last).contains(&x) {
                    return 0.0;
                }
                let i = (x.floor() as usize).min(values.len() - 2);
                let f = x - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            }
        }
    }

    /// `∫_a^b u(t) dt`, closed form for sinusoids and exact on the linear
    /// interpolant for sampled data.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Waveform::Sinusoid { amplitude, omega, phase } => {
                amplitude / omega * ((omega * a + phase).cos() - (omega * b + phase).cos())
            }
            Waveform::Sampled { values, step, .. } => {
                if b < a {
                    return -self.integral(b, a);
                }
                let span = (values.len() - 1) as f64 * step;
                let (lo, hi) = (a.max(0.0), b.min(span));
                if hi <= lo {
                    return 0.0;
                }
                let first = ((lo / step).floor() as usize).min(values.len() - 2);
                let last = ((hi / step).ceil() as usize).clamp(first + 1, values.len() - 1);
                let mut total = 0.0;
                for i in first..last {
                    let (c0, c1) = (i as f64 * step, (i + 1) as f64 * step);
                    let (x0, x1) = (lo.max(c0), hi.min(c1));
                    if x1 > x0 {
                        total += 0.5 * (self.value(x0) + self.value(x1)) * (x1 - x0);
                    }
                }
                total
            }
        }
    }
}

impl ControlSignal for Waveform {
    fn average(&self, a: f64, b: f64) -> f64 {
        self.integral(a, b) / (b - a)
    }

    fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        match self {
            Waveform::Sinusoid { .. } => Vec::new(),
            Waveform::Sampled { values, step, .. } => (1..values.len())
                .map(|i| i as f64 * step)
                .filter(|&t| t > 0.0 && t < t_end)
                .collect(),
        }
    }
}

/// `ξ = max_{t∈[0,T]} |u(t)|`: exact for sinusoids, grid maximum for samples.
pub fn amplitude_from_waveform(w: &Waveform, duration: f64) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::InvalidInput(format!("duration {duration} must be positive")));
    }
    let max = match w {
        Waveform::Sinusoid { amplitude, omega, phase } => {
            let (x0, x1) = (*phase, omega * duration + phase);
            let (x0, x1) = (x0.min(x1), x0.max(x1));
            let first_peak = ((x0 - PI / 2.0) / PI).ceil();
            let last_peak = ((x1 - PI / 2.0) / PI).floor();
            if first_peak <= last_peak {
                amplitude.abs()
            } else {
                (amplitude * x0.sin()).abs().max((amplitude * x1.sin()).abs())
            }
        }
        Waveform::Sampled { values, step, .. } => values
            .iter()
            .enumerate()
            .take_while(|(i, _)| *i as f64 * step <= duration)
            .map(|(_, v)| v.abs())
            .fold(w.value(duration).abs(), f64::max),
    };
    if max == 0.0 {
        return Err(Error::ZeroWaveform);
    }
    Ok(max)
}

/// Signed widths `τ_m = (1/ξ) ∫_{(m-1)τ}^{mτ} u(t) dt` for `m = 1..=M`.
pub fn widths_from_waveform(w: &Waveform, tau: f64, intervals: usize, xi: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0 && xi > 0.0) {
        return Err(Error::InvalidInput(format!("tau ({tau}) and xi ({xi}) must be positive")));
    }
    (0..intervals)
        .map(|m| {
            let (a, b) = (m as f64 * tau, (m + 1) as f64 * tau);
            clamp_width(w.integral(a, b) / xi, tau)
        })
        .collect()
}

/// Accepts widths within rounding of `±τ` and clamps them; larger ones overflow.
pub(crate) fn clamp_width(width: f64, tau: f64) -> Result<f64> {
    if width.abs() <= tau {
        Ok(width)
    } else if width.abs() <= tau * (1.0 + 1e-12) {
        Ok(tau.copysign(width))
    } else {
        Err(Error::WidthOverflow { width, tau })
    }
}
