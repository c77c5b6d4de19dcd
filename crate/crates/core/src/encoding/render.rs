use std::f64::consts::PI;

use super::train::{LevelScheme, PulseShape, PulseTrain};
use super::ControlSignal;
use crate::error::{Error, Result};

/// Gaussian pulses are cut off this many standard deviations from their center.
pub const GAUSSIAN_TRUNCATION_SIGMAS: f64 = 5.0;

/// Bin-averaged time-domain samples: `values[i]` is the mean of the signal
/// over `[i·step, (i+1)·step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    /// Integral over whole bins `[first, last)`.
    pub fn bin_integral(&self, first: usize, last: usize) -> f64 {
        self.values[first..last].iter().sum::<f64>() * self.step
    }
}

/// The continuous-time pulse signal `s_k(t)` of one control.
#[derive(Debug, Clone, Copy)]
pub struct TrainSignal<'a> {
    train: &'a PulseTrain,
    k: usize,
}

impl<'a> TrainSignal<'a> {
    pub fn new(train: &'a PulseTrain, k: usize) -> Self {
        assert!(k < train.controls(), "control index {k} out of range");
        TrainSignal { train, k }
    }

    fn center(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.train.tau()
    }

    /// Half-length of the support of pulse `m`.
    fn half_support(&self, m: usize) -> f64 {
        let w = self.train.width(self.k, m).abs();
        match self.train.shape() {
            PulseShape::Rectangular => w / 2.0,
            PulseShape::Gaussian => GAUSSIAN_TRUNCATION_SIGMAS * gaussian_sigma(w),
        }
    }

    /// Signed amplitude of pulse `m` above the base level.
    fn height(&self, m: usize) -> f64 {
        let xi = self.train.amplitudes()[self.k];
        match self.train.levels() {
            LevelScheme::ThreeLevel => xi * self.train.width(self.k, m).signum(),
            LevelScheme::TwoLevel { low } => xi - low[self.k],
        }
    }

    fn base(&self) -> f64 {
        match self.train.levels() {
            LevelScheme::ThreeLevel => 0.0,
            LevelScheme::TwoLevel { low } => low[self.k],
        }
    }

    /// `∫_a^b` of pulse `m` alone (its full support, no windowing).
    pub fn pulse_integral(&self, m: usize, a: f64, b: f64) -> f64 {
        let w = self.train.width(self.k, m).abs();
        if w == 0.0 {
            return 0.0;
        }
        let c = self.center(m);
        let half = self.half_support(m);
        let (lo, hi) = (a.max(c - half), b.min(c + half));
        if hi <= lo {
            return 0.0;
        }
        let h = self.height(m);
        match self.train.shape() {
            PulseShape::Rectangular => h * (hi - lo),
            PulseShape::Gaussian => {
                let scale = PI.sqrt() / w;
                h * w / 2.0 * (libm::erf(scale * (hi - c)) - libm::erf(scale * (lo - c)))
            }
        }
    }

    /// Indices of pulses whose support can overlap `[a, b]`.
    fn pulses_near(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let tau = self.train.tau();
        let reach = match self.train.shape() {
            PulseShape::Rectangular => 0.0,
            PulseShape::Gaussian => GAUSSIAN_TRUNCATION_SIGMAS * gaussian_sigma(tau),
        };
        let m = self.train.intervals() as f64;
        let first = (((a - reach) / tau).floor() - 1.0).clamp(0.0, m) as usize;
        let last = (((b + reach) / tau).ceil() + 1.0).clamp(0.0, m) as usize;
        first..last
    }

    /// `∫_a^b s_k(t) dt` for `a ≤ b`, counting only `[0, T]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let base = self.base() * (b.min(self.train.duration()) - a.max(0.0)).max(0.0);
        base + self.pulses_near(a, b).map(|m| self.pulse_integral(m, a.max(0.0), b)).sum::<f64>()
    }
}

impl ControlSignal for TrainSignal<'_> {
    fn average(&self, a: f64, b: f64) -> f64 {
        self.integral(a, b) / (b - a)
    }

    fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        let mut points: Vec<f64> = (0..self.train.intervals())
            .filter(|&m| self.train.width(self.k, m) != 0.0)
            .flat_map(|m| {
                let (c, h) = (self.center(m), self.half_support(m));
                [c - h, c + h]
            })
            .filter(|&t| t > 0.0 && t < t_end)
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }
}

/// `σ` of `exp(-π x²/w²)`, i.e. `w / √(2π)`.
pub fn gaussian_sigma(width: f64) -> f64 {
    width / (2.0 * PI).sqrt()
}

fn bins_per_interval(train: &PulseTrain, sample_rate: f64) -> Result<usize> {
    let per = sample_rate * train.tau();
    if !(per >= 8.0) {
        return Err(Error::ResolutionTooLow { rate: sample_rate, tau: train.tau() });
    }
    Ok(per.round() as usize)
}

/// Renders `s_k(t)` (rectangular or Gaussian) on `[0, T)` as bin averages.
///
/// Bins are aligned to the interval grid with `round(rate·τ)` bins per interval.
/// Gaussian tails falling outside `[0, T)` are dropped.
pub fn render_samples(train: &PulseTrain, k: usize, sample_rate: f64) -> Result<SampledSignal> {
    render(train, k, bins_per_interval(train, sample_rate)?, false)
}

/// As [`render_samples`], but tails outside `[0, T)` wrap around, treating the
/// train as one period of a periodic signal.
pub fn render_samples_periodic(train: &PulseTrain, k: usize, sample_rate: f64) -> Result<SampledSignal> {
    render(train, k, bins_per_interval(train, sample_rate)?, true)
}

pub(crate) fn render(train: &PulseTrain, k: usize, per_interval: usize, periodic: bool) -> Result<SampledSignal> {
    if k >= train.controls() {
        return Err(Error::InvalidInput(format!("control index {k} out of range")));
    }
    let signal = TrainSignal::new(train, k);
    let n = per_interval * train.intervals();
    let step = train.tau() / per_interval as f64;
    let total = train.duration();
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
            signal.integral(a, b) / step
        })
        .collect();
    if periodic && train.shape() == PulseShape::Gaussian && n > 0 {
        for m in 0..train.intervals() {
            let c = signal.center(m);
            let half = signal.half_support(m);
            for shift in [-total, total] {
                // part of pulse m sticking out of the window lands at t + shift
                let (lo, hi) = if shift < 0.0 { (total, c + half) } else { (c - half, 0.0) };
                if hi <= lo {
                    continue;
                }
                let first = (((lo + shift) / step).floor().max(0.0)) as usize;
                let last = ((((hi + shift) / step).ceil()) as usize).min(n);
                for (i, v) in values.iter_mut().enumerate().take(last).skip(first) {
                    let (a, b) = (i as f64 * step - shift, (i + 1) as f64 * step - shift);
                    *v += signal.pulse_integral(m, a.max(lo), b.min(hi)) / step;
                }
            }
        }
    }
    Ok(SampledSignal { step, values })
}
