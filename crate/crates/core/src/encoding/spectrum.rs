use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::render::render;
use super::train::PulseTrain;
use super::waveform::Waveform;
use crate::error::{Error, Result};

/// Samples per interval used by [`spectrum_compare`].
pub const SPECTRUM_SAMPLES_PER_INTERVAL: usize = 32;
/// Fraction of the threshold below which deviations are scored.
pub const THRESHOLD_GUARD: f64 = 0.8;

/// One-sided DFT magnitudes of a waveform and the pulse train built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Bin frequencies `2πn/T`, rad/ns.
    pub frequencies: Vec<f64>,
    pub magnitudes_waveform: Vec<f64>,
    pub magnitudes_train: Vec<f64>,
    /// `Ω = min(2π/τ, M·ω_min)`, rad/ns.
    pub threshold: f64,
    /// Largest `|A_train - A_waveform|` over bins below `0.8·Ω`, relative to the
    /// largest magnitude in that band.
    pub max_relative_deviation_below_threshold: f64,
}

/// Compares the spectra of `w` and control `k` of `train` on `[0, T]`.
///
/// Both signals are box-averaged over bins of `τ/32` and treated as one period
/// of a periodic signal (Gaussian tails wrap around).
pub fn spectrum_compare(w: &Waveform, train: &PulseTrain, k: usize, duration: f64) -> Result<SpectrumReport> {
    let tau = train.tau();
    if ((train.duration() - duration) / duration).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "window {duration} ns must equal the train length {} ns",
            train.duration()
        )));
    }
    let per = SPECTRUM_SAMPLES_PER_INTERVAL;
    let train_samples = render(train, k, per, true)?;
    let step = train_samples.step;
    let n = train_samples.values.len();
    let wave_samples: Vec<f64> =
        (0..n).map(|i| w.integral(i as f64 * step, (i + 1) as f64 * step) / step).collect();

    let magnitudes_waveform = one_sided_magnitudes(&wave_samples);
    let magnitudes_train = one_sided_magnitudes(&train_samples.values);
    let frequencies: Vec<f64> = (0..magnitudes_train.len()).map(|i| 2.0 * PI * i as f64 / duration).collect();

    let (omega_min, _) = w.bandwidth();
    let threshold = (2.0 * PI / tau).min(train.intervals() as f64 * omega_min);
    let band = frequencies.iter().take_while(|&&f| f < THRESHOLD_GUARD * threshold).count();
    let scale = magnitudes_waveform[..band]
        .iter()
        .chain(&magnitudes_train[..band])
        .cloned()
        .fold(0.0, f64::max);
    let worst = (0..band).map(|i| (magnitudes_train[i] - magnitudes_waveform[i]).abs()).fold(0.0, f64::max);
    let deviation = if scale > 0.0 { worst / scale } else { 0.0 };

    Ok(SpectrumReport {
        frequencies,
        magnitudes_waveform,
        magnitudes_train,
        threshold,
        max_relative_deviation_below_threshold: deviation,
    })
}

/// `|X_n| / N` for `n = 0..=N/2`.
fn one_sided_magnitudes(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().take(n / 2 + 1).map(|z| z.norm() / n as f64).collect()
}
