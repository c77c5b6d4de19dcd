//! Waveform to pulse-train conversion.
//!
//! A waveform `u_k(t)` is replaced by one centered pulse of amplitude `ξ_k` per
//! interval of length `τ`, with signed width equal to the interval integral
//! divided by `ξ_k`. Below the threshold frequency the two signals share the
//! same Fourier components; [`spectrum_compare`] measures that.

mod render;
mod spectrum;
mod train;
mod waveform;

pub use render::{
    gaussian_sigma, render_samples, render_samples_periodic, SampledSignal, TrainSignal, GAUSSIAN_TRUNCATION_SIGMAS,
};
pub use spectrum::{spectrum_compare, SpectrumReport, SPECTRUM_SAMPLES_PER_INTERVAL, THRESHOLD_GUARD};
pub use train::{
    staircase_from_train, switching_instances, two_level_durations, widths_from_staircase, LevelScheme, PulseShape,
    PulseTrain, Switch,
};
pub use waveform::{amplitude_from_waveform, widths_from_waveform, Waveform};
pub(crate) use waveform::clamp_width;

/// A real control signal that can be averaged over arbitrary sub-intervals.
pub trait ControlSignal {
    /// Mean value over `[a, b]`.
    fn average(&self, a: f64, b: f64) -> f64;

    /// Points in `(0, t_end)` where the signal or its derivative jumps.
    fn breakpoints(&self, _t_end: f64) -> Vec<f64> {
        Vec::new()
    }
}
