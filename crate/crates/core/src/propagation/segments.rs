use super::cache::SignPattern;
use crate::error::{Error, Result};

/// A stretch of constant Hamiltonian inside one interval.
///
/// Durations are non-negative for the plain nested scheme; higher-order
/// compositions also emit negative ones (backward steps).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub pattern: SignPattern,
}

/// Centered nesting of one interval's pulses, in time order.
///
/// Controls are ranked by `|width|` (ties favor the lower index), so the widest
/// pulse switches on first and off last. Zero-width controls never switch on and
/// zero-length segments are dropped.
pub fn interval_segments(widths: &[f64], tau: f64) -> Result<Vec<Segment>> {
    if let Some(&w) = widths.iter().find(|w| !(w.abs() <= tau)) {
        return Err(Error::WidthOverflow { width: w, tau });
    }
    let mut order: Vec<usize> = (0..widths.len()).filter(|&k| widths[k] != 0.0).collect();
    order.sort_by(|&a, &b| widths[b].abs().total_cmp(&widths[a].abs()).then(a.cmp(&b)));

    let mut pattern = SignPattern::off(widths.len());
    let mut left = Vec::with_capacity(order.len() + 1);
    let mut outer = tau;
    for &k in &order {
        let w = widths[k].abs();
        left.push(Segment { duration: (outer - w) / 2.0, pattern: pattern.clone() });
        pattern.signs[k] = if widths[k] > 0.0 { 1 } else { -1 };
        outer = w;
    }
    let center = Segment { duration: outer, pattern };

    let mut out: Vec<Segment> = left.iter().filter(|s| s.duration > 0.0).cloned().collect();
    if center.duration > 0.0 {
        out.push(center);
    }
    out.extend(left.into_iter().rev().filter(|s| s.duration > 0.0));
    Ok(out)
}

/// `s_n = 1 / (2 - 2^{1/(2n+1)})`.
pub fn yoshida_scale(n: usize) -> f64 {
    1.0 / (2.0 - 2f64.powf(1.0 / (2 * n + 1) as f64))
}

/// Triple-jump composition of a symmetric segment list.
///
/// Each level `j = 1..=n` replaces the current block `S` by
/// `S(s_j τ) S((1-2s_j) τ) S(s_j τ)`. The middle copy has negative durations
/// (`1 - 2s_j < 0`); the total duration is unchanged.
pub fn higher_order_segments(segments: &[Segment], n: usize) -> Vec<Segment> {
    let mut block = segments.to_vec();
    for j in 1..=n {
        let s = yoshida_scale(j);
        let scaled = |f: f64| block.iter().map(move |seg| Segment { duration: seg.duration * f, pattern: seg.pattern.clone() });
        block = scaled(s).chain(scaled(1.0 - 2.0 * s)).chain(scaled(s)).collect();
    }
    block
}
