//! File formats: pulse trains and spectra as CSV, matrices and systems as JSON.
//!
//! Floats are written in shortest round-trip form, so reading a file and
//! writing it back reproduces it byte for byte.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, MatrixJson};
use crate::encoding::{LevelScheme, PulseTrain, SpectrumReport};
use crate::error::{Error, Result};
use crate::optimization::TracePoint;
use crate::propagation::{Control, ControlSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TrainRow {
    k: usize,
    m: usize,
    width_ns: f64,
    xi_rad_per_ns: f64,
    sign: i8,
}

/// Writes a three-level train, one row per `(k, m)` with 1-based indices.
///
/// `τ` is not part of the format; readers must be told it.
pub fn write_train_csv<W: Write>(train: &PulseTrain, out: W) -> Result<()> {
    if *train.levels() != LevelScheme::ThreeLevel {
        return Err(Error::InvalidInput("only three-level trains have a CSV form".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    for (k, row) in train.widths().iter().enumerate() {
        for (m, &width) in row.iter().enumerate() {
            let sign = if width > 0.0 {
                1
            } else if width < 0.0 {
                -1
            } else {
                0
            };
            w.serialize(TrainRow {
                k: k + 1,
                m: m + 1,
                width_ns: width.abs(),
                xi_rad_per_ns: train.amplitudes()[k],
                sign,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a train written by [`write_train_csv`]. Rows may come in any order but
/// must cover every `(k, m)` exactly once; a header-only file is the empty train.
pub fn read_train_csv<R: Read>(input: R, tau: f64) -> Result<PulseTrain> {
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(input).deserialize::<TrainRow>() {
        rows.push(rec?);
    }
    let k_count = rows.iter().map(|r| r.k).max().unwrap_or(0);
    let m_count = rows.iter().map(|r| r.m).max().unwrap_or(0);
    if k_count.checked_mul(m_count) != Some(rows.len()) {
        return Err(Error::Malformed(format!("{} rows do not form a {k_count}x{m_count} grid", rows.len())));
    }
    let mut widths = vec![vec![f64::NAN; m_count]; k_count];
    let mut xi = vec![f64::NAN; k_count];
    for r in &rows {
        if r.k == 0 || r.m == 0 {
            return Err(Error::Malformed("indices k and m are 1-based".into()));
        }
        if !(r.width_ns >= 0.0) || !(-1..=1).contains(&r.sign) || (r.sign == 0) != (r.width_ns == 0.0) {
            return Err(Error::Malformed(format!("row k={} m={}: bad width or sign", r.k, r.m)));
        }
        let slot = &mut widths[r.k - 1][r.m - 1];
        if !slot.is_nan() {
            return Err(Error::Malformed(format!("duplicate row k={} m={}", r.k, r.m)));
        }
        *slot = match r.sign {
            1 => r.width_ns,
            -1 => -r.width_ns,
            _ => 0.0,
        };
        let x = &mut xi[r.k - 1];
        if x.is_nan() {
            *x = r.xi_rad_per_ns;
        } else if *x != r.xi_rad_per_ns {
            return Err(Error::Malformed(format!("control {} has inconsistent amplitudes", r.k)));
        }
    }
    PulseTrain::three_level(tau, xi, widths).map_err(|e| Error::Malformed(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub freq_rad_per_ns: f64,
    pub mag_waveform: f64,
    pub mag_train: f64,
}

pub fn write_spectrum_csv<W: Write>(report: &SpectrumReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..report.frequencies.len() {
        w.serialize(SpectrumRow {
            freq_rad_per_ns: report.frequencies[i],
            mag_waveform: report.magnitudes_waveform[i],
            mag_train: report.magnitudes_train[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(input: R) -> Result<Vec<SpectrumRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    iteration: usize,
    #[serde(rename = "J")]
    fidelity: f64,
    wall_ms: f64,
}

/// `iteration,J,wall_ms`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in trace {
        w.serialize(TraceRow { iteration: p.iteration, fidelity: p.fidelity, wall_ms: p.wall_ms })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TracePoint>> {
    csv::Reader::from_reader(input)
        .deserialize::<TraceRow>()
        .map(|r| {
            let r = r?;
            Ok(TracePoint { iteration: r.iteration, fidelity: r.fidelity, wall_ms: r.wall_ms })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlJson {
    pub h: MatrixJson,
    /// rad/ns
    pub xi: f64,
}

/// `{"h0": matrix, "controls": [{"h": matrix, "xi": ...}]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub h0: MatrixJson,
    #[serde(default)]
    pub controls: Vec<ControlJson>,
}

impl From<&ControlSystem> for SystemJson {
    fn from(s: &ControlSystem) -> Self {
        SystemJson {
            h0: s.h0().into(),
            controls: s.controls().iter().map(|c| ControlJson { h: (&c.h).into(), xi: c.xi }).collect(),
        }
    }
}

impl TryFrom<SystemJson> for ControlSystem {
    type Error = Error;

    fn try_from(j: SystemJson) -> Result<Self> {
        let h0 = ComplexMatrix::try_from(j.h0)?;
        let controls = j
            .controls
            .into_iter()
            .map(|c| Ok(Control { h: ComplexMatrix::try_from(c.h)?, xi: c.xi }))
            .collect::<Result<Vec<_>>>()?;
        ControlSystem::new(h0, controls).map_err(|e| Error::Malformed(e.to_string()))
    }
}

pub fn read_system_json<R: Read>(input: R) -> Result<ControlSystem> {
    serde_json::from_reader::<_, SystemJson>(input)?.try_into()
}

pub fn write_system_json<W: Write>(system: &ControlSystem, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &SystemJson::from(system))?;
    Ok(())
}

/// Output of `propagate`: the unitary and, when a target was given, `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryJson {
    pub unitary: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, pauli_z};
    use crate::encoding::SpectrumReport;
    use proptest::prelude::*;

    fn train_text(t: &PulseTrain) -> String {
        let mut buf = Vec::new();
        write_train_csv(t, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn train_header_and_rows() {
        let t = PulseTrain::three_level(1.0, vec![0.5], vec![vec![0.25, -0.5, 0.0]]).unwrap();
        let text = train_text(&t);
        assert_eq!(
            text,
            "k,m,width_ns,xi_rad_per_ns,sign\n1,1,0.25,0.5,1\n1,2,0.5,0.5,-1\n1,3,0.0,0.5,0\n"
        );
        assert_eq!(read_train_csv(text.as_bytes(), 1.0).unwrap(), t);
        let empty = read_train_csv("k,m,width_ns,xi_rad_per_ns,sign\n".as_bytes(), 1.0).unwrap();
        assert_eq!((empty.controls(), empty.intervals()), (0, 0));
    }

    #[test]
    fn train_rejects_bad_files() {
        let head = "k,m,width_ns,xi_rad_per_ns,sign\n";
        for body in [
            "1,1,0.2,1.0,1\n1,1,0.2,1.0,1\n",
            "1,1,0.2,1.0,0\n",
            "1,1,0.2,1.0,1\n2,2,0.1,1.0,1\n",
            "1,1,0.2,1.0,1\n1,2,0.2,2.0,1\n",
            "1,1,2.0,1.0,1\n",
            "1,1,abc,1.0,1\n",
        ] {
            let err = read_train_csv(format!("{head}{body}").as_bytes(), 1.0).unwrap_err();
            assert!(err.is_input_error(), "{body:?}: {err}");
        }
    }

    proptest! {
        #[test]
        fn train_round_trips_bit_exactly(
            widths in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 1..12), 1..4),
            xi in 0.01f64..50.0,
        ) {
            let m = widths[0].len();
            let widths: Vec<Vec<f64>> = widths.into_iter().map(|mut r| { r.resize(m, 0.0); r }).collect();
            let k = widths.len();
            let t = PulseTrain::three_level(1.0, vec![xi; k], widths).unwrap();
            let text = train_text(&t);
            let back = read_train_csv(text.as_bytes(), 1.0).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(train_text(&back), text);
        }
    }

    #[test]
    fn spectrum_and_trace_round_trip() {
        let r = SpectrumReport {
            frequencies: vec![0.1, 0.2 + 1e-17],
            magnitudes_waveform: vec![1.0 / 3.0, 0.0],
            magnitudes_train: vec![0.3, 2e-300],
            threshold: 1.0,
            max_relative_deviation_below_threshold: 0.0,
        };
        let mut buf = Vec::new();
        write_spectrum_csv(&r, &mut buf).unwrap();
        assert!(buf.starts_with(b"freq_rad_per_ns,mag_waveform,mag_train\n"));
        let rows = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(rows[0].mag_waveform, 1.0 / 3.0);
        assert_eq!(rows[1].mag_train, 2e-300);

        let trace = vec![
            TracePoint { iteration: 0, fidelity: 0.123456789012345, wall_ms: 0.5 },
            TracePoint { iteration: 3, fidelity: 0.9999, wall_ms: 12.25 },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        assert!(buf.starts_with(b"iteration,J,wall_ms\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn system_round_trip() {
        let sys = ControlSystem::new(pauli_z(), vec![Control { h: pauli_x(), xi: 0.7 }]).unwrap();
        let mut buf = Vec::new();
        write_system_json(&sys, &mut buf).unwrap();
        let back = read_system_json(buf.as_slice()).unwrap();
        assert_eq!(back, sys);
        let mut again = Vec::new();
        write_system_json(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn non_hermitian_system_is_malformed() {
        let text = r#"{"h0": {"dim": 2, "re": [[0, 1], [0, 0]], "im": [[0, 0], [0, 0]]}}"#;
        assert!(read_system_json(text.as_bytes()).unwrap_err().is_input_error());
    }
}
