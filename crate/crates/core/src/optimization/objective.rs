use rayon::prelude::*;

use crate::algebra::{unitarity_defect, ComplexMatrix};
use crate::device::{build_chain, embed_gate, DeviceSpec, Gate, TargetGate};
use crate::encoding::{staircase_from_train, LevelScheme, PulseTrain};
use crate::error::{Error, Result};
use crate::propagation::{
    interval_propagators, propagate_interval, propagate_staircase, propagate_train, ControlSystem, EigenCache,
    StaircaseMethod,
};

/// Average gate fidelity of a control system against a target gate, with
/// leakage out of the qubit subspace penalized.
#[derive(Debug)]
pub struct Objective {
    system: ControlSystem,
    target: TargetGate,
    cache: EigenCache,
}

impl Objective {
    pub fn new(system: ControlSystem, target: TargetGate) -> Result<Self> {
        let d = system.dim();
        if target.embedded.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: target.embedded.nrows() });
        }
        if let Some(&bad) = target.qubit_indices.iter().find(|&&i| i >= d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad + 1 });
        }
        let cache = EigenCache::new(&system);
        Ok(Objective { system, target, cache })
    }

    /// Chain built from `spec` with `gate` as the target.
    pub fn for_device(spec: &DeviceSpec, gate: &Gate) -> Result<Self> {
        Self::new(build_chain(spec)?, embed_gate(gate, spec)?)
    }

    pub fn system(&self) -> &ControlSystem {
        &self.system
    }

    pub fn target(&self) -> &TargetGate {
        &self.target
    }

    pub fn cache(&self) -> &EigenCache {
        &self.cache
    }

    /// `2^N`, the qubit-register dimension.
    pub fn register_dim(&self) -> usize {
        self.target.qubit_indices.len()
    }

    /// `J` from the qubit block `V = P U P` alone:
    /// `(‖V‖_F² + |tr(U_g† V)|²) / (q(q+1))`.
    fn block_fidelity(&self, v: &ComplexMatrix) -> f64 {
        let q = self.register_dim() as f64;
        let leak = v.norm_squared();
        let overlap = self.target.matrix.ad_mul(v).trace().norm_sqr();
        (leak + overlap) / (q * (q + 1.0))
    }

    fn qubit_block(&self, u: &ComplexMatrix) -> ComplexMatrix {
        let idx = &self.target.qubit_indices;
        ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| u[(idx[r], idx[c])])
    }

    /// `J` of a full propagator.
    pub fn fidelity(&self, u: &ComplexMatrix) -> Result<f64> {
        let d = self.system.dim();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
        }
        let defect = unitarity_defect(u);
        if defect > 1e-8 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(self.block_fidelity(&self.qubit_block(u)))
    }

    /// `J` of the propagator of `train`.
    pub fn evaluate(&self, train: &PulseTrain) -> Result<f64> {
        self.fidelity(&propagate_train(&self.system, train, &self.cache)?)
    }

    /// Central-difference gradient `∂J/∂τ_{k,m}`, indexed `[k][m]`.
    ///
    /// Probes stay inside the admissible width range; near a bound the
    /// difference becomes one-sided. Each probe re-propagates only its own
    /// interval between cached partial products.
    pub fn gradient_fd(&self, train: &PulseTrain, h: f64) -> Result<Vec<Vec<f64>>> {
        let tau = train.tau();
        if !(h > 0.0 && h <= tau / 100.0) {
            return Err(Error::InvalidInput(format!("difference step {h} ns must lie in (0, τ/100]")));
        }
        let d = self.system.dim();
        let idx = &self.target.qubit_indices;
        let q = idx.len();
        let units = interval_propagators(&self.system, train, &self.cache)?;
        let m_count = units.len();

        // before[m] = U_{m-1}⋯U_1 restricted to qubit columns; after[m] = U_M⋯U_{m+1} restricted to qubit rows
        let mut before = Vec::with_capacity(m_count);
        let mut acc = ComplexMatrix::from_fn(d, q, |i, c| if i == idx[c] { 1.0.into() } else { 0.0.into() });
        for u in &units {
            before.push(acc.clone());
            acc = u * acc;
        }
        let mut after = vec![ComplexMatrix::zeros(q, d); m_count];
        let mut acc = ComplexMatrix::from_fn(q, d, |r, j| if j == idx[r] { 1.0.into() } else { 0.0.into() });
        for m in (0..m_count).rev() {
            after[m] = acc.clone();
            acc = &acc * &units[m];
        }

        let (lo, hi) = width_bounds(train);
        let k_count = train.controls();
        let probes: Vec<(usize, usize)> = (0..k_count).flat_map(|k| (0..m_count).map(move |m| (k, m))).collect();
        let values: Vec<f64> = probes
            .par_iter()
            .map(|&(k, m)| -> Result<f64> {
                let mut widths = train.interval_widths(m);
                let w = widths[k];
                let (wp, wm) = ((w + h).min(hi), (w - h).max(lo));
                let mut j = [0.0; 2];
                for (slot, probe) in j.iter_mut().zip([wp, wm]) {
                    widths[k] = probe;
                    let u = propagate_interval(&self.system, train, &widths, &self.cache)?;
                    *slot = self.block_fidelity(&(&after[m] * (u * &before[m])));
                }
                Ok((j[0] - j[1]) / (wp - wm))
            })
            .collect::<Result<_>>()?;
        Ok(values.chunks(m_count.max(1)).map(<[f64]>::to_vec).take(k_count).collect())
    }

    /// `J` after converting the train to its staircase and propagating that
    /// with matrix exponentials.
    pub fn evaluate_staircase_conversion(&self, train: &PulseTrain) -> Result<f64> {
        let values = staircase_from_train(train);
        let u = propagate_staircase(&self.system, &values, train.tau(), StaircaseMethod::Pade)?;
        self.fidelity(&u)
    }
}

/// Admissible range of a single width.
pub(crate) fn width_bounds(train: &PulseTrain) -> (f64, f64) {
    match train.levels() {
        LevelScheme::ThreeLevel => (-train.tau(), train.tau()),
        LevelScheme::TwoLevel { .. } => (0.0, train.tau()),
    }
}

/// `J` of `u` for `obj`'s target.
pub fn fidelity(obj: &Objective, u: &ComplexMatrix) -> Result<f64> {
    obj.fidelity(u)
}

/// See [`Objective::gradient_fd`].
pub fn gradient_fd(obj: &Objective, train: &PulseTrain, h: f64) -> Result<Vec<Vec<f64>>> {
    obj.gradient_fd(train, h)
}

/// See [`Objective::evaluate_staircase_conversion`].
pub fn evaluate_staircase_conversion(obj: &Objective, train: &PulseTrain) -> Result<f64> {
    obj.evaluate_staircase_conversion(train)
}
