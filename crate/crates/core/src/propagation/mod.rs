//! Time propagation under `H(t) = H_0 + Σ_k u_k(t) H_k`.
//!
//! Pulse trains only ever switch between a handful of Hamiltonians, so
//! [`propagate_train`] diagonalizes each one once (in an [`EigenCache`]) and
//! builds every interval from phase factors and basis changes. The other
//! engines here (staircase, reference oracle) exist to check it.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::algebra::{hermitian_defect, ComplexMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};

mod cache;
mod jitter;
mod oracle;
mod pwm;
mod segments;
mod staircase;

pub use cache::{EigenCache, GeneratorKey, SignPattern};
pub use jitter::{
    jitter_expectation, jitter_expectation_train, jitter_monte_carlo, JitterConfig, JitterReport, JitterSigma,
};
pub use oracle::{reference_oracle, reference_oracle_detailed, OracleRun, MAX_REFINEMENTS};
pub use pwm::{
    interval_propagators, propagate_hard_pulse, propagate_higher_order, propagate_interval, propagate_segments,
    propagate_state, propagate_train,
};
pub use segments::{higher_order_segments, interval_segments, yoshida_scale, Segment};
pub use staircase::{propagate_staircase, StaircaseMethod};

static NEXT_SYSTEM_ID: AtomicU64 = AtomicU64::new(1);

/// One control Hamiltonian and its nominal pulse amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub h: ComplexMatrix,
    /// Nominal amplitude `ξ_k` in rad/ns.
    pub xi: f64,
}

/// Drift plus control Hamiltonians, all in rad/ns.
///
/// Immutable once built; an [`EigenCache`] is tied to the system it was made for.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    id: u64,
    h0: ComplexMatrix,
    controls: Vec<Control>,
}

impl ControlSystem {
    pub fn new(h0: ComplexMatrix, controls: Vec<Control>) -> Result<Self> {
        let d = h0.nrows();
        for m in std::iter::once(&h0).chain(controls.iter().map(|c| &c.h)) {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.ncols().max(m.nrows()) });
            }
            let defect = hermitian_defect(m);
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian(defect));
            }
        }
        if let Some(c) = controls.iter().find(|c| !(c.xi > 0.0 && c.xi.is_finite())) {
            return Err(Error::InvalidInput(format!("control amplitude {} must be positive", c.xi)));
        }
        Ok(ControlSystem { id: NEXT_SYSTEM_ID.fetch_add(1, Ordering::Relaxed), h0, controls })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn control_count(&self) -> usize {
        self.controls.len()
    }

    /// Nominal `ξ_k` of every control.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.controls.iter().map(|c| c.xi).collect()
    }

    /// `[H_0] + Σ_k c_k H_k`, with the drift included only if `drift`.
    pub fn hamiltonian(&self, drift: bool, coeffs: &[f64]) -> ComplexMatrix {
        let mut h = if drift { self.h0.clone() } else { ComplexMatrix::zeros(self.dim(), self.dim()) };
        for (c, &x) in self.controls.iter().zip(coeffs) {
            if x != 0.0 {
                h += &c.h * crate::algebra::Complex64::from(x);
            }
        }
        h
    }

    pub(crate) fn id(&self) -> u64 {
        self.id
    }

    pub(crate) fn check_controls(&self, k: usize) -> Result<()> {
        if k != self.controls.len() {
            return Err(Error::DimensionMismatch { expected: self.controls.len(), found: k });
        }
        Ok(())
    }
}

impl PartialEq for ControlSystem {
    fn eq(&self, other: &Self) -> bool {
        self.h0 == other.h0 && self.controls == other.controls
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_x, pauli_z, Complex64};

    #[test]
    fn rejects_bad_systems() {
        let mut h = pauli_x();
        h[(0, 1)] = Complex64::new(1.0, 0.5);
        assert!(matches!(ControlSystem::new(h, vec![]), Err(Error::NotHermitian(_))));
        let c = Control { h: ComplexMatrix::identity(3, 3), xi: 1.0 };
        assert!(matches!(ControlSystem::new(pauli_z(), vec![c]), Err(Error::DimensionMismatch { .. })));
        let c = Control { h: pauli_x(), xi: 0.0 };
        assert!(ControlSystem::new(pauli_z(), vec![c]).is_err());
    }

    #[test]
    fn hamiltonian_sums_controls() {
        let sys = ControlSystem::new(pauli_z(), vec![Control { h: pauli_x(), xi: 2.0 }]).unwrap();
        let h = sys.hamiltonian(true, &[0.5]);
        assert_eq!(h, pauli_z() + pauli_x() * Complex64::from(0.5));
        assert_eq!(sys.hamiltonian(false, &[0.0]), ComplexMatrix::zeros(2, 2));
        assert_eq!(sys.clone(), sys);
    }
}
