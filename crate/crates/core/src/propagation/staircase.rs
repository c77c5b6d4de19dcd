use super::ControlSystem;
use crate::algebra::{eig_hermitian, expm_eig, expm_pade, ComplexMatrix};
use crate::error::{Error, Result};

/// How each staircase step is exponentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StaircaseMethod {
    /// Scaling-and-squaring Padé (the conventional baseline).
    #[default]
    Pade,
    /// Fresh eigendecomposition per interval.
    EigPerInterval,
}

/// `Π_m exp(-iτ (H_0 + Σ_k u_{k,m} H_k))`, interval `M` leftmost.
///
/// `values[k][m]` is the level of control `k` during interval `m`.
pub fn propagate_staircase(
    system: &ControlSystem,
    values: &[Vec<f64>],
    tau: f64,
    method: StaircaseMethod,
) -> Result<ComplexMatrix> {
    system.check_controls(values.len())?;
    let intervals = values.first().map_or(0, Vec::len);
    if let Some(row) = values.iter().find(|r| r.len() != intervals) {
        return Err(Error::DimensionMismatch { expected: intervals, found: row.len() });
    }
    let d = system.dim();
    let mut u = ComplexMatrix::identity(d, d);
    let mut coeffs = vec![0.0; values.len()];
    for m in 0..intervals {
        for (c, row) in coeffs.iter_mut().zip(values) {
            *c = row[m];
        }
        let h = system.hamiltonian(true, &coeffs);
        let step = match method {
            StaircaseMethod::Pade => expm_pade(&h, tau),
            StaircaseMethod::EigPerInterval => expm_eig(&eig_hermitian(&h)?, tau),
        };
        u = step * u;
    }
    Ok(u)
}
