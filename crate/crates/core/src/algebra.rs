//! Dense complex matrices: Hermitian eigendecomposition, matrix exponentials,
//! Kronecker products and norms.
//!
//! Times are in ns and Hamiltonian entries in rad/ns, so every exponential in
//! this module is `exp(-i H t)`.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square complex matrix, the raw numeric type for Hamiltonians and propagators.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Complex column vector (state).
pub type ComplexVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance used when a Hermitian input is required.
pub const HERMITIAN_TOL: f64 = 1e-10;

thread_local! {
    static PADE_CALLS: Cell<u64> = const { Cell::new(0) };
    static EIG_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`expm_pade`] calls made so far on the current thread.
pub fn pade_call_count() -> u64 {
    PADE_CALLS.with(Cell::get)
}

/// Number of [`eig_hermitian`] calls made so far on the current thread.
pub fn eig_call_count() -> u64 {
    EIG_CALLS.with(Cell::get)
}

/// Eigendecomposition `H = P diag(Λ) P†` of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Ascending eigenvalues (rad/ns).
    pub eigenvalues: DVector<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub basis: ComplexMatrix,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `P diag(Λ) P†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.basis.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from(self.eigenvalues[j]);
        }
        scaled * self.basis.adjoint()
    }

    /// Applies `exp(-i H t)` to a state using two matrix-vector products.
    pub fn apply_exp(&self, t: f64, psi: &ComplexVector) -> ComplexVector {
        let mut coeffs = self.basis.ad_mul(psi);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, -self.eigenvalues[j] * t);
        }
        &self.basis * coeffs
    }
}

/// Largest entrywise `|m - m†|`.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_defect(m) <= tol
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Ties keep the solver's index order, so repeated calls on the same matrix are
/// bitwise identical.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenPair> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    EIG_CALLS.with(|c| c.set(c.get() + 1));

    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::ConvergenceFailure)?;
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&j| eig.eigenvalues[j]));
    let basis = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenPair { eigenvalues, basis })
}

/// `P diag(exp(-i Λ t)) P†`.
pub fn expm_eig(e: &EigenPair, t: f64) -> ComplexMatrix {
    let mut scaled = e.basis.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from_polar(1.0, -e.eigenvalues[j] * t);
    }
    scaled * e.basis.adjoint()
}

// Scaling-and-squaring Padé approximant (Higham 2005). Thresholds on the 1-norm
// select the lowest degree that meets double-precision backward error.
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068)];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &ComplexMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn scaled_identity(d: usize, c: f64) -> ComplexMatrix {
    ComplexMatrix::identity(d, d) * Complex64::from(c)
}

fn pade_low(a: &ComplexMatrix, b: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let d = a.nrows();
    let a2 = a * a;
    let mut even = scaled_identity(d, b[0]);
    let mut odd = scaled_identity(d, b[1]);
    let mut power = ComplexMatrix::identity(d, d);
    for j in 1..b.len() / 2 {
        power = &power * &a2;
        even += &power * Complex64::from(b[2 * j]);
        odd += &power * Complex64::from(b[2 * j + 1]);
    }
    (a * odd, even)
}

fn pade_13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let d = a.nrows();
    let b = PADE_13.map(Complex64::from);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let id = ComplexMatrix::identity(d, d);
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// `exp(-i m t)` by scaling and squaring with a Padé approximant.
///
/// This is the conventional generic-matrix route; it makes no use of Hermitian
/// structure and counts its calls in [`pade_call_count`].
pub fn expm_pade(m: &ComplexMatrix, t: f64) -> ComplexMatrix {
    PADE_CALLS.with(|c| c.set(c.get() + 1));
    let a = m * Complex64::new(0.0, -t);
    expm_general(&a)
}

/// `exp(a)` for a general square complex matrix.
pub fn expm_general(a: &ComplexMatrix) -> ComplexMatrix {
    let d = a.nrows();
    let norm = one_norm(a);
    if norm == 0.0 {
        return ComplexMatrix::identity(d, d);
    }
    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            let (u, v) = pade_low(a, coeffs);
            return pade_solve(&u, &v);
        }
    }
    let squarings = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a * Complex64::from(0.5f64.powi(squarings));
    let (u, v) = pade_13(&scaled);
    let mut r = pade_solve(&u, &v);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

fn pade_solve(u: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular inside the theta bounds")
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Frobenius distance `‖a - b‖_F`.
pub fn frob_dist(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows() * a.ncols(), found: b.nrows() * b.ncols() });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}

/// `‖U†U - 1‖_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let d = u.nrows();
    (u.ad_mul(u) - ComplexMatrix::identity(d, d)).norm()
}

/// Random Hermitian `A + A†` with standard normal complex entries in `A`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    &a + a.adjoint()
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[0.0.into(), -I, I, 0.0.into()])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[1.0.into(), 0.0.into(), 0.0.into(), (-1.0).into()])
}

/// JSON form of a complex matrix: `{"dim": d, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixJson { dim: m.nrows(), re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let d = j.dim;
        if d == 0 {
            return Err(Error::Malformed("matrix dim must be at least 1".into()));
        }
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::Malformed(format!("matrix entries do not form a {d}x{d} grid")));
        }
        Ok(ComplexMatrix::from_fn(d, d, |r, c| Complex64::new(j.re[r][c], j.im[r][c])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn hermitian_checks() {
        assert!(is_hermitian(&pauli_x(), 1e-12));
        let anti = ComplexMatrix::from_row_slice(2, 2, &[0.0.into(), I, I, 0.0.into()]);
        assert!(!is_hermitian(&anti, 1e-12));
        assert!(is_hermitian(&random_hermitian(7, &mut rng(1)), 1e-12));
    }

    #[test]
    fn pauli_z_eigen() {
        let e = eig_hermitian(&pauli_z()).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[-1.0, 1.0]);
        // basis = permutation of identity columns, up to phase
        assert!((e.basis[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.basis[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x_eigen() {
        let e = eig_hermitian(&pauli_x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        // (1, -1)/√2 for λ = -1 up to phase
        let v = e.basis.column(0);
        let overlap = (v[0] - v[1]) * FRAC_1_SQRT_2;
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_reconstruction() {
        let h = random_hermitian(9, &mut rng(2));
        let e = eig_hermitian(&h).unwrap();
        assert!(frob_dist(&e.reconstruct(), &h).unwrap() < 1e-10);
        assert!(unitarity_defect(&e.basis) < 1e-10);
        assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn not_hermitian_rejected() {
        let anti = ComplexMatrix::from_row_slice(2, 2, &[0.0.into(), I, I, 0.0.into()]);
        assert!(matches!(eig_hermitian(&anti), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_is_deterministic() {
        let h = random_hermitian(12, &mut rng(3));
        assert_eq!(eig_hermitian(&h).unwrap(), eig_hermitian(&h).unwrap());
    }

    #[test]
    fn expm_eig_cases() {
        let e = eig_hermitian(&random_hermitian(4, &mut rng(4))).unwrap();
        let id = ComplexMatrix::identity(4, 4);
        assert!(frob_dist(&expm_eig(&e, 0.0), &id).unwrap() < 1e-12);

        let z = eig_hermitian(&pauli_z()).unwrap();
        let minus_id = -ComplexMatrix::identity(2, 2);
        assert!(frob_dist(&expm_eig(&z, PI), &minus_id).unwrap() < 1e-12);
    }

    #[test]
    fn expm_pade_cases() {
        let zero = ComplexMatrix::zeros(3, 3);
        assert_eq!(expm_pade(&zero, 1.0), ComplexMatrix::identity(3, 3));
        let u = expm_pade(&pauli_x(), PI / 2.0);
        let expected = pauli_x() * -I;
        assert!(frob_dist(&u, &expected).unwrap() < 1e-14);
    }

    #[test]
    fn expm_routes_agree() {
        let h = random_hermitian(6, &mut rng(5));
        let e = eig_hermitian(&h).unwrap();
        let d = frob_dist(&expm_eig(&e, 0.37), &expm_pade(&h, 0.37)).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn pade_counter_increments() {
        let before = pade_call_count();
        expm_pade(&pauli_z(), 1.0);
        assert_eq!(pade_call_count(), before + 1);
    }

    #[test]
    fn kron_cases() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4, 4));
        let zi = kron(&pauli_z(), &i2);
        let diag: Vec<f64> = (0..4).map(|i| zi[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);

        let mut r = rng(6);
        let m: Vec<ComplexMatrix> = (0..4).map(|_| random_hermitian(3, &mut r)).collect();
        let lhs = kron(&m[0], &m[1]) * kron(&m[2], &m[3]);
        let rhs = kron(&(&m[0] * &m[2]), &(&m[1] * &m[3]));
        assert!(frob_dist(&lhs, &rhs).unwrap() < 1e-12 * lhs.norm());
    }

    #[test]
    fn frob_cases() {
        assert_eq!(frob_dist(&pauli_x(), &pauli_x()).unwrap(), 0.0);
        let d = frob_dist(&ComplexMatrix::identity(2, 2), &ComplexMatrix::zeros(2, 2)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let mut r = rng(7);
        let (a, b) = (random_hermitian(5, &mut r), random_hermitian(5, &mut r));
        let mut sum = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let diff = a[(i, j)] - b[(i, j)];
                sum += diff.re * diff.re + diff.im * diff.im;
            }
        }
        assert!((frob_dist(&a, &b).unwrap() - sum.sqrt()).abs() < 1e-12);
        assert!(matches!(
            frob_dist(&a, &ComplexMatrix::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let h = random_hermitian(3, &mut rng(8));
        let text = serde_json::to_string(&MatrixJson::from(&h)).unwrap();
        let back: ComplexMatrix = serde_json::from_str::<MatrixJson>(&text).unwrap().try_into().unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn json_rejects_ragged() {
        let j = MatrixJson { dim: 2, re: vec![vec![0.0; 2]; 2], im: vec![vec![0.0; 1]; 2] };
        assert!(ComplexMatrix::try_from(j).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn eig_exponential_is_unitary(seed in any::<u64>(), d in 1usize..12, t in -1000.0f64..1000.0) {
            let h = random_hermitian(d, &mut rng(seed));
            let u = expm_eig(&eig_hermitian(&h).unwrap(), t);
            prop_assert!(unitarity_defect(&u) < 1e-10);
        }

        #[test]
        fn exponential_routes_agree(seed in any::<u64>(), d in 1usize..28, t in -10.0f64..10.0) {
            let h = random_hermitian(d, &mut rng(seed));
            let a = expm_eig(&eig_hermitian(&h).unwrap(), t);
            let b = expm_pade(&h, t);
            prop_assert!(frob_dist(&a, &b).unwrap() < 1e-9);
        }
    }
}
