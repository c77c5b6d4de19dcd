use std::f64::consts::PI;

use pwmqoc::algebra::{expm_pade, random_hermitian, Complex64, ComplexMatrix};
use pwmqoc::device::{embed_gate, DeviceSpec, Gate};
use pwmqoc::optimization::Objective;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn objective(n: usize, gate: Gate) -> Objective {
    Objective::for_device(&DeviceSpec::chain(n), &gate).unwrap()
}

/// The gate on the qubit levels, identity on every leakage level.
fn ideal(n: usize, gate: &Gate) -> ComplexMatrix {
    let spec = DeviceSpec::chain(n);
    let t = embed_gate(gate, &spec).unwrap();
    let mut u = t.embedded.clone();
    for i in 0..spec.dim() {
        if !t.qubit_indices.contains(&i) {
            u[(i, i)] = 1.0.into();
        }
    }
    u
}

#[test]
fn ideal_gates_score_one() {
    for (n, gate) in [(1, Gate::Not), (2, Gate::Cnot), (3, Gate::Ccz)] {
        assert_eq!(objective(n, gate.clone()).fidelity(&ideal(n, &gate)).unwrap(), 1.0, "{}", gate.name());
    }
}

#[test]
fn identity_against_not() {
    let j = objective(1, Gate::Not).fidelity(&ComplexMatrix::identity(3, 3)).unwrap();
    assert!((j - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn full_leakage_scores_zero() {
    // swap |0> and |2>: the qubit block keeps only |1><1|
    let mut u = ComplexMatrix::zeros(3, 3);
    u[(2, 0)] = 1.0.into();
    u[(0, 2)] = 1.0.into();
    u[(1, 1)] = 1.0.into();
    let j = objective(1, Gate::Not).fidelity(&u).unwrap();
    // ‖V‖² = 1, tr(G† V) = 0
    assert!((j - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn rejects_non_unitary_input() {
    let u = ComplexMatrix::identity(3, 3) * Complex64::from(1.1);
    assert!(objective(1, Gate::Not).fidelity(&u).is_err());
}

proptest! {
    #[test]
    fn bounded_and_phase_invariant(seed in 0u64..1000, phase in 0.0..2.0 * PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = expm_pade(&random_hermitian(9, &mut rng), 1.0);
        let obj = objective(2, Gate::Cnot);
        let j = obj.fidelity(&u).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&j));
        let shifted = obj.fidelity(&(&u * Complex64::from_polar(1.0, phase))).unwrap();
        prop_assert!((j - shifted).abs() < 1e-12);
    }
}
