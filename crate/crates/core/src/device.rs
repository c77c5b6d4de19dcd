//! Transmon chains: Kerr-nonlinear resonators with nearest-neighbor exchange,
//! driven in the frame rotating at the (common) qubit frequency.
//!
//! Atom 1 is the most significant factor of every Kronecker product, so the
//! basis state `|l_1 l_2 … l_N⟩` has index `Σ_n l_n · levels^{N-n}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{kron, unitarity_defect, Complex64, ComplexMatrix, I};
use crate::error::{Error, Result};
use crate::propagation::{Control, ControlSystem};

/// Converts a frequency in MHz to an angular frequency in rad/ns.
pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    2.0 * PI * mhz / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `a + a†`
    X,
    /// `i(a - a†)`
    Y,
    /// `a†a`
    Z,
}

/// Chain parameters, in the units of the JSON file (MHz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub n: usize,
    #[serde(default = "DeviceSpec::default_levels")]
    pub levels: usize,
    #[serde(default = "DeviceSpec::default_eta")]
    pub eta_mhz: f64,
    #[serde(default = "DeviceSpec::default_g")]
    pub g_mhz: f64,
    #[serde(default = "DeviceSpec::default_axes")]
    pub axes: Vec<Axis>,
    /// Pulse amplitude `ξ/2π` per axis; missing axes use 100 MHz.
    #[serde(default)]
    pub xi_mhz: BTreeMap<Axis, f64>,
}

impl DeviceSpec {
    fn default_levels() -> usize {
        3
    }
    fn default_eta() -> f64 {
        -200.0
    }
    fn default_g() -> f64 {
        30.0
    }
    fn default_axes() -> Vec<Axis> {
        vec![Axis::X, Axis::Y]
    }

    /// `n` atoms with the default parameters and x/y drives.
    pub fn chain(n: usize) -> Self {
        DeviceSpec {
            n,
            levels: Self::default_levels(),
            eta_mhz: Self::default_eta(),
            g_mhz: Self::default_g(),
            axes: Self::default_axes(),
            xi_mhz: BTreeMap::new(),
        }
    }

    pub fn with_axes(mut self, axes: &[Axis]) -> Self {
        self.axes = axes.to_vec();
        self
    }

    pub fn with_xi_mhz(mut self, axis: Axis, mhz: f64) -> Self {
        self.xi_mhz.insert(axis, mhz);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("a chain needs at least one atom".into()));
        }
        if self.levels < 2 {
            return Err(Error::InvalidInput(format!("truncation {} keeps fewer than 2 levels", self.levels)));
        }
        if self.axes.is_empty() {
            return Err(Error::InvalidInput("no control axes enabled".into()));
        }
        if let Some(x) = self.axes.iter().map(|&a| self.xi_mhz_for(a)).find(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!("pulse amplitude {x} MHz must be positive")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(self.n as u32)
    }

    /// Anharmonicity in rad/ns.
    pub fn eta(&self) -> f64 {
        mhz_to_rad_per_ns(self.eta_mhz)
    }

    /// Coupling in rad/ns.
    pub fn g(&self) -> f64 {
        mhz_to_rad_per_ns(self.g_mhz)
    }

    fn xi_mhz_for(&self, axis: Axis) -> f64 {
        self.xi_mhz.get(&axis).copied().unwrap_or(100.0)
    }

    /// Pulse amplitude for `axis` in rad/ns.
    pub fn xi(&self, axis: Axis) -> f64 {
        mhz_to_rad_per_ns(self.xi_mhz_for(axis))
    }

    /// Indices of the `2^N` basis states with every atom in `|0⟩` or `|1⟩`,
    /// in qubit-register order.
    pub fn qubit_indices(&self) -> Vec<usize> {
        (0..1usize << self.n)
            .map(|b| (0..self.n).fold(0, |acc, atom| acc * self.levels + ((b >> (self.n - 1 - atom)) & 1)))
            .collect()
    }
}

/// Lowering operator truncated to `levels`.
pub fn lowering(levels: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(levels, levels, |i, j| if j == i + 1 { Complex64::from((j as f64).sqrt()) } else { 0.0.into() })
}

/// `op` acting on atom `atom` (0-based) of an `n`-atom chain.
fn embed(op: &ComplexMatrix, atom: usize, n: usize) -> ComplexMatrix {
    let levels = op.nrows();
    let eye = ComplexMatrix::identity(levels, levels);
    (0..n).fold(ComplexMatrix::identity(1, 1), |acc, j| kron(&acc, if j == atom { op } else { &eye }))
}

fn axis_operator(axis: Axis, a: &ComplexMatrix) -> ComplexMatrix {
    let ad = a.adjoint();
    match axis {
        Axis::X => a + &ad,
        Axis::Y => (a - &ad) * I,
        Axis::Z => &ad * a,
    }
}

/// Chain Hamiltonian `Σ η/2 a†a†aa + g Σ (a_n† a_{n+1} + h.c.)` with one
/// control per (atom, axis), ordered atom-major.
pub fn build_chain(spec: &DeviceSpec) -> Result<ControlSystem> {
    spec.validate()?;
    let (n, levels) = (spec.n, spec.levels);
    let a = lowering(levels);
    let d = spec.dim();
    let kerr = ComplexMatrix::from_fn(levels, levels, |i, j| {
        if i == j {
            Complex64::from(spec.eta() / 2.0 * (i * i.saturating_sub(1)) as f64)
        } else {
            0.0.into()
        }
    });
    let mut h0 = ComplexMatrix::zeros(d, d);
    let lowered: Vec<ComplexMatrix> = (0..n).map(|atom| embed(&a, atom, n)).collect();
    for atom in 0..n {
        h0 += embed(&kerr, atom, n);
    }
    for pair in lowered.windows(2) {
        let hop = pair[0].adjoint() * &pair[1];
        h0 += (&hop + hop.adjoint()) * Complex64::from(spec.g());
    }
    let mut controls = Vec::with_capacity(n * spec.axes.len());
    for atom in 0..n {
        for &axis in &spec.axes {
            controls.push(Control { h: embed(&axis_operator(axis, &a), atom, n), xi: spec.xi(axis) });
        }
    }
    ControlSystem::new(h0, controls)
}

/// `⊗_n (1 - |2⟩⟨2| - …)`: projector onto the qubit subspace.
pub fn qubit_projector(spec: &DeviceSpec) -> ComplexMatrix {
    let d = spec.dim();
    let mut p = ComplexMatrix::zeros(d, d);
    for i in spec.qubit_indices() {
        p[(i, i)] = 1.0.into();
    }
    p
}

/// Named or supplied qubit-register gate.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Not,
    Cnot,
    Ccz,
    Custom(ComplexMatrix),
}

impl Gate {
    /// Accepts `NOT`, `CNOT` and `CCZ` in any case.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "NOT" | "X" => Ok(Gate::Not),
            "CNOT" => Ok(Gate::Cnot),
            "CCZ" => Ok(Gate::Ccz),
            other => Err(Error::InvalidInput(format!("unknown gate {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Not => "NOT",
            Gate::Cnot => "CNOT",
            Gate::Ccz => "CCZ",
            Gate::Custom(_) => "custom",
        }
    }

    /// Acting qubit count of the named gates.
    pub fn qubits(&self) -> Option<usize> {
        match self {
            Gate::Not => Some(1),
            Gate::Cnot => Some(2),
            Gate::Ccz => Some(3),
            Gate::Custom(m) => m.nrows().checked_ilog2().map(|q| q as usize).filter(|q| 1 << q == m.nrows()),
        }
    }

    /// The `2^N × 2^N` matrix; the first atom is the CNOT control.
    pub fn block(&self) -> ComplexMatrix {
        let one = Complex64::from(1.0);
        match self {
            Gate::Not => ComplexMatrix::from_row_slice(2, 2, &[0.0.into(), one, one, 0.0.into()]),
            Gate::Cnot => {
                let mut m = ComplexMatrix::identity(4, 4);
                m.swap_rows(2, 3);
                m
            }
            Gate::Ccz => {
                let mut m = ComplexMatrix::identity(8, 8);
                m[(7, 7)] = (-1.0).into();
                m
            }
            Gate::Custom(m) => m.clone(),
        }
    }
}

/// Gate on the qubit register and its embedding in the full chain space.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGate {
    pub name: String,
    pub matrix: ComplexMatrix,
    /// `d × d`; acts as `matrix` on qubit states and annihilates the rest.
    pub embedded: ComplexMatrix,
    /// Chain indices of the qubit basis states.
    pub qubit_indices: Vec<usize>,
}

pub fn embed_gate(gate: &Gate, spec: &DeviceSpec) -> Result<TargetGate> {
    spec.validate()?;
    let q = 1usize << spec.n;
    let block = gate.block();
    if block.nrows() != q || block.ncols() != q {
        return Err(Error::DimensionMismatch { expected: q, found: block.nrows() });
    }
    let defect = unitarity_defect(&block);
    if defect > 1e-12 {
        return Err(Error::NotUnitary(defect));
    }
    let idx = spec.qubit_indices();
    let d = spec.dim();
    let mut embedded = ComplexMatrix::zeros(d, d);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            embedded[(i, j)] = block[(r, c)];
        }
    }
    Ok(TargetGate { name: gate.name().to_string(), matrix: block, embedded, qubit_indices: idx })
}
