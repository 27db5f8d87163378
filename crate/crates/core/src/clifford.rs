//! Random Clifford circuits for thermal-pure-state preparation and random
//! Pauli measurement bases.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{c, DenseOperator, Mat2, StateVector};
use crate::error::{invalid, Error, Result};
use crate::pauli::Pauli;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordKind {
    H,
    S,
    Sdg,
    /// `R = S H`, the generator of the single-qubit twirl.
    R,
    /// `R^2`.
    R2,
    X,
    Z,
    Cnot,
}

impl CliffordKind {
    pub fn arity(self) -> usize {
        match self {
            Self::Cnot => 2,
            _ => 1,
        }
    }

    /// 2x2 matrix of a single-qubit kind (target matrix for CNOT).
    pub fn matrix(self) -> Mat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        match self {
            Self::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            Self::S => [[l, o], [o, c(0.0, 1.0)]],
            Self::Sdg => [[l, o], [o, c(0.0, -1.0)]],
            Self::R => mat2_mul(&Self::S.matrix(), &Self::H.matrix()),
            Self::R2 => {
                let r = Self::R.matrix();
                mat2_mul(&r, &r)
            }
            Self::X | Self::Cnot => [[o, l], [l, o]],
            Self::Z => [[l, o], [o, -l]],
        }
    }
}

pub(crate) fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordGate {
    pub kind: CliffordKind,
    /// `[qubit]`, or `[control, target]` for CNOT.
    pub qubits: Vec<usize>,
}

impl CliffordGate {
    pub fn single(kind: CliffordKind, q: usize) -> Self {
        Self { kind, qubits: vec![q] }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: CliffordKind::Cnot,
            qubits: vec![control, target],
        }
    }
}

/// Ordered gate list on `n` qubits; the first gate acts first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliffordCircuit {
    n: usize,
    gates: Vec<CliffordGate>,
}

impl CliffordCircuit {
    pub fn new(n: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        for g in &gates {
            if g.qubits.len() != g.kind.arity() {
                return Err(invalid(format!("{:?} takes {} qubits", g.kind, g.kind.arity())));
            }
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n) {
                return Err(invalid(format!("qubit {q} out of range for {n} qubits")));
            }
            if g.kind == CliffordKind::Cnot && g.qubits[0] == g.qubits[1] {
                return Err(invalid("CNOT control equals target"));
            }
        }
        Ok(Self { n, gates })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// ASAP layer count.
    pub fn depth(&self) -> usize {
        let mut free = vec![0usize; self.n];
        let mut depth = 0;
        for g in &self.gates {
            let layer = g.qubits.iter().map(|&q| free[q]).max().unwrap_or(0) + 1;
            for &q in &g.qubits {
                free[q] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == CliffordKind::Cnot).count()
    }

    /// Dense unitary, column `k` being the image of basis state `k`.
    pub fn unitary(&self) -> Result<DenseOperator> {
        let dim = 1usize << self.n;
        let mut out = DenseOperator::zeros(self.n);
        for k in 0..dim {
            let v = apply_clifford(self, &StateVector::basis_state(self.n, k))?;
            out.matrix_mut().set_column(k, v.amplitudes());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl<'de> Deserialize<'de> for CliffordCircuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            gates: Vec<CliffordGate>,
        }
        let raw = Raw::deserialize(d)?;
        CliffordCircuit::new(raw.n, raw.gates).map_err(serde::de::Error::custom)
    }
}

/// Per-qubit readout axes; qubit `j` is rotated by `H` (X), `H S^dagger`
/// (Y) or nothing (Z) before a computational-basis measurement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementBasis {
    axes: Vec<Pauli>,
}

impl MeasurementBasis {
    pub fn new(axes: Vec<Pauli>) -> Result<Self> {
        if axes.contains(&Pauli::I) {
            return Err(invalid("measurement axes must be X, Y or Z"));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    /// Basis-change circuit, `S^dagger` before `H` on Y qubits.
    pub fn rotation_circuit(&self) -> CliffordCircuit {
        let mut gates = Vec::new();
        for (q, &a) in self.axes.iter().enumerate() {
            match a {
                Pauli::X => gates.push(CliffordGate::single(CliffordKind::H, q)),
                Pauli::Y => {
                    gates.push(CliffordGate::single(CliffordKind::Sdg, q));
                    gates.push(CliffordGate::single(CliffordKind::H, q));
                }
                _ => {}
            }
        }
        CliffordCircuit {
            n: self.axes.len(),
            gates,
        }
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.axes {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|ch| Pauli::from_char(ch).ok_or_else(|| invalid(format!("bad axis {ch:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }
}

fn push_twirl<R: Rng + ?Sized>(gates: &mut Vec<CliffordGate>, q: usize, rng: &mut R) {
    match rng.gen_range(0..3u8) {
        0 => {}
        1 => gates.push(CliffordGate::single(CliffordKind::R, q)),
        _ => gates.push(CliffordGate::single(CliffordKind::R2, q)),
    }
}

/// CNOTs onto `target` from a random subset of `candidates`, each included
/// independently with probability 3/4.
///
/// The chosen controls are folded into a parity with a balanced CNOT tree,
/// copied onto the target with one CNOT, and the tree is uncomputed, so the
/// block has depth `2 ceil(log2 k) + 1` for `k` chosen controls.
pub fn random_xor_block<R: Rng + ?Sized>(
    target: usize,
    candidates: &[usize],
    rng: &mut R,
) -> Result<Vec<CliffordGate>> {
    if candidates.contains(&target) {
        return Err(invalid("XOR target is among its candidate controls"));
    }
    let chosen: Vec<usize> = candidates.iter().copied().filter(|_| rng.gen_bool(0.75)).collect();
    Ok(parity_onto(target, &chosen))
}

/// Gate sequence equal to `prod_c CNOT(c, target)` in logarithmic depth.
pub fn parity_onto(target: usize, controls: &[usize]) -> Vec<CliffordGate> {
    let k = controls.len();
    if k == 0 {
        return Vec::new();
    }
    let mut compute = Vec::new();
    let mut stride = 1;
    while stride < k {
        let mut i = 0;
        while i + stride < k {
            compute.push(CliffordGate::cnot(controls[i + stride], controls[i]));
            i += 2 * stride;
        }
        stride *= 2;
    }
    let mut out = compute.clone();
    out.push(CliffordGate::cnot(controls[0], target));
    out.extend(compute.into_iter().rev());
    out
}

/// Samples the linear-size, log-depth Clifford circuit used for the random
/// unitary `U`.
///
/// A uniformly random Pauli frame `X^a Z^b` on every qubit precedes the
/// eight twirl/XOR steps; the steps themselves only randomize Paulis up to
/// sign, and the frame removes the sign bias.
pub fn sample_two_design<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordCircuit> {
    if n == 0 {
        return Err(invalid("random unitary needs at least one qubit"));
    }
    let mut gates = Vec::new();
    let others: Vec<usize> = (1..n).collect();

    for q in 0..n {
        if rng.gen_bool(0.5) {
            gates.push(CliffordGate::single(CliffordKind::X, q));
        }
        if rng.gen_bool(0.5) {
            gates.push(CliffordGate::single(CliffordKind::Z, q));
        }
    }
    // 1
    for q in 0..n {
        push_twirl(&mut gates, q, rng);
    }
    // 2
    gates.extend(random_xor_block(0, &others, rng)?);
    // 3
    gates.push(CliffordGate::single(CliffordKind::H, 0));
    for &q in &others {
        push_twirl(&mut gates, q, rng);
    }
    // 4
    gates.extend(random_xor_block(0, &others, rng)?);
    // 5
    gates.push(CliffordGate::single(CliffordKind::H, 0));
    for &q in &others {
        push_twirl(&mut gates, q, rng);
    }
    // 6
    if rng.gen_bool(0.5) {
        gates.push(CliffordGate::single(CliffordKind::S, 0));
    }
    // 7
    gates.extend(random_xor_block(0, &others, rng)?);
    // 8
    push_twirl(&mut gates, 0, rng);

    CliffordCircuit::new(n, gates)
}

/// Independent uniform X/Y/Z axis per qubit.
pub fn sample_pauli_basis<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MeasurementBasis> {
    if n == 0 {
        return Err(invalid("measurement basis needs at least one qubit"));
    }
    let axes = (0..n).map(|_| Pauli::NON_IDENTITY[rng.gen_range(0..3)]).collect();
    Ok(MeasurementBasis { axes })
}

pub fn apply_clifford(circuit: &CliffordCircuit, psi: &StateVector) -> Result<StateVector> {
    if psi.num_qubits() != circuit.n || psi.dim() != 1usize << circuit.n {
        return Err(Error::DimensionMismatch {
            expected: 1usize << circuit.n,
            found: psi.dim(),
        });
    }
    let mut out = psi.clone();
    for g in &circuit.gates {
        match g.kind {
            CliffordKind::Cnot => out.apply_controlled(&g.qubits[..1], g.qubits[1], &g.kind.matrix()),
            k => out.apply_single(g.qubits[0], &k.matrix()),
        }
    }
    Ok(out)
}
