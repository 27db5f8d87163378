use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordCircuit, CliffordKind, MeasurementBasis};
use crate::dense::{c, DenseOperator, Mat2, StateVector};
use crate::error::{invalid, Error, Result};
use crate::pauli::Pauli;

/// Which part of the thermal-shadow circuit a gate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    RandomUnitary,
    Prep,
    Select,
    MultiCz,
    Phase,
    BasisRotation,
}

impl Tag {
    pub const ALL: [Tag; 6] = [
        Tag::RandomUnitary,
        Tag::Prep,
        Tag::Select,
        Tag::MultiCz,
        Tag::Phase,
        Tag::BasisRotation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::RandomUnitary => "random_unitary",
            Tag::Prep => "prep",
            Tag::Select => "select",
            Tag::MultiCz => "multi_cz",
            Tag::Phase => "phase",
            Tag::BasisRotation => "basis_rotation",
        }
    }

    /// Tags making up the imaginary-time block.
    pub fn is_qsp(self) -> bool {
        matches!(self, Tag::Prep | Tag::Select | Tag::MultiCz | Tag::Phase)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    H,
    S,
    Sdg,
    T,
    Tdg,
    X,
    Y,
    Z,
    /// `S H`
    R,
    /// `(S H)^2`
    R2,
    Rx,
    Ry,
    Rz,
    U3 { theta: f64, phi: f64, lambda: f64 },
    Cnot,
    Cz,
    Toffoli,
    /// Controls first, then one target per letter. `negative` flips the sign
    /// of the applied word.
    ControlledPauli { letters: Vec<Pauli>, negative: bool },
    /// Controls first, target last.
    MultiControlledZ,
    /// Controls first, target last; angle in the gate's `angle` field.
    MultiControlledRy,
}

impl GateKind {
    pub fn is_rotation(&self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::U3 { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::R => "r",
            GateKind::R2 => "r2",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::U3 { .. } => "u3",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Toffoli => "toffoli",
            GateKind::ControlledPauli { .. } => "controlled_pauli",
            GateKind::MultiControlledZ => "multi_controlled_z",
            GateKind::MultiControlledRy => "multi_controlled_ry",
        }
    }

    fn fixed_arity(&self) -> Option<usize> {
        match self {
            GateKind::Cnot | GateKind::Cz => Some(2),
            GateKind::Toffoli => Some(3),
            GateKind::ControlledPauli { .. } | GateKind::MultiControlledZ | GateKind::MultiControlledRy => None,
            _ => Some(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    /// Radians. `None` on a rotation means an unspecified generic angle,
    /// which counts like any other rotation but cannot be simulated.
    #[serde(default)]
    pub angle: Option<f64>,
    pub tag: Tag,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, tag: Tag) -> Self {
        Self {
            kind,
            qubits,
            angle: None,
            tag,
        }
    }

    pub fn rotation(kind: GateKind, qubit: usize, angle: Option<f64>, tag: Tag) -> Self {
        Self {
            kind,
            qubits: vec![qubit],
            angle,
            tag,
        }
    }

    /// Number of control qubits for the multi-controlled kinds.
    pub fn num_controls(&self) -> usize {
        match &self.kind {
            GateKind::ControlledPauli { letters, .. } => self.qubits.len() - letters.len(),
            GateKind::MultiControlledZ | GateKind::MultiControlledRy => self.qubits.len() - 1,
            GateKind::Cnot | GateKind::Cz => 1,
            GateKind::Toffoli => 2,
            _ => 0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(invalid(format!("{} gate acts on no qubits", self.kind.name())));
        }
        if let Some(k) = self.kind.fixed_arity() {
            if self.qubits.len() != k {
                return Err(invalid(format!(
                    "{} gate needs {k} qubits, got {}",
                    self.kind.name(),
                    self.qubits.len()
                )));
            }
        }
        if let GateKind::ControlledPauli { letters, .. } = &self.kind {
            if letters.is_empty() || letters.len() > self.qubits.len() {
                return Err(invalid("controlled Pauli needs one target per letter"));
            }
            if letters.contains(&Pauli::I) {
                return Err(invalid("controlled Pauli letters must not be identity"));
            }
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n) {
            return Err(invalid(format!("qubit {q} out of range for {n} qubits")));
        }
        let mut seen = self.qubits.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid(format!("{} gate repeats a qubit", self.kind.name())));
        }
        if let Some(a) = self.angle {
            if !a.is_finite() {
                return Err(invalid("gate angle must be finite"));
            }
        }
        if let GateKind::U3 { theta, phi, lambda } = self.kind {
            if ![theta, phi, lambda].iter().all(|x| x.is_finite()) {
                return Err(invalid("u3 angles must be finite"));
            }
        }
        Ok(())
    }
}

/// A tagged gate list over `num_qubits` wires.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitIR {
    num_qubits: usize,
    /// Leading wires holding the physical register; the rest are ancillae.
    system_qubits: usize,
    gates: Vec<Gate>,
}

impl CircuitIR {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(num_qubits)?;
        }
        Ok(Self {
            num_qubits,
            system_qubits: num_qubits,
            gates,
        })
    }

    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            system_qubits: num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn system_qubits(&self) -> usize {
        self.system_qubits
    }

    pub fn ancillae(&self) -> usize {
        self.num_qubits - self.system_qubits
    }

    pub fn set_system_qubits(&mut self, n: usize) -> Result<()> {
        if n > self.num_qubits {
            return Err(invalid(format!(
                "{n} system qubits on a {}-qubit circuit",
                self.num_qubits
            )));
        }
        self.system_qubits = n;
        Ok(())
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.num_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, g: Gate) {
        debug_assert!(g.validate(self.num_qubits).is_ok(), "{g:?}");
        self.gates.push(g);
    }

    pub fn count_where(&self, f: impl Fn(&Gate) -> bool) -> usize {
        self.gates.iter().filter(|g| f(g)).count()
    }

    /// Appends a Clifford circuit acting on the first wires.
    pub fn extend_clifford(&mut self, circuit: &CliffordCircuit, tag: Tag) -> Result<()> {
        if circuit.num_qubits() > self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: circuit.num_qubits(),
            });
        }
        for g in circuit.gates() {
            let kind = match g.kind {
                CliffordKind::H => GateKind::H,
                CliffordKind::S => GateKind::S,
                CliffordKind::Sdg => GateKind::Sdg,
                CliffordKind::R => GateKind::R,
                CliffordKind::R2 => GateKind::R2,
                CliffordKind::X => GateKind::X,
                CliffordKind::Z => GateKind::Z,
                CliffordKind::Cnot => GateKind::Cnot,
            };
            self.push_unchecked(Gate::new(kind, g.qubits.clone(), tag));
        }
        Ok(())
    }

    /// Appends the readout rotation of a product measurement basis.
    pub fn extend_basis_rotation(&mut self, basis: &MeasurementBasis) -> Result<()> {
        self.extend_clifford(&basis.rotation_circuit(), Tag::BasisRotation)
    }

    pub fn from_clifford(circuit: &CliffordCircuit, tag: Tag) -> Self {
        let mut ir = Self::empty(circuit.num_qubits());
        ir.extend_clifford(circuit, tag).expect("same width");
        ir
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            num_qubits: usize,
            system_qubits: Option<usize>,
            gates: Vec<Gate>,
        }
        let raw: Raw = serde_json::from_str(s)?;
        let mut ir = Self::new(raw.num_qubits, raw.gates)?;
        if let Some(n) = raw.system_qubits {
            ir.set_system_qubits(n)?;
        }
        Ok(ir)
    }

    /// Applies every gate to `psi` in order.
    pub fn apply(&self, psi: &mut StateVector) -> Result<()> {
        if psi.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: psi.num_qubits(),
            });
        }
        for g in &self.gates {
            apply_gate(g, psi)?;
        }
        Ok(())
    }

    /// Dense unitary, column by column.
    pub fn unitary(&self) -> Result<DenseOperator> {
        let n = self.num_qubits;
        if n > crate::dense::DENSE_LIMIT {
            return Err(Error::DenseLimitExceeded {
                qubits: n,
                limit: crate::dense::DENSE_LIMIT,
            });
        }
        let dim = 1usize << n;
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut v = StateVector::basis_state(n, k);
            self.apply(&mut v)?;
            m.set_column(k, v.amplitudes());
        }
        DenseOperator::from_matrix(m)
    }
}

fn rot(axis: char, theta: f64) -> Mat2 {
    let (s, co) = (0.5 * theta).sin_cos();
    match axis {
        'x' => [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]],
        'y' => [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]],
        _ => [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]],
    }
}

pub(crate) fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, co) = (0.5 * theta).sin_cos();
    let e = |a: f64| num_complex::Complex64::from_polar(1.0, a);
    [
        [c(co, 0.0), -e(lambda) * s],
        [e(phi) * s, e(phi + lambda) * co],
    ]
}

/// Matrix of a single-qubit kind, if it has one.
pub(crate) fn single_matrix(kind: &GateKind, angle: Option<f64>) -> Result<Mat2> {
    let need = || {
        angle.ok_or_else(|| Error::UnsupportedGate(format!("{} with unspecified angle", kind.name())))
    };
    let t = std::f64::consts::FRAC_PI_4;
    Ok(match kind {
        GateKind::H => CliffordKind::H.matrix(),
        GateKind::S => CliffordKind::S.matrix(),
        GateKind::Sdg => CliffordKind::Sdg.matrix(),
        GateKind::R => CliffordKind::R.matrix(),
        GateKind::R2 => CliffordKind::R2.matrix(),
        GateKind::X => Pauli::X.matrix(),
        GateKind::Y => Pauli::Y.matrix(),
        GateKind::Z => Pauli::Z.matrix(),
        GateKind::T => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(t.cos(), t.sin())]],
        GateKind::Tdg => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(t.cos(), -t.sin())]],
        GateKind::Rx => rot('x', need()?),
        GateKind::Ry => rot('y', need()?),
        GateKind::Rz => rot('z', need()?),
        &GateKind::U3 { theta, phi, lambda } => u3_matrix(theta, phi, lambda),
        other => return Err(Error::UnsupportedGate(format!("{} is not single-qubit", other.name()))),
    })
}

fn apply_gate(g: &Gate, psi: &mut StateVector) -> Result<()> {
    let q = &g.qubits;
    match &g.kind {
        GateKind::Cnot => psi.apply_controlled(&q[..1], q[1], &Pauli::X.matrix()),
        GateKind::Cz => psi.apply_controlled(&q[..1], q[1], &Pauli::Z.matrix()),
        GateKind::Toffoli => psi.apply_controlled(&q[..2], q[2], &Pauli::X.matrix()),
        GateKind::MultiControlledZ => {
            let k = q.len() - 1;
            psi.apply_controlled(&q[..k], q[k], &Pauli::Z.matrix())
        }
        GateKind::MultiControlledRy => {
            let k = q.len() - 1;
            let theta = g
                .angle
                .ok_or_else(|| Error::UnsupportedGate("multi_controlled_ry with unspecified angle".into()))?;
            psi.apply_controlled(&q[..k], q[k], &rot('y', theta))
        }
        GateKind::ControlledPauli { letters, negative } => {
            let k = q.len() - letters.len();
            let (controls, targets) = q.split_at(k);
            for (&t, p) in targets.iter().zip(letters) {
                psi.apply_controlled(controls, t, &p.matrix());
            }
            if *negative {
                match controls.split_last() {
                    Some((&last, rest)) => psi.apply_controlled(rest, last, &Pauli::Z.matrix()),
                    None => psi.amplitudes_mut().iter_mut().for_each(|z| *z = -*z),
                }
            }
        }
        kind => psi.apply_single(q[0], &single_matrix(kind, g.angle)?),
    }
    Ok(())
}
