//! Gate-level layout of the imaginary-time block: LCU block encoding
//! `Prep^dagger Select Prep` alternated with projector-controlled phases.

use std::ops::Range;

use crate::clifford::{CliffordCircuit, MeasurementBasis};
use crate::error::{invalid, Result};
use crate::pauli::{Hamiltonian, Pauli};

use super::ir::{CircuitIR, Gate, GateKind, Tag};

/// Wire assignment: system qubits first, then the LCU index register, then
/// the phase qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QspLayout {
    pub system: usize,
    pub terms: usize,
    pub index: Range<usize>,
    pub phase: usize,
}

impl QspLayout {
    pub fn for_hamiltonian(h: &Hamiltonian) -> Result<Self> {
        let l = h.len();
        if l == 0 {
            return Err(invalid("Hamiltonian has no terms"));
        }
        let n = h.num_qubits();
        let m = index_width(l);
        Ok(Self {
            system: n,
            terms: l,
            index: n..n + m,
            phase: n + m,
        })
    }

    pub fn ancillae(&self) -> usize {
        self.index.len() + 1
    }

    pub fn total(&self) -> usize {
        self.phase + 1
    }
}

/// `ceil(log2 L)`.
pub fn index_width(l: usize) -> usize {
    if l <= 1 {
        0
    } else {
        (usize::BITS - (l - 1).leading_zeros()) as usize
    }
}

fn dressed(gates: &mut Vec<Gate>, wires: &[usize], value: usize, tag: Tag, body: Gate) {
    let m = wires.len();
    let zeros: Vec<usize> = (0..m)
        .filter(|&i| (value >> (m - 1 - i)) & 1 == 0)
        .map(|i| wires[i])
        .collect();
    for &q in &zeros {
        gates.push(Gate::new(GateKind::X, vec![q], tag));
    }
    gates.push(body);
    for &q in &zeros {
        gates.push(Gate::new(GateKind::X, vec![q], tag));
    }
}

/// Binary-tree state preparation of `sum_j sqrt(|c_j| / lambda) |j>`.
///
/// One controlled `Ry` per internal node whose halves both hold terms, so
/// `L - 1` rotations in total.
pub(crate) fn prep_gates(h: &Hamiltonian, layout: &QspLayout) -> Vec<Gate> {
    let weights: Vec<f64> = h.terms().iter().map(|t| t.coeff.abs()).collect();
    let wires: Vec<usize> = layout.index.clone().collect();
    let mut gates = Vec::new();
    node(&weights, &wires, 0, 0, &mut gates);
    gates
}

fn node(w: &[f64], wires: &[usize], level: usize, prefix: usize, gates: &mut Vec<Gate>) {
    let m = wires.len();
    if level == m {
        return;
    }
    let span = 1usize << (m - level);
    let lo = prefix * span;
    let mid = lo + span / 2;
    let hi = lo + span;
    let l = w.len();
    if lo >= l {
        return;
    }
    let sum = |a: usize, b: usize| w[a.min(l)..b.min(l)].iter().sum::<f64>();
    if mid < l {
        let theta = 2.0 * sum(mid, hi).sqrt().atan2(sum(lo, mid).sqrt());
        let mut qubits: Vec<usize> = wires[..level].to_vec();
        qubits.push(wires[level]);
        let body = Gate {
            kind: GateKind::MultiControlledRy,
            qubits,
            angle: Some(theta),
            tag: Tag::Prep,
        };
        dressed(gates, &wires[..level], prefix, Tag::Prep, body);
    }
    node(w, wires, level + 1, 2 * prefix, gates);
    if mid < l {
        node(w, wires, level + 1, 2 * prefix + 1, gates);
    }
}

fn inverse(gates: &[Gate]) -> Vec<Gate> {
    gates
        .iter()
        .rev()
        .map(|g| {
            let mut g = g.clone();
            g.angle = g.angle.map(|a| -a);
            g
        })
        .collect()
}

/// One index-controlled signed Pauli word per term.
pub(crate) fn select_gates(h: &Hamiltonian, layout: &QspLayout) -> Vec<Gate> {
    let wires: Vec<usize> = layout.index.clone().collect();
    let mut gates = Vec::new();
    for (j, t) in h.terms().iter().enumerate() {
        let support: Vec<(usize, Pauli)> = t.word.support().collect();
        let negative = t.coeff < 0.0;
        let body = if support.is_empty() {
            // identity term: only its sign matters, as a phase on pattern j
            if !negative || wires.is_empty() {
                continue;
            }
            Gate::new(GateKind::MultiControlledZ, wires.clone(), Tag::Select)
        } else {
            let mut qubits = wires.clone();
            qubits.extend(support.iter().map(|&(q, _)| q));
            Gate::new(
                GateKind::ControlledPauli {
                    letters: support.iter().map(|&(_, p)| p).collect(),
                    negative,
                },
                qubits,
                Tag::Select,
            )
        };
        dressed(&mut gates, &wires, j, Tag::Select, body);
    }
    gates
}

/// `Prep Select Prep^dagger` in time order.
pub(crate) fn block_encoding_gates(h: &Hamiltonian, layout: &QspLayout) -> Vec<Gate> {
    let prep = prep_gates(h, layout);
    let mut gates = prep.clone();
    gates.extend(select_gates(h, layout));
    gates.extend(inverse(&prep));
    gates
}

fn multi_cz_gates(layout: &QspLayout) -> Vec<Gate> {
    let wires: Vec<usize> = layout.index.clone().collect();
    let mut qubits = wires.clone();
    qubits.push(layout.phase);
    let body = Gate::new(GateKind::MultiControlledZ, qubits, Tag::MultiCz);
    let mut gates = Vec::new();
    dressed(&mut gates, &wires, 0, Tag::MultiCz, body);
    gates
}

/// Degree-`d` QSP sequence: `2d + 1` phase rotations, each preceded by a
/// projector-controlled Z, separated by `2d` block encodings.
///
/// Phase angles are left unspecified; they only matter for simulation.
pub fn build_qsp_circuit(h: &Hamiltonian, d: usize) -> Result<CircuitIR> {
    let layout = QspLayout::for_hamiltonian(h)?;
    let block = block_encoding_gates(h, &layout);
    let mcz = multi_cz_gates(&layout);
    let mut ir = CircuitIR::empty(layout.total());
    ir.set_system_qubits(layout.system)?;
    ir.push_unchecked(Gate::new(GateKind::H, vec![layout.phase], Tag::Phase));
    for j in 0..=2 * d {
        for g in &mcz {
            ir.push_unchecked(g.clone());
        }
        ir.push_unchecked(Gate::rotation(GateKind::Rz, layout.phase, None, Tag::Phase));
        if j < 2 * d {
            for g in &block {
                ir.push_unchecked(g.clone());
            }
        }
    }
    ir.push_unchecked(Gate::new(GateKind::H, vec![layout.phase], Tag::Phase));
    Ok(ir)
}

/// Random unitary, QSP block and readout rotation on one register.
pub fn build_tpq_circuit(
    h: &Hamiltonian,
    d: usize,
    u: &CliffordCircuit,
    basis: &MeasurementBasis,
) -> Result<CircuitIR> {
    let n = h.num_qubits();
    if u.num_qubits() != n || basis.len() != n {
        return Err(invalid("random unitary and basis must match the system size"));
    }
    let qsp = build_qsp_circuit(h, d)?;
    let mut ir = CircuitIR::empty(qsp.num_qubits());
    ir.set_system_qubits(n)?;
    ir.extend_clifford(u, Tag::RandomUnitary)?;
    for g in qsp.gates() {
        ir.push_unchecked(g.clone());
    }
    ir.extend_basis_rotation(basis)?;
    Ok(ir)
}

/// Number of phase rotations in a built circuit.
pub fn phase_count(ir: &CircuitIR) -> usize {
    ir.count_where(|g| g.tag == Tag::Phase && g.kind.is_rotation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::StateVector;
    use crate::pauli::{build_xxz, Couplings, PauliString, Term};

    fn ham(n: usize, terms: &[(f64, &str)]) -> Hamiltonian {
        Hamiltonian::new(
            n,
            terms.iter().map(|&(coeff, w)| Term {
                coeff,
                word: w.parse::<PauliString>().unwrap(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn index_widths() {
        let w: Vec<usize> = [1, 2, 3, 4, 5, 8, 9, 21].iter().map(|&l| index_width(l)).collect();
        assert_eq!(w, vec![0, 1, 2, 2, 3, 3, 4, 5]);
    }

    #[test]
    fn single_term_degree_one() {
        let h = ham(1, &[(0.5, "Z")]);
        let ir = build_qsp_circuit(&h, 1).unwrap();
        assert_eq!(ir.num_qubits(), 2);
        assert_eq!(ir.num_qubits() - ir.system_qubits(), 1);
        assert_eq!(phase_count(&ir), 3);
    }

    #[test]
    fn phase_count_is_two_d_plus_one() {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        for d in 0..=64 {
            let ir = build_qsp_circuit(&h, d).unwrap();
            assert_eq!(phase_count(&ir), 2 * d + 1);
            let mcz = ir.count_where(|g| g.kind == GateKind::MultiControlledZ && g.tag == Tag::MultiCz);
            assert_eq!(mcz, 2 * d + 1);
        }
    }

    #[test]
    fn six_qubit_select_structure() {
        let h = build_xxz(6, &Couplings::default()).unwrap();
        assert_eq!(h.len(), 21);
        let ir = build_qsp_circuit(&h, 24).unwrap();
        let layout = QspLayout::for_hamiltonian(&h).unwrap();
        assert_eq!(layout.ancillae(), 6);
        let sel: Vec<&Gate> = ir
            .gates()
            .iter()
            .filter(|g| matches!(g.kind, GateKind::ControlledPauli { .. }))
            .collect();
        assert_eq!(sel.len(), 2 * 24 * 21);
        assert!(sel.iter().all(|g| g.num_controls() == 5 && g.tag == Tag::Select));
        let rot = ir.count_where(|g| g.kind == GateKind::MultiControlledRy);
        assert_eq!(rot, 2 * 24 * 2 * 20);
    }

    #[test]
    fn prep_tree_has_l_minus_one_rotations() {
        for n in 2..=8 {
            let h = build_xxz(n, &Couplings::default()).unwrap();
            let layout = QspLayout::for_hamiltonian(&h).unwrap();
            let prep = prep_gates(&h, &layout);
            let rots = prep.iter().filter(|g| g.kind == GateKind::MultiControlledRy).count();
            assert_eq!(rots, h.len() - 1);
        }
    }

    #[test]
    fn prep_amplitudes() {
        let h = ham(2, &[(0.5, "XX"), (-0.2, "ZI"), (0.9, "IY"), (0.1, "ZZ"), (-1.3, "XI")]);
        let layout = QspLayout::for_hamiltonian(&h).unwrap();
        let width = layout.index.len();
        let ir = CircuitIR::new(layout.total(), prep_gates(&h, &layout)).unwrap();
        let mut psi = StateVector::zero_state(layout.total());
        ir.apply(&mut psi).unwrap();
        let lambda = h.one_norm();
        for (j, t) in h.terms().iter().enumerate() {
            // system |00>, index |j>, phase |0>
            let k = j << 1;
            let amp = psi.amplitudes()[k];
            assert!((amp.re - (t.coeff.abs() / lambda).sqrt()).abs() < 1e-12 && amp.im.abs() < 1e-12);
        }
        assert!(psi.amplitudes().iter().skip((h.len()) << 1).all(|z| z.norm() < 1e-12));
        assert_eq!(width, 3);
    }

    #[test]
    fn block_encodes_hamiltonian() {
        for h in [
            ham(2, &[(0.5, "XX"), (-0.2, "ZI"), (0.9, "IY"), (0.1, "ZZ"), (-1.3, "XI")]),
            build_xxz(2, &Couplings::default()).unwrap(),
            ham(1, &[(0.4, "X"), (-0.7, "Z"), (0.3, "I")]),
        ] {
            let layout = QspLayout::for_hamiltonian(&h).unwrap();
            let n = layout.system;
            let m = layout.index.len();
            let ir = CircuitIR::new(layout.total(), block_encoding_gates(&h, &layout)).unwrap();
            let u = ir.unitary().unwrap();
            let hm = h.matrix().unwrap();
            let lambda = h.one_norm();
            let shift = m + 1;
            for s in 0..1 << n {
                for t in 0..1 << n {
                    let got = u.matrix()[(s << shift, t << shift)];
                    let want = hm.matrix()[(s, t)] / lambda;
                    assert!((got - want).norm() < 1e-12, "({s},{t}) {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn tpq_circuit_tags() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let h = build_xxz(4, &Couplings::default()).unwrap();
        let u = crate::clifford::sample_two_design(4, &mut rng).unwrap();
        let b: MeasurementBasis = "XYZY".parse().unwrap();
        let ir = build_tpq_circuit(&h, 3, &u, &b).unwrap();
        assert_eq!(ir.count_where(|g| g.tag == Tag::RandomUnitary), u.len());
        // H, then S^dagger H twice
        assert_eq!(ir.count_where(|g| g.tag == Tag::BasisRotation), 5);
        assert_eq!(ir.gates().first().unwrap().tag, Tag::RandomUnitary);
        assert_eq!(ir.gates().last().unwrap().tag, Tag::BasisRotation);
        assert!(build_qsp_circuit(&Hamiltonian::new(2, []).unwrap(), 2).is_err());
    }
}
