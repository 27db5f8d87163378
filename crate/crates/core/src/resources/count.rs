use std::collections::BTreeMap;
use std::ops::AddAssign;

use serde::Serialize;

use crate::error::{invalid, Result};

use super::ir::{CircuitIR, Gate, GateKind, Tag};

/// Gate counts by disjoint class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub t: usize,
    /// Single-qubit Clifford gates.
    pub clifford: usize,
    pub two_qubit: usize,
    /// Single-qubit rotations with a continuous angle.
    pub rotation: usize,
    /// Anything not yet lowered (Toffolis, multi-controlled gates).
    pub other: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.t + self.clifford + self.two_qubit + self.rotation + self.other
    }

    fn add_gate(&mut self, g: &Gate) {
        match g.kind {
            GateKind::T | GateKind::Tdg => self.t += 1,
            GateKind::H
            | GateKind::S
            | GateKind::Sdg
            | GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::R
            | GateKind::R2 => self.clifford += 1,
            GateKind::Cnot | GateKind::Cz => self.two_qubit += 1,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::U3 { .. } => self.rotation += 1,
            GateKind::Toffoli
            | GateKind::ControlledPauli { .. }
            | GateKind::MultiControlledZ
            | GateKind::MultiControlledRy => self.other += 1,
        }
    }
}

impl AddAssign for GateCounts {
    fn add_assign(&mut self, o: Self) {
        self.t += o.t;
        self.clifford += o.clifford;
        self.two_qubit += o.two_qubit;
        self.rotation += o.rotation;
        self.other += o.other;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TagReport {
    pub counts: GateCounts,
    /// Depth of the sub-circuit formed by this tag's gates alone.
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub num_qubits: usize,
    pub ancillae: usize,
    pub totals: GateCounts,
    pub depth: usize,
    pub per_tag: BTreeMap<Tag, TagReport>,
}

impl ResourceReport {
    pub fn tag(&self, tag: Tag) -> TagReport {
        self.per_tag.get(&tag).copied().unwrap_or_default()
    }

    /// Counts summed over the imaginary-time tags.
    pub fn qsp_counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for (t, r) in &self.per_tag {
            if t.is_qsp() {
                c += r.counts;
            }
        }
        c
    }
}

fn asap_depth<'a>(n: usize, gates: impl Iterator<Item = &'a Gate>) -> usize {
    let mut free = vec![0usize; n];
    let mut depth = 0;
    for g in gates {
        let level = 1 + g.qubits.iter().map(|&q| free[q]).max().unwrap_or(0);
        for &q in &g.qubits {
            free[q] = level;
        }
        depth = depth.max(level);
    }
    depth
}

/// Gate indices grouped by ASAP layer.
pub fn layers(ir: &CircuitIR) -> Vec<Vec<usize>> {
    let mut free = vec![0usize; ir.num_qubits()];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, g) in ir.gates().iter().enumerate() {
        let level = g.qubits.iter().map(|&q| free[q]).max().unwrap_or(0);
        for &q in &g.qubits {
            free[q] = level + 1;
        }
        if out.len() <= level {
            out.resize_with(level + 1, Vec::new);
        }
        out[level].push(i);
    }
    out
}

pub fn depth(ir: &CircuitIR) -> usize {
    asap_depth(ir.num_qubits(), ir.gates().iter())
}

pub fn count(ir: &CircuitIR) -> ResourceReport {
    let mut totals = GateCounts::default();
    let mut per_tag: BTreeMap<Tag, TagReport> = BTreeMap::new();
    for g in ir.gates() {
        totals.add_gate(g);
        per_tag.entry(g.tag).or_default().counts.add_gate(g);
    }
    for (tag, r) in per_tag.iter_mut() {
        r.depth = asap_depth(ir.num_qubits(), ir.gates().iter().filter(|g| g.tag == *tag));
    }
    ResourceReport {
        num_qubits: ir.num_qubits(),
        ancillae: ir.ancillae(),
        totals,
        depth: depth(ir),
        per_tag,
    }
}

/// Probability that no two-qubit gate fails, `f^{count}`.
pub fn success_probability(report: &ResourceReport, two_qubit_fidelity: f64) -> Result<f64> {
    if !(two_qubit_fidelity > 0.0 && two_qubit_fidelity <= 1.0) {
        return Err(invalid(format!(
            "fidelity must lie in (0, 1], got {two_qubit_fidelity}"
        )));
    }
    Ok(two_qubit_fidelity.powf(report.totals.two_qubit as f64))
}
