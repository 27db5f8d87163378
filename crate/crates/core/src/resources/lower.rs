//! Lowering to fault-tolerant (Clifford+T) or NISQ (rotations, CNOT, CZ)
//! gate sets.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::Mat2;
use crate::error::{invalid, Error, Result};
use crate::pauli::Pauli;

use super::ir::{single_matrix, CircuitIR, Gate, GateKind, Tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Ft,
    Nisq,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Ft => "ft",
            Target::Nisq => "nisq",
        })
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ft" => Ok(Target::Ft),
            "nisq" => Ok(Target::Nisq),
            _ => Err(invalid(format!("unknown target `{s}` (expected ft or nisq)"))),
        }
    }
}

pub const DEFAULT_ROTATION_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoweringOptions {
    /// Target accuracy of each synthesized rotation under the FT target.
    pub rotation_eps: f64,
}

impl Default for LoweringOptions {
    fn default() -> Self {
        Self {
            rotation_eps: DEFAULT_ROTATION_EPS,
        }
    }
}

impl LoweringOptions {
    /// T gates per generic rotation, `ceil(3 log2(1 / eps))`.
    pub fn rotation_t_cost(&self) -> usize {
        (3.0 * (1.0 / self.rotation_eps).log2()).ceil() as usize
    }
}

pub fn lower(ir: &CircuitIR, target: Target) -> Result<CircuitIR> {
    lower_with(ir, target, &LoweringOptions::default())
}

/// Expands every gate into the target set. Gates with `k >= 2` controls
/// compute the AND of their controls into a chain of `k - 1` clean ancillae
/// appended after the existing wires, act from the last one, and uncompute.
pub fn lower_with(ir: &CircuitIR, target: Target, opts: &LoweringOptions) -> Result<CircuitIR> {
    if !(opts.rotation_eps > 0.0 && opts.rotation_eps < 1.0) {
        return Err(invalid(format!(
            "rotation accuracy must lie in (0, 1), got {}",
            opts.rotation_eps
        )));
    }
    let chain = ir
        .gates()
        .iter()
        .filter(|g| {
            matches!(
                g.kind,
                GateKind::ControlledPauli { .. } | GateKind::MultiControlledZ | GateKind::MultiControlledRy
            )
        })
        .map(|g| g.num_controls().saturating_sub(1))
        .max()
        .unwrap_or(0);
    let mut l = Lowerer {
        target,
        t_cost: opts.rotation_t_cost(),
        base: ir.num_qubits(),
        out: Vec::with_capacity(ir.len() * 4),
    };
    for g in ir.gates() {
        l.gate(g)?;
    }
    let mut out = CircuitIR::new(ir.num_qubits() + chain, l.out)?;
    out.set_system_qubits(ir.system_qubits())?;
    Ok(out)
}

struct Lowerer {
    target: Target,
    t_cost: usize,
    base: usize,
    out: Vec<Gate>,
}

fn is_multiple_of_quarter_pi(theta: f64) -> Option<i64> {
    let k = (theta / FRAC_PI_4).round();
    if (theta - k * FRAC_PI_4).abs() < 1e-12 {
        Some((k as i64).rem_euclid(8))
    } else {
        None
    }
}

/// `(theta, phi, lambda)` with `m = e^{i alpha} U3(theta, phi, lambda)`.
pub(crate) fn u3_angles(m: &Mat2) -> (f64, f64, f64) {
    let (a, b) = (m[0][0].norm(), m[1][0].norm());
    let theta = 2.0 * b.atan2(a);
    if b < 1e-12 {
        (0.0, 0.0, m[1][1].arg() - m[0][0].arg())
    } else if a < 1e-12 {
        (PI, m[1][0].arg(), (-m[0][1]).arg())
    } else {
        let alpha = m[0][0].arg();
        (theta, m[1][0].arg() - alpha, (-m[0][1]).arg() - alpha)
    }
}

impl Lowerer {
    fn emit(&mut self, kind: GateKind, qubits: Vec<usize>, angle: Option<f64>, tag: Tag) {
        self.out.push(Gate {
            kind,
            qubits,
            angle,
            tag,
        });
    }

    fn one(&mut self, kind: GateKind, q: usize, tag: Tag) {
        match self.target {
            Target::Ft => match kind {
                GateKind::H | GateKind::S | GateKind::Sdg | GateKind::T | GateKind::Tdg => {
                    self.emit(kind, vec![q], None, tag)
                }
                GateKind::Z => {
                    self.one(GateKind::S, q, tag);
                    self.one(GateKind::S, q, tag);
                }
                GateKind::X => {
                    self.one(GateKind::H, q, tag);
                    self.one(GateKind::Z, q, tag);
                    self.one(GateKind::H, q, tag);
                }
                // Y = i X Z
                GateKind::Y => {
                    self.one(GateKind::Z, q, tag);
                    self.one(GateKind::X, q, tag);
                }
                GateKind::R => {
                    self.one(GateKind::H, q, tag);
                    self.one(GateKind::S, q, tag);
                }
                GateKind::R2 => {
                    self.one(GateKind::R, q, tag);
                    self.one(GateKind::R, q, tag);
                }
                _ => unreachable!("not a fixed single-qubit Clifford+T gate"),
            },
            Target::Nisq => {
                let rz = match kind {
                    GateKind::T => Some(FRAC_PI_4),
                    GateKind::Tdg => Some(-FRAC_PI_4),
                    GateKind::S => Some(FRAC_PI_2),
                    GateKind::Sdg => Some(-FRAC_PI_2),
                    GateKind::Z => Some(PI),
                    _ => None,
                };
                match rz {
                    Some(a) => self.emit(GateKind::Rz, vec![q], Some(a), tag),
                    None => {
                        let m = single_matrix(&kind, None).expect("fixed gate");
                        let (theta, phi, lambda) = u3_angles(&m);
                        self.emit(GateKind::U3 { theta, phi, lambda }, vec![q], None, tag)
                    }
                }
            }
        }
    }

    fn rz(&mut self, q: usize, angle: Option<f64>, tag: Tag) {
        if self.target == Target::Nisq {
            self.emit(GateKind::Rz, vec![q], angle, tag);
            return;
        }
        match angle.and_then(is_multiple_of_quarter_pi) {
            Some(k) => {
                // Rz(k pi / 4) equals T^k up to phase
                let (s, t) = (k / 2, k % 2);
                let s_run: &[GateKind] = match s {
                    0 => &[],
                    1 => &[GateKind::S],
                    2 => &[GateKind::S, GateKind::S],
                    _ => &[GateKind::Sdg],
                };
                for kind in s_run {
                    self.one(kind.clone(), q, tag);
                }
                if t == 1 {
                    self.one(GateKind::T, q, tag);
                }
            }
            None => {
                // synthesized approximation: t_cost T gates separated by H
                for i in 0..self.t_cost {
                    if i > 0 {
                        self.one(GateKind::H, q, tag);
                    }
                    self.one(GateKind::T, q, tag);
                }
            }
        }
    }

    fn rotation(&mut self, kind: &GateKind, q: usize, angle: Option<f64>, tag: Tag) {
        match (self.target, kind) {
            (Target::Nisq, _) => self.emit(kind.clone(), vec![q], angle, tag),
            (Target::Ft, GateKind::Rz) => self.rz(q, angle, tag),
            (Target::Ft, GateKind::Rx) => {
                self.one(GateKind::H, q, tag);
                self.rz(q, angle, tag);
                self.one(GateKind::H, q, tag);
            }
            (Target::Ft, GateKind::Ry) => {
                self.one(GateKind::Sdg, q, tag);
                self.one(GateKind::H, q, tag);
                self.rz(q, angle, tag);
                self.one(GateKind::H, q, tag);
                self.one(GateKind::S, q, tag);
            }
            (Target::Ft, &GateKind::U3 { theta, phi, lambda }) => {
                self.rz(q, Some(lambda), tag);
                self.rotation(&GateKind::Ry, q, Some(theta), tag);
                self.rz(q, Some(phi), tag);
            }
            _ => unreachable!("not a rotation"),
        }
    }

    fn cnot(&mut self, c: usize, t: usize, tag: Tag) {
        self.emit(GateKind::Cnot, vec![c, t], None, tag);
    }

    fn cz(&mut self, c: usize, t: usize, tag: Tag) {
        match self.target {
            Target::Nisq => self.emit(GateKind::Cz, vec![c, t], None, tag),
            Target::Ft => {
                self.one(GateKind::H, t, tag);
                self.cnot(c, t, tag);
                self.one(GateKind::H, t, tag);
            }
        }
    }

    /// Seven T gates, six CNOTs and two H.
    fn toffoli(&mut self, a: usize, b: usize, t: usize, tag: Tag) {
        use GateKind::{Tdg, H, T};
        self.one(H, t, tag);
        self.cnot(b, t, tag);
        self.one(Tdg, t, tag);
        self.cnot(a, t, tag);
        self.one(T, t, tag);
        self.cnot(b, t, tag);
        self.one(Tdg, t, tag);
        self.cnot(a, t, tag);
        self.one(T, b, tag);
        self.one(T, t, tag);
        self.one(H, t, tag);
        self.cnot(a, b, tag);
        self.one(T, a, tag);
        self.one(Tdg, b, tag);
        self.cnot(a, b, tag);
    }

    /// Toffolis computing the AND of `controls` into chain ancillae; the
    /// result wire is returned with the sequence needed to undo it.
    fn and_chain(&mut self, controls: &[usize], tag: Tag) -> (usize, Vec<(usize, usize, usize)>) {
        let mut steps = Vec::new();
        let mut acc = controls[0];
        for (i, &c) in controls[1..].iter().enumerate() {
            let anc = self.base + i;
            steps.push((c, acc, anc));
            self.toffoli(c, acc, anc, tag);
            acc = anc;
        }
        (acc, steps)
    }

    fn unchain(&mut self, steps: Vec<(usize, usize, usize)>, tag: Tag) {
        for (a, b, t) in steps.into_iter().rev() {
            self.toffoli(a, b, t, tag);
        }
    }

    fn controlled(&mut self, controls: &[usize], tag: Tag, body: impl FnOnce(&mut Self, Option<usize>)) {
        if controls.is_empty() {
            body(self, None);
            return;
        }
        let (c, steps) = self.and_chain(controls, tag);
        body(self, Some(c));
        self.unchain(steps, tag);
    }

    fn gate(&mut self, g: &Gate) -> Result<()> {
        let q = &g.qubits;
        let tag = g.tag;
        match &g.kind {
            GateKind::H
            | GateKind::S
            | GateKind::Sdg
            | GateKind::T
            | GateKind::Tdg
            | GateKind::X
            | GateKind::Y
            | GateKind::Z
            | GateKind::R
            | GateKind::R2 => self.one(g.kind.clone(), q[0], tag),
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::U3 { .. } => {
                self.rotation(&g.kind, q[0], g.angle, tag)
            }
            GateKind::Cnot => self.cnot(q[0], q[1], tag),
            GateKind::Cz => self.cz(q[0], q[1], tag),
            GateKind::Toffoli => self.toffoli(q[0], q[1], q[2], tag),
            GateKind::MultiControlledZ => {
                let (controls, t) = q.split_at(q.len() - 1);
                let t = t[0];
                self.controlled(controls, tag, |l, c| match c {
                    None => l.one(GateKind::Z, t, tag),
                    Some(c) => l.cz(c, t, tag),
                });
            }
            GateKind::MultiControlledRy => {
                let (controls, t) = q.split_at(q.len() - 1);
                let t = t[0];
                let half = g.angle.map(|a| a / 2.0);
                self.controlled(controls, tag, |l, c| match c {
                    None => l.rotation(&GateKind::Ry, t, g.angle, tag),
                    Some(c) => {
                        l.rotation(&GateKind::Ry, t, half, tag);
                        l.cnot(c, t, tag);
                        l.rotation(&GateKind::Ry, t, half.map(|a| -a), tag);
                        l.cnot(c, t, tag);
                    }
                });
            }
            GateKind::ControlledPauli { letters, negative } => {
                let (controls, targets) = q.split_at(q.len() - letters.len());
                let negative = *negative;
                self.controlled(controls, tag, |l, c| {
                    for (&t, &p) in targets.iter().zip(letters) {
                        match (c, p) {
                            (None, p) => l.one(pauli_kind(p), t, tag),
                            (Some(c), Pauli::X) => l.cnot(c, t, tag),
                            (Some(c), Pauli::Z) => l.cz(c, t, tag),
                            (Some(c), Pauli::Y) => {
                                l.one(GateKind::Sdg, t, tag);
                                l.cnot(c, t, tag);
                                l.one(GateKind::S, t, tag);
                            }
                            (Some(_), Pauli::I) => {}
                        }
                    }
                    // a sign on an uncontrolled word is a global phase
                    if let (true, Some(c)) = (negative, c) {
                        l.one(GateKind::Z, c, tag);
                    }
                });
            }
        }
        Ok(())
    }
}

fn pauli_kind(p: Pauli) -> GateKind {
    match p {
        Pauli::X => GateKind::X,
        Pauli::Y => GateKind::Y,
        _ => GateKind::Z,
    }
}

/// Whether every gate belongs to the target's native set.
pub fn is_native(ir: &CircuitIR, target: Target) -> bool {
    ir.gates().iter().all(|g| match target {
        Target::Ft => matches!(
            g.kind,
            GateKind::H | GateKind::S | GateKind::Sdg | GateKind::T | GateKind::Tdg | GateKind::Cnot
        ),
        Target::Nisq => g.kind.is_rotation() || matches!(g.kind, GateKind::Cnot | GateKind::Cz),
    })
}
