use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::{sample_pauli_basis, sample_two_design};
use crate::error::{invalid, Result};
use crate::pauli::{build_xxz, Couplings};
use crate::shadow::task_rng;
use crate::stats::{mean, std_dev};

use super::count::{count, depth, GateCounts, ResourceReport};
use super::ir::{CircuitIR, Tag};
use super::lower::{lower_with, LoweringOptions, Target};
use super::qsp::build_tpq_circuit;

/// Largest system handled by the structural study.
pub const STUDY_MAX_QUBITS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub target: String,
    pub tag: String,
    pub t_count: usize,
    pub two_qubit_count: usize,
    pub rotation_count: usize,
    pub clifford_count: usize,
    pub depth: usize,
    pub ancillae: usize,
}

fn row(n: usize, d: usize, target: Target, tag: &str, c: &GateCounts, depth: usize, anc: usize) -> ScalingRow {
    ScalingRow {
        n,
        d,
        target: target.to_string(),
        tag: tag.to_string(),
        t_count: c.t,
        two_qubit_count: c.two_qubit,
        rotation_count: c.rotation,
        clifford_count: c.clifford,
        depth,
        ancillae: anc,
    }
}

/// Lowered resource report for the full circuit at system size `n`.
pub fn tpq_resources(
    n: usize,
    d: usize,
    couplings: &Couplings,
    target: Target,
    opts: &LoweringOptions,
    seed: u64,
) -> Result<(CircuitIR, ResourceReport)> {
    let h = build_xxz(n, couplings)?;
    let mut rng = task_rng(seed, n as u64);
    let u = sample_two_design(n, &mut rng)?;
    let basis = sample_pauli_basis(n, &mut rng)?;
    let ir = lower_with(&build_tpq_circuit(&h, d, &u, &basis)?, target, opts)?;
    let report = count(&ir);
    Ok((ir, report))
}

/// One row per tag plus `qsp` (all imaginary-time tags) and `total`.
pub fn scaling_study(
    ns: &[usize],
    d: usize,
    target: Target,
    couplings: &Couplings,
    opts: &LoweringOptions,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    if let Some(&n) = ns.iter().find(|&&n| !(2..=STUDY_MAX_QUBITS).contains(&n)) {
        return Err(invalid(format!(
            "system size {n} outside 2..={STUDY_MAX_QUBITS}"
        )));
    }
    let per_n: Vec<Vec<ScalingRow>> = ns
        .par_iter()
        .map(|&n| {
            let (ir, r) = tpq_resources(n, d, couplings, target, opts, seed)?;
            let mut rows = Vec::new();
            for tag in Tag::ALL {
                let t = r.tag(tag);
                rows.push(row(n, d, target, tag.as_str(), &t.counts, t.depth, r.ancillae));
            }
            let qsp_depth = super::count::depth(&qsp_only(&ir));
            rows.push(row(n, d, target, "qsp", &r.qsp_counts(), qsp_depth, r.ancillae));
            rows.push(row(n, d, target, "total", &r.totals, r.depth, r.ancillae));
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_n.into_iter().flatten().collect())
}

fn qsp_only(ir: &CircuitIR) -> CircuitIR {
    let gates = ir.gates().iter().filter(|g| g.tag.is_qsp()).cloned().collect();
    CircuitIR::new(ir.num_qubits(), gates).expect("subset of a valid circuit")
}

pub fn write_scaling_csv<W: Write>(w: W, rows: &[ScalingRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomUnitaryStats {
    pub n: usize,
    pub target: String,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub min: usize,
    pub max: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub depths: Vec<usize>,
}

/// Depth distribution of lowered random unitaries; sample `i` draws from
/// stream `i` of `seed`.
pub fn random_unitary_stats(n: usize, samples: usize, target: Target, seed: u64) -> Result<RandomUnitaryStats> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let opts = LoweringOptions::default();
    let depths: Vec<usize> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let u = sample_two_design(n, &mut task_rng(seed, i))?;
            let ir = lower_with(&CircuitIR::from_clifford(&u, Tag::RandomUnitary), target, &opts)?;
            Ok(depth(&ir))
        })
        .collect::<Result<_>>()?;
    let mut histogram = BTreeMap::new();
    for &d in &depths {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let xs: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    Ok(RandomUnitaryStats {
        n,
        target: target.to_string(),
        samples,
        mean: mean(&xs),
        std: std_dev(&xs),
        min: *depths.iter().min().unwrap(),
        max: *depths.iter().max().unwrap(),
        histogram,
        depths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_unitary_replay_and_ordering() {
        let a = random_unitary_stats(3, 200, Target::Nisq, 5).unwrap();
        let b = random_unitary_stats(3, 200, Target::Nisq, 5).unwrap();
        assert_eq!(a, b);
        let ft = random_unitary_stats(3, 200, Target::Ft, 5).unwrap();
        assert!(ft.mean > a.mean);
        assert_eq!(a.histogram.values().sum::<usize>(), 200);
    }

    #[test]
    fn qsp_dominates_random_unitary() {
        let rows = scaling_study(&[4], 24, Target::Nisq, &Couplings::default(), &LoweringOptions::default(), 1).unwrap();
        let get = |tag: &str| rows.iter().find(|r| r.tag == tag).unwrap().two_qubit_count;
        assert!(get("qsp") >= 10 * get("random_unitary"));
        assert!(scaling_study(&[1], 2, Target::Ft, &Couplings::default(), &LoweringOptions::default(), 1).is_err());
    }
}
