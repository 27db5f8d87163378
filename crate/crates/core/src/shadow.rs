//! Classical shadows from random Pauli measurements, scored with
//! median-of-means.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{apply_clifford, sample_pauli_basis, sample_two_design, CliffordCircuit, MeasurementBasis};
use crate::dense::{born_sample, c, expectation, DenseOperator, GibbsState, StateVector};
use crate::error::{invalid, Error, Result};
use crate::minimax::{remez_fit, MinimaxPoly};
use crate::pauli::{Hamiltonian, Pauli, PauliString};
use crate::thermal::{rescale, ImaginaryTimeFilter};

/// One randomized measurement: the per-qubit axes and the observed bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    basis: MeasurementBasis,
    outcome: Vec<u8>,
}

impl Snapshot {
    pub fn new(basis: MeasurementBasis, outcome: Vec<u8>) -> Result<Self> {
        if basis.len() != outcome.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: outcome.len(),
            });
        }
        if outcome.iter().any(|&b| b > 1) {
            return Err(invalid("outcome bits must be 0 or 1"));
        }
        Ok(Self { basis, outcome })
    }

    pub fn basis(&self) -> &MeasurementBasis {
        &self.basis
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn num_qubits(&self) -> usize {
        self.outcome.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Original,
    Tight,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Original => "original",
            Bound::Tight => "tight",
        })
    }
}

impl FromStr for Bound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Bound::Original),
            "tight" => Ok(Bound::Tight),
            _ => Err(invalid(format!("unknown bound `{s}` (expected original or tight)"))),
        }
    }
}

/// Set size `S`, set count `K` and the total `n_s = S K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub m: usize,
    pub sigma2: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub bound: Option<Bound>,
    pub s: usize,
    pub k: usize,
    pub n_s: usize,
}

impl SampleBudget {
    /// A budget given directly by its set size and count.
    pub fn from_sets(m: usize, s: usize, k: usize) -> Result<Self> {
        if s == 0 || k == 0 {
            return Err(invalid("set size and set count must be at least 1"));
        }
        Ok(Self {
            m,
            sigma2: f64::NAN,
            epsilon: None,
            delta: None,
            bound: None,
            s,
            k,
            n_s: s * k,
        })
    }
}

pub fn sample_budget(
    m: usize,
    locality: usize,
    epsilon: f64,
    delta: f64,
    bound: Bound,
) -> Result<SampleBudget> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if m == 0 || locality == 0 {
        return Err(invalid("need at least one observable of locality at least 1"));
    }
    let sigma2 = 3f64.powi(locality as i32);
    let (s, k) = match bound {
        Bound::Original => {
            let s = (34.0 * sigma2 / (epsilon * epsilon)).ceil() as usize;
            let k = (2.0 * (2.0 * m as f64 / delta).ln()).ceil() as usize;
            (s, k)
        }
        Bound::Tight => {
            let log = (m as f64 / delta).ln();
            let target = 27.0 * sigma2 / (epsilon * epsilon) * log;
            let k = (2.0 * log).ceil() as usize;
            let k = k.max(1);
            (((target / k as f64).round() as usize).max(1), k)
        }
    };
    let k = k.max(1);
    Ok(SampleBudget {
        m,
        sigma2,
        epsilon: Some(epsilon),
        delta: Some(delta),
        bound: Some(bound),
        s,
        k,
        n_s: s * k,
    })
}

/// `Tr(eta O)` for the product snapshot and a Pauli word `O`.
pub fn pauli_snapshot_estimate(s: &Snapshot, o: &PauliString) -> Result<f64> {
    if o.num_qubits() != s.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: s.num_qubits(),
            found: o.num_qubits(),
        });
    }
    Ok(score(s.basis.axes(), &s.outcome, o))
}

fn score(axes: &[Pauli], bits: &[u8], o: &PauliString) -> f64 {
    let mut v = 1.0;
    for (q, p) in o.support() {
        if axes[q] != p {
            return 0.0;
        }
        v *= if bits[q] == 0 { 3.0 } else { -3.0 };
    }
    v
}

/// `(2^n + 1) V^dagger |b><b| V - I`.
pub fn global_clifford_snapshot(v: &CliffordCircuit, b: &[u8]) -> Result<DenseOperator> {
    let n = v.num_qubits();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let u = v.unitary()?;
    let idx = crate::dense::bits_to_index(b);
    let col = u.matrix().row(idx).adjoint();
    let dim = 1usize << n;
    let mut m = &col * col.adjoint();
    m.scale_mut((dim + 1) as f64);
    for i in 0..dim {
        m[(i, i)] -= c(1.0, 0.0);
    }
    DenseOperator::from_matrix(m)
}

/// Median of the means of `k` contiguous blocks.
pub fn median_of_means(values: &[f64], k: usize) -> Result<f64> {
    Ok(median(&block_means(values, k)?))
}

fn block_means(values: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || values.is_empty() || values.len() % k != 0 {
        return Err(invalid(format!(
            "{} values cannot be split into {k} equal blocks",
            values.len()
        )));
    }
    let s = values.len() / k;
    Ok(values
        .chunks(s)
        .map(|b| b.iter().sum::<f64>() / s as f64)
        .collect())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowEstimate {
    pub observable: PauliString,
    pub value: f64,
    pub set_means: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSource {
    ExactGibbs,
    ExactTpq,
    QspTpq,
}

impl fmt::Display for StateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateSource::ExactGibbs => "exact-gibbs",
            StateSource::ExactTpq => "exact-tpq",
            StateSource::QspTpq => "qsp-tpq",
        })
    }
}

impl FromStr for StateSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-gibbs" => Ok(StateSource::ExactGibbs),
            "exact-tpq" => Ok(StateSource::ExactTpq),
            "qsp-tpq" => Ok(StateSource::QspTpq),
            _ => Err(invalid(format!(
                "unknown state source `{s}` (expected exact-gibbs, exact-tpq or qsp-tpq)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
enum Prep {
    Gibbs(GibbsState),
    Tpq(ImaginaryTimeFilter),
}

/// Draws the pure states fed to the measurement: eigenstates with Boltzmann
/// weight, or filtered random Clifford states.
#[derive(Clone, Debug)]
pub struct ThermalSampler {
    source: StateSource,
    n: usize,
    beta: f64,
    prep: Prep,
    poly: Option<MinimaxPoly>,
}

impl ThermalSampler {
    /// `qsp_degree` is required for [`StateSource::QspTpq`] and ignored otherwise.
    pub fn new(
        h: &Hamiltonian,
        beta: f64,
        source: StateSource,
        qsp_degree: Option<usize>,
    ) -> Result<Self> {
        let n = h.num_qubits();
        let (prep, poly) = match source {
            StateSource::ExactGibbs => (Prep::Gibbs(GibbsState::new(h, beta)?), None),
            StateSource::ExactTpq => (Prep::Tpq(ImaginaryTimeFilter::exact(&rescale(h, beta)?)), None),
            StateSource::QspTpq => {
                let d = qsp_degree.ok_or_else(|| invalid("qsp-tpq needs a polynomial degree"))?;
                let r = rescale(h, beta)?;
                let p = remez_fit(r.tau, d, (0.0, 1.0))?;
                (Prep::Tpq(ImaginaryTimeFilter::polynomial(&r, &p)?), Some(p))
            }
        };
        Ok(Self {
            source,
            n,
            beta,
            prep,
            poly,
        })
    }

    pub fn with_polynomial(h: &Hamiltonian, beta: f64, poly: MinimaxPoly) -> Result<Self> {
        let r = rescale(h, beta)?;
        let f = ImaginaryTimeFilter::polynomial(&r, &poly)?;
        Ok(Self {
            source: StateSource::QspTpq,
            n: h.num_qubits(),
            beta,
            prep: Prep::Tpq(f),
            poly: Some(poly),
        })
    }

    pub fn source(&self) -> StateSource {
        self.source
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn polynomial(&self) -> Option<&MinimaxPoly> {
        self.poly.as_ref()
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<StateVector> {
        match &self.prep {
            Prep::Gibbs(g) => Ok(g.sample_eigenstate(rng)),
            Prep::Tpq(f) => {
                let u = sample_two_design(self.n, rng)?;
                f.apply(&apply_clifford(&u, &StateVector::zero_state(self.n))?)
            }
        }
    }
}

/// Rng for the `i`-th independent task under a master seed.
pub fn task_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Draws `budget.n_s` snapshots and returns one estimate per observable.
///
/// Shadow `i` uses its own stream of the master seed, so results do not
/// depend on how the work is scheduled.
pub fn run_experiment(
    sampler: &ThermalSampler,
    observables: &[PauliString],
    budget: &SampleBudget,
    seed: u64,
) -> Result<Vec<ShadowEstimate>> {
    if budget.n_s != budget.s * budget.k || budget.k == 0 || budget.s == 0 {
        return Err(invalid("inconsistent sample budget"));
    }
    let scores = snapshot_scores(sampler, observables, budget.n_s, seed)?;
    estimates_from_scores(observables, &scores, budget.k)
}

/// Single-snapshot scores, one row per shadow and one column per observable.
pub fn snapshot_scores(
    sampler: &ThermalSampler,
    observables: &[PauliString],
    n_s: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = sampler.num_qubits();
    if let Some(o) = observables.iter().find(|o| o.num_qubits() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: o.num_qubits(),
        });
    }
    (0..n_s as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let psi = sampler.draw(&mut rng)?;
            let basis = sample_pauli_basis(n, &mut rng)?;
            let bits = born_sample(&psi, &basis, &mut rng)?;
            Ok(observables
                .iter()
                .map(|o| score(basis.axes(), &bits, o))
                .collect())
        })
        .collect()
}

/// Median of `k` contiguous block means per observable column.
pub fn estimates_from_scores(
    observables: &[PauliString],
    scores: &[Vec<f64>],
    k: usize,
) -> Result<Vec<ShadowEstimate>> {
    if let Some(r) = scores.iter().find(|r| r.len() != observables.len()) {
        return Err(Error::DimensionMismatch {
            expected: observables.len(),
            found: r.len(),
        });
    }
    (0..observables.len())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = scores.iter().map(|r| r[j]).collect();
            let set_means = block_means(&col, k)?;
            Ok(ShadowEstimate {
                observable: observables[j].clone(),
                value: median(&set_means),
                set_means,
            })
        })
        .collect()
}

/// Accuracy guaranteed by `n_s` shadows under the tight bound.
pub fn tight_epsilon(n_s: usize, m: usize, sigma2: f64, delta: f64) -> Result<f64> {
    if n_s == 0 || m == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("need n_s >= 1, m >= 1 and delta in (0, 1)"));
    }
    Ok((27.0 * sigma2 * (m as f64 / delta).ln() / n_s as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCheck {
    pub observable: PauliString,
    pub exceedance: f64,
    pub bound: f64,
}

/// Right-hand side of the TPQ concentration bound, `4 ||O|| / eps^2 * Tr rho^2`.
pub fn tpq_tail_bound(op_norm: f64, epsilon: f64, purity: f64) -> f64 {
    4.0 * op_norm / (epsilon * epsilon) * purity
}

/// Fraction of sampled TPQ states whose expectation deviates from the
/// thermal value by at least `epsilon` in absolute value.
pub fn tpq_tail_check(
    h: &Hamiltonian,
    beta: f64,
    epsilon: f64,
    observables: &[PauliString],
    samples: usize,
    seed: u64,
) -> Result<Vec<TailCheck>> {
    if !(epsilon > 0.0) || samples == 0 {
        return Err(invalid("need epsilon > 0 and at least one sample"));
    }
    let gibbs = GibbsState::new(h, beta)?;
    let rho = gibbs.density();
    let purity = gibbs.purity();
    let exact = observables
        .iter()
        .map(|o| expectation(&rho, o))
        .collect::<Result<Vec<_>>>()?;
    let sampler = ThermalSampler::new(h, beta, StateSource::ExactTpq, None)?;
    let hits: Vec<Vec<bool>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let psi = sampler.draw(&mut task_rng(seed, i))?;
            observables
                .iter()
                .zip(&exact)
                .map(|(o, e)| Ok((expectation(&psi, o)? - e).abs() >= epsilon))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(observables
        .iter()
        .enumerate()
        .map(|(j, o)| TailCheck {
            observable: o.clone(),
            exceedance: hits.iter().filter(|r| r[j]).count() as f64 / samples as f64,
            bound: tpq_tail_bound(1.0, epsilon, purity),
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct EstimateRow<'a> {
    observable_word: String,
    estimate: f64,
    exact_value: f64,
    abs_error: f64,
    n_s: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "K")]
    k: usize,
    epsilon: Option<f64>,
    delta: Option<f64>,
    source: &'a str,
}

pub fn write_estimates_csv<W: Write>(
    w: W,
    estimates: &[ShadowEstimate],
    exact: &[f64],
    budget: &SampleBudget,
    source: StateSource,
) -> Result<()> {
    if exact.len() != estimates.len() {
        return Err(Error::DimensionMismatch {
            expected: estimates.len(),
            found: exact.len(),
        });
    }
    let mut out = csv::Writer::from_writer(w);
    let src = source.to_string();
    for (e, &x) in estimates.iter().zip(exact) {
        out.serialize(EstimateRow {
            observable_word: e.observable.to_string(),
            estimate: e.value,
            exact_value: x,
            abs_error: (e.value - x).abs(),
            n_s: budget.n_s,
            s: budget.s,
            k: budget.k,
            epsilon: budget.epsilon,
            delta: budget.delta,
            source: &src,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordGate;
    use crate::dense::{basis_rotation, index_to_bits};
    use crate::pauli::{build_xxz, observable_set, Couplings, Term};
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;

    fn basis(s: &str) -> MeasurementBasis {
        s.parse().unwrap()
    }

    fn word(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn budget_examples() {
        let b = sample_budget(2, 2, 0.2, 0.01, Bound::Tight).unwrap();
        assert!((32_000..=32_500).contains(&b.n_s), "{}", b.n_s);
        assert_eq!(b.n_s, b.s * b.k);
        assert_eq!(b.k, (2.0 * 200f64.ln()).ceil() as usize);

        let b = sample_budget(153, 2, 0.2, 0.01, Bound::Tight).unwrap();
        assert!((10_000..100_000).contains(&b.n_s));
        assert_eq!(b.n_s, b.s * b.k);

        // ln(2M/delta) = 1
        let delta = 2.0 / std::f64::consts::E;
        let b = sample_budget(1, 1, 1.0, delta, Bound::Original).unwrap();
        assert_eq!((b.k, b.s, b.n_s), (2, 102, 204));
        assert_eq!(b.sigma2, 3.0);

        assert!(sample_budget(2, 2, 0.0, 0.01, Bound::Tight).is_err());
        assert!(sample_budget(2, 2, 0.2, 1.0, Bound::Tight).is_err());
        assert!(sample_budget(0, 2, 0.2, 0.1, Bound::Tight).is_err());
        assert!(sample_budget(2, 0, 0.2, 0.1, Bound::Original).is_err());
    }

    #[test]
    fn snapshot_estimate_examples() {
        let s = Snapshot::new(basis("Z"), vec![0]).unwrap();
        assert_eq!(pauli_snapshot_estimate(&s, &word("Z")).unwrap(), 3.0);
        for b in [0, 1] {
            let s = Snapshot::new(basis("Z"), vec![b]).unwrap();
            assert_eq!(pauli_snapshot_estimate(&s, &word("X")).unwrap(), 0.0);
        }
        let s = Snapshot::new(basis("ZZ"), vec![0, 1]).unwrap();
        assert_eq!(pauli_snapshot_estimate(&s, &word("ZZ")).unwrap(), -9.0);
        assert_eq!(pauli_snapshot_estimate(&s, &word("II")).unwrap(), 1.0);
        assert!(pauli_snapshot_estimate(&s, &word("Z")).is_err());
        assert!(Snapshot::new(basis("ZZ"), vec![0]).is_err());
    }

    #[test]
    fn median_of_means_examples() {
        assert_eq!(median_of_means(&[1.0; 4], 2).unwrap(), 1.0);
        assert_eq!(median_of_means(&[0.0, 0.0, 10.0, 10.0, 2.0, 2.0], 3).unwrap(), 2.0);
        assert_eq!(median_of_means(&[0.0, 0.0, 4.0, 4.0], 2).unwrap(), 2.0);
        assert!(median_of_means(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(median_of_means(&[], 1).is_err());
    }

    fn random_density(n: usize, seed: &[f64]) -> DenseOperator {
        let dim = 1 << n;
        let a = DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(seed[(i * dim + j) % seed.len()], seed[(i * 7 + j * 3 + 1) % seed.len()])
        });
        let mut m = &a * a.adjoint();
        let tr = m.trace();
        m /= tr;
        DenseOperator::from_matrix(m).unwrap()
    }

    /// `M^{-1}(V^dagger |b><b| V)` for a single qubit, `3 V^dagger|b><b|V - I`.
    fn inverted_single(axis: Pauli, b: usize) -> DMatrix<C64> {
        let r = basis_rotation(axis);
        let v = DMatrix::from_fn(2, 2, |i, j| r[i][j]);
        let ket = v.row(b).adjoint();
        (&ket * ket.adjoint()).scale(3.0) - DMatrix::identity(2, 2)
    }

    proptest! {
        #[test]
        fn single_qubit_channel_is_inverted_exactly(entries in prop::collection::vec(-1.0f64..1.0, 8)) {
            let rho = random_density(1, &entries);
            prop_assume!(rho.matrix().trace().re > 0.0);
            let mut acc = DMatrix::<C64>::zeros(2, 2);
            for axis in Pauli::NON_IDENTITY {
                let r = basis_rotation(axis);
                let v = DMatrix::from_fn(2, 2, |i, j| r[i][j]);
                let rotated = &v * rho.matrix() * v.adjoint();
                for b in 0..2 {
                    let p = rotated[(b, b)].re;
                    acc += inverted_single(axis, b).scale(p / 3.0);
                }
            }
            prop_assert!((acc - rho.matrix()).camax() < 1e-10);
        }

        #[test]
        fn snapshot_scores_are_bounded(
            axes in prop::collection::vec(0usize..3, 5),
            bits in prop::collection::vec(0u8..2, 5),
            letters in prop::collection::vec(0usize..4, 5),
        ) {
            let b = MeasurementBasis::new(axes.iter().map(|&a| Pauli::NON_IDENTITY[a]).collect()).unwrap();
            let o = PauliString::new(letters.iter().map(|&l| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][l]).collect());
            let s = Snapshot::new(b, bits).unwrap();
            let v = pauli_snapshot_estimate(&s, &o).unwrap();
            let cap = 3f64.powi(o.locality() as i32);
            prop_assert!(v.abs() <= cap);
            prop_assert!(v == 0.0 || v.abs() == cap);
        }
    }

    #[test]
    fn two_qubit_estimator_is_unbiased() {
        let rho = random_density(2, &[0.3, -0.7, 0.1, 0.9, -0.2, 0.5, 0.8, -0.4, 0.6, 0.05, -0.9]);
        let mut obs = observable_set(2).unwrap();
        obs.push(PauliString::identity(2));
        let mut mean = vec![0.0; obs.len()];
        for a0 in Pauli::NON_IDENTITY {
            for a1 in Pauli::NON_IDENTITY {
                let b = MeasurementBasis::new(vec![a0, a1]).unwrap();
                let rot = b.rotation_circuit().unitary().unwrap();
                let rotated = rot.matrix() * rho.matrix() * rot.matrix().adjoint();
                for k in 0..4 {
                    let p = rotated[(k, k)].re;
                    let s = Snapshot::new(b.clone(), index_to_bits(k, 2)).unwrap();
                    for (j, o) in obs.iter().enumerate() {
                        mean[j] += p / 9.0 * pauli_snapshot_estimate(&s, o).unwrap();
                    }
                }
            }
        }
        for (o, m) in obs.iter().zip(mean) {
            assert!((m - expectation(&rho, o).unwrap()).abs() < 1e-10, "{o}");
        }
    }

    #[test]
    fn global_snapshot_examples() {
        let eta = global_clifford_snapshot(&CliffordCircuit::identity(1), &[0]).unwrap();
        let m = eta.matrix();
        assert!((m[(0, 0)].re - 2.0).abs() < 1e-12 && (m[(1, 1)].re + 1.0).abs() < 1e-12);
        assert!(m[(0, 1)].norm() < 1e-12);

        let mut rng = task_rng(4, 0);
        for n in 1..=3 {
            let v = sample_two_design(n, &mut rng).unwrap();
            let bits = index_to_bits(rand::Rng::gen_range(&mut rng, 0..1 << n), n);
            let eta = global_clifford_snapshot(&v, &bits).unwrap();
            assert!((eta.trace().re - 1.0).abs() < 1e-12 && eta.trace().im.abs() < 1e-12);
            assert!(eta.hermiticity_residue() < 1e-12);
        }
        assert!(global_clifford_snapshot(&CliffordCircuit::identity(2), &[0]).is_err());
    }

    /// Snapshot averaged over outcomes for one circuit, weighted by Born probability.
    fn outcome_average(rho: &DenseOperator, v: &CliffordCircuit) -> DMatrix<C64> {
        let dim = rho.dim();
        let n = rho.num_qubits();
        let u = v.unitary().unwrap();
        let out = u.matrix() * rho.matrix() * u.matrix().adjoint();
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..dim {
            let eta = global_clifford_snapshot(v, &index_to_bits(k, n)).unwrap();
            acc += eta.matrix().scale(out[(k, k)].re);
        }
        acc
    }

    fn channel_average(rho: &DenseOperator, circuits: &[CliffordCircuit]) -> DMatrix<C64> {
        let dim = rho.dim();
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for v in circuits {
            acc += outcome_average(rho, v);
        }
        acc.unscale(circuits.len() as f64)
    }

    #[test]
    fn global_channel_single_qubit_enumeration() {
        // every combination of the single-qubit sampler's choices
        use crate::clifford::CliffordKind::*;
        let rho = random_density(1, &[0.2, -0.5, 0.7, 0.1, 0.9]);
        let twirl = |t: usize| match t {
            0 => vec![],
            1 => vec![R],
            _ => vec![R2],
        };
        let mut circuits = Vec::new();
        for x in 0..2 {
            for z in 0..2 {
                for t1 in 0..3 {
                    for s in 0..2 {
                        for t8 in 0..3 {
                            let mut kinds = Vec::new();
                            if x == 1 {
                                kinds.push(X);
                            }
                            if z == 1 {
                                kinds.push(Z);
                            }
                            kinds.extend(twirl(t1));
                            kinds.extend([H, H]);
                            if s == 1 {
                                kinds.push(S);
                            }
                            kinds.extend(twirl(t8));
                            let gates = kinds.into_iter().map(|k| CliffordGate::single(k, 0)).collect();
                            circuits.push(CliffordCircuit::new(1, gates).unwrap());
                        }
                    }
                }
            }
        }
        let avg = channel_average(&rho, &circuits);
        assert!((avg - rho.matrix()).camax() < 1e-10);
    }

    #[test]
    fn global_channel_two_qubits_monte_carlo() {
        let rho = random_density(2, &[0.4, -0.1, 0.3, 0.8, -0.6, 0.2, 0.5, -0.3, 0.7]);
        let samples = 2000;
        let mut rng = task_rng(99, 0);
        let circuits: Vec<_> = (0..samples)
            .map(|_| sample_two_design(2, &mut rng).unwrap())
            .collect();
        let per: Vec<DMatrix<C64>> = circuits.iter().map(|v| outcome_average(&rho, v)).collect();
        let avg = channel_average(&rho, &circuits);
        let n = samples as f64;
        for i in 0..4 {
            for j in 0..4 {
                for part in [|z: C64| z.re, |z: C64| z.im] {
                    let var = per.iter().map(|m| (part(m[(i, j)]) - part(avg[(i, j)])).powi(2)).sum::<f64>() / (n - 1.0);
                    let se = (var / n).sqrt().max(1e-12);
                    let dev = (part(avg[(i, j)]) - part(rho.matrix()[(i, j)])).abs();
                    assert!(dev <= 4.0 * se + 1e-12, "entry ({i},{j}): {dev} vs se {se}");
                }
            }
        }
    }

    fn z_ham() -> Hamiltonian {
        Hamiltonian::new(1, [Term { coeff: 1.0, word: word("Z") }]).unwrap()
    }

    #[test]
    fn single_qubit_gibbs_estimate() {
        let beta = 0.9;
        let sampler = ThermalSampler::new(&z_ham(), beta, StateSource::ExactGibbs, None).unwrap();
        let budget = SampleBudget::from_sets(1, 500, 20).unwrap();
        let est = run_experiment(&sampler, &[word("Z")], &budget, 3).unwrap();
        // per-shot variance is 9 - tanh^2 < 9
        let se = 3.0 / (budget.n_s as f64).sqrt();
        assert!((est[0].value + beta.tanh()).abs() < 5.0 * se);
        assert_eq!(est[0].set_means.len(), 20);
    }

    #[test]
    fn experiment_is_deterministic_across_pools() {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        let obs = observable_set(3).unwrap();
        let budget = SampleBudget::from_sets(obs.len(), 40, 5).unwrap();
        for source in [StateSource::ExactGibbs, StateSource::ExactTpq] {
            let sampler = ThermalSampler::new(&h, 1.0, source, None).unwrap();
            let run = |threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| run_experiment(&sampler, &obs, &budget, 17).unwrap())
            };
            assert_eq!(run(1), run(4));
        }
    }

    #[test]
    fn tail_check_trivial_cases() {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        let obs = observable_set(3).unwrap();
        let rows = tpq_tail_check(&h, 1.0, 2.1, &obs, 50, 1).unwrap();
        assert!(rows.iter().all(|r| r.exceedance == 0.0));
        let purity = GibbsState::new(&h, 1.0).unwrap().purity();
        assert!((rows[0].bound - 4.0 / (2.1 * 2.1) * purity).abs() < 1e-15);
    }

    #[test]
    fn csv_has_expected_columns() {
        let sampler = ThermalSampler::new(&z_ham(), 0.5, StateSource::ExactGibbs, None).unwrap();
        let budget = sample_budget(1, 1, 0.5, 0.1, Bound::Tight).unwrap();
        let est = run_experiment(&sampler, &[word("Z")], &budget, 0).unwrap();
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &est, &[-(0.5f64).tanh()], &budget, StateSource::ExactGibbs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "observable_word,estimate,exact_value,abs_error,n_s,S,K,epsilon,delta,source"
        );
        assert!(text.lines().nth(1).unwrap().ends_with(",0.5,0.1,exact-gibbs"));
    }

    #[test]
    fn tight_epsilon_inverts_the_budget() {
        for (m, eps, delta) in [(2, 0.2, 0.01), (153, 0.2, 0.01), (66, 0.3, 0.05)] {
            let b = sample_budget(m, 2, eps, delta, Bound::Tight).unwrap();
            let back = tight_epsilon(b.n_s, m, 9.0, delta).unwrap();
            assert!((back / eps - 1.0).abs() < 0.01, "{m}: {back}");
        }
        assert!(tight_epsilon(0, 2, 9.0, 0.1).is_err());
    }
}
