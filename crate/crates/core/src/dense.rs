//! Dense linear algebra over `2^n`-dimensional Hilbert spaces.
//!
//! Everything here is exact up to floating point and serves as the ground
//! truth that the sampling code is checked against.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::clifford::MeasurementBasis;
use crate::error::{invalid, Error, Result};
use crate::pauli::{Hamiltonian, Pauli, PauliAction, PauliString};

/// Largest qubit count for which dense matrices are built.
pub const DENSE_LIMIT: usize = 12;

/// Inputs whose anti-Hermitian part exceeds this are rejected.
pub const HERMITIAN_TOL: f64 = 1e-8;

pub type Mat2 = [[C64; 2]; 2];

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(invalid(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Square complex matrix acting on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator(DMatrix<C64>);

impl DenseOperator {
    pub fn zeros(n: usize) -> Self {
        let d = 1usize << n;
        Self(DMatrix::zeros(d, d))
    }

    pub fn identity(n: usize) -> Self {
        let d = 1usize << n;
        Self(DMatrix::identity(d, d))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        qubits_for_dim(m.nrows())?;
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Max-abs entry of `A - A^dagger`.
    pub fn hermiticity_residue(&self) -> f64 {
        let mut worst = 0.0f64;
        let d = self.dim();
        for r in 0..d {
            for col in r..d {
                worst = worst.max((self.0[(r, col)] - self.0[(col, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        Ok(StateVector(&self.0 * &v.0))
    }
}

/// Pure state amplitudes in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        Self::basis_state(n, 0)
    }

    pub fn basis_state(n: usize, index: usize) -> Self {
        let mut v = DVector::zeros(1usize << n);
        v[index] = c(1.0, 0.0);
        Self(v)
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        qubits_for_dim(amps.len())?;
        Ok(Self(DVector::from_vec(amps)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        self.0.unscale_mut(norm);
        Ok(norm)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|^2` for normalized inputs.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> DenseOperator {
        DenseOperator(&self.0 * self.0.adjoint())
    }

    /// Applies a 2x2 unitary to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, u: &Mat2) {
        self.apply_controlled(&[], qubit, u);
    }

    /// Applies `u` to `target` on the subspace where every control is `|1>`.
    pub fn apply_controlled(&mut self, controls: &[usize], target: usize, u: &Mat2) {
        let n = self.num_qubits();
        let tbit = 1usize << (n - 1 - target);
        let cmask = controls.iter().fold(0usize, |m, &q| m | 1usize << (n - 1 - q));
        for k in 0..self.dim() {
            if k & tbit != 0 || k & cmask != cmask {
                continue;
            }
            let a = self.0[k];
            let b = self.0[k | tbit];
            self.0[k] = u[0][0] * a + u[0][1] * b;
            self.0[k | tbit] = u[1][0] * a + u[1][1] * b;
        }
    }

    /// Applies a Pauli word in place.
    pub fn apply_pauli(&mut self, word: &PauliString) -> Result<()> {
        if word.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: word.num_qubits(),
            });
        }
        let action = PauliAction::new(word);
        let mut out = DVector::zeros(self.dim());
        for k in 0..self.dim() {
            let (j, ph) = action.apply_basis(k);
            out[j] += ph * self.0[k];
        }
        self.0 = out;
        Ok(())
    }
}

/// Eigendecomposition `A = V diag(lambda) V^dagger`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl HermitianSpectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(values) V^dagger` for arbitrary per-eigenvalue weights.
    pub fn compose(&self, values: &[C64]) -> DenseOperator {
        let mut scaled = self.eigenvectors.clone();
        for (j, &v) in values.iter().enumerate() {
            for z in scaled.column_mut(j).iter_mut() {
                *z *= v;
            }
        }
        DenseOperator(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> DenseOperator {
        let vals: Vec<C64> = self.eigenvalues.iter().map(|&l| c(l, 0.0)).collect();
        self.compose(&vals)
    }

    /// `f(A)` evaluated through the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<DenseOperator> {
        let vals = self
            .eigenvalues
            .iter()
            .map(|&l| {
                let y = f(l);
                if y.is_finite() {
                    Ok(c(y, 0.0))
                } else {
                    Err(Error::NonFinite(l))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.compose(&vals))
    }

    pub fn eigenvector(&self, j: usize) -> StateVector {
        StateVector(self.eigenvectors.column(j).into_owned())
    }
}

/// Decomposes a Hermitian operator.
///
/// The input is symmetrized as `(A + A^dagger) / 2` first; matrices whose
/// anti-Hermitian residue exceeds [`HERMITIAN_TOL`] are rejected.
pub fn eig_hermitian(a: &DenseOperator) -> Result<HermitianSpectrum> {
    let residue = a.hermiticity_residue();
    if residue > HERMITIAN_TOL {
        return Err(Error::NotHermitian(residue));
    }
    let m = &a.0;
    let sym = (m + m.adjoint()).unscale(2.0);
    let d = sym.nrows();

    let (vals, vecs) = if sym.iter().all(|z| z.im == 0.0) {
        let (vals, vecs) = refined_eigen(sym.map(|z| z.re));
        (vals, vecs.map(|x| c(x, 0.0)))
    } else {
        refined_eigen(sym)
    };

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let eigenvalues = order.iter().map(|&i| vals[i]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |r, col| vecs[(r, order[col])]);
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Residual, relative to the largest entry of the input, above which a
/// decomposition gets polished.
const EIG_REFINE_TOL: f64 = 1e-12;

/// Symmetric QR, checked on a flat probe vector and, when the residual is
/// too large, polished by Jacobi sweeps on `V^dagger A V`. The QR pass
/// occasionally stalls near `1e-9` on clustered spectra.
fn refined_eigen<T>(a: DMatrix<T>) -> (Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let d = a.nrows();
    let scale = a.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max).max(1.0);
    let eig = SymmetricEigen::new(a.clone());
    let (vals, mut vecs) = (eig.eigenvalues, eig.eigenvectors);
    let x = DVector::from_element(d, T::from_real((d as f64).sqrt().recip()));
    let lx = DVector::from_fn(d, |i, _| x[i].clone().scale(vals[i]));
    let probe = (&a * (&vecs * &x) - &vecs * lx).iter().map(|z| z.clone().modulus()).fold(0.0, f64::max);
    if probe <= EIG_REFINE_TOL * scale {
        return (vals.as_slice().to_vec(), vecs);
    }
    let mut p = vecs.adjoint() * &a * &vecs;
    jacobi_sweeps(&mut p, &mut vecs, 1e-15 * scale);
    ((0..d).map(|i| p[(i, i)].clone().real()).collect(), vecs)
}

/// Cyclic Jacobi on a Hermitian `p`, accumulating rotations into `v`, until
/// no off-diagonal entry exceeds `tol`.
fn jacobi_sweeps<T>(p: &mut DMatrix<T>, v: &mut DMatrix<T>, tol: f64)
where
    T: ComplexField<RealField = f64>,
{
    let d = p.nrows();
    for _ in 0..30 {
        let mut rotated = false;
        for i in 0..d {
            for j in i + 1..d {
                let b = p[(i, j)].clone().modulus();
                if b <= tol {
                    continue;
                }
                rotated = true;
                // reduce to the real symmetric case with the phase of p_ij
                let ph = p[(i, j)].clone().unscale(b);
                let zeta = (p[(j, j)].clone().real() - p[(i, i)].clone().real()) / (2.0 * b);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = (1.0 + t * t).sqrt().recip();
                let s = t * c;
                let phc = ph.clone().conjugate();
                // columns: G = [[c, s], [-s phc, c phc]]
                for k in 0..d {
                    let (ki, kj) = (p[(k, i)].clone(), p[(k, j)].clone());
                    p[(k, i)] = ki.clone().scale(c) - kj.clone() * phc.clone().scale(s);
                    p[(k, j)] = ki.scale(s) + kj * phc.clone().scale(c);
                    let (ki, kj) = (v[(k, i)].clone(), v[(k, j)].clone());
                    v[(k, i)] = ki.clone().scale(c) - kj.clone() * phc.clone().scale(s);
                    v[(k, j)] = ki.scale(s) + kj * phc.clone().scale(c);
                }
                // rows: G^dagger = [[c, -s ph], [s, c ph]]
                for k in 0..d {
                    let (ik, jk) = (p[(i, k)].clone(), p[(j, k)].clone());
                    p[(i, k)] = ik.clone().scale(c) - jk.clone() * ph.clone().scale(s);
                    p[(j, k)] = ik.scale(s) + jk * ph.clone().scale(c);
                }
            }
        }
        if !rotated {
            return;
        }
    }
}

pub fn func_of_hermitian(a: &DenseOperator, f: impl Fn(f64) -> f64) -> Result<DenseOperator> {
    eig_hermitian(a)?.map(f)
}

/// Gibbs ensemble `e^{-beta H} / Z` kept in the energy eigenbasis.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub spectrum: HermitianSpectrum,
    /// Boltzmann weights, summing to one.
    pub weights: Vec<f64>,
    pub beta: f64,
}

impl GibbsState {
    pub fn new(h: &Hamiltonian, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid(format!("inverse temperature must be finite and >= 0, got {beta}")));
        }
        let spectrum = eig_hermitian(&h.matrix()?)?;
        Ok(Self::from_spectrum(spectrum, beta))
    }

    pub fn from_spectrum(spectrum: HermitianSpectrum, beta: f64) -> Self {
        let e0 = spectrum.min();
        let mut weights: Vec<f64> = spectrum
            .eigenvalues
            .iter()
            .map(|&l| (-beta * (l - e0)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= z);
        Self {
            spectrum,
            weights,
            beta,
        }
    }

    pub fn density(&self) -> DenseOperator {
        let vals: Vec<C64> = self.weights.iter().map(|&w| c(w, 0.0)).collect();
        self.spectrum.compose(&vals)
    }

    pub fn purity(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    /// Draws an energy eigenstate with its Boltzmann probability.
    pub fn sample_eigenstate<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = self.weights.len() - 1;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        self.spectrum.eigenvector(pick)
    }
}

/// `rho_beta = e^{-beta H} / Tr e^{-beta H}`.
pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> Result<DenseOperator> {
    Ok(GibbsState::new(h, beta)?.density())
}

/// `Tr rho^2`.
pub fn purity(rho: &DenseOperator) -> f64 {
    // for Hermitian rho, Tr rho^2 is the squared Frobenius norm
    rho.0.norm_squared()
}

/// States for which Pauli expectation values can be computed exactly.
pub trait PauliExpectation {
    fn pauli_expectation(&self, word: &PauliString) -> Result<f64>;
}

impl PauliExpectation for DenseOperator {
    /// `Tr(rho P) = sum_k rho[k, k ^ x] phase(k)`.
    fn pauli_expectation(&self, word: &PauliString) -> Result<f64> {
        if word.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: word.num_qubits(),
            });
        }
        let action = PauliAction::new(word);
        let mut acc = c(0.0, 0.0);
        for k in 0..self.dim() {
            let (j, ph) = action.apply_basis(k);
            acc += self.0[(k, j)] * ph;
        }
        Ok(acc.re)
    }
}

impl PauliExpectation for StateVector {
    fn pauli_expectation(&self, word: &PauliString) -> Result<f64> {
        if word.num_qubits() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits(),
                found: word.num_qubits(),
            });
        }
        let action = PauliAction::new(word);
        let mut acc = c(0.0, 0.0);
        for k in 0..self.dim() {
            let (j, ph) = action.apply_basis(k);
            acc += self.0[j].conj() * ph * self.0[k];
        }
        Ok(acc.re)
    }
}

pub fn expectation<S: PauliExpectation + ?Sized>(state: &S, word: &PauliString) -> Result<f64> {
    state.pauli_expectation(word)
}

/// Rotation applied before a computational-basis readout of `axis`:
/// `H` for X, `H S^dagger` for Y, identity for Z.
pub fn basis_rotation(axis: Pauli) -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        Pauli::X => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        // H * diag(1, -i)
        Pauli::Y => [[c(s, 0.0), c(0.0, -s)], [c(s, 0.0), c(0.0, s)]],
        Pauli::Z | Pauli::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
    }
}

/// Measures `psi` in the given product basis.
///
/// Exactly one uniform draw is consumed; the outcome is found by inverse
/// CDF over basis indices in lexicographic bitstring order.
pub fn born_sample<R: Rng + ?Sized>(
    psi: &StateVector,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let n = psi.num_qubits();
    if basis.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let mut rotated = psi.clone();
    for (q, &axis) in basis.axes().iter().enumerate() {
        if axis != Pauli::Z {
            rotated.apply_single(q, &basis_rotation(axis));
        }
    }
    let u: f64 = rng.gen::<f64>() * rotated.norm_squared();
    let mut acc = 0.0;
    let mut index = rotated.dim() - 1;
    for (k, a) in rotated.0.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            index = k;
            break;
        }
    }
    Ok(index_to_bits(index, n))
}

/// Bit of qubit `q` is bit `n - 1 - q` of the index.
pub fn index_to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}
