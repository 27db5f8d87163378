//! Thermal pure quantum states: `e^{-beta H / 2} U|0>`, normalized.
//!
//! The random unitary acts first and the imaginary-time filter second. The
//! normalization is the vector norm, i.e. the square root of
//! `<0|U^dagger e^{-beta H} U|0>`.

use num_complex::Complex64 as C64;

use crate::clifford::{apply_clifford, CliffordCircuit};
use crate::dense::{c, eig_hermitian, DenseOperator, HermitianSpectrum, StateVector};
use crate::error::{invalid, Error, Result};
use crate::minimax::MinimaxPoly;
use crate::pauli::Hamiltonian;

/// `(H - lambda_min) / (lambda_max - lambda_min)` together with its imaginary time.
#[derive(Clone, Debug)]
pub struct RescaledHamiltonian {
    pub h_tilde: DenseOperator,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub beta: f64,
    pub tau: f64,
    spectrum: HermitianSpectrum,
}

impl RescaledHamiltonian {
    pub fn from_operator(h: &DenseOperator, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid(format!("inverse temperature must be finite and >= 0, got {beta}")));
        }
        let spec = eig_hermitian(h)?;
        let (lo, hi) = (spec.min(), spec.max());
        let width = hi - lo;
        if !(width > 1e-12 * (1.0 + lo.abs().max(hi.abs()))) {
            return Err(invalid(format!(
                "spectrum width is zero (lambda_min = lambda_max = {lo})"
            )));
        }
        let eigenvalues: Vec<f64> = spec
            .eigenvalues
            .iter()
            .map(|&l| ((l - lo) / width).clamp(0.0, 1.0))
            .collect();
        let spectrum = HermitianSpectrum {
            eigenvalues,
            eigenvectors: spec.eigenvectors,
        };
        let dim = h.dim();
        let shifted = h.matrix() - nalgebra::DMatrix::<C64>::identity(dim, dim).scale(lo);
        let h_tilde = DenseOperator::from_matrix(shifted.unscale(width))?;
        Ok(Self {
            h_tilde,
            lambda_min: lo,
            lambda_max: hi,
            beta,
            tau: beta * width / 2.0,
            spectrum,
        })
    }

    /// Eigenvalues of the rescaled operator, ascending, in `[0, 1]`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn spectrum(&self) -> &HermitianSpectrum {
        &self.spectrum
    }
}

pub fn rescale(h: &Hamiltonian, beta: f64) -> Result<RescaledHamiltonian> {
    RescaledHamiltonian::from_operator(&h.matrix()?, beta)
}

/// A fixed diagonal-in-energy filter applied to random states.
#[derive(Clone, Debug)]
pub struct ImaginaryTimeFilter {
    op: DenseOperator,
    /// `log` of the factor removed from the filter to keep it well scaled.
    log_scale: f64,
}

impl ImaginaryTimeFilter {
    /// Exact `e^{-beta H / 2}`.
    pub fn exact(r: &RescaledHamiltonian) -> Self {
        let vals: Vec<C64> = r
            .eigenvalues()
            .iter()
            .map(|&x| c((-r.tau * x).exp(), 0.0))
            .collect();
        Self {
            op: r.spectrum.compose(&vals),
            log_scale: -r.beta * r.lambda_min / 2.0,
        }
    }

    /// `pi_d(H_tilde)`, the polynomial stand-in for `e^{-tau H_tilde}`.
    pub fn polynomial(r: &RescaledHamiltonian, poly: &MinimaxPoly) -> Result<Self> {
        let tol = 1e-9 * r.tau.abs().max(1.0);
        if (poly.tau() - r.tau).abs() > tol {
            return Err(invalid(format!(
                "polynomial fitted for tau = {} but the Hamiltonian needs tau = {}",
                poly.tau(),
                r.tau
            )));
        }
        if poly.domain() != (0.0, 1.0) {
            let (lo, hi) = poly.domain();
            return Err(invalid(format!("polynomial domain [{lo}, {hi}] is not [0, 1]")));
        }
        let vals = r
            .eigenvalues()
            .iter()
            .map(|&x| poly.eval(x).map(|y| c(y, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            op: r.spectrum.compose(&vals),
            log_scale: -r.beta * r.lambda_min / 2.0,
        })
    }

    pub fn operator(&self) -> &DenseOperator {
        &self.op
    }

    pub fn num_qubits(&self) -> usize {
        self.op.num_qubits()
    }

    /// The filtered vector before normalization, with the true overall scale.
    pub fn apply_unnormalized(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = self.op.apply(psi)?;
        let s = self.log_scale.exp();
        out.amplitudes_mut().iter_mut().for_each(|z| *z *= s);
        Ok(out)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = self.op.apply(psi)?;
        let norm = out.normalize()?;
        if !(norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(out)
    }

    /// Filtered `U|0>`.
    pub fn prepare(&self, u: &CliffordCircuit) -> Result<StateVector> {
        self.apply(&random_state(self.num_qubits(), u)?)
    }
}

fn random_state(n: usize, u: &CliffordCircuit) -> Result<StateVector> {
    if u.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.num_qubits(),
        });
    }
    apply_clifford(u, &StateVector::zero_state(n))
}

pub fn exact_tpq(h: &Hamiltonian, beta: f64, u: &CliffordCircuit) -> Result<StateVector> {
    ImaginaryTimeFilter::exact(&rescale(h, beta)?).prepare(u)
}

pub fn qsp_tpq(
    h: &Hamiltonian,
    beta: f64,
    u: &CliffordCircuit,
    poly: &MinimaxPoly,
) -> Result<StateVector> {
    ImaginaryTimeFilter::polynomial(&rescale(h, beta)?, poly)?.prepare(u)
}

/// `e^{-beta H / 2} U|0>` without normalization.
pub fn tpq_unnormalized(h: &Hamiltonian, beta: f64, u: &CliffordCircuit) -> Result<StateVector> {
    let f = ImaginaryTimeFilter::exact(&rescale(h, beta)?);
    f.apply_unnormalized(&random_state(h.num_qubits(), u)?)
}
