//! Pauli words, weighted Pauli sums, and the observable sets used for
//! shadow estimation.
//!
//! Qubit 0 is the leftmost letter of a word and the leftmost tensor factor,
//! so it addresses the most significant bit of a computational-basis index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{DenseOperator, DENSE_LIMIT};
use crate::error::{invalid, Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Self::I),
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }

    /// The 2x2 matrix, row-major.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Self::I => [[l, o], [o, l]],
            Self::X => [[o, l], [l, o]],
            Self::Y => [[o, -i], [i, o]],
            Self::Z => [[l, o], [o, -l]],
        }
    }
}

/// An n-qubit Pauli word such as `"XIZ"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops }
    }

    pub fn identity(n: usize) -> Self {
        Self { ops: vec![Pauli::I; n] }
    }

    /// Word with `letters` placed on the given qubits and identity elsewhere.
    pub fn from_sparse(n: usize, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; n];
        for &(q, p) in letters {
            if q >= n {
                return Err(invalid(format!("qubit {q} out of range for {n} qubits")));
            }
            ops[q] = p;
        }
        Ok(Self { ops })
    }

    pub fn num_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.ops[qubit]
    }

    /// Number of non-identity letters.
    pub fn locality(&self) -> usize {
        self.ops.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Non-identity letters with their qubit positions, in qubit order.
    pub fn support(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, &p)| (q, p))
    }

    /// Bit masks `(x, z)` over basis-index bits, plus the number of `Y`s.
    pub fn masks(&self) -> (usize, usize, u32) {
        let n = self.ops.len();
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for (q, p) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// Dense matrix, limited to [`DENSE_LIMIT`] qubits.
    pub fn matrix(&self) -> Result<DenseOperator> {
        self.matrix_with_limit(DENSE_LIMIT)
    }

    pub fn matrix_with_limit(&self, limit: usize) -> Result<DenseOperator> {
        let n = self.num_qubits();
        if n > limit {
            return Err(Error::DenseLimitExceeded { qubits: n, limit });
        }
        let mut out = DenseOperator::zeros(n);
        add_pauli_scaled(&mut out, self, 1.0);
        Ok(out)
    }
}

/// Adds `coeff * P` into `op` without materializing `P`.
pub(crate) fn add_pauli_scaled(op: &mut DenseOperator, word: &PauliString, coeff: f64) {
    let action = PauliAction::new(word);
    let dim = op.dim();
    let m = op.matrix_mut();
    for col in 0..dim {
        let (row, phase) = action.apply_basis(col);
        m[(row, col)] += phase * coeff;
    }
}

/// Action of a Pauli word on computational basis states:
/// `P|k> = phase(k) |k xor x>`.
#[derive(Copy, Clone, Debug)]
pub(crate) struct PauliAction {
    x: usize,
    z: usize,
    y_phase: C64,
}

impl PauliAction {
    pub fn new(word: &PauliString) -> Self {
        let (x, z, ny) = word.masks();
        let y_phase = match ny % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        Self { x, z, y_phase }
    }

    #[inline]
    pub fn apply_basis(&self, k: usize) -> (usize, C64) {
        let sign = if (k & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (k ^ self.x, self.y_phase * sign)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| invalid(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All distinct 1- and 2-local Pauli words on `n` qubits:
/// `3n + 9 n(n-1)/2` of them.
///
/// Ordered as every 1-local word (qubit-major, then X, Y, Z) followed by
/// every 2-local word in lexicographic qubit-pair order.
pub fn observable_set(n: usize) -> Result<Vec<PauliString>> {
    if n == 0 {
        return Err(invalid("observable set needs at least one qubit"));
    }
    let mut out = Vec::with_capacity(3 * n + 9 * n * (n - 1) / 2);
    for q in 0..n {
        for p in Pauli::NON_IDENTITY {
            out.push(PauliString::from_sparse(n, &[(q, p)])?);
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for pa in Pauli::NON_IDENTITY {
                for pb in Pauli::NON_IDENTITY {
                    out.push(PauliString::from_sparse(n, &[(a, pa), (b, pb)])?);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub word: PauliString,
}

/// A real-weighted sum of Pauli words on a fixed number of qubits.
///
/// Duplicate words are merged and zero coefficients dropped on
/// construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<Term>,
}

impl Hamiltonian {
    pub fn new(n: usize, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        // insertion order is kept so term lists stay readable
        let mut order: Vec<PauliString> = Vec::new();
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for t in terms {
            if t.word.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.word.num_qubits(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(invalid(format!("non-finite coefficient on {}", t.word)));
            }
            match merged.get_mut(&t.word) {
                Some(c) => *c += t.coeff,
                None => {
                    merged.insert(t.word.clone(), t.coeff);
                    order.push(t.word);
                }
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|word| {
                let coeff = merged[&word];
                (coeff != 0.0).then_some(Term { coeff, word })
            })
            .collect();
        Ok(Self { n, terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients (the LCU normalization).
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn matrix(&self) -> Result<DenseOperator> {
        self.matrix_with_limit(DENSE_LIMIT)
    }

    pub fn matrix_with_limit(&self, limit: usize) -> Result<DenseOperator> {
        if self.n > limit {
            return Err(Error::DenseLimitExceeded {
                qubits: self.n,
                limit,
            });
        }
        let mut out = DenseOperator::zeros(self.n);
        for t in &self.terms {
            add_pauli_scaled(&mut out, &t.word, t.coeff);
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

impl<'de> Deserialize<'de> for Hamiltonian {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            terms: Vec<Term>,
        }
        let raw = Raw::deserialize(d)?;
        Hamiltonian::new(raw.n, raw.terms).map_err(serde::de::Error::custom)
    }
}

/// Couplings and fields of the open-chain XXZ-type Heisenberg model.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Couplings {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl Default for Couplings {
    /// `Jz = 1`, `Jx = Jy = 1.1`, `hx = -Jz`, `hy = hz = 0`.
    fn default() -> Self {
        Self {
            jx: 1.1,
            jy: 1.1,
            jz: 1.0,
            hx: -1.0,
            hy: 0.0,
            hz: 0.0,
        }
    }
}

/// Nearest-neighbour couplings on bonds `(i, i+1)` (open boundary) plus a
/// uniform field on every site.
pub fn build_xxz(n: usize, c: &Couplings) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(invalid("the spin chain needs at least two qubits"));
    }
    let mut terms = Vec::with_capacity(4 * n);
    for i in 0..n - 1 {
        for (j, p) in [(c.jx, Pauli::X), (c.jy, Pauli::Y), (c.jz, Pauli::Z)] {
            terms.push(Term {
                coeff: j,
                word: PauliString::from_sparse(n, &[(i, p), (i + 1, p)])?,
            });
        }
    }
    for i in 0..n {
        for (h, p) in [(c.hx, Pauli::X), (c.hy, Pauli::Y), (c.hz, Pauli::Z)] {
            terms.push(Term {
                coeff: h,
                word: PauliString::from_sparse(n, &[(i, p)])?,
            });
        }
    }
    Hamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn locality_counts_non_identity_letters() {
        assert_eq!(ps("III").locality(), 0);
        assert_eq!(ps("XIZ").locality(), 2);
        assert_eq!(ps("ZZ").locality(), 2);
    }

    #[test]
    fn observable_set_sizes() {
        let one = observable_set(1).unwrap();
        assert_eq!(one, vec![ps("X"), ps("Y"), ps("Z")]);
        assert_eq!(observable_set(3).unwrap().len(), 36);
        assert_eq!(observable_set(6).unwrap().len(), 153);
        assert!(observable_set(0).is_err());
    }

    #[test]
    fn observable_set_matches_enumeration() {
        // brute force over all 4^n words
        for n in 1..=10usize {
            let set = observable_set(n).unwrap();
            assert_eq!(set.len(), 3 * n + 9 * n * (n - 1) / 2);
            if n <= 5 {
                let mut brute = Vec::new();
                for code in 0..4usize.pow(n as u32) {
                    let ops: Vec<Pauli> = (0..n)
                        .map(|q| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(code >> (2 * q)) & 3])
                        .collect();
                    let w = PauliString::new(ops);
                    if (1..=2).contains(&w.locality()) {
                        brute.push(w);
                    }
                }
                let mut a = set.clone();
                a.sort();
                brute.sort();
                assert_eq!(a, brute);
            }
        }
    }

    #[test]
    fn xxz_term_counts() {
        let c = Couplings::default();
        assert_eq!(build_xxz(3, &c).unwrap().len(), 9);
        assert_eq!(build_xxz(6, &c).unwrap().len(), 21);
        let fz = Couplings {
            jx: 0.0,
            jy: 0.0,
            jz: 0.0,
            hx: 0.0,
            hy: 0.0,
            hz: 1.0,
        };
        let h = build_xxz(2, &fz).unwrap();
        let words: Vec<String> = h.terms().iter().map(|t| t.word.to_string()).collect();
        assert_eq!(words, vec!["ZI", "IZ"]);
        assert!(build_xxz(1, &c).is_err());
    }

    #[test]
    fn duplicate_words_merge_and_cancel() {
        let h = Hamiltonian::new(
            2,
            vec![
                Term { coeff: 1.0, word: ps("XX") },
                Term { coeff: 0.5, word: ps("ZI") },
                Term { coeff: -1.0, word: ps("XX") },
                Term { coeff: 0.25, word: ps("ZI") },
            ],
        )
        .unwrap();
        assert_eq!(h.terms(), &[Term { coeff: 0.75, word: ps("ZI") }]);
        assert!(Hamiltonian::new(3, vec![Term { coeff: 1.0, word: ps("XX") }]).is_err());
    }

    #[test]
    fn matrices_of_small_words() {
        let z = ps("Z").matrix().unwrap();
        assert_eq!(z.matrix()[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z.matrix()[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(z.matrix()[(0, 1)], C64::new(0.0, 0.0));

        let xx = ps("XX").matrix().unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r + c == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx.matrix()[(r, c)], C64::new(want, 0.0));
            }
        }

        let h = Hamiltonian::new(1, vec![Term { coeff: 2.0, word: ps("Z") }]).unwrap();
        let m = h.matrix().unwrap();
        assert_eq!(m.matrix()[(0, 0)].re, 2.0);
        assert_eq!(m.matrix()[(1, 1)].re, -2.0);
    }

    #[test]
    fn qubit_zero_is_leftmost_factor() {
        // Z on qubit 0 of two flips the sign of indices 2 and 3
        let m = ps("ZI").matrix().unwrap();
        let diag: Vec<f64> = (0..4).map(|k| m.matrix()[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        // X on qubit 0 maps |00> to |10> (index 2)
        let x = ps("XI").matrix().unwrap();
        assert_eq!(x.matrix()[(2, 0)].re, 1.0);
    }

    #[test]
    fn matrices_hermitian_unitary_traceless() {
        for n in 1..=4usize {
            for code in 0..4usize.pow(n as u32) {
                let ops: Vec<Pauli> = (0..n)
                    .map(|q| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(code >> (2 * q)) & 3])
                    .collect();
                let w = PauliString::new(ops);
                let m = w.matrix().unwrap().into_inner();
                let dag = m.adjoint();
                assert!((&m - &dag).camax() < 1e-15);
                let sq = &m * &m;
                let eye = nalgebra::DMatrix::<C64>::identity(m.nrows(), m.ncols());
                assert!((&sq - &eye).camax() < 1e-15);
                if w.locality() > 0 {
                    assert!(m.trace().norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn dense_limit_is_enforced() {
        let w = PauliString::identity(13);
        assert!(matches!(w.matrix(), Err(Error::DenseLimitExceeded { .. })));
        assert!(PauliString::identity(3).matrix_with_limit(2).is_err());
    }

    #[test]
    fn hamiltonian_json_round_trip() {
        let h = build_xxz(3, &Couplings::default()).unwrap();
        let s = h.to_json().unwrap();
        assert!(s.starts_with("{\"n\":3,\"terms\":[{\"coeff\":1.1,\"word\":\"XXI\"}"));
        assert_eq!(Hamiltonian::from_json(&s).unwrap(), h);
        assert!(Hamiltonian::from_json(r#"{"n":2,"terms":[{"coeff":1.0,"word":"XQ"}]}"#).is_err());
    }
}
