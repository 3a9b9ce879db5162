//! Pauli strings and real-weighted Pauli-sum Hamiltonians.
//!
//! Character `k` of a textual Pauli string acts on qubit `k`, and qubit `k` is
//! bit `k` (least significant first) of a computational-basis index. File
//! fixtures depend on this, so every routine in the crate follows it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with smaller magnitude are dropped by [`Hamiltonian::canonicalize`].
pub const DEDUP_EPSILON: f64 = 1e-12;

/// Largest qubit count accepted by [`Hamiltonian::to_dense`].
pub const DENSE_QUBIT_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum PauliError {
    #[error("invalid Pauli character {found:?} at position {position}")]
    InvalidCharacter { position: usize, found: char },
    #[error("empty Pauli string")]
    EmptyString,
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    QubitCountMismatch { expected: usize, found: usize },
    #[error("task list is empty")]
    EmptyTaskList,
    #[error("member set is empty")]
    EmptyMemberSet,
    #[error("member index {0} out of range")]
    MemberOutOfRange(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("accuracy target must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("{n} qubits exceeds the cap of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("coefficient of {pauli} is not finite")]
    NonFiniteCoefficient { pauli: String },
    #[error("Hamiltonian must act on at least one qubit")]
    ZeroQubits,
    #[error("malformed Hamiltonian file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Single-qubit Pauli operator. The derived order matches the character order
/// `I < X < Y < Z`, so sorting strings sorts them lexicographically as text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix in the computational basis.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Tensor product of single-qubit Paulis; `ops[k]` acts on qubit `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            ops: vec![Pauli::I; n_qubits],
        }
    }

    /// String with the given operators on the listed qubits and identity elsewhere.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n_qubits);
        for &(q, p) in ops {
            s.ops[q] = p;
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, PauliError> {
        if text.is_empty() {
            return Err(PauliError::EmptyString);
        }
        text.chars()
            .enumerate()
            .map(|(position, c)| {
                Pauli::from_char(c).ok_or(PauliError::InvalidCharacter { position, found: c })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    /// Bits flipped by the string (qubits carrying X or Y).
    pub fn x_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bits picking up a sign (qubits carrying Z or Y).
    pub fn z_mask(&self) -> usize {
        self.mask(|p| matches!(p, Pauli::Z | Pauli::Y))
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    fn mask(&self, pick: impl Fn(Pauli) -> bool) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| pick(p))
            .fold(0usize, |m, (q, _)| m | (1 << q))
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ops
            .iter()
            .try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub pauli: PauliString,
}

/// Real-weighted sum of Pauli strings on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<Term>,
}

impl Hamiltonian {
    /// Builds a Hamiltonian as given (no merging). Every string must have
    /// length `n_qubits` and every coefficient must be finite.
    pub fn new(n_qubits: usize, terms: Vec<Term>) -> Result<Self, PauliError> {
        if n_qubits == 0 {
            return Err(PauliError::ZeroQubits);
        }
        for t in &terms {
            if t.pauli.n_qubits() != n_qubits {
                return Err(PauliError::QubitCountMismatch {
                    expected: n_qubits,
                    found: t.pauli.n_qubits(),
                });
            }
            if !t.coeff.is_finite() {
                return Err(PauliError::NonFiniteCoefficient {
                    pauli: t.pauli.to_string(),
                });
            }
        }
        Ok(Self { n_qubits, terms })
    }

    /// Convenience constructor from `(text, coeff)` pairs; the qubit count is
    /// taken from the first string.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self, PauliError> {
        let terms = pairs
            .iter()
            .map(|&(s, c)| PauliString::parse(s).map(|pauli| Term { coeff: c, pauli }))
            .collect::<Result<Vec<_>, _>>()?;
        let n = terms
            .first()
            .map(|t| t.pauli.n_qubits())
            .ok_or(PauliError::EmptyString)?;
        Self::new(n, terms)
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
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

    /// Merges duplicate strings, drops coefficients below [`DEDUP_EPSILON`] and
    /// sorts terms by string.
    pub fn canonicalize(&self) -> Self {
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.pauli.clone()).or_insert(0.0) += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= DEDUP_EPSILON)
            .map(|(pauli, coeff)| Term { coeff, pauli })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * factor,
                pauli: t.pauli.clone(),
            })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    /// Coefficient of `pauli`, summing duplicates.
    pub fn coeff_of(&self, pauli: &PauliString) -> f64 {
        self.terms
            .iter()
            .filter(|t| &t.pauli == pauli)
            .map(|t| t.coeff)
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Shots needed for one evaluation at additive accuracy `eps`:
    /// `(sum |c_j|)^2 / eps^2`.
    pub fn shots_per_eval(&self, eps: f64) -> Result<f64, PauliError> {
        if eps <= 0.0 || eps.is_nan() {
            return Err(PauliError::NonPositiveEpsilon(eps));
        }
        let norm = self.l1_norm();
        Ok(norm * norm / (eps * eps))
    }

    /// True when some non-identity term carries a nonzero coefficient.
    pub fn has_measurable_term(&self) -> bool {
        self.terms
            .iter()
            .any(|t| !t.pauli.is_identity() && t.coeff != 0.0)
    }

    /// Dense `2^n x 2^n` matrix. Used as an oracle for norms and spectra.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>, PauliError> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(PauliError::TooManyQubits {
                n: self.n_qubits,
                max: DENSE_QUBIT_CAP,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            let xm = t.pauli.x_mask();
            let zm = t.pauli.z_mask();
            let phase = i_pow(t.pauli.y_count());
            for col in 0..dim {
                let sign = if (col & zm).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                m[(col ^ xm, col)] += phase * sign * t.coeff;
            }
        }
        Ok(m)
    }

    pub fn from_json_str(text: &str) -> Result<Self, PauliError> {
        let file: HamiltonianFile = serde_json::from_str(text)?;
        file.into_hamiltonian()
    }

    pub fn to_json_string(&self) -> String {
        let file = HamiltonianFile::from(self);
        serde_json::to_string_pretty(&file).expect("Hamiltonian file serialization is infallible")
    }
}

/// `i^k`.
pub(crate) fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// On-disk Hamiltonian: `{"n_qubits": n, "terms": [{"pauli": "...", "coeff": c}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianFile {
    pub n_qubits: usize,
    pub terms: Vec<TermEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub pauli: String,
    pub coeff: f64,
}

impl HamiltonianFile {
    /// Parses and canonicalizes.
    pub fn into_hamiltonian(self) -> Result<Hamiltonian, PauliError> {
        let terms = self
            .terms
            .into_iter()
            .map(|e| {
                PauliString::parse(&e.pauli).map(|pauli| Term {
                    coeff: e.coeff,
                    pauli,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Hamiltonian::new(self.n_qubits, terms)?.canonicalize())
    }
}

impl From<&Hamiltonian> for HamiltonianFile {
    fn from(h: &Hamiltonian) -> Self {
        Self {
            n_qubits: h.n_qubits,
            terms: h
                .terms
                .iter()
                .map(|t| TermEntry {
                    pauli: t.pauli.to_string(),
                    coeff: t.coeff,
                })
                .collect(),
        }
    }
}

/// Sum of absolute coefficient differences.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64, PauliError> {
    if a.len() != b.len() {
        return Err(PauliError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// Tasks padded onto the union of their Pauli strings.
///
/// Row `i` holds task `i`'s coefficient for every superset term, with exact
/// zeros for absent terms. Zeros are never dropped here so that every row
/// shares the same column indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedTaskSet {
    n_qubits: usize,
    superset: Vec<PauliString>,
    rows: Vec<Vec<f64>>,
    task_ids: Vec<String>,
}

impl PaddedTaskSet {
    /// Pads `tasks`, naming them `task_0`, `task_1`, ...
    pub fn build(tasks: &[Hamiltonian]) -> Result<Self, PauliError> {
        let ids = (0..tasks.len()).map(|i| format!("task_{i}")).collect();
        Self::build_with_ids(tasks, ids)
    }

    pub fn build_with_ids(
        tasks: &[Hamiltonian],
        task_ids: Vec<String>,
    ) -> Result<Self, PauliError> {
        let first = tasks.first().ok_or(PauliError::EmptyTaskList)?;
        let n_qubits = first.n_qubits();
        if task_ids.len() != tasks.len() {
            return Err(PauliError::LengthMismatch {
                left: tasks.len(),
                right: task_ids.len(),
            });
        }
        let canonical: Vec<Hamiltonian> = tasks
            .iter()
            .map(|h| {
                if h.n_qubits() != n_qubits {
                    Err(PauliError::QubitCountMismatch {
                        expected: n_qubits,
                        found: h.n_qubits(),
                    })
                } else {
                    Ok(h.canonicalize())
                }
            })
            .collect::<Result<_, _>>()?;

        let mut index: BTreeMap<PauliString, usize> = BTreeMap::new();
        for h in &canonical {
            for t in h.terms() {
                index.entry(t.pauli.clone()).or_insert(0);
            }
        }
        for (k, slot) in index.values_mut().enumerate() {
            *slot = k;
        }
        let superset: Vec<PauliString> = index.keys().cloned().collect();
        let rows = canonical
            .iter()
            .map(|h| {
                let mut row = vec![0.0; superset.len()];
                for t in h.terms() {
                    row[index[&t.pauli]] = t.coeff;
                }
                row
            })
            .collect();
        Ok(Self {
            n_qubits,
            superset,
            rows,
            task_ids,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_tasks(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.superset.len()
    }

    pub fn superset(&self) -> &[PauliString] {
        &self.superset
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, task: usize) -> &[f64] {
        &self.rows[task]
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    /// Task `i` rebuilt from its padded row (zeros included).
    pub fn reconstruct(&self, task: usize) -> Hamiltonian {
        Self::assemble(self.n_qubits, &self.superset, &self.rows[task])
    }

    /// Per-column mean over `members`.
    pub fn mixed(&self, members: &[usize]) -> Result<MixedHamiltonian, PauliError> {
        if members.is_empty() {
            return Err(PauliError::EmptyMemberSet);
        }
        let mut sums = vec![0.0; self.superset.len()];
        for &m in members {
            let row = self.rows.get(m).ok_or(PauliError::MemberOutOfRange(m))?;
            for (s, c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        let n = members.len() as f64;
        let coeffs = sums.into_iter().map(|s| s / n).collect();
        Ok(MixedHamiltonian {
            coeffs,
            member_count: members.len(),
        })
    }

    /// Hamiltonian over this superset with the given coefficient vector.
    pub fn hamiltonian_from(&self, coeffs: &[f64]) -> Result<Hamiltonian, PauliError> {
        if coeffs.len() != self.superset.len() {
            return Err(PauliError::LengthMismatch {
                left: coeffs.len(),
                right: self.superset.len(),
            });
        }
        Ok(Self::assemble(self.n_qubits, &self.superset, coeffs))
    }

    fn assemble(n_qubits: usize, superset: &[PauliString], coeffs: &[f64]) -> Hamiltonian {
        let terms = superset
            .iter()
            .zip(coeffs)
            .map(|(p, &c)| Term {
                coeff: c,
                pauli: p.clone(),
            })
            .collect();
        Hamiltonian { n_qubits, terms }
    }
}

/// Mean of a cluster's padded member rows, indexed like the owning superset.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedHamiltonian {
    pub coeffs: Vec<f64>,
    pub member_count: usize,
}
