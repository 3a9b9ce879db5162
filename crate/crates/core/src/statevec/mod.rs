//! Dense statevector simulation.
//!
//! Amplitude index bit `k` is qubit `k`. Gates are applied in place by
//! bit-twiddling kernels; nothing here allocates a `2^n x 2^n` matrix.

mod ansatz;
mod measure;

pub use ansatz::{Ansatz, HeaSpec, MaQaoaSpec};
pub use measure::{
    exact_energy, exact_term_expectation, sample_terms, sampled_energy, term_expectations,
    TermEstimate,
};

use num_complex::Complex64;
use thiserror::Error;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(usize),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { qubit: usize, n_qubits: usize },
    #[error("two-qubit gate on the same qubit {0}")]
    DuplicateQubit(usize),
    #[error("expected {expected} parameters, got {found}")]
    ParamLengthMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shots per term must be at least 1")]
    NonPositiveShots,
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cx {
        control: usize,
        target: usize,
    },
    /// `exp(-i theta/2 Z_a Z_b)`.
    Rzz(usize, usize, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self, StateError> {
        check_qubits(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// `|+>^n`.
    pub fn plus(n_qubits: usize) -> Result<Self, StateError> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n_qubits,
            amps: vec![a; dim],
        })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: Gate) -> Result<(), StateError> {
        match gate {
            Gate::Rx(q, theta) => {
                self.check(q)?;
                let (s, c) = (theta / 2.0).sin_cos();
                let d = Complex64::new(c, 0.0);
                let o = Complex64::new(0.0, -s);
                self.single_qubit(q, [[d, o], [o, d]]);
            }
            Gate::Ry(q, theta) => {
                self.check(q)?;
                let (s, c) = (theta / 2.0).sin_cos();
                let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                self.single_qubit(q, [[c, -s], [s, c]]);
            }
            Gate::Rz(q, theta) => {
                self.check(q)?;
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = lo.conj();
                let bit = 1usize << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & bit == 0 { lo } else { hi };
                }
            }
            Gate::Cx { control, target } => {
                self.check_pair(control, target)?;
                let (cb, tb) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            Gate::Rzz(a, b, theta) => {
                self.check_pair(a, b)?;
                let even = Complex64::from_polar(1.0, -theta / 2.0);
                let odd = even.conj();
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if (i & mask).count_ones() % 2 == 0 {
                        even
                    } else {
                        odd
                    };
                }
            }
        }
        Ok(())
    }

    fn single_qubit(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for block in (0..self.amps.len()).step_by(stride << 1) {
            for i in block..block + stride {
                let (a0, a1) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn check(&self, q: usize) -> Result<(), StateError> {
        if q >= self.n_qubits {
            return Err(StateError::QubitIndexOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<(), StateError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(StateError::DuplicateQubit(a));
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<(), StateError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(StateError::QubitCountOutOfRange(n));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn z_expect(s: &StateVector, q: usize) -> f64 {
        let n = s.n_qubits();
        let p = PauliString::from_sparse(n, &[(q, crate::pauli::Pauli::Z)]);
        exact_term_expectation(s, &p).unwrap()
    }

    #[test]
    fn initial_states() {
        let z = StateVector::zero(2).unwrap();
        assert_eq!(z.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(z.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        let p = StateVector::plus(1).unwrap();
        assert_abs_diff_eq!(p.amplitudes()[0].re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.amplitudes()[1].re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            StateVector::plus(5).unwrap().norm_sqr(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            StateVector::zero(0),
            Err(StateError::QubitCountOutOfRange(0))
        );
        assert_eq!(
            StateVector::plus(25),
            Err(StateError::QubitCountOutOfRange(25))
        );
    }

    #[test]
    fn simple_gates() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(Gate::Ry(0, PI)).unwrap();
        assert_abs_diff_eq!(z_expect(&s, 0), -1.0, epsilon = 1e-12);

        // |10> means qubit 1 set: index 0b10.
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0b10] = Complex64::new(1.0, 0.0);
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        s.apply(Gate::Cx {
            control: 1,
            target: 0,
        })
        .unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b11].re, 1.0, epsilon = 1e-15);

        let mut s = StateVector::zero(1).unwrap();
        s.apply(Gate::Rz(0, 1.234)).unwrap();
        assert_abs_diff_eq!(z_expect(&s, 0).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::zero(2).unwrap();
        assert_eq!(
            s.apply(Gate::Rx(2, 0.1)),
            Err(StateError::QubitIndexOutOfRange {
                qubit: 2,
                n_qubits: 2
            })
        );
        assert_eq!(
            s.apply(Gate::Cx {
                control: 1,
                target: 1
            }),
            Err(StateError::DuplicateQubit(1))
        );
        assert_eq!(
            s.apply(Gate::Rzz(0, 0, 0.3)),
            Err(StateError::DuplicateQubit(0))
        );
    }

    // Oracle: the gate as an explicit 2^n x 2^n unitary built from Kronecker
    // products, independent of the in-place kernels.
    fn dense_gate(n: usize, gate: Gate) -> DMatrix<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let one_qubit = |q: usize, m: [[Complex64; 2]; 2]| {
            let mut full = DMatrix::<Complex64>::identity(1, 1);
            for k in (0..n).rev() {
                let f = if k == q {
                    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
                } else {
                    DMatrix::identity(2, 2)
                };
                full = full.kronecker(&f);
            }
            full
        };
        match gate {
            Gate::Rx(q, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                one_qubit(q, [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            Gate::Ry(q, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                one_qubit(q, [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            Gate::Rz(q, t) => one_qubit(
                q,
                [
                    [Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
                    [c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
                ],
            ),
            Gate::Cx { control, target } => {
                let dim = 1 << n;
                let mut m = DMatrix::<Complex64>::zeros(dim, dim);
                for col in 0..dim {
                    let row = if col >> control & 1 == 1 {
                        col ^ (1 << target)
                    } else {
                        col
                    };
                    m[(row, col)] = c(1.0, 0.0);
                }
                m
            }
            Gate::Rzz(a, b, t) => {
                let dim = 1 << n;
                let mut m = DMatrix::<Complex64>::zeros(dim, dim);
                for i in 0..dim {
                    let z = (1 - 2 * ((i >> a) & 1) as i32) * (1 - 2 * ((i >> b) & 1) as i32);
                    m[(i, i)] = Complex64::from_polar(1.0, -t / 2.0 * z as f64);
                }
                m
            }
        }
    }

    fn random_state(n: usize, raw: &[f64]) -> StateVector {
        let dim = 1 << n;
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(raw[2 * i], raw[2 * i + 1]))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let q = 0..n;
        let angle = -7.0..7.0f64;
        prop_oneof![
            (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::Rx(q, t)),
            (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::Ry(q, t)),
            (q.clone(), angle.clone()).prop_map(|(q, t)| Gate::Rz(q, t)),
            (q.clone(), 1..n).prop_map(move |(a, d)| Gate::Cx {
                control: a,
                target: (a + d) % n
            }),
            (q, 1..n, angle).prop_map(move |(a, d, t)| Gate::Rzz(a, (a + d) % n, t)),
        ]
    }

    proptest! {
        #[test]
        fn kernels_match_dense_unitaries(
            n in 2usize..=3,
            raw in prop::collection::vec(-1.0..1.0f64, 16),
            gates in prop::collection::vec(arb_gate(3), 1..6),
        ) {
            prop_assume!(raw.iter().take(2 << n).any(|x| x.abs() > 1e-3));
            let mut s = random_state(n, &raw);
            let mut v = DVector::from_vec(s.amplitudes().to_vec());
            for g in gates {
                // Retarget qubits that do not exist on the smaller register.
                let g = match g {
                    Gate::Rx(q, t) => Gate::Rx(q % n, t),
                    Gate::Ry(q, t) => Gate::Ry(q % n, t),
                    Gate::Rz(q, t) => Gate::Rz(q % n, t),
                    Gate::Cx { control, .. } => Gate::Cx { control: control % n, target: (control + 1) % n },
                    Gate::Rzz(a, _, t) => Gate::Rzz(a % n, (a + 1) % n, t),
                };
                s.apply(g).unwrap();
                v = dense_gate(n, g) * v;
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
            for (a, b) in s.amplitudes().iter().zip(v.iter()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
