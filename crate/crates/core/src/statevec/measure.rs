//! Exact and shot-sampled Pauli expectation values.

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{StateError, StateVector};
use crate::pauli::{i_pow, PauliString};

/// One term's measured expectation.
///
/// Sampled estimates lie on the lattice `2k/S - 1` for `k` successes out of
/// `S` shots. Identity terms carry estimate `1` and zero shots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub term: usize,
    pub estimate: f64,
    pub shots: u64,
}

/// `<psi|P|psi>`.
pub fn exact_term_expectation(state: &StateVector, pauli: &PauliString) -> Result<f64, StateError> {
    if pauli.n_qubits() != state.n_qubits() {
        return Err(StateError::LengthMismatch {
            left: state.n_qubits(),
            right: pauli.n_qubits(),
        });
    }
    let amps = state.amplitudes();
    let xm = pauli.x_mask();
    let zm = pauli.z_mask();
    if xm == 0 {
        let v: f64 = amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if (i & zm).count_ones() % 2 == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum();
        return Ok(v);
    }
    // P|x> = i^y (-1)^{|x & z|} |x ^ xm>
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let term = amps[i ^ xm].conj() * a;
        if (i & zm).count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok((i_pow(pauli.y_count()) * acc).re)
}

/// Exact expectation of every superset term.
pub fn term_expectations(
    state: &StateVector,
    superset: &[PauliString],
) -> Result<Vec<f64>, StateError> {
    superset
        .iter()
        .map(|p| {
            if p.is_identity() {
                Ok(1.0)
            } else {
                exact_term_expectation(state, p)
            }
        })
        .collect()
}

/// `sum_k coeffs[k] <psi|P_k|psi>`; identity strings contribute their
/// coefficient without simulation.
pub fn exact_energy(
    state: &StateVector,
    superset: &[PauliString],
    coeffs: &[f64],
) -> Result<f64, StateError> {
    if coeffs.len() != superset.len() {
        return Err(StateError::LengthMismatch {
            left: coeffs.len(),
            right: superset.len(),
        });
    }
    let mut e = 0.0;
    for (p, &c) in superset.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        e += if p.is_identity() {
            c
        } else {
            c * exact_term_expectation(state, p)?
        };
    }
    Ok(e)
}

/// Samples every term flagged in `measure`, each independently in its own
/// basis with `shots` shots. Identity terms are always reported (estimate 1,
/// no shots); unflagged non-identity terms are skipped.
pub fn sample_terms(
    state: &StateVector,
    superset: &[PauliString],
    measure: &[bool],
    shots: u64,
    rng: &mut dyn RngCore,
) -> Result<Vec<TermEstimate>, StateError> {
    if shots == 0 {
        return Err(StateError::NonPositiveShots);
    }
    if measure.len() != superset.len() {
        return Err(StateError::LengthMismatch {
            left: measure.len(),
            right: superset.len(),
        });
    }
    let mut out = Vec::with_capacity(superset.len());
    for (term, (p, &m)) in superset.iter().zip(measure).enumerate() {
        if p.is_identity() {
            out.push(TermEstimate {
                term,
                estimate: 1.0,
                shots: 0,
            });
        } else if m {
            let truth = exact_term_expectation(state, p)?;
            out.push(TermEstimate {
                term,
                estimate: sample_one(truth, shots, rng),
                shots,
            });
        }
    }
    Ok(out)
}

/// Shot-noise energy estimate: terms with a zero coefficient are skipped and
/// charged nothing.
pub fn sampled_energy(
    state: &StateVector,
    superset: &[PauliString],
    coeffs: &[f64],
    shots: u64,
    rng: &mut dyn RngCore,
) -> Result<(f64, Vec<TermEstimate>), StateError> {
    if coeffs.len() != superset.len() {
        return Err(StateError::LengthMismatch {
            left: coeffs.len(),
            right: superset.len(),
        });
    }
    let measure: Vec<bool> = coeffs.iter().map(|&c| c != 0.0).collect();
    let estimates = sample_terms(state, superset, &measure, shots, rng)?;
    let energy = estimates.iter().map(|t| coeffs[t.term] * t.estimate).sum();
    Ok((energy, estimates))
}

fn sample_one(truth: f64, shots: u64, rng: &mut dyn RngCore) -> f64 {
    let p = ((1.0 + truth) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p)
        .expect("probability clamped to [0, 1]")
        .sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}
