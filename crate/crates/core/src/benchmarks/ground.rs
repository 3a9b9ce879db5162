//! Ground-state references: dense diagonalization and matrix-free Lanczos.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BenchError, WeightedGraph};
use crate::pauli::{i_pow, Hamiltonian, DENSE_QUBIT_CAP};

/// [`exact_ground_energy`] diagonalizes densely up to this size and switches
/// to Lanczos above it.
pub const DENSE_ROUTE_MAX_QUBITS: usize = 8;
pub const ITERATIVE_QUBIT_CAP: usize = 16;
const MAX_CUT_BRUTE_FORCE_CAP: usize = 24;

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Converged once the Ritz residual falls below this, relative to the
    /// Ritz value's magnitude (at least 1).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 400,
            seed: 0x1a2c_2005,
        }
    }
}

pub fn exact_ground_energy(h: &Hamiltonian) -> Result<f64, BenchError> {
    if h.n_qubits() <= DENSE_ROUTE_MAX_QUBITS {
        dense_ground_energy(h)
    } else {
        lanczos_ground_energy(h, &LanczosOptions::default())
    }
}

/// Smallest eigenvalue of the dense matrix.
pub fn dense_ground_energy(h: &Hamiltonian) -> Result<f64, BenchError> {
    if h.n_qubits() > DENSE_QUBIT_CAP {
        return Err(BenchError::TooManyQubits {
            n: h.n_qubits(),
            max: DENSE_QUBIT_CAP,
        });
    }
    let m = h.to_dense()?;
    Ok(m.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

struct PauliOp {
    flip: usize,
    signs: usize,
    weight: Complex64,
}

fn apply_sum(ops: &[PauliOp], v: &[Complex64], out: &mut [Complex64]) {
    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    for op in ops {
        for (x, a) in v.iter().enumerate() {
            let amp = if (x & op.signs).count_ones() % 2 == 0 {
                *a
            } else {
                -*a
            };
            out[x ^ op.flip] += op.weight * amp;
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization on the Pauli-sum action, never
/// forming the matrix.
pub fn lanczos_ground_energy(h: &Hamiltonian, opts: &LanczosOptions) -> Result<f64, BenchError> {
    let n = h.n_qubits();
    if n > ITERATIVE_QUBIT_CAP {
        return Err(BenchError::TooManyQubits {
            n,
            max: ITERATIVE_QUBIT_CAP,
        });
    }
    let dim = 1usize << n;
    let ops: Vec<PauliOp> = h
        .terms()
        .iter()
        .map(|t| PauliOp {
            flip: t.pauli.x_mask(),
            signs: t.pauli.z_mask(),
            weight: i_pow(t.pauli.y_count()) * t.coeff,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<Complex64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let limit = opts.max_iterations.min(dim);

    for it in 0..limit {
        apply_sum(&ops, &basis[it], &mut w);
        let alpha = dot(&basis[it], &w).re;
        alphas.push(alpha);
        // Two passes of Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);
        // The dense tridiagonal solve grows with the basis; check less often
        // once it is large.
        if it < 64 || it % 8 == 0 || it + 1 == limit {
            let (ritz, last) = lowest_ritz_pair(&alphas, &betas);
            // |H y - theta y| = beta |s_last| for the Ritz vector y.
            if beta * last.abs() < opts.tolerance * ritz.abs().max(1.0) || it + 1 == dim {
                return Ok(ritz);
            }
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    Err(BenchError::NonConvergence(limit))
}

/// Lowest eigenvalue of the tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off`, and the last component of its unit eigenvector.
fn lowest_ritz_pair(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let k = diag.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let lo = (0..k)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("k >= 1");
    (eig.eigenvalues[lo], eig.eigenvectors[(k - 1, lo)])
}

/// Maximum cut by enumerating all `2^n` assignments. Returns the value and
/// one maximizing assignment (bit `k` = side of node `k`).
pub fn max_cut_brute_force(g: &WeightedGraph) -> Result<(f64, usize), BenchError> {
    if g.n_nodes > MAX_CUT_BRUTE_FORCE_CAP {
        return Err(BenchError::TooManyQubits {
            n: g.n_nodes,
            max: MAX_CUT_BRUTE_FORCE_CAP,
        });
    }
    let mut best = (f64::NEG_INFINITY, 0usize);
    for x in 0..(1usize << g.n_nodes) {
        let c = g.cut_value(x);
        if c > best.0 {
            best = (c, x);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{gen_xxz, maxcut_task, synthetic_grid, XxzSpec};
    use crate::pauli::{PauliString, Term};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_qubit() {
        let h = Hamiltonian::from_pairs(&[("Z", 1.0)]).unwrap();
        assert_eq!(exact_ground_energy(&h).unwrap(), -1.0);
        assert_abs_diff_eq!(
            lanczos_ground_energy(&h, &LanczosOptions::default()).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn heisenberg_singlet() {
        let h = &gen_xxz(&XxzSpec {
            sites: 2,
            coupling: 1.0,
            anisotropies: vec![1.0],
        })
        .unwrap()[0];
        assert_abs_diff_eq!(dense_ground_energy(h).unwrap(), -3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            lanczos_ground_energy(h, &LanczosOptions::default()).unwrap(),
            -3.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn tridiagonal_ritz_pair() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3; the low vector is (1, -1)/sqrt2.
        let (v, last) = lowest_ritz_pair(&[2.0, 2.0], &[1.0]);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(last.abs(), 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(lowest_ritz_pair(&[-4.0], &[]).0, -4.0, epsilon = 1e-12);
    }

    #[test]
    fn routes_agree_on_random_six_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let letters = "IXYZ".as_bytes();
        for _ in 0..5 {
            let terms: Vec<Term> = (0..12)
                .map(|_| {
                    let s: String = (0..6)
                        .map(|_| letters[rng.random_range(0..4)] as char)
                        .collect();
                    Term {
                        coeff: rng.random_range(-1.0..1.0),
                        pauli: s.parse::<PauliString>().unwrap(),
                    }
                })
                .collect();
            let h = Hamiltonian::new(6, terms).unwrap().canonicalize();
            let d = dense_ground_energy(&h).unwrap();
            let l = lanczos_ground_energy(&h, &LanczosOptions::default()).unwrap();
            assert_abs_diff_eq!(d, l, epsilon = 1e-8);
        }
    }

    #[test]
    fn maxcut_ground_is_brute_force_cut() {
        for n in [4usize, 7, 9] {
            let g = synthetic_grid(n).unwrap();
            let (best, _) = max_cut_brute_force(&g).unwrap();
            let e = exact_ground_energy(&maxcut_task(&g).unwrap()).unwrap();
            assert_abs_diff_eq!(e, -best, epsilon = 1e-8);
        }
    }

    #[test]
    fn caps() {
        let h = Hamiltonian::zero(17);
        assert!(matches!(
            lanczos_ground_energy(&h, &LanczosOptions::default()),
            Err(BenchError::TooManyQubits { .. })
        ));
        assert!(matches!(
            dense_ground_energy(&Hamiltonian::zero(13)),
            Err(BenchError::TooManyQubits { .. })
        ));
    }
}
