//! Benchmark task families and exact references.
//!
//! Spin models use the identity spin-to-qubit mapping and open chains. MaxCut
//! tasks are handed to the engine as `-H_C` so that every task is minimized.

mod graph;
mod ground;

pub use graph::{edge_weight_variance, synthetic_grid, Edge, WeightedGraph};
pub use ground::{
    dense_ground_energy, exact_ground_energy, lanczos_ground_energy, max_cut_brute_force,
    LanczosOptions, DENSE_ROUTE_MAX_QUBITS, ITERATIVE_QUBIT_CAP,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Hamiltonian, Pauli, PauliError, PauliString, Term};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("load scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("graph structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("{n} qubits exceeds the cap of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("Lanczos did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// `H = -J sum Z_i Z_{i+1} - h sum X_i`, one task per field value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfimSpec {
    pub sites: usize,
    pub coupling: f64,
    pub fields: Vec<f64>,
}

/// `H = J sum (X_i X_{i+1} + Y_i Y_{i+1} + D Z_i Z_{i+1})`, one task per anisotropy `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzSpec {
    pub sites: usize,
    pub coupling: f64,
    pub anisotropies: Vec<f64>,
}

fn check_chain(sites: usize, coupling: f64, values: &[f64], what: &str) -> Result<(), BenchError> {
    if sites < 2 {
        return Err(BenchError::InvalidSpec(format!(
            "chain needs at least 2 sites, got {sites}"
        )));
    }
    if values.is_empty() {
        return Err(BenchError::InvalidSpec(format!("no {what} values")));
    }
    if !coupling.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(BenchError::InvalidSpec("non-finite parameter".into()));
    }
    Ok(())
}

fn bond(n: usize, i: usize, p: Pauli) -> PauliString {
    PauliString::from_sparse(n, &[(i, p), (i + 1, p)])
}

pub fn gen_tfim(spec: &TfimSpec) -> Result<Vec<Hamiltonian>, BenchError> {
    check_chain(spec.sites, spec.coupling, &spec.fields, "field")?;
    let n = spec.sites;
    spec.fields
        .iter()
        .map(|&h| {
            let mut terms: Vec<Term> = (0..n - 1)
                .map(|i| Term {
                    coeff: -spec.coupling,
                    pauli: bond(n, i, Pauli::Z),
                })
                .collect();
            terms.extend((0..n).map(|i| Term {
                coeff: -h,
                pauli: PauliString::from_sparse(n, &[(i, Pauli::X)]),
            }));
            Ok(Hamiltonian::new(n, terms)?.canonicalize())
        })
        .collect()
}

pub fn gen_xxz(spec: &XxzSpec) -> Result<Vec<Hamiltonian>, BenchError> {
    check_chain(spec.sites, spec.coupling, &spec.anisotropies, "anisotropy")?;
    let n = spec.sites;
    let j = spec.coupling;
    spec.anisotropies
        .iter()
        .map(|&d| {
            let mut terms = Vec::with_capacity(3 * (n - 1));
            for i in 0..n - 1 {
                terms.push(Term {
                    coeff: j,
                    pauli: bond(n, i, Pauli::X),
                });
                terms.push(Term {
                    coeff: j,
                    pauli: bond(n, i, Pauli::Y),
                });
                terms.push(Term {
                    coeff: j * d,
                    pauli: bond(n, i, Pauli::Z),
                });
            }
            Ok(Hamiltonian::new(n, terms)?.canonicalize())
        })
        .collect()
}

/// Cost Hamiltonian `H_C = sum 1/2 w (I - Z_u Z_v)`, the identity part kept as
/// one identity-string term.
pub fn gen_maxcut(g: &WeightedGraph) -> Result<Hamiltonian, BenchError> {
    let n = g.n_nodes;
    let mut terms = Vec::with_capacity(g.edges.len() + 1);
    if !g.edges.is_empty() {
        terms.push(Term {
            coeff: 0.5 * g.total_weight(),
            pauli: PauliString::identity(n),
        });
    }
    for e in &g.edges {
        terms.push(Term {
            coeff: -0.5 * e.w,
            pauli: PauliString::from_sparse(n, &[(e.u, Pauli::Z), (e.v, Pauli::Z)]),
        });
    }
    Ok(Hamiltonian::new(n, terms)?.canonicalize())
}

/// `-H_C`: minimizing it maximizes the cut.
pub fn maxcut_task(g: &WeightedGraph) -> Result<Hamiltonian, BenchError> {
    Ok(gen_maxcut(g)?.scaled(-1.0))
}

/// `start:stop:count` with inclusive endpoints; `count == 1` yields `[start]`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::InvalidSpec(format!("range {text:?} is not start:stop:count"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 1 {
        return parts[0]
            .trim()
            .parse::<f64>()
            .map(|v| vec![v])
            .map_err(|_| bad());
    }
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{l1_distance, PaddedTaskSet};
    use approx::assert_abs_diff_eq;

    fn tfim(sites: usize, fields: &[f64]) -> Vec<Hamiltonian> {
        gen_tfim(&TfimSpec {
            sites,
            coupling: 1.0,
            fields: fields.to_vec(),
        })
        .unwrap()
    }

    #[test]
    fn tfim_classical_limits() {
        let h = &tfim(2, &[0.0])[0];
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].pauli.to_string(), "ZZ");
        assert_eq!(h.terms()[0].coeff, -1.0);
        assert_abs_diff_eq!(exact_ground_energy(h).unwrap(), -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            exact_ground_energy(&tfim(3, &[0.0])[0]).unwrap(),
            -2.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn tfim_two_site_transverse() {
        // In the basis {(|00>+|11>)/sqrt2, (|01>+|10>)/sqrt2} the h = 1 chain
        // is [[-1, -2], [-2, 1]], with lowest eigenvalue -sqrt(5); the
        // antisymmetric states sit at -1 and +1.
        let h = &tfim(2, &[1.0])[0];
        assert_abs_diff_eq!(
            exact_ground_energy(h).unwrap(),
            -(5f64.sqrt()),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            dense_ground_energy(h).unwrap(),
            -(5f64.sqrt()),
            epsilon = 1e-10
        );
    }

    #[test]
    fn tfim_structure() {
        let fam = tfim(4, &[0.2, 0.3, 0.5]);
        assert_eq!(fam.len(), 3);
        assert_eq!(fam[0].len(), 3 + 4);
        let p = PaddedTaskSet::build(&fam).unwrap();
        assert_abs_diff_eq!(
            l1_distance(p.row(0), p.row(1)).unwrap(),
            4.0 * 0.1,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            l1_distance(p.row(0), p.row(2)).unwrap(),
            4.0 * 0.3,
            epsilon = 1e-12
        );
        assert!(gen_tfim(&TfimSpec {
            sites: 1,
            coupling: 1.0,
            fields: vec![0.1]
        })
        .is_err());
        assert!(gen_tfim(&TfimSpec {
            sites: 3,
            coupling: 1.0,
            fields: vec![]
        })
        .is_err());
    }

    #[test]
    fn xxz_counts() {
        let spec = |d: f64| XxzSpec {
            sites: 5,
            coupling: 1.0,
            anisotropies: vec![d],
        };
        assert_eq!(gen_xxz(&spec(0.5)).unwrap()[0].len(), 3 * 4);
        let free = &gen_xxz(&spec(0.0)).unwrap()[0];
        assert_eq!(free.len(), 2 * 4);
        assert!(free
            .terms()
            .iter()
            .all(|t| !t.pauli.ops().contains(&Pauli::Z)));
    }

    #[test]
    fn maxcut_hamiltonian() {
        let tri = WeightedGraph::new(
            3,
            vec![
                Edge { u: 0, v: 1, w: 1.0 },
                Edge { u: 1, v: 2, w: 1.0 },
                Edge { u: 0, v: 2, w: 1.0 },
            ],
        )
        .unwrap();
        let task = maxcut_task(&tri).unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&task).unwrap(), -2.0, epsilon = 1e-10);
        assert_eq!(max_cut_brute_force(&tri).unwrap().0, 2.0);

        let edge = WeightedGraph::new(2, vec![Edge { u: 0, v: 1, w: 1.7 }]).unwrap();
        assert_abs_diff_eq!(
            exact_ground_energy(&maxcut_task(&edge).unwrap()).unwrap(),
            -1.7,
            epsilon = 1e-10
        );

        let empty = WeightedGraph::new(4, vec![]).unwrap();
        assert!(gen_maxcut(&empty).unwrap().is_empty());
    }

    #[test]
    fn scaled_family_shares_structure() {
        let g = synthetic_grid(6).unwrap();
        let fam: Vec<_> = [0.9, 1.0, 1.1]
            .iter()
            .map(|&s| maxcut_task(&g.scaled(s).unwrap()).unwrap())
            .collect();
        let p = PaddedTaskSet::build(&fam).unwrap();
        assert_eq!(p.n_terms(), fam[0].len());
        for h in &fam {
            assert_eq!(h.len(), fam[0].len());
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(
            parse_range("0.2:0.4:3").unwrap(),
            vec![0.2, 0.30000000000000004, 0.4]
        );
        assert_eq!(parse_range("1:1:1").unwrap(), vec![1.0]);
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        let v = parse_range("0.2:0.4:10").unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[9], 0.4);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("a:1:2").is_err());
    }
}
