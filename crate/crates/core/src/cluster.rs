//! Task similarity and spectral bipartitioning.
//!
//! Distances are l1 norms between padded coefficient rows. They are turned
//! into an RBF similarity whose bandwidth is the median pairwise distance, and
//! a cluster is cut in two by k-means (k = 2) on the row-normalized bottom
//! eigenvectors of the symmetric normalized Laplacian.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{l1_distance, PaddedTaskSet};

/// Largest matrix handed to [`jacobi_eigensolve`].
pub const JACOBI_MAX_DIM: usize = 64;
const SIGMA_FLOOR: f64 = 1e-15;
const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("need at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("member index {0} out of range")]
    MemberOutOfRange(usize),
    #[error("all members are identical; cluster cannot be split")]
    UnsplittableCluster,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix dimension {0} exceeds {JACOBI_MAX_DIM}")]
    TooLarge(usize),
}

/// Pairwise l1 distances between the padded rows of `members`, in the given
/// order.
pub fn distance_matrix(p: &PaddedTaskSet, members: &[usize]) -> Result<DMatrix<f64>, ClusterError> {
    if members.len() < 2 {
        return Err(ClusterError::TooFewMembers(members.len()));
    }
    if let Some(&bad) = members.iter().find(|&&m| m >= p.n_tasks()) {
        return Err(ClusterError::MemberOutOfRange(bad));
    }
    let n = members.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v =
                l1_distance(p.row(members[i]), p.row(members[j])).expect("rows share the superset");
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub entries: DMatrix<f64>,
    pub sigma: f64,
    /// Every pairwise distance is zero; no bipartition is meaningful.
    pub unsplittable: bool,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }
}

/// Median of the strictly upper triangle; even counts average the two middle
/// values.
fn median_upper(d: &DMatrix<f64>, skip_zeros: bool) -> Option<f64> {
    let n = d.nrows();
    let mut v: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)])
        .filter(|&x| !skip_zeros || x > SIGMA_FLOOR)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    Some(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

/// `S_ij = exp(-D_ij^2 / (2 sigma^2))` with `sigma` the median pairwise
/// distance. If more than half the pairs coincide the median is zero even
/// though some members differ; the median of the nonzero distances is used
/// then. All-zero distances yield the all-ones matrix flagged unsplittable.
pub fn rbf_kernel(d: &DMatrix<f64>) -> SimilarityMatrix {
    let n = d.nrows();
    let sigma = match median_upper(d, false) {
        Some(s) if s >= SIGMA_FLOOR => Some(s),
        _ => median_upper(d, true),
    };
    let Some(sigma) = sigma else {
        return SimilarityMatrix {
            entries: DMatrix::from_element(n, n, 1.0),
            sigma: 0.0,
            unsplittable: true,
        };
    };
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (-d[(i, j)].powi(2) / (2.0 * sigma * sigma))
                .exp()
                .max(f64::MIN_POSITIVE)
        }
    });
    SimilarityMatrix {
        entries,
        sigma,
        unsplittable: false,
    }
}

/// Two disjoint, nonempty, covering index groups; `group_a` holds index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub group_a: Vec<usize>,
    pub group_b: Vec<usize>,
}

impl Bipartition {
    fn from_labels(labels: &[bool]) -> Self {
        let flip = labels[0];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            if l == flip {
                a.push(i);
            } else {
                b.push(i);
            }
        }
        Self {
            group_a: a,
            group_b: b,
        }
    }
}

/// Symmetric normalized Laplacian `I - D^{-1/2} S D^{-1/2}`.
pub fn normalized_laplacian(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / s.row(i).sum().sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base - inv_sqrt[i] * s[(i, j)] * inv_sqrt[j]
    })
}

pub fn spectral_bipartition(s: &SimilarityMatrix) -> Result<Bipartition, ClusterError> {
    let n = s.len();
    if n < 2 {
        return Err(ClusterError::TooFewMembers(n));
    }
    if s.unsplittable {
        return Err(ClusterError::UnsplittableCluster);
    }
    if n == 2 {
        return Ok(Bipartition {
            group_a: vec![0],
            group_b: vec![1],
        });
    }
    let lap = normalized_laplacian(&s.entries);
    let (_, vectors) = jacobi_eigensolve(&lap)?;
    let mut points: Vec<[f64; 2]> = (0..n).map(|i| [vectors[(i, 0)], vectors[(i, 1)]]).collect();
    for p in &mut points {
        let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if len > 0.0 {
            p[0] /= len;
            p[1] /= len;
        }
    }
    Ok(Bipartition::from_labels(&two_means(&points)))
}

fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means with k = 2 seeded by the farthest pair of points. If a cluster
/// empties out, the point farthest from the overall centroid is split off.
fn two_means(points: &[[f64; 2]]) -> Vec<bool> {
    let n = points.len();
    let mut seeds = (0, 1);
    let mut best = -1.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist2(&points[i], &points[j]);
            if d > best {
                best = d;
                seeds = (i, j);
            }
        }
    }
    let mut centers = [points[seeds.0], points[seeds.1]];
    let mut labels = vec![false; n];
    for it in 0..KMEANS_MAX_ITERATIONS {
        let next: Vec<bool> = points
            .iter()
            .map(|p| dist2(p, &centers[1]) < dist2(p, &centers[0]))
            .collect();
        if it > 0 && next == labels {
            break;
        }
        labels = next;
        for (k, c) in centers.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == (k == 1))
                .map(|(p, _)| p)
                .collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *c = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
            }
        }
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        let mean = [
            points.iter().map(|p| p[0]).sum::<f64>() / n as f64,
            points.iter().map(|p| p[1]).sum::<f64>() / n as f64,
        ];
        let far = (0..n)
            .max_by(|&a, &b| {
                dist2(&points[a], &mean)
                    .total_cmp(&dist2(&points[b], &mean))
                    .then(b.cmp(&a))
            })
            .expect("n >= 2");
        labels = (0..n).map(|i| i == far).collect();
    }
    labels
}

/// Cyclic Jacobi eigensolver for small symmetric matrices. Eigenvalues come
/// back ascending with eigenvectors as the matching columns.
pub fn jacobi_eigensolve(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), ClusterError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(ClusterError::NotSymmetric);
    }
    if n > JACOBI_MAX_DIM {
        return Err(ClusterError::TooLarge(n));
    }
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(ClusterError::NotSymmetric);
            }
        }
    }
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let off = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off(&a) < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}
