//! Dense symmetric linear algebra.
//!
//! Everything here works on small dense matrices (a few hundred rows at most).
//! Eigen-decompositions use cyclic Jacobi rotations, which are slow but
//! accurate to a few ulps for symmetric input.

use std::ops::Add;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default relative tolerance below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Largest admissible condition number of a principal block in a Schur complement.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense symmetric matrix. Symmetry is checked at construction and then
/// enforced exactly by averaging with the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(SymMatrix((&m + m.transpose()) * 0.5))
    }

    /// Builds from the entries `f(i, j)` for `i ≤ j`, mirrored below the diagonal.
    pub fn from_upper(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn zeros(k: usize) -> Self {
        SymMatrix(DMatrix::zeros(k, k))
    }

    pub fn identity(k: usize) -> Self {
        SymMatrix(DMatrix::identity(k, k))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix(DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.0[(idx[i], idx[j])]))
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        v.dot(&(&self.0 * &v))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (as columns).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Threshold below which an eigenvalue counts as zero.
    pub fn zero_threshold(&self, tol_rel: f64) -> f64 {
        tol_rel * self.max_abs_value().max(1.0)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn eigen_symmetric(m: &SymMatrix) -> Result<Eigen> {
    let k = m.dim();
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut a = m.0.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    let frob2: f64 = a.iter().map(|x| x * x).sum();

    for _sweep in 0..100 {
        let mut off2 = 0.0;
        for p in 0..k {
            for q in (p + 1)..k {
                off2 += a[(p, q)] * a[(p, q)];
            }
        }
        if off2 <= 1e-32 * frob2 || off2 == 0.0 {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Entries this small relative to the diagonal no longer matter.
                if apq.abs() < 1e-300 || apq.abs() < f64::EPSILON * f64::EPSILON * (app.abs() + aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..k {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..k {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..k {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(k, k, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn new(positive: usize, negative: usize, zero: usize) -> Self {
        Inertia {
            positive,
            negative,
            zero,
        }
    }

    /// An eigenvalue counts as zero iff `|λ| ≤ tol_rel · max(1, max|λ|)`.
    pub fn of_values(values: &[f64], tol_rel: f64) -> Self {
        let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let thr = tol_rel * scale;
        let mut inertia = Inertia::default();
        for &v in values {
            if v > thr {
                inertia.positive += 1;
            } else if v < -thr {
                inertia.negative += 1;
            } else {
                inertia.zero += 1;
            }
        }
        inertia
    }

    pub fn dim(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

impl Add for Inertia {
    type Output = Inertia;

    fn add(self, rhs: Inertia) -> Inertia {
        Inertia {
            positive: self.positive + rhs.positive,
            negative: self.negative + rhs.negative,
            zero: self.zero + rhs.zero,
        }
    }
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.positive, self.negative, self.zero)
    }
}

pub fn inertia(m: &SymMatrix, tol_rel: f64) -> Result<Inertia> {
    Ok(Inertia::of_values(&eigen_symmetric(m)?.values, tol_rel))
}

/// Moore–Penrose pseudoinverse `Σ λᵢ⁻¹ vᵢ vᵢᵀ` over the eigenvalues that are
/// nonzero under `tol_rel`.
pub fn pseudoinverse(m: &SymMatrix, tol_rel: f64) -> Result<SymMatrix> {
    let eig = eigen_symmetric(m)?;
    let thr = eig.zero_threshold(tol_rel);
    let k = m.dim();
    let mut out = DMatrix::zeros(k, k);
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam.abs() > thr {
            let v = eig.vector(i);
            out += (&v * v.transpose()) / lam;
        }
    }
    SymMatrix::new(out)
}

/// Indices `0..k` not in `removed`, ascending.
pub fn complement_indices(k: usize, removed: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; k];
    for &i in removed {
        mask[i] = true;
    }
    (0..k).filter(|&i| !mask[i]).collect()
}

/// Schur complement `M/N = M_cc − M_cN M_NN⁻¹ M_Nc` where `c` is the complement
/// of `N` in ascending order. The principal block is inverted through its
/// eigen-decomposition, which also yields its condition number.
pub fn schur_complement(m: &SymMatrix, removed: &[usize]) -> Result<SymMatrix> {
    let k = m.dim();
    for &i in removed {
        if i >= k {
            return Err(Error::IndexOutOfRange { index: i, n: k });
        }
    }
    let kept = complement_indices(k, removed);
    if removed.is_empty() {
        return Ok(m.clone());
    }
    let block = m.principal(removed);
    let eig = eigen_symmetric(&block)?;
    let max = eig.max_abs_value();
    let min = eig.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularPrincipalBlock(cond));
    }
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|v| 1.0 / v),
    ));
    let inv = &eig.vectors * inv_diag * eig.vectors.transpose();
    let m_cn = DMatrix::from_fn(kept.len(), removed.len(), |i, j| m.get(kept[i], removed[j]));
    let m_cc = m.principal(&kept).into_inner();
    let s = m_cc - &m_cn * inv * m_cn.transpose();
    Ok(SymMatrix((&s + s.transpose()) * 0.5))
}

/// Largest value of `xᵀAx / xᵀBx` over nonzero `x ⊥ ker B`, for symmetric `A`
/// and positive semi-definite `B`. Computed as the top eigenvalue of
/// `D^{-1/2} Uᵀ A U D^{-1/2}` where `B = U D Uᵀ` on its range.
pub fn max_generalized_rayleigh(a: &SymMatrix, b: &SymMatrix, tol_rel: f64) -> Result<f64> {
    let eig = eigen_symmetric(b)?;
    let thr = eig.zero_threshold(tol_rel);
    let range: Vec<usize> = (0..b.dim()).filter(|&i| eig.values[i] > thr).collect();
    if range.is_empty() {
        return Ok(f64::NAN);
    }
    let w = DMatrix::from_fn(b.dim(), range.len(), |r, c| {
        eig.vectors[(r, range[c])] / eig.values[range[c]].sqrt()
    });
    let reduced = w.transpose() * a.as_matrix() * &w;
    let reduced = SymMatrix((&reduced + reduced.transpose()) * 0.5);
    let top = eigen_symmetric(&reduced)?;
    Ok(*top.values.last().expect("nonempty range"))
}

/// Weighted graph Laplacian `L = d · diag(w) · dᵀ` together with its generating
/// graph and nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian {
    graph: Graph,
    weights: Vec<f64>,
    matrix: SymMatrix,
}

impl WeightedLaplacian {
    pub fn from_weights(graph: &Graph, weights: &[f64]) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.edge_count(),
                got: weights.len(),
            });
        }
        for (e, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { edge: e, weight: w });
            }
        }
        let n = graph.node_count();
        let mut m = DMatrix::zeros(n, n);
        for (&(a, b), &w) in graph.edges().iter().zip(weights) {
            m[(a, a)] += w;
            m[(b, b)] += w;
            m[(a, b)] -= w;
            m[(b, a)] -= w;
        }
        Ok(WeightedLaplacian {
            graph: graph.clone(),
            weights: weights.to_vec(),
            matrix: SymMatrix(m),
        })
    }

    /// Reads a Laplacian back from its off-diagonal entries. Entries with
    /// `|L_ij| ≤ tol_rel · max|L|` are treated as absent; clearly positive
    /// off-diagonals are rejected.
    pub fn from_matrix(m: &SymMatrix, tol_rel: f64) -> Result<Self> {
        let k = m.dim();
        let thr = tol_rel * m.max_abs().max(f64::MIN_POSITIVE);
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let v = m.get(i, j);
                if v > thr {
                    return Err(Error::NegativeWeight {
                        edge: pairs.len(),
                        weight: -v,
                    });
                }
                if v < -thr {
                    pairs.push((i, j));
                    weights.push(-v);
                }
            }
        }
        let graph = Graph::new(k, &pairs)?;
        WeightedLaplacian::from_weights(&graph, &weights)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Component label per node, counting only positive-weight edges.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.dim();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &(w, e) in self.graph.neighbors(v) {
                    if self.weights[e] > 0.0 && label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.component_labels().into_iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Kron reduction: Schur complement eliminating `removed`, read back as a
    /// Laplacian on the remaining nodes (ascending order).
    pub fn kron_reduce(&self, removed: &[usize]) -> Result<WeightedLaplacian> {
        let s = schur_complement(&self.matrix, removed)?;
        WeightedLaplacian::from_matrix(&s, 1e-12)
    }

    /// Pseudoinverse of `L`, assembled per connected component as
    /// `(L_c + 11ᵀ/k)⁻¹ − 11ᵀ/k`, which is exact on each component.
    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let labels = self.component_labels();
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut out = DMatrix::zeros(n, n);
        for c in 0..count {
            let nodes: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
            let k = nodes.len();
            if k == 1 {
                continue;
            }
            let kf = k as f64;
            let shifted = DMatrix::from_fn(k, k, |i, j| self.matrix.get(nodes[i], nodes[j]) + 1.0 / kf);
            let inv = shifted
                .clone()
                .cholesky()
                .map(|ch| ch.inverse())
                .or_else(|| shifted.try_inverse())
                .expect("grounded Laplacian of a connected component is invertible");
            for i in 0..k {
                for j in 0..k {
                    out[(nodes[i], nodes[j])] = inv[(i, j)] - 1.0 / kf;
                }
            }
        }
        out
    }

    /// `r_ij = (eᵢ − eⱼ)ᵀ L† (eᵢ − eⱼ)`; infinite across components.
    pub fn effective_resistance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let labels = self.component_labels();
        if labels[i] != labels[j] {
            return f64::INFINITY;
        }
        let p = self.pseudoinverse();
        p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)]
    }

    /// All pairwise effective resistances.
    pub fn resistance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let labels = self.component_labels();
        let p = self.pseudoinverse();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else if labels[i] != labels[j] {
                            f64::INFINITY
                        } else {
                            p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)]
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn laplacian_from_weights(g: &Graph, w: &[f64]) -> Result<WeightedLaplacian> {
    WeightedLaplacian::from_weights(g, w)
}

pub fn effective_resistance(l: &WeightedLaplacian, i: usize, j: usize) -> f64 {
    l.effective_resistance(i, j)
}
