//! The system `ẋ = d · f(dᵀx)` and its derived objects.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingAssignment, CouplingFunction};
use crate::error::{Error, Result};
use crate::graph::{Graph, SignedIncidence};
use crate::linalg::{SymMatrix, WeightedLaplacian};

/// `|f'| ≤` this puts an edge in the zero list of a [`SignedSplit`].
pub const ZERO_DERIVATIVE: f64 = 1e-12;

/// Integration stops once `‖x‖` exceeds this.
pub const BLOWUP_NORM: f64 = 1e8;

pub const DEFAULT_DT: f64 = 1e-3;

/// A coupled network: graph, incidence and per-edge couplings.
#[derive(Debug, Clone)]
pub struct System {
    graph: Graph,
    incidence: SignedIncidence,
    coupling: CouplingAssignment,
    cycle_basis: Vec<Vec<f64>>,
    /// Pseudoinverse of the unweighted Laplacian, used to recover nodes from edges.
    laplacian_pinv: DMatrix<f64>,
}

impl System {
    pub fn new(graph: Graph, coupling: impl Into<CouplingAssignment>) -> Result<Self> {
        let coupling = coupling.into();
        coupling.validate(graph.edge_count())?;
        graph.require_connected()?;
        let incidence = graph.incidence_matrix();
        let cycle_basis = graph.cycle_space_basis()?;
        let unit = WeightedLaplacian::from_weights(&graph, &vec![1.0; graph.edge_count()])?;
        Ok(System {
            laplacian_pinv: unit.pseudoinverse(),
            graph,
            incidence,
            coupling,
            cycle_basis,
        })
    }

    pub fn uniform(graph: Graph, f: CouplingFunction) -> Result<Self> {
        System::new(graph, CouplingAssignment::Uniform(f))
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn incidence(&self) -> &SignedIncidence {
        &self.incidence
    }

    pub fn coupling(&self) -> &CouplingAssignment {
        &self.coupling
    }

    pub fn coupling_for(&self, e: usize) -> &CouplingFunction {
        self.coupling.for_edge(e)
    }

    pub fn cycle_basis(&self) -> &[Vec<f64>] {
        &self.cycle_basis
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// The subsystem on a subset of edges, with nodes relabelled.
    pub fn restrict(&self, edges: &[usize]) -> Result<(System, Vec<usize>)> {
        let (g, nodes) = self.graph.edge_subgraph(edges);
        Ok((System::new(g, self.coupling.restrict(edges))?, nodes))
    }

    /// `y = dᵀx`: for edge `(j, k)`, `y = x_k − x_j`.
    pub fn edge_coordinates(&self, x: &[f64]) -> Vec<f64> {
        self.graph.edges().iter().map(|&(j, k)| x[k] - x[j]).collect()
    }

    /// `ẋᵢ = Σ_{j∼i} f_ij(xᵢ − xⱼ)`, summed edge by edge.
    pub fn vector_field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count()];
        for (e, &(j, k)) in self.graph.edges().iter().enumerate() {
            let v = self.coupling_for(e).eval(x[k] - x[j]);
            out[k] += v;
            out[j] -= v;
        }
        out
    }

    /// The same field as the matrix product `d · f(dᵀx)`.
    pub fn vector_field_matrix(&self, x: &[f64]) -> Vec<f64> {
        let y = self.incidence.transpose_mul(x);
        let fy: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(e, &v)| self.coupling_for(e).eval(v))
            .collect();
        self.incidence.mul(&fy)
    }

    /// Largest normalised inner product of `y` with a fundamental cycle.
    pub fn cut_space_residual(&self, y: &[f64]) -> f64 {
        self.cycle_basis
            .iter()
            .map(|v| {
                let dot: f64 = v.iter().zip(y).map(|(a, b)| a * b).sum();
                let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                dot.abs() / norm
            })
            .fold(0.0, f64::max)
    }

    /// `ẏ = dᵀ d f(y)` for `y` in the cut space.
    pub fn edge_vector_field(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: self.edge_count(),
                got: y.len(),
            });
        }
        let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let r = self.cut_space_residual(y);
        if r > 1e-8 * scale {
            return Err(Error::NotInCutSpace(r));
        }
        let fy: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(e, &v)| self.coupling_for(e).eval(v))
            .collect();
        Ok(self.incidence.transpose_mul(&self.incidence.mul(&fy)))
    }

    /// Mean-zero least-squares solution of `dᵀx = y`, i.e. `x = L† d y`.
    pub fn node_from_edges(&self, y: &[f64]) -> Vec<f64> {
        let dy = DVector::from_vec(self.incidence.mul(y));
        (&self.laplacian_pinv * dy).iter().copied().collect()
    }

    /// `f'_e(y_e)` for every edge at state `x`.
    pub fn edge_derivatives(&self, x: &[f64]) -> Vec<f64> {
        self.graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(j, k))| self.coupling_for(e).derivative(x[k] - x[j]))
            .collect()
    }

    /// `J = d · diag(f'(dᵀx)) · dᵀ`.
    pub fn jacobian(&self, x: &[f64]) -> SymMatrix {
        signed_laplacian(&self.graph, &self.edge_derivatives(x))
    }

    pub fn signed_split(&self, x: &[f64]) -> SignedSplit {
        SignedSplit::from_signed_weights(&self.graph, &self.edge_derivatives(x))
            .expect("derivatives have one entry per edge")
    }

    /// `V(x) = −Σ F_ij(xᵢ − xⱼ)`, so that the field is `−∇V`.
    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        let mut v = 0.0;
        for (e, &(j, k)) in self.graph.edges().iter().enumerate() {
            v -= self.coupling_for(e).antiderivative(x[k] - x[j])?;
        }
        Ok(v)
    }

    pub fn has_potential(&self) -> bool {
        (0..self.edge_count()).all(|e| self.coupling_for(e).has_antiderivative())
    }

    /// Classical RK4 with fixed step. Every step is recorded; the run stops
    /// early, flagged, if the state leaves the ball of radius [`BLOWUP_NORM`]
    /// or becomes non-finite.
    pub fn integrate(&self, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
        if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "integration needs dt > 0 and t_end > 0, got dt = {dt}, t_end = {t_end}"
            )));
        }
        if x0.len() != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                got: x0.len(),
            });
        }
        let steps = (t_end / dt).round().max(1.0) as usize;
        let n = self.node_count();
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        let mut x = x0.to_vec();
        times.push(0.0);
        states.push(x.clone());
        let mut tmp = vec![0.0; n];
        for step in 1..=steps {
            let k1 = self.vector_field(&x);
            axpy(&x, 0.5 * dt, &k1, &mut tmp);
            let k2 = self.vector_field(&tmp);
            axpy(&x, 0.5 * dt, &k2, &mut tmp);
            let k3 = self.vector_field(&tmp);
            axpy(&x, dt, &k3, &mut tmp);
            let k4 = self.vector_field(&tmp);
            for i in 0..n {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > BLOWUP_NORM {
                log::debug!("trajectory left the ball ‖x‖ ≤ {BLOWUP_NORM} at step {step}");
                return Ok(Trajectory {
                    times,
                    states,
                    blew_up: true,
                });
            }
            times.push(step as f64 * dt);
            states.push(x.clone());
        }
        Ok(Trajectory {
            times,
            states,
            blew_up: false,
        })
    }

    /// Sufficient conditions for bounded orbits, checked edge by edge.
    pub fn boundedness_certificate(&self) -> Boundedness {
        let per_edge: Vec<Boundedness> = (0..self.edge_count())
            .map(|e| edge_boundedness(self.coupling_for(e)))
            .collect();
        if per_edge.iter().all(|b| *b == Boundedness::NegativeTail) {
            Boundedness::NegativeTail
        } else if per_edge.iter().all(|b| *b != Boundedness::Unknown) {
            Boundedness::RadiallyUnbounded
        } else {
            Boundedness::Unknown
        }
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * k[i];
    }
}

fn edge_boundedness(f: &CouplingFunction) -> Boundedness {
    if let Some(c) = f.polynomial_coefficients() {
        return if *c.last().unwrap() < 0.0 {
            Boundedness::NegativeTail
        } else {
            Boundedness::Unknown
        };
    }
    if f.is_sine() || !f.has_antiderivative() {
        return Boundedness::Unknown;
    }
    // −F growing without bound along a geometric sequence, both directions.
    let tail = [1e1, 1e2, 1e3, 1e4];
    let grows = |sign: f64| {
        let vals: Vec<f64> = tail
            .iter()
            .map(|&r| -f.antiderivative(sign * r).unwrap_or(f64::NAN))
            .collect();
        vals.windows(2).all(|w| w[1] > w[0] && w[1].is_finite()) && vals[3] > 1e3 * vals[0].abs().max(1.0)
    };
    if grows(1.0) && grows(-1.0) {
        Boundedness::RadiallyUnbounded
    } else {
        Boundedness::Unknown
    }
}

/// `d · diag(w) · dᵀ` for arbitrary signed weights.
pub fn signed_laplacian(g: &Graph, w: &[f64]) -> SymMatrix {
    let n = g.node_count();
    let mut m = DMatrix::zeros(n, n);
    for (&(a, b), &v) in g.edges().iter().zip(w) {
        m[(a, a)] += v;
        m[(b, b)] += v;
        m[(a, b)] -= v;
        m[(b, a)] -= v;
    }
    SymMatrix::new(m).expect("signed Laplacian is symmetric")
}

/// Which sufficient condition for bounded orbits holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundedness {
    /// `−F_ij` is radially unbounded on every edge.
    RadiallyUnbounded,
    /// `limsup y·f_ij(y) < 0` on every edge.
    NegativeTail,
    Unknown,
}

/// `J = L⁺ − L⁻` at an equilibrium, with the edge partition it comes from.
#[derive(Debug, Clone)]
pub struct SignedSplit {
    graph: Graph,
    weights: Vec<f64>,
    plus: WeightedLaplacian,
    minus: WeightedLaplacian,
    positive: Vec<usize>,
    negative: Vec<usize>,
    zero: Vec<usize>,
}

impl SignedSplit {
    /// Splits signed edge weights (typically `f'_e`) by sign. Entries with
    /// `|w| ≤` [`ZERO_DERIVATIVE`] join neither Laplacian.
    pub fn from_signed_weights(graph: &Graph, weights: &[f64]) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.edge_count(),
                got: weights.len(),
            });
        }
        let mut wp = vec![0.0; weights.len()];
        let mut wm = vec![0.0; weights.len()];
        let (mut positive, mut negative, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for (e, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w > ZERO_DERIVATIVE {
                wp[e] = w;
                positive.push(e);
            } else if w < -ZERO_DERIVATIVE {
                wm[e] = -w;
                negative.push(e);
            } else {
                zero.push(e);
            }
        }
        Ok(SignedSplit {
            graph: graph.clone(),
            weights: weights.to_vec(),
            plus: WeightedLaplacian::from_weights(graph, &wp)?,
            minus: WeightedLaplacian::from_weights(graph, &wm)?,
            positive,
            negative,
            zero,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Signed edge weights as supplied.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn l_plus(&self) -> &WeightedLaplacian {
        &self.plus
    }

    pub fn l_minus(&self) -> &WeightedLaplacian {
        &self.minus
    }

    pub fn positive_edges(&self) -> &[usize] {
        &self.positive
    }

    pub fn negative_edges(&self) -> &[usize] {
        &self.negative
    }

    pub fn zero_edges(&self) -> &[usize] {
        &self.zero
    }

    /// `L⁺ − L⁻`.
    pub fn jacobian(&self) -> SymMatrix {
        self.plus.matrix().sub(self.minus.matrix())
    }

    pub fn r_plus(&self, i: usize, j: usize) -> f64 {
        self.plus.effective_resistance(i, j)
    }

    pub fn r_minus(&self, i: usize, j: usize) -> f64 {
        self.minus.effective_resistance(i, j)
    }
}

/// Sampled solution of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// The run was cut short by the blow-up guard.
    pub blew_up: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Every `stride`-th sample plus the last one.
    pub fn thinned(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let mut idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        if idx.last() != Some(&(self.len() - 1)) {
            idx.push(self.len() - 1);
        }
        Trajectory {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            states: idx.iter().map(|&i| self.states[i].clone()).collect(),
            blew_up: self.blew_up,
        }
    }

    /// CSV with header `t,x0,…,x{n−1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(t.to_string())
                .chain(x.iter().map(f64::to_string))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `x − mean(x)·𝟏`.
pub fn mean_zero(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
