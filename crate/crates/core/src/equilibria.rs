//! Equilibrium enumeration and refinement.
//!
//! Equilibria live in the cut space of the edge coordinates. Detailed-balance
//! states put every edge at a root of its coupling; cycles add one-parameter
//! families where every edge sits at a root of `f − λ`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coupling::{is_additive_open, CouplingFunction};
use crate::dynamics::{mean_zero, norm, System, ZERO_DERIVATIVE};
use crate::error::{Error, Result};
use crate::graph::{BlockDecomposition, Graph};
use crate::linalg::pseudoinverse;

/// Largest admissible `‖f(x)‖` for an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Residual that [`refine`] aims for.
pub const REFINE_TOL: f64 = 1e-10;

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

/// Where an equilibrium came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    DetailedBalance,
    CycleFamily {
        lambda: f64,
    },
    /// `(0,…,0,α,…,α)` with `n0` zeros. `complete` is false when the positive
    /// roots are not additive open, so other clique states may exist.
    CliqueForm {
        n0: usize,
        alpha: f64,
        complete: bool,
    },
    Composed,
    Refined,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::DetailedBalance => write!(f, "detailed_balance"),
            Provenance::CycleFamily { lambda } => write!(f, "cycle_family(lambda={lambda})"),
            Provenance::CliqueForm { n0, alpha, complete } => {
                write!(f, "clique_form(n0={n0},alpha={alpha})")?;
                if !complete {
                    write!(f, "[incomplete]")?;
                }
                Ok(())
            }
            Provenance::Composed => write!(f, "composed"),
            Provenance::Refined => write!(f, "refined"),
        }
    }
}

/// A mean-zero equilibrium with its edge coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub provenance: Provenance,
    /// `‖vector_field(x)‖₂`.
    pub residual: f64,
}

impl Equilibrium {
    /// Wraps a node state, shifting it to mean zero.
    pub fn from_state(s: &System, x: &[f64], provenance: Provenance) -> Self {
        let x = mean_zero(x);
        let y = s.edge_coordinates(&x);
        let residual = norm(&s.vector_field(&x));
        Equilibrium {
            x,
            y,
            provenance,
            residual,
        }
    }

    /// Recovers the node state from cut-space edge coordinates.
    pub fn from_edges(s: &System, y: &[f64], provenance: Provenance) -> Self {
        Equilibrium::from_state(s, &s.node_from_edges(y), provenance)
    }

    pub fn is_valid(&self) -> bool {
        self.residual <= EQUILIBRIUM_TOL
    }
}

fn root_sets(s: &System, edges: &[usize], bound: f64) -> Result<Vec<Vec<f64>>> {
    edges.iter().map(|&e| s.coupling_for(e).roots(bound)).collect()
}

fn check_cap(sets: &[Vec<f64>], cap: usize) -> Result<()> {
    let count: f64 = sets.iter().map(|r| r.len() as f64).product();
    if count > cap as f64 {
        return Err(Error::CombinatorialBlowup { count, cap });
    }
    Ok(())
}

/// Mixed-radix counter over `radices`, last digit fastest.
struct Odometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl Odometer {
    fn new(radices: Vec<usize>) -> Self {
        let done = radices.contains(&0);
        Odometer {
            digits: vec![0; radices.len()],
            radices,
            done,
        }
    }

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        let mut i = self.radices.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}

/// All edge tuples with `y_e ∈ roots(f_e)` that lie in the cut space.
///
/// Only spanning-tree edges are enumerated; each chord value is then forced
/// by its fundamental cycle and kept if it is a root. The cap bounds the
/// number of tree-edge combinations.
pub fn detailed_balance_tuples(s: &System, bound: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    let g = s.graph();
    let m = g.edge_count();
    let tree = g.spanning_tree()?;
    let mut in_tree = vec![false; m];
    for &e in &tree {
        in_tree[e] = true;
    }
    let tree_roots = root_sets(s, &tree, bound)?;
    check_cap(&tree_roots, cap)?;

    // (chord, [(tree edge, coefficient)]): y_chord = −Σ coeff·y_tree.
    let chords: Vec<(usize, Vec<(usize, f64)>, Vec<f64>)> = s
        .cycle_basis()
        .iter()
        .map(|v| {
            let chord = (0..m)
                .find(|&e| !in_tree[e] && v[e] != 0.0)
                .expect("fundamental cycle has a chord");
            let terms = (0..m)
                .filter(|&e| in_tree[e] && v[e] != 0.0)
                .map(|e| (e, v[e] / v[chord]))
                .collect();
            let roots = s.coupling_for(chord).roots(bound);
            roots.map(|r| (chord, terms, r))
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    let mut odo = Odometer::new(tree_roots.iter().map(Vec::len).collect());
    let mut y = vec![0.0; m];
    'outer: while let Some(digits) = odo.next() {
        for (t, &e) in tree.iter().enumerate() {
            y[e] = tree_roots[t][digits[t]];
        }
        for (chord, terms, roots) in &chords {
            let forced: f64 = -terms.iter().map(|&(e, c)| c * y[e]).sum::<f64>();
            let tol = 1e-8 * forced.abs().max(1.0);
            match roots.iter().find(|&&r| (r - forced).abs() <= tol) {
                Some(&r) => y[*chord] = r,
                None => continue 'outer,
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Detailed-balance equilibria `(ker d)^⊥ ∩ f⁻¹(0)` as mean-zero node states.
pub fn detailed_balance(s: &System, bound: f64, cap: usize) -> Result<Vec<Equilibrium>> {
    Ok(detailed_balance_tuples(s, bound, cap)?
        .iter()
        .map(|y| Equilibrium::from_edges(s, y, Provenance::DetailedBalance))
        .collect())
}

/// A tree equilibrium with the sign of `f'_e(y_e)` on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEquilibrium {
    pub equilibrium: Equilibrium,
    pub signs: Vec<i8>,
}

pub fn derivative_sign(d: f64) -> i8 {
    if d > ZERO_DERIVATIVE {
        1
    } else if d < -ZERO_DERIVATIVE {
        -1
    } else {
        0
    }
}

/// On a tree every root combination is an equilibrium.
pub fn tree_equilibria(s: &System, bound: f64, cap: usize) -> Result<Vec<TreeEquilibrium>> {
    if !s.graph().is_tree() {
        return Err(Error::NotATree);
    }
    let edges: Vec<usize> = (0..s.edge_count()).collect();
    let roots = root_sets(s, &edges, bound)?;
    check_cap(&roots, cap)?;
    let mut out = Vec::new();
    let mut odo = Odometer::new(roots.iter().map(Vec::len).collect());
    while let Some(digits) = odo.next() {
        let y: Vec<f64> = digits.iter().enumerate().map(|(e, &d)| roots[e][d]).collect();
        let signs = y
            .iter()
            .enumerate()
            .map(|(e, &v)| derivative_sign(s.coupling_for(e).derivative(v)))
            .collect();
        out.push(TreeEquilibrium {
            equilibrium: Equilibrium::from_edges(s, &y, Provenance::DetailedBalance),
            signs,
        });
    }
    Ok(out)
}

/// One-parameter family of equilibria on a cycle, indexed by the common value
/// `λ = f(zᵢ)` of the coupling around the cycle.
#[derive(Debug, Clone)]
pub struct EquilibriumFamily {
    system: System,
    order: Vec<usize>,
    coupling: CouplingFunction,
    k: usize,
    epsilon: f64,
    bound: f64,
}

pub const FAMILY_SHRINK: f64 = 0.99;

impl EquilibriumFamily {
    /// Largest `λ` for which `f − λ` was found to keep all its real roots.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Open interval of admissible `λ`.
    pub fn interval(&self) -> (f64, f64) {
        (-FAMILY_SHRINK * self.epsilon, FAMILY_SHRINK * self.epsilon)
    }

    /// Node visiting order around the cycle.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `zᵢ = β_{i mod k}` for `i = 1..n`, with `β` the sorted roots of `f − λ`.
    pub fn z_point(&self, lambda: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.interval();
        if !(lambda > lo && lambda < hi) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {lambda} outside the family interval ({lo}, {hi})"
            )));
        }
        let beta = self.coupling.roots_shifted(lambda, self.bound)?;
        if beta.len() != self.k {
            return Err(Error::RootFindingFailed(format!(
                "f − {lambda} has {} roots, expected {}",
                beta.len(),
                self.k
            )));
        }
        let n = self.order.len();
        Ok((1..=n).map(|i| beta[i % self.k]).collect())
    }

    /// Member at `λ`: consecutive nodes along the cycle differ by `zᵢ`.
    pub fn member(&self, lambda: f64) -> Result<Equilibrium> {
        let z = self.z_point(lambda)?;
        let n = self.order.len();
        let mut x = vec![0.0; n];
        let mut pos = 0.0;
        for i in 1..n {
            pos += z[i - 1];
            x[self.order[i]] = pos;
        }
        Ok(Equilibrium::from_state(
            &self.system,
            &x,
            Provenance::CycleFamily { lambda },
        ))
    }

    /// `count` members at the midpoints of a uniform partition of the interval.
    pub fn sample(&self, count: usize) -> Result<Vec<Equilibrium>> {
        let (lo, hi) = self.interval();
        (0..count)
            .map(|j| self.member(lo + (hi - lo) * (j as f64 + 0.5) / count as f64))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum CycleFamilyResult {
    Family(EquilibriumFamily),
    Empty(String),
}

impl CycleFamilyResult {
    pub fn family(&self) -> Option<&EquilibriumFamily> {
        match self {
            CycleFamilyResult::Family(f) => Some(f),
            CycleFamilyResult::Empty(_) => None,
        }
    }
}

/// The continuum of equilibria on `C_n` for a uniform odd polynomial of degree
/// `k` with `k` simple real roots and `k | n`.
pub fn cycle_family(s: &System, bound: f64) -> Result<CycleFamilyResult> {
    let g = s.graph();
    if !g.is_cycle() {
        return Err(Error::NotACycle);
    }
    let f = s.coupling().uniform().ok_or(Error::NotPolynomial)?;
    let k = f.degree().ok_or(Error::NotPolynomial)?;
    let n = g.node_count();
    if k == 1 {
        return Ok(CycleFamilyResult::Empty(
            "linear coupling: the only equilibria are consensus states".into(),
        ));
    }
    let count = |lambda: f64| f.roots_shifted(lambda, bound).map(|r| r.len());
    let real_roots = count(0.0)?;
    if real_roots != k {
        return Ok(CycleFamilyResult::Empty(format!(
            "f has {real_roots} real roots in [−{bound}, {bound}], degree {k} needs {k}"
        )));
    }
    if !n.is_multiple_of(k) {
        return Ok(CycleFamilyResult::Empty(format!(
            "degree {k} does not divide cycle length {n}"
        )));
    }
    // Find an upper bracket where roots have been lost, then bisect.
    let mut hi = 1.0;
    let mut doublings = 0;
    while count(hi)? == k {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::RootFindingFailed(
                "f − λ keeps all roots for every λ tried".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if count(mid)? == k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Ok(CycleFamilyResult::Empty(
            "f − λ loses roots for every λ > 0 tried".into(),
        ));
    }
    Ok(CycleFamilyResult::Family(EquilibriumFamily {
        system: s.clone(),
        order: g.cycle_order()?,
        coupling: f.clone(),
        k,
        epsilon: lo,
        bound,
    }))
}

/// States `(0,…,0,α,…,α)` on `K_n` for every positive root `α`, one per zero
/// count `n0 ∈ {1,…,n−1}`, plus the origin.
pub fn clique_equilibria(f: &CouplingFunction, n: usize, bound: f64) -> Result<Vec<Equilibrium>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("clique needs n ≥ 3, got {n}")));
    }
    let s = System::uniform(Graph::complete(n), f.clone())?;
    let positive = f.positive_roots(bound)?;
    let complete = is_additive_open(&positive);
    if !complete {
        log::warn!("positive roots of {f} are not additive open; clique states beyond (0,…,0,α,…,α) may exist");
    }
    let mut out = vec![Equilibrium::from_state(
        &s,
        &vec![0.0; n],
        Provenance::CliqueForm {
            n0: n,
            alpha: 0.0,
            complete,
        },
    )];
    for &alpha in &positive {
        for n0 in (1..n).rev() {
            let x: Vec<f64> = (0..n).map(|i| if i < n0 { 0.0 } else { alpha }).collect();
            out.push(Equilibrium::from_state(
                &s,
                &x,
                Provenance::CliqueForm { n0, alpha, complete },
            ));
        }
    }
    Ok(out)
}

/// Lazy product of per-block equilibria over a block decomposition.
#[derive(Debug, Clone)]
pub struct Coalescence<'a> {
    system: &'a System,
    /// Global edge indices of each block.
    block_edges: Vec<Vec<usize>>,
    /// Edge tuples of each block, in block edge order.
    block_tuples: Vec<Vec<Vec<f64>>>,
}

impl<'a> Coalescence<'a> {
    /// Number of whole-graph states.
    pub fn count(&self) -> u128 {
        self.block_tuples.iter().map(|t| t.len() as u128).product()
    }

    pub fn block_count(&self) -> usize {
        self.block_edges.len()
    }

    /// Concatenated edge tuple for per-block choices `digits`.
    pub fn edge_tuple(&self, digits: &[usize]) -> Vec<f64> {
        let mut y = vec![0.0; self.system.edge_count()];
        for (b, &d) in digits.iter().enumerate() {
            for (i, &e) in self.block_edges[b].iter().enumerate() {
                y[e] = self.block_tuples[b][d][i];
            }
        }
        y
    }

    /// State number `index` in mixed radix, last block fastest.
    pub fn get(&self, mut index: u128) -> Option<Equilibrium> {
        if index >= self.count() {
            return None;
        }
        let mut digits = vec![0; self.block_count()];
        for b in (0..self.block_count()).rev() {
            let r = self.block_tuples[b].len() as u128;
            digits[b] = (index % r) as usize;
            index /= r;
        }
        Some(self.state(&digits))
    }

    fn state(&self, digits: &[usize]) -> Equilibrium {
        Equilibrium::from_edges(self.system, &self.edge_tuple(digits), Provenance::Composed)
    }

    /// Edge tuples only, skipping node recovery.
    pub fn edge_tuples(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let mut odo = Odometer::new(self.block_tuples.iter().map(Vec::len).collect());
        std::iter::from_fn(move || odo.next()).map(move |d| self.edge_tuple(&d))
    }

    pub fn iter(&self) -> impl Iterator<Item = Equilibrium> + '_ {
        let mut odo = Odometer::new(self.block_tuples.iter().map(Vec::len).collect());
        std::iter::from_fn(move || odo.next()).map(move |d| self.state(&d))
    }
}

/// Combines per-block equilibria (each on the block subsystem, edges in block
/// order) into whole-graph equilibria.
pub fn compose_coalescence<'a>(
    system: &'a System,
    decomposition: &BlockDecomposition,
    block_equilibria: &[Vec<Equilibrium>],
) -> Result<Coalescence<'a>> {
    if block_equilibria.len() != decomposition.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: decomposition.blocks.len(),
            got: block_equilibria.len(),
        });
    }
    let mut covered = vec![false; system.edge_count()];
    for b in &decomposition.blocks {
        for &e in &b.edges {
            covered[e] = true;
        }
    }
    if let Some(e) = covered.iter().position(|c| !c) {
        return Err(Error::UncoveredEdge(e));
    }
    let block_tuples = block_equilibria
        .iter()
        .zip(&decomposition.blocks)
        .map(|(eqs, b)| {
            eqs.iter()
                .map(|eq| {
                    if eq.y.len() == b.edges.len() {
                        Ok(eq.y.clone())
                    } else {
                        Err(Error::DimensionMismatch {
                            expected: b.edges.len(),
                            got: eq.y.len(),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Coalescence {
        system,
        block_edges: decomposition.blocks.iter().map(|b| b.edges.clone()).collect(),
        block_tuples,
    })
}

/// Detailed-balance equilibria of every block subsystem.
pub fn block_detailed_balance(
    system: &System,
    decomposition: &BlockDecomposition,
    bound: f64,
    cap: usize,
) -> Result<Vec<Vec<Equilibrium>>> {
    decomposition
        .blocks
        .iter()
        .map(|b| {
            let (sub, _) = system.restrict(&b.edges)?;
            detailed_balance(&sub, bound, cap)
        })
        .collect()
}

/// Damped Newton iteration on the mean-zero plane. Steps use the Jacobian
/// pseudoinverse, so singular directions (the consensus line, continua of
/// equilibria) are simply not moved along.
pub fn refine(s: &System, x_guess: &[f64], max_iter: usize) -> Result<Equilibrium> {
    if x_guess.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut x = mean_zero(x_guess);
    let mut field = s.vector_field(&x);
    let mut r = norm(&field);
    for _ in 0..max_iter {
        if r <= REFINE_TOL {
            break;
        }
        let jp = pseudoinverse(&s.jacobian(&x), 1e-12)?;
        let step: Vec<f64> = (0..x.len())
            .map(|i| -(0..x.len()).map(|j| jp.get(i, j) * field[j]).sum::<f64>())
            .collect();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            let tf = s.vector_field(&trial);
            let tr = norm(&tf);
            if tr < (1.0 - 1e-4 * t) * r || t < 1e-6 {
                x = trial;
                field = tf;
                r = tr;
                break;
            }
            t *= 0.5;
        }
    }
    if r <= REFINE_TOL {
        Ok(Equilibrium::from_state(s, &x, Provenance::Refined))
    } else {
        Err(Error::NoConvergence(r))
    }
}

pub fn is_equilibrium(s: &System, x: &[f64], tol: f64) -> bool {
    norm(&s.vector_field(x)) <= tol
}

/// Sufficient condition for consensus to be the only equilibria: every
/// coupling has the single root 0 within `bound` and `f'(0) < 0`.
pub fn consensus_only_check(s: &System, bound: f64) -> Result<bool> {
    for e in 0..s.edge_count() {
        let f = s.coupling_for(e);
        if f.roots(bound)? != [0.0] || f.derivative(0.0) >= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Drops equilibria whose edge coordinates match an earlier one to `tol`
/// (max norm). Order is preserved.
pub fn dedup(eqs: Vec<Equilibrium>, tol: f64) -> Vec<Equilibrium> {
    let mut order: Vec<usize> = (0..eqs.len()).collect();
    order.sort_by(|&a, &b| {
        eqs[a]
            .y
            .iter()
            .zip(&eqs[b].y)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let close = |a: &Equilibrium, b: &Equilibrium| a.y.iter().zip(&b.y).all(|(u, v)| (u - v).abs() <= tol);
    let mut keep = vec![true; eqs.len()];
    // Near-equal tuples can be separated in lexicographic order by tuples that
    // differ in an early coordinate by less than tol, so scan a short window.
    for (pos, &i) in order.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        for &j in order[pos + 1..].iter() {
            let first_gap = (eqs[j].y[0] - eqs[i].y[0]).abs();
            if first_gap > tol {
                break;
            }
            if keep[j] && close(&eqs[i], &eqs[j]) {
                let (_, drop) = if i < j { (i, j) } else { (j, i) };
                keep[drop] = false;
            }
        }
    }
    eqs.into_iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| e).collect()
}
