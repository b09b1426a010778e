//! Stability of equilibria.
//!
//! Every criterion works on the signed split `J = L⁺ − L⁻` and returns its own
//! conclusion; [`classify`] runs them in sequence, records each as evidence and
//! takes the spectrum of `J` on `⟨𝟏⟩^⊥` as the final word.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingFunction;
use crate::dynamics::{mean_zero, norm, SignedSplit, System, ZERO_DERIVATIVE};
use crate::equilibria::{refine, Equilibrium, EQUILIBRIUM_TOL};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{eigen_symmetric, Inertia, SymMatrix, DEFAULT_ZERO_TOL};

/// Half-width of the inconclusive band around 1 in the resistance tests.
pub const RHO_BAND: f64 = 1e-9;

/// Relative margin by which `r⁻` must exceed `r⁺` in the pair test.
pub const PAIR_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What a single criterion established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Conclusion {
    Stable,
    Unstable,
    /// Rules out linear stability without deciding stability.
    NotLinearlyStable,
    /// Sits exactly on a threshold of the criterion.
    Boundary,
    NoConclusion,
    NotApplicable,
    /// Zero eigenvalues that the criterion cannot resolve.
    Inconclusive,
}

impl Conclusion {
    pub fn verdict(self) -> Verdict {
        match self {
            Conclusion::Stable => Verdict::Stable,
            Conclusion::Unstable => Verdict::Unstable,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn is_decisive(self) -> bool {
        matches!(self, Conclusion::Stable | Conclusion::Unstable)
    }
}

impl From<Verdict> for Conclusion {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Stable => Conclusion::Stable,
            Verdict::Unstable => Conclusion::Unstable,
            Verdict::Inconclusive => Conclusion::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub criterion: String,
    pub detail: String,
    pub conclusion: Conclusion,
}

impl Evidence {
    pub fn new(criterion: &str, detail: impl Into<String>, conclusion: Conclusion) -> Self {
        Evidence {
            criterion: criterion.to_string(),
            detail: detail.into(),
            conclusion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Eigenvalues of `J` on `⟨𝟏⟩^⊥`, ascending.
    pub spectrum: Vec<f64>,
    pub evidence: Vec<Evidence>,
}

impl StabilityVerdict {
    pub fn find(&self, criterion: &str) -> Option<&Evidence> {
        self.evidence.iter().find(|e| e.criterion == criterion)
    }
}

/// Spectrum of `J` with one zero eigenvalue (the `𝟏` direction) removed.
pub fn restricted_spectrum(j: &SymMatrix, tol_rel: f64) -> Result<Vec<f64>> {
    let eig = eigen_symmetric(j)?;
    let thr = eig.zero_threshold(tol_rel);
    let (idx, closest) = eig
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .ok_or(Error::MissingTrivialKernel)?;
    if closest.abs() > thr {
        return Err(Error::MissingTrivialKernel);
    }
    let mut rest = eig.values.clone();
    rest.remove(idx);
    Ok(rest)
}

fn spectrum_inertia(spectrum: &[f64], full_scale: f64, tol_rel: f64) -> Inertia {
    let thr = tol_rel * full_scale.max(1.0);
    let mut i = Inertia::default();
    for &v in spectrum {
        if v > thr {
            i.positive += 1;
        } else if v < -thr {
            i.negative += 1;
        } else {
            i.zero += 1;
        }
    }
    i
}

fn verdict_from_inertia(i: Inertia) -> Verdict {
    if i.positive > 0 {
        Verdict::Unstable
    } else if i.zero > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Stable
    }
}

/// Sign pattern of the spectrum on `⟨𝟏⟩^⊥`.
pub fn spectral_verdict(j: &SymMatrix, tol_rel: f64) -> Result<StabilityVerdict> {
    let spectrum = restricted_spectrum(j, tol_rel)?;
    let scale = spectrum.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let inertia = spectrum_inertia(&spectrum, scale, tol_rel);
    let verdict = verdict_from_inertia(inertia);
    let lmax = spectrum.last().copied().unwrap_or(f64::NEG_INFINITY);
    Ok(StabilityVerdict {
        verdict,
        evidence: vec![Evidence::new(
            "spectral",
            format!("inertia on <1>^perp {inertia}, lambda_max = {lmax:.6e}, tol_rel = {tol_rel:e}"),
            verdict.into(),
        )],
        spectrum,
    })
}

/// Inertia of `J` restricted to `⟨𝟏⟩^⊥`.
pub fn restricted_inertia(j: &SymMatrix, tol_rel: f64) -> Result<Inertia> {
    let spectrum = restricted_spectrum(j, tol_rel)?;
    let scale = spectrum.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(spectrum_inertia(&spectrum, scale, tol_rel))
}

/// Sum of signed weights over the edges crossing `side`; positive means
/// the indicator of `side` is an unstable direction.
pub fn cut_set_test(split: &SignedSplit, side: &[bool]) -> Evidence {
    let g = split.graph();
    let mut sum = 0.0;
    let mut mag = 0.0;
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if side[a] != side[b] {
            sum += split.weights()[e];
            mag += split.weights()[e].abs();
        }
    }
    let conclusion = if sum > 1e-12 * mag.max(1.0) {
        Conclusion::Unstable
    } else {
        Conclusion::NoConclusion
    };
    Evidence::new("cut_set", format!("sum of f' across cut = {sum:.6e}"), conclusion)
}

/// Cut-set test over every single node and every connected component of G⁻.
pub fn cut_set_scan(split: &SignedSplit) -> Evidence {
    let n = split.node_count();
    let mut candidates: Vec<(String, Vec<bool>)> = (0..n)
        .map(|v| (format!("node {}", v + 1), (0..n).map(|u| u == v).collect()))
        .collect();
    let labels = split.l_minus().component_labels();
    let comps = labels.iter().max().map_or(0, |m| m + 1);
    if comps > 1 {
        for c in 0..comps {
            candidates.push((
                format!("G- component {}", c + 1),
                labels.iter().map(|&l| l == c).collect(),
            ));
        }
    }
    for (name, side) in &candidates {
        let ev = cut_set_test(split, side);
        if ev.conclusion == Conclusion::Unstable {
            return Evidence::new("cut_set", format!("{name}: {}", ev.detail), Conclusion::Unstable);
        }
    }
    Evidence::new(
        "cut_set",
        format!("no positive cut among {} candidate cuts", candidates.len()),
        Conclusion::NoConclusion,
    )
}

/// Connectivity of G⁻ and how G⁺ sits across its components.
pub fn connectivity_test(split: &SignedSplit) -> Evidence {
    let labels = split.l_minus().component_labels();
    let comps = labels.iter().max().map_or(0, |m| m + 1);
    let g = split.graph();
    if comps <= 1 {
        if split.positive_edges().is_empty() {
            return Evidence::new("connectivity", "L+ = 0 and G- connected", Conclusion::Stable);
        }
        return Evidence::new(
            "connectivity",
            format!("G- connected, {} positive edges", split.positive_edges().len()),
            Conclusion::NoConclusion,
        );
    }
    for &e in split.positive_edges() {
        let (a, b) = g.edge(e);
        if labels[a] != labels[b] {
            return Evidence::new(
                "connectivity",
                format!(
                    "G- has {comps} components; positive edge {{{},{}}} joins two of them",
                    a + 1,
                    b + 1
                ),
                Conclusion::Unstable,
            );
        }
    }
    Evidence::new(
        "connectivity",
        format!("G- has {comps} components and no positive edge joins them"),
        Conclusion::NotLinearlyStable,
    )
}

/// One scalar elimination in the Schur recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurStep {
    /// Original node label.
    pub removed: usize,
    /// `J_vv` of the eliminated node.
    pub pivot: f64,
    pub inertia_before: Inertia,
    pub inertia_after: Inertia,
    /// `In(J) = In(J/v) + In(J_vv)` held exactly.
    pub preserved: bool,
}

/// Outcome of eliminating every node without a positive net edge.
#[derive(Debug, Clone)]
pub struct SchurReduction {
    /// Surviving original node labels, ascending.
    pub kept: Vec<usize>,
    pub matrix: SymMatrix,
    /// The reduced matrix as a signed split on the surviving nodes.
    pub split: SignedSplit,
    pub steps: Vec<SchurStep>,
}

impl SchurReduction {
    pub fn inertia_preserved(&self) -> bool {
        self.steps.iter().all(|s| s.preserved)
    }

    pub fn evidence(&self, n: usize) -> Evidence {
        let removed: Vec<String> = self.steps.iter().map(|s| (s.removed + 1).to_string()).collect();
        let detail = format!(
            "{n} -> {} nodes (removed [{}]); inertia preserved at every step: {}",
            self.kept.len(),
            removed.join(","),
            self.inertia_preserved()
        );
        Evidence::new("schur_reduce", detail, Conclusion::NoConclusion)
    }
}

/// Net edge weights `−J_ab` of a reduced matrix. Entries below `tol_rel`
/// relative to the matrix are kept as zero-weight edges.
fn net_weights(m: &SymMatrix, tol_rel: f64) -> (Graph, Vec<f64>) {
    let k = m.dim();
    let scale = m.max_abs().max(1.0);
    let thr = 1e-12 * scale;
    let mut pairs = Vec::new();
    let mut w = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let s = -m.get(a, b);
            if s.abs() > thr {
                pairs.push((a, b));
                w.push(if s.abs() <= tol_rel * scale { 0.0 } else { s });
            }
        }
    }
    (Graph::new(k, &pairs).expect("pairs are canonical"), w)
}

/// Eliminates, one at a time, nodes whose net edges `−J_ab` are all
/// non-positive. Each step inverts the scalar `J_vv < 0` and merges the
/// induced edges into the remaining ones by signed addition.
pub fn schur_reduce(split: &SignedSplit, tol_rel: f64) -> Result<SchurReduction> {
    if !split.l_minus().is_connected() {
        return Err(Error::GMinusDisconnected);
    }
    let mut kept: Vec<usize> = (0..split.node_count()).collect();
    let mut m = split.jacobian();
    let mut steps = Vec::new();
    loop {
        let k = m.dim();
        if k <= 1 {
            break;
        }
        // A pivot that is zero at the spectral tolerance would fold a
        // degenerate direction into the eliminated block.
        let thr = tol_rel * m.max_abs().max(1.0);
        let v = (0..k).find(|&v| (0..k).all(|b| b == v || -m.get(v, b) <= thr) && m.get(v, v) < -thr);
        let Some(v) = v else { break };
        let pivot = m.get(v, v);
        let before = Inertia::of_values(&eigen_symmetric(&m)?.values, tol_rel);
        let rest: Vec<usize> = (0..k).filter(|&i| i != v).collect();
        let next = SymMatrix::from_upper(k - 1, |i, j| {
            let (a, b) = (rest[i], rest[j]);
            m.get(a, b) - m.get(a, v) * m.get(v, b) / pivot
        });
        let after = Inertia::of_values(&eigen_symmetric(&next)?.values, tol_rel);
        steps.push(SchurStep {
            removed: kept[v],
            pivot,
            inertia_before: before,
            inertia_after: after,
            preserved: before == after + Inertia::new(0, 1, 0),
        });
        kept.remove(v);
        m = next;
    }
    let (g, w) = net_weights(&m, tol_rel);
    Ok(SchurReduction {
        kept,
        split: SignedSplit::from_signed_weights(&g, &w)?,
        matrix: m,
        steps,
    })
}

/// Result of the single non-negative edge test.
#[derive(Debug, Clone, PartialEq)]
pub struct OneEdgeResult {
    pub conclusion: Conclusion,
    pub edge: Option<usize>,
    /// `f'_ij · r⁻_ij`.
    pub rho: f64,
}

impl OneEdgeResult {
    pub fn evidence(&self, g: &Graph) -> Evidence {
        let detail = match self.edge {
            Some(e) => {
                let (a, b) = g.edge(e);
                format!(
                    "unique non-negative edge {{{},{}}}, rho = f'*r- = {:.9}",
                    a + 1,
                    b + 1,
                    self.rho
                )
            }
            None => "needs exactly one edge with f' >= 0 and G- plus that edge connected".to_string(),
        };
        Evidence::new("one_edge", detail, self.conclusion)
    }
}

fn band(rho: f64) -> Conclusion {
    if rho < 1.0 - RHO_BAND {
        Conclusion::Stable
    } else if rho > 1.0 + RHO_BAND {
        Conclusion::Unstable
    } else {
        Conclusion::Boundary
    }
}

/// When exactly one edge has `f' ≥ 0`, stability is decided by
/// `ρ = f'_ij · r⁻_ij` against 1.
pub fn one_edge_resistance_test(split: &SignedSplit) -> OneEdgeResult {
    let not_applicable = OneEdgeResult {
        conclusion: Conclusion::NotApplicable,
        edge: None,
        rho: f64::NAN,
    };
    let nonneg: Vec<usize> = split
        .positive_edges()
        .iter()
        .chain(split.zero_edges())
        .copied()
        .collect();
    if nonneg.len() != 1 || split.positive_edges().len() != 1 {
        return not_applicable;
    }
    let e = nonneg[0];
    let (a, b) = split.graph().edge(e);
    let labels = split.l_minus().component_labels();
    let comps = labels.iter().max().map_or(0, |m| m + 1);
    let connected_with_edge = comps == 1 || (comps == 2 && labels[a] != labels[b]);
    if !connected_with_edge {
        return not_applicable;
    }
    let rho = split.weights()[e] * split.r_minus(a, b);
    OneEdgeResult {
        conclusion: band(rho),
        edge: Some(e),
        rho,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiEdgeResult {
    pub conclusion: Conclusion,
    /// `Σ f'_ij r⁻_ij` over G⁺.
    pub sum: f64,
    pub max_term: f64,
}

impl MultiEdgeResult {
    pub fn evidence(&self) -> Evidence {
        Evidence::new(
            "multi_edge",
            format!("sum f'*r- = {:.9}, largest term = {:.9}", self.sum, self.max_term),
            self.conclusion,
        )
    }
}

/// `Σ_{G⁺} f'_ij r⁻_ij < 1` gives stability; a single term above 1 gives
/// instability.
pub fn multi_edge_resistance_test(split: &SignedSplit) -> Result<MultiEdgeResult> {
    let g = split.graph();
    let mut w = split.l_plus().weights().to_vec();
    for (e, v) in split.l_minus().weights().iter().enumerate() {
        w[e] += v;
    }
    let union = crate::linalg::WeightedLaplacian::from_weights(g, &w)?;
    if !union.is_connected() {
        return Err(Error::DisconnectedUnion);
    }
    let r = split.l_minus().resistance_matrix();
    let mut sum = 0.0;
    let mut max_term = 0.0_f64;
    for &e in split.positive_edges() {
        let (a, b) = g.edge(e);
        let term = split.weights()[e] * r[a][b];
        sum += term;
        max_term = max_term.max(term);
    }
    let conclusion = if sum < 1.0 - RHO_BAND {
        Conclusion::Stable
    } else if max_term > 1.0 + RHO_BAND {
        Conclusion::Unstable
    } else {
        Conclusion::NoConclusion
    };
    Ok(MultiEdgeResult {
        conclusion,
        sum,
        max_term,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub conclusion: Conclusion,
    /// The pair with the largest `r⁻ / r⁺` among those with finite `r⁺`.
    pub pair: Option<(usize, usize)>,
    pub r_plus: f64,
    pub r_minus: f64,
}

impl PairResult {
    pub fn evidence(&self) -> Evidence {
        let detail = match self.pair {
            Some((i, j)) => format!(
                "pair ({},{}): r+ = {:.9}, r- = {:.9}",
                i + 1,
                j + 1,
                self.r_plus,
                self.r_minus
            ),
            None => "r+ infinite for every pair".to_string(),
        };
        Evidence::new("resistance_pair", detail, self.conclusion)
    }
}

/// `r⁻_ij > r⁺_ij` for some pair implies instability. `pairs = None` checks
/// every pair.
pub fn resistance_pair_test(split: &SignedSplit, pairs: Option<&[(usize, usize)]>) -> PairResult {
    let n = split.node_count();
    let all: Vec<(usize, usize)>;
    let pairs = match pairs {
        Some(p) => p,
        None => {
            all = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            &all
        }
    };
    let rp = split.l_plus().resistance_matrix();
    let rm = split.l_minus().resistance_matrix();
    let mut best: Option<(usize, usize, f64)> = None;
    for &(i, j) in pairs {
        let (p, m) = (rp[i][j], rm[i][j]);
        if !p.is_finite() {
            continue;
        }
        let ratio = if m.is_infinite() { f64::INFINITY } else { m / p };
        if best.is_none_or(|(_, _, r)| ratio > r) {
            best = Some((i, j, ratio));
        }
    }
    match best {
        None => PairResult {
            conclusion: Conclusion::NoConclusion,
            pair: None,
            r_plus: f64::INFINITY,
            r_minus: f64::NAN,
        },
        Some((i, j, ratio)) => PairResult {
            conclusion: if ratio > 1.0 + PAIR_MARGIN {
                Conclusion::Unstable
            } else {
                Conclusion::NoConclusion
            },
            pair: Some((i, j)),
            r_plus: rp[i][j],
            r_minus: rm[i][j],
        },
    }
}

/// On a tree the spectrum on `⟨𝟏⟩^⊥` has the signs of the edge derivatives.
pub fn tree_verdict(s: &System, eq: &Equilibrium) -> Result<StabilityVerdict> {
    if !s.graph().is_tree() {
        return Err(Error::NotATree);
    }
    let d = s.edge_derivatives(&eq.x);
    let count = |p: fn(f64) -> bool| d.iter().filter(|&&v| p(v)).count();
    let signs = Inertia::new(
        count(|v| v > ZERO_DERIVATIVE),
        count(|v| v < -ZERO_DERIVATIVE),
        count(|v| v.abs() <= ZERO_DERIVATIVE),
    );
    let verdict = verdict_from_inertia(signs);
    let spectral = spectral_verdict(&s.jacobian(&eq.x), DEFAULT_ZERO_TOL)?;
    let spec_inertia = spectrum_inertia(
        &spectral.spectrum,
        spectral.spectrum.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        DEFAULT_ZERO_TOL,
    );
    Ok(StabilityVerdict {
        verdict,
        evidence: vec![Evidence::new(
            "tree",
            format!(
                "edge derivative signs (+,-,0) = {signs}; spectrum signs {spec_inertia}; agree: {}",
                signs == spec_inertia
            ),
            verdict.into(),
        )],
        spectrum: spectral.spectrum,
    })
}

/// Thresholds `(a, b)` for `K_n` states with `f'(0) = d0 > 0 > da = f'(α)`.
pub fn clique_thresholds(d0: f64, da: f64) -> (f64, f64) {
    let denom = d0 + da.abs();
    (d0 / denom, da.abs() / denom)
}

/// Closed-form spectrum of `J` on `K_n` at `(0,…,0,α,…,α)` with `n0` zeros.
pub fn kn_eigenvalues(n: usize, n0: usize, d0: f64, da: f64) -> Result<Vec<f64>> {
    if n0 == 0 || n0 >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n0 <= n-1, got n0 = {n0}, n = {n}"
        )));
    }
    let (nf, n0f) = (n as f64, n0 as f64);
    let mut v = vec![0.0, da * nf];
    v.extend(std::iter::repeat_n((d0 - da) * n0f + da * nf, n0 - 1));
    v.extend(std::iter::repeat_n((da - d0) * n0f + d0 * nf, n - n0 - 1));
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Stability of the `K_n` state with `n0` zeros and the other entries at `α`.
pub fn clique_verdict(f: &CouplingFunction, alpha: f64, n: usize, n0: usize) -> Result<StabilityVerdict> {
    if n < 3 || n0 > n {
        return Err(Error::InvalidArgument(format!(
            "clique verdict needs n >= 3 and n0 <= n, got n = {n}, n0 = {n0}"
        )));
    }
    let d0 = f.derivative(0.0);
    let da = f.derivative(alpha);
    let origin = n0 == n || n0 == 0;
    if d0.abs() <= ZERO_DERIVATIVE || (!origin && da.abs() <= ZERO_DERIVATIVE) {
        return Err(Error::BadDerivativeSigns { d0, da });
    }
    let r = n0 as f64 / n as f64;
    let (conclusion, detail) = if origin {
        let c = if d0 > 0.0 {
            Conclusion::Unstable
        } else {
            Conclusion::Stable
        };
        (c, format!("consensus state, f'(0) = {d0}"))
    } else if d0 > 0.0 && da < 0.0 {
        let (a, b) = clique_thresholds(d0, da);
        let c = if (r - a).abs() <= 1e-12 || (r - b).abs() <= 1e-12 {
            Conclusion::Boundary
        } else if r > a && r < b {
            Conclusion::Stable
        } else {
            Conclusion::Unstable
        };
        (c, format!("n0/n = {r:.6}, a = {a:.12}, b = {b:.12}"))
    } else if d0 > 0.0 && da > 0.0 {
        (
            Conclusion::Unstable,
            format!("f'(0) = {d0} and f'(alpha) = {da} both positive"),
        )
    } else if d0 < 0.0 && da < 0.0 {
        (
            Conclusion::Stable,
            format!("f'(0) = {d0} and f'(alpha) = {da} both negative"),
        )
    } else {
        (
            Conclusion::Unstable,
            format!("f'(0) < 0 < f'(alpha) with 0 < n0 = {n0} < n"),
        )
    };
    let spectrum = if origin {
        vec![d0 * n as f64; n - 1]
    } else {
        let mut v = kn_eigenvalues(n, n0, d0, da)?;
        let z = v.iter().position(|&x| x == 0.0).expect("closed form contains 0");
        v.remove(z);
        v
    };
    Ok(StabilityVerdict {
        verdict: conclusion.verdict(),
        spectrum,
        evidence: vec![Evidence::new("clique", detail, conclusion)],
    })
}

/// Cycle specialisation of the one-edge test with `r⁻` from the series law.
pub fn cycle_verdict(split: &SignedSplit) -> Evidence {
    let w = split.weights();
    let nonneg: Vec<usize> = (0..w.len()).filter(|&e| w[e] >= -ZERO_DERIVATIVE).collect();
    let positive = nonneg.iter().any(|&e| w[e] > ZERO_DERIVATIVE);
    if nonneg.is_empty() {
        return Evidence::new("cycle", "all edge derivatives negative", Conclusion::Stable);
    }
    if nonneg.len() >= 2 && positive {
        return Evidence::new(
            "cycle",
            format!("{} edges with f' >= 0, one positive", nonneg.len()),
            Conclusion::Unstable,
        );
    }
    if nonneg.len() == 1 && positive {
        let e = nonneg[0];
        let series: f64 = (0..w.len()).filter(|&i| i != e).map(|i| 1.0 / w[i].abs()).sum();
        let rho = w[e] * series;
        return Evidence::new("cycle", format!("series rho = {rho:.9}"), band(rho));
    }
    Evidence::new("cycle", "largest edge derivative is zero", Conclusion::Inconclusive)
}

/// Knobs for [`classify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub tol_zero: f64,
    /// Also classify each block of the decomposition and compare.
    pub per_block: bool,
    /// Try to resolve zero modes that are tangent to a continuum of equilibria.
    pub continuum_check: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tol_zero: DEFAULT_ZERO_TOL,
            per_block: true,
            continuum_check: true,
        }
    }
}

/// Detects the `(0,…,0,α,…,α)` pattern on a clique: returns `(n0, α)`.
fn clique_pattern(s: &System, x: &[f64]) -> Option<(usize, f64)> {
    let f = s.coupling().uniform()?;
    let n = s.node_count();
    if n < 3 || !s.graph().is_complete() {
        return None;
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    if hi - lo <= tol {
        return Some((n, 0.0));
    }
    if x.iter().any(|&v| (v - lo).abs() > tol && (v - hi).abs() > tol) {
        return None;
    }
    let alpha = hi - lo;
    if f.eval(alpha).abs() > EQUILIBRIUM_TOL * (1.0 + f.derivative(alpha).abs()) {
        return None;
    }
    Some((x.iter().filter(|&&v| (v - lo).abs() <= tol).count(), alpha))
}

/// Zero modes tangent to a manifold of equilibria, with the rest of the
/// spectrum negative, make the equilibrium a Morse–Bott minimum of the
/// potential. Each zero mode is probed by stepping off along it and
/// refining back: a tangent direction lands on a nearby equilibrium within
/// `O(h²)` that has the same number of zero modes.
fn continuum_check(s: &System, x: &[f64], tol_rel: f64) -> Result<Option<Evidence>> {
    let j = s.jacobian(x);
    let eig = eigen_symmetric(&j)?;
    let thr = eig.zero_threshold(tol_rel);
    if eig.values.iter().any(|&v| v > thr) {
        return Ok(None);
    }
    // The zero eigenspace contains 𝟏; any basis of it may mix 𝟏 in, so project
    // it out and orthonormalise what is left.
    let mut zero_modes: Vec<Vec<f64>> = Vec::new();
    for i in (0..x.len()).filter(|&i| eig.values[i].abs() <= thr) {
        let mut v = mean_zero(&eig.vector(i).iter().copied().collect::<Vec<f64>>());
        for u in &zero_modes {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let vn = norm(&v);
        if vn > 1e-6 {
            zero_modes.push(v.iter().map(|a| a / vn).collect());
        }
    }
    if zero_modes.is_empty() {
        return Ok(None);
    }
    let zeros_here = zero_modes.len();
    let h = 1e-2;
    for v in &zero_modes {
        let probe: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let Ok(landed) = refine(s, &probe, 100) else {
            return Ok(None);
        };
        let drift = norm(&landed.x.iter().zip(&probe).map(|(a, b)| a - b).collect::<Vec<_>>());
        if drift > 10.0 * h * h {
            return Ok(None);
        }
        let spec = restricted_spectrum(&s.jacobian(&landed.x), tol_rel)?;
        let scale = spec.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let i = spectrum_inertia(&spec, scale, tol_rel);
        if i.positive > 0 || i.zero != zeros_here {
            return Ok(None);
        }
    }
    Ok(Some(Evidence::new(
        "equilibrium_continuum",
        format!("{zeros_here} zero mode(s) tangent to a manifold of equilibria; transverse spectrum negative"),
        Conclusion::Stable,
    )))
}

/// Runs the full ladder of criteria on an equilibrium.
pub fn classify(s: &System, eq: &Equilibrium, opts: &ClassifyOptions) -> Result<StabilityVerdict> {
    if !(eq.residual <= EQUILIBRIUM_TOL) {
        return Err(Error::ResidualTooLarge(eq.residual));
    }
    let x = &eq.x;
    let g = s.graph();
    let split = s.signed_split(x);
    let spectral = spectral_verdict(&split.jacobian(), opts.tol_zero)?;
    let mut evidence = Vec::new();

    if g.is_tree() {
        evidence.extend(tree_verdict(s, eq)?.evidence);
    }
    if g.is_cycle() {
        evidence.push(cycle_verdict(&split));
    }
    if let Some((n0, alpha)) = clique_pattern(s, x) {
        let f = s.coupling().uniform().expect("clique pattern needs a uniform coupling");
        match clique_verdict(f, alpha, g.node_count(), n0) {
            Ok(v) => evidence.extend(v.evidence),
            Err(e) => evidence.push(Evidence::new("clique", e.to_string(), Conclusion::NotApplicable)),
        }
    }

    evidence.push(connectivity_test(&split));
    evidence.push(cut_set_scan(&split));

    let reduced = if split.l_minus().is_connected() {
        let red = schur_reduce(&split, opts.tol_zero)?;
        evidence.push(red.evidence(g.node_count()));
        if red.kept.len() < g.node_count() {
            evidence.push(Evidence::new(
                "connectivity(reduced)",
                connectivity_test(&red.split).detail,
                connectivity_test(&red.split).conclusion,
            ));
        }
        red.split
    } else {
        split.clone()
    };
    let reduced_graph = reduced.graph().clone();
    evidence.push(one_edge_resistance_test(&reduced).evidence(&reduced_graph));
    match multi_edge_resistance_test(&reduced) {
        Ok(r) => evidence.push(r.evidence()),
        Err(e) => evidence.push(Evidence::new("multi_edge", e.to_string(), Conclusion::NotApplicable)),
    }
    evidence.push(resistance_pair_test(&split, None).evidence());

    if opts.per_block {
        if let Some(ev) = block_evidence(s, eq, opts, &spectral)? {
            evidence.extend(ev);
        }
    }

    let mut verdict = spectral.verdict;
    evidence.extend(spectral.evidence.iter().cloned());
    if verdict == Verdict::Inconclusive && opts.continuum_check {
        if let Some(ev) = continuum_check(s, x, opts.tol_zero)? {
            verdict = Verdict::Stable;
            evidence.push(ev);
        }
    }

    for ev in &evidence {
        if ev.conclusion.is_decisive() && ev.conclusion.verdict() != verdict {
            log::error!(
                "criterion {} concluded {:?} but the final verdict is {verdict}",
                ev.criterion,
                ev.conclusion
            );
        }
    }
    Ok(StabilityVerdict {
        verdict,
        spectrum: spectral.spectrum,
        evidence,
    })
}

/// Per-block verdicts and the check that block spectra signs add up to the
/// whole-graph signs.
fn block_evidence(
    s: &System,
    eq: &Equilibrium,
    opts: &ClassifyOptions,
    whole: &StabilityVerdict,
) -> Result<Option<Vec<Evidence>>> {
    let dec = s.graph().block_decomposition()?;
    if dec.blocks.len() < 2 {
        return Ok(None);
    }
    let inner = ClassifyOptions {
        per_block: false,
        ..*opts
    };
    let mut out = Vec::new();
    let mut total = Inertia::default();
    let mut verdicts = Vec::new();
    for (b, block) in dec.blocks.iter().enumerate() {
        let (sub, nodes) = s.restrict(&block.edges)?;
        let xb: Vec<f64> = nodes.iter().map(|&v| eq.x[v]).collect();
        let eb = Equilibrium::from_state(&sub, &xb, eq.provenance.clone());
        let v = classify(&sub, &eb, &inner)?;
        let scale = v.spectrum.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        total = total + spectrum_inertia(&v.spectrum, scale, opts.tol_zero);
        let labels: Vec<String> = block.nodes.iter().map(|v| (v + 1).to_string()).collect();
        out.push(Evidence::new(
            "block",
            format!(
                "block {} {} on nodes {}: {}",
                b + 1,
                block.label(),
                labels.join(","),
                v.verdict
            ),
            // One unstable block destabilises the whole state; a stable block alone says nothing.
            if v.verdict == Verdict::Unstable {
                Conclusion::Unstable
            } else {
                Conclusion::NoConclusion
            },
        ));
        verdicts.push(v.verdict);
    }
    let combined = if verdicts.contains(&Verdict::Unstable) {
        Verdict::Unstable
    } else if verdicts.iter().all(|&v| v == Verdict::Stable) {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    let scale = whole.spectrum.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let whole_inertia = spectrum_inertia(&whole.spectrum, scale, opts.tol_zero);
    out.push(Evidence::new(
        "coalescence",
        format!(
            "{} blocks; block spectrum signs {total}, whole-graph signs {whole_inertia}; match: {}",
            dec.blocks.len(),
            total == whole_inertia
        ),
        combined.into(),
    ));
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{clique_equilibria, Provenance};

    fn split(g: &Graph, w: &[f64]) -> SignedSplit {
        SignedSplit::from_signed_weights(g, w).unwrap()
    }

    #[test]
    fn spectral_examples() {
        let l = crate::linalg::laplacian_from_weights(&Graph::cycle(4), &[1.0; 4]).unwrap();
        let v = spectral_verdict(&l.matrix().scale(-1.0), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert_eq!(v.spectrum.len(), 3);
        assert_eq!(
            spectral_verdict(&SymMatrix::identity(2), DEFAULT_ZERO_TOL).unwrap_err(),
            Error::MissingTrivialKernel
        );
        let edge = split(&Graph::path(2), &[1.0]);
        assert_eq!(
            spectral_verdict(&edge.jacobian(), DEFAULT_ZERO_TOL).unwrap().verdict,
            Verdict::Unstable
        );
    }

    #[test]
    fn k4_stable_state_spectrum() {
        let s = System::uniform(Graph::complete(4), CouplingFunction::cubic()).unwrap();
        let v = spectral_verdict(&s.jacobian(&[0.0, 0.0, 1.0, 1.0]), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        for (a, b) in v.spectrum.iter().zip([-8.0, -2.0, -2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cut_sets() {
        let star = split(&Graph::star(3), &[1.0, 1.0, 1.0]);
        let centre: Vec<bool> = (0..4).map(|v| v == 0).collect();
        assert_eq!(cut_set_test(&star, &centre).conclusion, Conclusion::Unstable);
        let neg = split(&Graph::cycle(4), &[-1.0; 4]);
        assert_eq!(cut_set_scan(&neg).conclusion, Conclusion::NoConclusion);
        // Bridge {1,2} positive between two negative triangles.
        let g = Graph::new(6, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
        let s = split(&g, &[-1.0, -1.0, -1.0, 0.5, -1.0, -1.0, -1.0]);
        assert_eq!(cut_set_scan(&s).conclusion, Conclusion::Unstable);
    }

    #[test]
    fn connectivity_cases() {
        assert_eq!(
            connectivity_test(&split(&Graph::cycle(3), &[-1.0; 3])).conclusion,
            Conclusion::Stable
        );
        let p = split(&Graph::path(3), &[-1.0, 2.0]);
        assert_eq!(connectivity_test(&p).conclusion, Conclusion::Unstable);
        // G⁻ = {0,1} edge plus isolated node 2 and 3; positive edge {2,3} inside one side.
        let g = Graph::new(4, &[(0, 1), (2, 3), (1, 2)]).unwrap();
        let s = split(&g, &[-1.0, 1.0, 0.0]);
        assert_eq!(connectivity_test(&s).conclusion, Conclusion::Unstable);
        let s = split(&Graph::path(3), &[-1.0, 0.0]);
        assert_eq!(connectivity_test(&s).conclusion, Conclusion::NotLinearlyStable);
    }

    #[test]
    fn one_edge_cases() {
        // Positive edge {0,1} weight 1 in parallel with G⁻ path 0–2–1 of resistance 0.5.
        let g = Graph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let r = one_edge_resistance_test(&split(&g, &[1.0, -4.0, -4.0]));
        assert_eq!(r.conclusion, Conclusion::Stable);
        assert!((r.rho - 0.5).abs() < 1e-12);
        let r = one_edge_resistance_test(&split(&g, &[1.0, -1.0, -1.0]));
        assert_eq!(r.conclusion, Conclusion::Unstable);
        assert!((r.rho - 2.0).abs() < 1e-12);
        let r = one_edge_resistance_test(&split(&g, &[1.0, -2.0, -2.0]));
        assert_eq!(r.conclusion, Conclusion::Boundary);
        let r = one_edge_resistance_test(&split(&g, &[1.0, 1.0, -2.0]));
        assert_eq!(r.conclusion, Conclusion::NotApplicable);
    }

    #[test]
    fn multi_edge_cases() {
        let g = Graph::cycle(4);
        let empty = multi_edge_resistance_test(&split(&g, &[-1.0; 4])).unwrap();
        assert_eq!((empty.conclusion, empty.sum), (Conclusion::Stable, 0.0));
        let big = multi_edge_resistance_test(&split(&Graph::path(2), &[1.5])).unwrap();
        assert_eq!((big.conclusion, big.sum), (Conclusion::Unstable, f64::INFINITY));
        let g = Graph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let r = multi_edge_resistance_test(&split(&g, &[1.5, -2.0, -2.0])).unwrap();
        assert_eq!(r.conclusion, Conclusion::Unstable);
        let zero_union = SignedSplit::from_signed_weights(&Graph::path(3), &[-1.0, 0.0]).unwrap();
        assert_eq!(
            multi_edge_resistance_test(&zero_union).unwrap_err(),
            Error::DisconnectedUnion
        );
    }

    #[test]
    fn pair_test_on_extra_k4_state() {
        let s = System::uniform(Graph::complete(4), CouplingFunction::cubic()).unwrap();
        let a = 0.4_f64.sqrt();
        let sp = s.signed_split(&[0.0, 0.0, a, -a]);
        let r = resistance_pair_test(&sp, Some(&[(0, 1)]));
        assert_eq!(r.conclusion, Conclusion::Unstable);
        assert!((r.r_plus - 1.0).abs() < 1e-12);
        assert!((r.r_minus - 5.0).abs() < 1e-9);
        let neg = split(&Graph::cycle(4), &[-1.0; 4]);
        assert_eq!(resistance_pair_test(&neg, None).conclusion, Conclusion::NoConclusion);
    }

    #[test]
    fn kn_closed_forms() {
        assert_eq!(kn_eigenvalues(4, 2, 1.0, -2.0).unwrap(), vec![-8.0, -2.0, -2.0, 0.0]);
        assert_eq!(kn_eigenvalues(4, 1, 1.0, -2.0).unwrap(), vec![-8.0, 0.0, 1.0, 1.0]);
        for n in 3..9 {
            for n0 in 1..n {
                assert_eq!(kn_eigenvalues(n, n0, 0.7, -1.3).unwrap().len(), n);
            }
        }
        let (a, b) = clique_thresholds(1.0, -2.0);
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn clique_verdicts() {
        let f = CouplingFunction::cubic();
        let v = |n0| clique_verdict(&f, 1.0, 4, n0).unwrap().verdict;
        assert_eq!(v(2), Verdict::Stable);
        assert_eq!(v(1), Verdict::Unstable);
        assert_eq!(v(3), Verdict::Unstable);
        assert_eq!(v(4), Verdict::Unstable);
        let neg = CouplingFunction::odd_polynomial(&[-1.0, 1.0]).unwrap();
        assert_eq!(clique_verdict(&neg, 1.0, 4, 4).unwrap().verdict, Verdict::Stable);
        assert_eq!(clique_verdict(&neg, 1.0, 4, 2).unwrap().verdict, Verdict::Unstable);
    }

    #[test]
    fn tree_verdicts() {
        let s = System::uniform(Graph::star(3), CouplingFunction::cubic()).unwrap();
        let stable = Equilibrium::from_edges(&s, &[1.0, -1.0, 1.0], Provenance::DetailedBalance);
        assert_eq!(tree_verdict(&s, &stable).unwrap().verdict, Verdict::Stable);
        let unstable = Equilibrium::from_edges(&s, &[1.0, 0.0, 1.0], Provenance::DetailedBalance);
        assert_eq!(tree_verdict(&s, &unstable).unwrap().verdict, Verdict::Unstable);
        let lin = System::uniform(Graph::path(3), CouplingFunction::linear(-1.0).unwrap()).unwrap();
        let origin = Equilibrium::from_state(&lin, &[0.0; 3], Provenance::DetailedBalance);
        assert_eq!(tree_verdict(&lin, &origin).unwrap().verdict, Verdict::Stable);
    }

    #[test]
    fn schur_no_reduction_when_positive_edges_span() {
        // Positive path 1-2-3-4 through K4, negative edges {1,3},{1,4},{2,4}.
        let g = Graph::complete(4);
        let w = [0.1, -5.0, -5.0, 0.1, -5.0, 0.1];
        let red = schur_reduce(&split(&g, &w), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(red.kept.len(), 4);
        assert!(red.steps.is_empty());
    }

    #[test]
    fn schur_single_positive_edge() {
        let g = Graph::complete(5);
        let mut w = vec![-1.0; 10];
        w[0] = 0.3;
        let sp = split(&g, &w);
        let red = schur_reduce(&sp, DEFAULT_ZERO_TOL).unwrap();
        // The weak positive edge is swamped after two eliminations.
        assert_eq!(red.kept.len(), 1);
        assert!(red.inertia_preserved());
        let full = restricted_inertia(&sp.jacobian(), DEFAULT_ZERO_TOL).unwrap();
        let small = restricted_inertia(&red.matrix, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(full, small + Inertia::new(0, red.steps.len(), 0));
        assert_eq!(full, Inertia::new(0, 4, 0));
    }

    #[test]
    fn classify_k4_states() {
        let s = System::uniform(Graph::complete(4), CouplingFunction::cubic()).unwrap();
        let eqs = clique_equilibria(&CouplingFunction::cubic(), 4, 10.0).unwrap();
        let verdicts: Vec<(usize, Verdict)> = eqs
            .iter()
            .map(|e| {
                let n0 = match e.provenance {
                    Provenance::CliqueForm { n0, .. } => n0,
                    _ => unreachable!(),
                };
                (n0, classify(&s, e, &ClassifyOptions::default()).unwrap().verdict)
            })
            .collect();
        assert_eq!(
            verdicts,
            vec![
                (4, Verdict::Unstable),
                (3, Verdict::Unstable),
                (2, Verdict::Stable),
                (1, Verdict::Unstable)
            ]
        );
    }

    #[test]
    fn classify_triangle() {
        let s = System::uniform(Graph::cycle(3), CouplingFunction::cubic()).unwrap();
        let origin = Equilibrium::from_state(&s, &[0.0; 3], Provenance::DetailedBalance);
        assert_eq!(
            classify(&s, &origin, &ClassifyOptions::default()).unwrap().verdict,
            Verdict::Unstable
        );
        let circle = Equilibrium::from_state(&s, &[0.0, 0.0, 1.0], Provenance::DetailedBalance);
        let v = classify(&s, &circle, &ClassifyOptions::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert!(v.find("equilibrium_continuum").is_some());
        assert_eq!(v.find("cycle").unwrap().conclusion, Conclusion::Boundary);
        let strict = ClassifyOptions {
            continuum_check: false,
            ..Default::default()
        };
        assert_eq!(classify(&s, &circle, &strict).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn degenerate_zero_mode_stays_inconclusive() {
        let s = System::uniform(Graph::path(3), CouplingFunction::odd_polynomial(&[0.0, -1.0]).unwrap()).unwrap();
        let origin = Equilibrium::from_state(&s, &[0.0; 3], Provenance::DetailedBalance);
        assert_eq!(
            classify(&s, &origin, &ClassifyOptions::default()).unwrap().verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn residual_guard() {
        let s = System::uniform(Graph::path(2), CouplingFunction::cubic()).unwrap();
        let bad = Equilibrium::from_state(&s, &[0.0, 0.5], Provenance::Refined);
        assert!(matches!(
            classify(&s, &bad, &ClassifyOptions::default()),
            Err(Error::ResidualTooLarge(_))
        ));
    }
}
