//! Reproduction demos. Each study returns named checks and the artifacts it
//! produced; [`run_demo`] writes the artifacts and fails with a diff report
//! when a check does not hold.

use std::fmt::{self, Display};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use consensus_core::dynamics::{mean_zero, norm, signed_laplacian};
use consensus_core::equilibria::{
    block_detailed_balance, clique_equilibria, compose_coalescence, cycle_family, detailed_balance, refine,
    CycleFamilyResult,
};
use consensus_core::stability::{
    classify, clique_thresholds, connectivity_test, kn_eigenvalues, resistance_pair_test, restricted_inertia,
    schur_reduce, spectral_verdict, ClassifyOptions, Conclusion,
};
use consensus_core::{CouplingFunction, Graph, Inertia, SignedSplit, System, Verdict, SCHEMA};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{random_state, write_equilibria_csv};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    TreeOfMotifs,
    C3Circle,
    #[value(name = "schur-appendix-b")]
    SchurExample,
    KnEigen,
}

impl Display for DemoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DemoName::TreeOfMotifs => "tree-of-motifs",
            DemoName::C3Circle => "c3-circle",
            DemoName::SchurExample => "schur-appendix-b",
            DemoName::KnEigen => "kn-eigen",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, expected: impl Display, actual: impl Display) -> Self {
        Check {
            name: name.to_string(),
            passed,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn eq<T: PartialEq + fmt::Debug>(name: &str, expected: T, actual: T) -> Self {
        Check::new(name, expected == actual, format!("{expected:?}"), format!("{actual:?}"))
    }

    pub fn close(name: &str, expected: f64, actual: f64, tol: f64) -> Self {
        Check::new(
            name,
            (expected - actual).abs() <= tol,
            format!("{expected} ± {tol:e}"),
            format!("{actual} (|Δ| = {:.3e})", (expected - actual).abs()),
        )
    }

    pub fn at_most(name: &str, limit: f64, actual: f64) -> Self {
        Check::new(name, actual <= limit, format!("<= {limit:e}"), format!("{actual:e}"))
    }
}

/// Checks plus named text artifacts.
#[derive(Debug, Clone, Default)]
pub struct Study {
    pub checks: Vec<Check>,
    pub artifacts: Vec<(String, String)>,
}

impl Study {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn extend(&mut self, other: Study) {
        self.checks.extend(other.checks);
        self.artifacts.extend(other.artifacts);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub schema: &'static str,
    pub demo: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl DemoReport {
    pub fn diff_report(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("- {}: expected {}, got {}", c.name, c.expected, c.actual))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// The 9-node tree of motifs: a triangle on 1,2,3, bridges 3–4, 4–5, 4–6 and
/// a `K₄` on 6,7,8,9 (0-based internally).
pub fn tree_of_motifs_graph() -> Graph {
    let edges = [
        (1, 2),
        (1, 3),
        (2, 3),
        (3, 4),
        (4, 5),
        (4, 6),
        (6, 7),
        (6, 8),
        (6, 9),
        (7, 8),
        (7, 9),
        (8, 9),
    ];
    let pairs: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    Graph::new(9, &pairs).expect("valid graph")
}

/// The four `K₄` multisets of the cubic coupling, their verdicts and the
/// thresholds `a`, `b`.
pub fn k4_study() -> CliResult<Study> {
    let f = CouplingFunction::cubic();
    let s = System::uniform(Graph::complete(4), f.clone())?;
    let eqs = clique_equilibria(&f, 4, 10.0)?;
    let expected: [([f64; 4], Verdict); 4] = [
        ([0.0; 4], Verdict::Unstable),
        ([-0.25, -0.25, -0.25, 0.75], Verdict::Unstable),
        ([-0.75, 0.25, 0.25, 0.25], Verdict::Unstable),
        ([-0.5, -0.5, 0.5, 0.5], Verdict::Stable),
    ];
    let mut study = Study::default();
    study.checks.push(Check::eq("k4.state_count", 4, eqs.len()));
    let mut rows = Vec::new();
    for (multiset, verdict) in expected {
        let found = eqs
            .iter()
            .find(|e| max_abs_diff(&sorted(e.x.clone()), &multiset) <= 1e-12);
        let name = format!("k4.{multiset:?}");
        match found {
            None => study.checks.push(Check::new(&name, false, "present", "missing")),
            Some(e) => {
                let v = classify(&s, e, &ClassifyOptions::default())?;
                study
                    .checks
                    .push(Check::eq(&format!("{name}.verdict"), verdict, v.verdict));
                rows.push(serde_json::json!({
                    "x": e.x, "provenance": e.provenance, "verdict": v.verdict, "spectrum": v.spectrum,
                }));
            }
        }
    }
    let (a, b) = clique_thresholds(f.derivative(0.0), f.derivative(1.0));
    study.checks.push(Check::close("k4.a", 1.0 / 3.0, a, 1e-12));
    study.checks.push(Check::close("k4.b", 2.0 / 3.0, b, 1e-12));
    study.artifacts.push((
        "k4.json".into(),
        json(&serde_json::json!({ "schema": SCHEMA, "a": a, "b": b, "states": rows })),
    ));
    Ok(study)
}

/// The `K₄` equilibrium `(0, 0, a, −a)`, `a = √(2/5)`, which is not of
/// detailed-balance type.
pub fn non_detailed_balance_study() -> CliResult<Study> {
    let s = System::uniform(Graph::complete(4), CouplingFunction::cubic())?;
    let a = 0.4_f64.sqrt();
    let guess = [0.02, -0.03, a + 0.025, -a - 0.01];
    let eq = refine(&s, &guess, 100)?;
    let mut study = Study::default();
    study.checks.push(Check::at_most("nondb.residual", 1e-10, eq.residual));
    study.checks.push(Check::at_most(
        "nondb.multiset",
        1e-8,
        max_abs_diff(&sorted(eq.x.clone()), &[-a, 0.0, 0.0, a]),
    ));
    // The two nodes sitting at 0.
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&i, &j| eq.x[i].abs().total_cmp(&eq.x[j].abs()));
    let pair = (idx[0].min(idx[1]), idx[0].max(idx[1]));
    let split = s.signed_split(&eq.x);
    let r = resistance_pair_test(&split, Some(&[pair]));
    study.checks.push(Check::close("nondb.r_plus", 1.0, r.r_plus, 1e-8));
    study.checks.push(Check::close("nondb.r_minus", 5.0, r.r_minus, 1e-8));
    study
        .checks
        .push(Check::eq("nondb.pair_conclusion", Conclusion::Unstable, r.conclusion));
    let v = classify(&s, &eq, &ClassifyOptions::default())?;
    study
        .checks
        .push(Check::eq("nondb.verdict", Verdict::Unstable, v.verdict));
    study.artifacts.push((
        "non_detailed_balance.json".into(),
        json(&serde_json::json!({
            "schema": SCHEMA, "x": eq.x, "residual": eq.residual,
            "pair": [pair.0 + 1, pair.1 + 1], "r_plus": r.r_plus, "r_minus": r.r_minus,
            "verdict": v.verdict, "evidence": v.evidence,
        })),
    ));
    Ok(study)
}

/// Block decomposition of the 9-node example, per-block equilibrium sets, the
/// composed set and its stable/unstable split.
pub fn tree_of_motifs_study() -> CliResult<Study> {
    let g = tree_of_motifs_graph();
    let s = System::uniform(g.clone(), CouplingFunction::cubic())?;
    let dec = g.block_decomposition()?;
    let mut study = Study::default();
    let labels: Vec<String> = dec.blocks.iter().map(|b| b.label()).collect();
    study.checks.push(Check::eq(
        "motifs.blocks",
        vec!["Cycle(3)", "TreeEdge", "TreeEdge", "TreeEdge", "Complete(4)"],
        labels.iter().map(String::as_str).collect(),
    ));
    study
        .checks
        .push(Check::eq("motifs.motif_count", 3, dec.motif_count(&g)));
    study.checks.push(Check::eq(
        "motifs.cut_nodes",
        vec![3, 4, 6],
        dec.cut_nodes.iter().map(|v| v + 1).collect(),
    ));

    let per_block = block_detailed_balance(&s, &dec, 10.0, 1_000_000)?;
    let sizes: Vec<usize> = per_block.iter().map(Vec::len).collect();
    study.checks.push(Check::eq("motifs.P1_cycle", 7, sizes[0]));
    study
        .checks
        .push(Check::eq("motifs.P2_tree", 27, sizes[1] * sizes[2] * sizes[3]));
    study.checks.push(Check::eq("motifs.P3_clique", 15, sizes[4]));
    let comp = compose_coalescence(&s, &dec, &per_block)?;
    study
        .checks
        .push(Check::eq("motifs.composed_count", 2835u128, comp.count()));

    // Snap to a 1e-9 grid (and -0.0 to 0.0) so the lexicographic sorts agree.
    let canon = |y: Vec<f64>| {
        y.into_iter()
            .map(|v| (v * 1e9).round() / 1e9 + 0.0)
            .collect::<Vec<f64>>()
    };
    let mut composed: Vec<Vec<f64>> = comp.edge_tuples().map(canon).collect();
    let mut whole: Vec<Vec<f64>> = detailed_balance(&s, 10.0, 1_000_000)?
        .into_iter()
        .map(|e| canon(e.y))
        .collect();
    let lex = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    composed.sort_by(lex);
    whole.sort_by(lex);
    let same = composed.len() == whole.len() && composed.iter().zip(&whole).all(|(a, b)| max_abs_diff(a, b) <= 1e-9);
    study.checks.push(Check::new(
        "motifs.composed_equals_whole",
        same,
        format!("{} whole-graph detailed-balance states", whole.len()),
        format!("{} composed states, equal: {same}", composed.len()),
    ));

    // Per-block verdicts predict the verdict of every composed state.
    let opts = ClassifyOptions {
        per_block: false,
        ..Default::default()
    };
    let mut block_verdicts = Vec::new();
    for (b, eqs) in dec.blocks.iter().zip(&per_block) {
        let (sub, _) = s.restrict(&b.edges)?;
        let v = eqs
            .iter()
            .map(|e| classify(&sub, e, &opts).map(|v| v.verdict))
            .collect::<Result<Vec<_>, _>>()?;
        block_verdicts.push(v);
    }
    let stable_per_block: Vec<usize> = block_verdicts
        .iter()
        .map(|v| v.iter().filter(|&&x| x == Verdict::Stable).count())
        .collect();
    study.checks.push(Check::eq(
        "motifs.stable_per_block",
        vec![6, 2, 2, 2, 6],
        stable_per_block.clone(),
    ));

    let states: Vec<_> = comp.iter().collect();
    let verdicts = states
        .par_iter()
        .map(|e| classify(&s, e, &opts).map(|v| v.verdict))
        .collect::<Result<Vec<_>, _>>()?;
    let mut mismatches = 0;
    for (index, v) in verdicts.iter().enumerate() {
        let mut rest = index;
        let mut predicted = Verdict::Stable;
        for b in (0..per_block.len()).rev() {
            let d = rest % per_block[b].len();
            rest /= per_block[b].len();
            match block_verdicts[b][d] {
                Verdict::Unstable => predicted = Verdict::Unstable,
                Verdict::Inconclusive if predicted == Verdict::Stable => predicted = Verdict::Inconclusive,
                _ => {}
            }
        }
        if predicted != *v {
            mismatches += 1;
        }
    }
    let count = |x: Verdict| verdicts.iter().filter(|&&v| v == x).count();
    study
        .checks
        .push(Check::eq("motifs.P_minus_stable", 288, count(Verdict::Stable)));
    study
        .checks
        .push(Check::eq("motifs.P_plus_unstable", 2547, count(Verdict::Unstable)));
    study
        .checks
        .push(Check::eq("motifs.inconclusive", 0, count(Verdict::Inconclusive)));
    study
        .checks
        .push(Check::eq("motifs.block_prediction_mismatches", 0, mismatches));

    let mut csv_buf = Vec::new();
    write_equilibria_csv(&mut csv_buf, &states)?;
    let mut verdict_csv = String::from("id,verdict\n");
    for (i, v) in verdicts.iter().enumerate() {
        verdict_csv.push_str(&format!("{},{v}\n", i + 1));
    }
    study.artifacts.push(("blocks.dot".into(), g.to_dot(Some(&dec))));
    study
        .artifacts
        .push(("equilibria.csv".into(), String::from_utf8(csv_buf).expect("utf8")));
    study.artifacts.push(("verdicts.csv".into(), verdict_csv));
    study.artifacts.push((
        "motifs.json".into(),
        json(&serde_json::json!({
            "schema": SCHEMA,
            "summary": dec.summary(&g),
            "block_state_counts": sizes,
            "block_stable_counts": stable_per_block,
            "composed": comp.count().to_string(),
            "stable": count(Verdict::Stable),
            "unstable": count(Verdict::Unstable),
        })),
    ));
    Ok(study)
}

/// Radius `√(2/3)` of the cubic `C₃` circle.
pub fn c3_radius() -> f64 {
    (2.0_f64 / 3.0).sqrt()
}

/// Family samples and simulated terminal states of the cubic `C₃`.
pub fn c3_circle_study(seed: u64, trajectories: usize) -> CliResult<Study> {
    let s = System::uniform(Graph::cycle(3), CouplingFunction::cubic())?;
    let mut study = Study::default();
    let family = match cycle_family(&s, 10.0)? {
        CycleFamilyResult::Family(f) => f,
        CycleFamilyResult::Empty(why) => {
            study.checks.push(Check::new("c3.family", false, "nonempty", why));
            return Ok(study);
        }
    };
    let samples = family.sample(50)?;
    let worst_radius = samples
        .iter()
        .map(|e| (norm(&e.x) - c3_radius()).abs())
        .fold(0.0, f64::max);
    let worst_residual = samples.iter().map(|e| e.residual).fold(0.0, f64::max);
    study
        .checks
        .push(Check::at_most("c3.family_radius_error", 1e-4, worst_radius));
    study
        .checks
        .push(Check::at_most("c3.family_residual", 1e-8, worst_residual));

    let mut terminal = String::from("run,x1,x2,x3,radius\n");
    let mut worst_terminal: f64 = 0.0;
    for k in 0..trajectories {
        let x0 = random_state(3, seed.wrapping_add(k as u64));
        let traj = s.integrate(&x0, 40.0, 1e-2)?;
        let x = mean_zero(traj.final_state());
        let r = norm(&x);
        worst_terminal = worst_terminal.max((r - c3_radius()).abs());
        terminal.push_str(&format!("{},{},{},{},{r}\n", k + 1, x[0], x[1], x[2]));
    }
    study
        .checks
        .push(Check::at_most("c3.terminal_radius_error", 1e-4, worst_terminal));

    let origin = consensus_core::Equilibrium::from_state(&s, &[0.0; 3], consensus_core::Provenance::DetailedBalance);
    let v = classify(&s, &origin, &ClassifyOptions::default())?;
    study
        .checks
        .push(Check::eq("c3.origin_verdict", Verdict::Unstable, v.verdict));

    let mut fam_csv = String::from("lambda,x1,x2,x3,radius,residual\n");
    for e in &samples {
        if let consensus_core::Provenance::CycleFamily { lambda } = e.provenance {
            fam_csv.push_str(&format!(
                "{lambda},{},{},{},{},{:e}\n",
                e.x[0],
                e.x[1],
                e.x[2],
                norm(&e.x),
                e.residual
            ));
        }
    }
    study.artifacts.push(("family.csv".into(), fam_csv));
    study.artifacts.push(("terminal.csv".into(), terminal));
    Ok(study)
}

/// Nonempty families on `C₃` and `C₆`, none on `C₄`.
pub fn continuum_study() -> CliResult<Study> {
    let mut study = Study::default();
    let mut rows = Vec::new();
    for n in [3usize, 4, 6] {
        let s = System::uniform(Graph::cycle(n), CouplingFunction::cubic())?;
        match cycle_family(&s, 10.0)? {
            CycleFamilyResult::Family(f) => {
                let samples = f.sample(50)?;
                let worst = samples.iter().map(|e| e.residual).fold(0.0, f64::max);
                study
                    .checks
                    .push(Check::eq(&format!("continuum.C{n}.nonempty"), n != 4, true));
                study
                    .checks
                    .push(Check::at_most(&format!("continuum.C{n}.residual"), 1e-8, worst));
                rows.push(serde_json::json!({"n": n, "interval": f.interval(), "worst_residual": worst}));
            }
            CycleFamilyResult::Empty(why) => {
                study
                    .checks
                    .push(Check::eq(&format!("continuum.C{n}.nonempty"), n != 4, false));
                rows.push(serde_json::json!({"n": n, "empty": why}));
            }
        }
    }
    study.artifacts.push((
        "continuum.json".into(),
        json(&serde_json::json!({"schema": SCHEMA, "cycles": rows})),
    ));
    Ok(study)
}

/// Signed weights of the 5-node instance, 1-based pairs.
pub const SCHUR_EXAMPLE_WEIGHTS: [(usize, usize, f64); 8] = [
    (1, 2, 1.0),
    (1, 3, 1.0),
    (3, 4, 0.5),
    (3, 5, -2.0),
    (4, 5, -2.0),
    (1, 4, -1.0),
    (2, 4, -1.0),
    (2, 3, -1.0),
];

pub fn schur_example_split() -> SignedSplit {
    let pairs: Vec<(usize, usize)> = SCHUR_EXAMPLE_WEIGHTS.iter().map(|&(a, b, _)| (a - 1, b - 1)).collect();
    let g = Graph::new(5, &pairs).expect("valid graph");
    let w: Vec<f64> = SCHUR_EXAMPLE_WEIGHTS.iter().map(|&(_, _, w)| w).collect();
    SignedSplit::from_signed_weights(&g, &w).expect("weights match edges")
}

/// Node-by-node Schur reduction of the 5-node instance.
pub fn schur_example_study() -> CliResult<Study> {
    let split = schur_example_split();
    let red = schur_reduce(&split, 1e-9)?;
    let mut study = Study::default();
    study.checks.push(Check::eq(
        "schur.kept",
        vec![1, 2, 3],
        red.kept.iter().map(|v| v + 1).collect(),
    ));
    study.checks.push(Check::eq(
        "schur.removed_order",
        vec![5, 4],
        red.steps.iter().map(|s| s.removed + 1).collect(),
    ));
    for (i, st) in red.steps.iter().enumerate() {
        study.checks.push(Check::new(
            &format!("schur.step{}.inertia", i + 1),
            st.preserved,
            format!("{} = {} + (0, 1, 0)", st.inertia_before, st.inertia_after),
            format!("{} vs {}", st.inertia_before, st.inertia_after),
        ));
    }
    let g = red.split.graph();
    let expected = [((0, 1), 0.6), ((0, 2), 0.8), ((1, 2), -1.2)];
    for ((a, b), w) in expected {
        let got = g.edge_index(a, b).map_or(f64::NAN, |e| red.split.weights()[e]);
        study.checks.push(Check::close(
            &format!("schur.reduced_weight.{{{},{}}}", a + 1, b + 1),
            w,
            got,
            1e-12,
        ));
    }
    let full = restricted_inertia(&split.jacobian(), 1e-9)?;
    let small = restricted_inertia(&red.matrix, 1e-9)?;
    study.checks.push(Check::eq(
        "schur.total_inertia",
        full,
        small + Inertia::new(0, red.steps.len(), 0),
    ));
    let conn = connectivity_test(&red.split);
    study.checks.push(Check::eq(
        "schur.reduced_connectivity",
        Conclusion::Unstable,
        conn.conclusion,
    ));
    let spectral = spectral_verdict(&split.jacobian(), 1e-9)?;
    study
        .checks
        .push(Check::eq("schur.spectral_verdict", Verdict::Unstable, spectral.verdict));
    study.artifacts.push(("graph.dot".into(), split.graph().to_dot(None)));
    study.artifacts.push((
        "reduction.json".into(),
        json(&serde_json::json!({
            "schema": SCHEMA,
            "kept": red.kept.iter().map(|v| v + 1).collect::<Vec<_>>(),
            "steps": red.steps.iter().map(|s| serde_json::json!({
                "removed": s.removed + 1, "pivot": s.pivot,
                "inertia_before": s.inertia_before.to_string(), "inertia_after": s.inertia_after.to_string(),
                "preserved": s.preserved,
            })).collect::<Vec<_>>(),
            "reduced_edges": g.edges().iter().zip(red.split.weights())
                .map(|(&(a, b), w)| serde_json::json!([a + 1, b + 1, w])).collect::<Vec<_>>(),
            "reduced_connectivity": conn,
            "verdict": spectral.verdict,
        })),
    ));
    Ok(study)
}

/// Closed-form `K_n` spectra against a dense eigen-solver.
pub fn kn_eigen_study(seed: u64, pairs: usize) -> CliResult<Study> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = String::from("n,n0,d0,da,max_abs_diff\n");
    let mut worst: f64 = 0.0;
    for n in 3..=8 {
        let g = Graph::complete(n);
        for n0 in 1..n {
            for _ in 0..pairs {
                let d0 = rng.gen_range(0.05..5.0);
                let da = -rng.gen_range(0.05..5.0);
                let w: Vec<f64> = g
                    .edges()
                    .iter()
                    .map(|&(a, b)| if (a < n0) == (b < n0) { d0 } else { da })
                    .collect();
                let j = signed_laplacian(&g, &w);
                let oracle = sorted(
                    SymmetricEigen::new(j.as_matrix().clone())
                        .eigenvalues
                        .iter()
                        .copied()
                        .collect(),
                );
                let closed = kn_eigenvalues(n, n0, d0, da)?;
                let diff = max_abs_diff(&closed, &oracle);
                worst = worst.max(diff);
                table.push_str(&format!("{n},{n0},{d0},{da},{diff:e}\n"));
            }
        }
    }
    let mut study = Study::default();
    study.checks.push(Check::at_most("kn.max_abs_diff", 1e-9, worst));
    study.artifacts.push(("kn_eigen.csv".into(), table));
    Ok(study)
}

pub fn study(name: DemoName, seed: u64) -> CliResult<Study> {
    match name {
        DemoName::TreeOfMotifs => {
            let mut s = tree_of_motifs_study()?;
            s.extend(k4_study()?);
            s.extend(non_detailed_balance_study()?);
            Ok(s)
        }
        DemoName::C3Circle => {
            let mut s = c3_circle_study(seed, 20)?;
            s.extend(continuum_study()?);
            Ok(s)
        }
        DemoName::SchurExample => schur_example_study(),
        DemoName::KnEigen => kn_eigen_study(seed, 50),
    }
}

/// Runs a demo, writes its artifacts and `report.json` under `out`, and
/// returns [`CliError::DemoFailed`] when any check fails.
pub fn run_demo(name: DemoName, out: &Path, seed: u64) -> CliResult<DemoReport> {
    let start = Instant::now();
    let st = study(name, seed)?;
    let seconds = start.elapsed().as_secs_f64();
    fs::create_dir_all(out)?;
    let mut artifacts = Vec::new();
    for (file, body) in &st.artifacts {
        let p = out.join(file);
        fs::write(&p, body)?;
        artifacts.push(p);
    }
    let report = DemoReport {
        schema: SCHEMA,
        demo: name.to_string(),
        passed: st.passed(),
        seconds,
        checks: st.checks,
        artifacts,
    };
    fs::write(out.join("report.json"), json(&report))?;
    if !report.passed {
        return Err(CliError::DemoFailed(report.diff_report()));
    }
    Ok(report)
}
