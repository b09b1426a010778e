//! The four data commands. Each returns a structured result; the binary only
//! decides where to write it.

use std::io::{Read, Write};

use consensus_core::dynamics::{mean, mean_zero, norm};
use consensus_core::equilibria::{compose_coalescence, cycle_family, dedup, detailed_balance, EQUILIBRIUM_TOL};
use consensus_core::stability::{classify, ClassifyOptions, Evidence};
use consensus_core::{
    BlockDecomposition, Equilibrium, Error as CoreError, Graph, Provenance, System, Trajectory, Verdict, SCHEMA,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Globals {
    pub tol_zero: f64,
    pub root_bound: f64,
    pub max_states: usize,
}

impl Default for Globals {
    fn default() -> Self {
        Globals {
            tol_zero: 1e-9,
            root_bound: 10.0,
            max_states: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub label: String,
    pub nodes: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub schema: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub cycle_space_dim: usize,
    pub cut_space_dim: usize,
    pub summary: String,
    pub motifs: usize,
    pub cut_nodes: Vec<usize>,
    pub blocks: Vec<BlockReport>,
}

impl AnalyzeReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "nodes: {}\nedges: {}\ncycle space dim: {}\ncut space dim: {}\n{}\n",
            self.nodes, self.edges, self.cycle_space_dim, self.cut_space_dim, self.summary
        );
        for (i, b) in self.blocks.iter().enumerate() {
            let nodes: Vec<String> = b.nodes.iter().map(ToString::to_string).collect();
            s.push_str(&format!(
                "  block {}: {} on nodes {}\n",
                i + 1,
                b.label,
                nodes.join(",")
            ));
        }
        s
    }
}

/// Graph statistics and block decomposition, 1-based.
pub fn analyze(g: &Graph) -> CliResult<(AnalyzeReport, BlockDecomposition)> {
    let c = g.component_count();
    if c != 1 {
        return Err(CliError::Disconnected(c));
    }
    let dec = g.block_decomposition()?;
    let blocks = dec
        .blocks
        .iter()
        .map(|b| BlockReport {
            label: b.label(),
            nodes: b.nodes.iter().map(|v| v + 1).collect(),
            edges: b
                .edges
                .iter()
                .map(|&e| {
                    let (a, b) = g.edge(e);
                    [a + 1, b + 1]
                })
                .collect(),
        })
        .collect();
    let n = g.node_count();
    let m = g.edge_count();
    let report = AnalyzeReport {
        schema: SCHEMA,
        nodes: n,
        edges: m,
        cycle_space_dim: m + 1 - n,
        cut_space_dim: n - 1,
        summary: dec.summary(g),
        motifs: dec.motif_count(g),
        cut_nodes: dec.cut_nodes.iter().map(|v| v + 1).collect(),
        blocks,
    };
    Ok((report, dec))
}

/// Equilibria of every block (detailed balance, plus cycle-family samples on
/// cycle blocks), composed over the block decomposition.
pub fn enumerate(s: &System, globals: &Globals, lambda_samples: usize) -> CliResult<Vec<Equilibrium>> {
    let dec = s.graph().block_decomposition()?;
    let mut per_block = Vec::with_capacity(dec.blocks.len());
    for b in &dec.blocks {
        let (sub, _) = s.restrict(&b.edges)?;
        let mut eqs = detailed_balance(&sub, globals.root_bound, globals.max_states)?;
        if lambda_samples > 0 && sub.graph().is_cycle() {
            match cycle_family(&sub, globals.root_bound) {
                Ok(res) => {
                    if let Some(fam) = res.family() {
                        // Family members go first so a member that is also a
                        // detailed-balance state keeps its family tag.
                        let mut all = fam.sample(lambda_samples)?;
                        all.extend(eqs);
                        eqs = dedup(all, 1e-9);
                        eqs.sort_by_key(|e| matches!(e.provenance, Provenance::CycleFamily { .. }));
                    }
                }
                Err(CoreError::NotPolynomial) => log::info!("no cycle family sampler for a non-polynomial coupling"),
                Err(e) => return Err(e.into()),
            }
        }
        per_block.push(eqs);
    }
    let comp = compose_coalescence(s, &dec, &per_block)?;
    let count = comp.count();
    if count > globals.max_states as u128 {
        return Err(CliError::Blowup(CoreError::CombinatorialBlowup {
            count: count as f64,
            cap: globals.max_states,
        }));
    }
    // One block: keep the block's own provenance tags.
    if dec.blocks.len() == 1 {
        return Ok(per_block.pop().expect("one block"));
    }
    Ok(comp.iter().collect())
}

pub fn write_equilibria_csv<W: Write>(w: W, eqs: &[Equilibrium]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = eqs.first().map_or(0, |e| e.x.len());
    let mut header = vec!["id".to_string(), "provenance".to_string(), "residual".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    out.write_record(&header)?;
    for (i, e) in eqs.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            e.provenance.to_string(),
            format!("{:e}", e.residual),
        ];
        row.extend(e.x.iter().map(|v| v.to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of the `Display` form of [`Provenance`].
pub fn parse_provenance(s: &str) -> Provenance {
    let arg = |key: &str| -> Option<f64> {
        let start = s.find(&format!("{key}="))? + key.len() + 1;
        let rest = &s[start..];
        let end = rest.find([',', ')']).unwrap_or(rest.len());
        rest[..end].parse().ok()
    };
    if s == "detailed_balance" {
        Provenance::DetailedBalance
    } else if s == "composed" {
        Provenance::Composed
    } else if s.starts_with("cycle_family") {
        Provenance::CycleFamily {
            lambda: arg("lambda").unwrap_or(f64::NAN),
        }
    } else if s.starts_with("clique_form") {
        Provenance::CliqueForm {
            n0: arg("n0").map_or(0, |v| v as usize),
            alpha: arg("alpha").unwrap_or(f64::NAN),
            complete: !s.ends_with("[incomplete]"),
        }
    } else {
        Provenance::Refined
    }
}

/// Reads states written by [`write_equilibria_csv`]; residuals are recomputed.
pub fn read_equilibria_csv<R: Read>(s: &System, r: R) -> CliResult<Vec<Equilibrium>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let xcols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    if xcols.len() != s.node_count() {
        return Err(CliError::Schema(format!(
            "states file has {} node columns for {} nodes",
            xcols.len(),
            s.node_count()
        )));
    }
    let prov_col = headers.iter().position(|h| h == "provenance");
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let x = xcols
            .iter()
            .map(|&c| {
                rec[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Schema(format!("bad value '{}': {e}", &rec[c])))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        let prov = prov_col.map_or(Provenance::Refined, |c| parse_provenance(&rec[c]));
        out.push(Equilibrium::from_state(s, &x, prov));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedState {
    pub id: usize,
    pub x: Vec<f64>,
    pub provenance: Provenance,
    pub residual: f64,
    pub verdict: Verdict,
    pub spectrum: Vec<f64>,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub schema: &'static str,
    pub stable: usize,
    pub unstable: usize,
    pub inconclusive: usize,
    pub states: Vec<ClassifiedState>,
}

/// Classifies every state; fails before doing any work if one of them is not
/// an equilibrium.
pub fn classify_states(
    s: &System,
    eqs: &[Equilibrium],
    globals: &Globals,
    per_block: bool,
) -> CliResult<ClassifyReport> {
    if let Some((i, e)) = eqs.iter().enumerate().find(|(_, e)| !(e.residual <= EQUILIBRIUM_TOL)) {
        return Err(CliError::Residual(format!(
            "state {} has residual {:e} > {EQUILIBRIUM_TOL:e}",
            i + 1,
            e.residual
        )));
    }
    let opts = ClassifyOptions {
        tol_zero: globals.tol_zero,
        per_block,
        ..Default::default()
    };
    let states = eqs
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let v = classify(s, e, &opts)?;
            Ok(ClassifiedState {
                id: i + 1,
                x: e.x.clone(),
                provenance: e.provenance.clone(),
                residual: e.residual,
                verdict: v.verdict,
                spectrum: v.spectrum,
                evidence: v.evidence,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let count = |v: Verdict| states.iter().filter(|s| s.verdict == v).count();
    Ok(ClassifyReport {
        schema: SCHEMA,
        stable: count(Verdict::Stable),
        unstable: count(Verdict::Unstable),
        inconclusive: count(Verdict::Inconclusive),
        states,
    })
}

/// Uniform random initial state in `[-1, 1]^n`.
pub fn random_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestEquilibrium {
    pub x: Vec<f64>,
    pub provenance: Provenance,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub schema: &'static str,
    pub steps: usize,
    pub t_end: f64,
    pub blew_up: bool,
    /// Largest `|mean(x(t)) − mean(x0)|`.
    pub mean_drift: f64,
    /// Largest single-step increase of the potential; absent without one.
    pub max_potential_increase: Option<f64>,
    pub terminal_residual: f64,
    /// Norm of the terminal state in the mean-zero plane.
    pub terminal_radius: f64,
    pub terminal_state: Vec<f64>,
    pub nearest_equilibrium: Option<NearestEquilibrium>,
}

pub fn simulate(
    s: &System,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    globals: &Globals,
) -> CliResult<(Trajectory, SimulationSummary)> {
    let traj = s.integrate(x0, t_end, dt)?;
    let m0 = mean(x0);
    let mean_drift = traj.states.iter().map(|x| (mean(x) - m0).abs()).fold(0.0, f64::max);
    let max_potential_increase = if s.has_potential() && !traj.blew_up {
        let v: Vec<f64> = traj.states.iter().map(|x| s.potential(x)).collect::<Result<_, _>>()?;
        Some(
            v.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0),
        )
    } else {
        None
    };
    let last = traj.final_state().to_vec();
    let terminal_residual = if traj.blew_up {
        f64::INFINITY
    } else {
        norm(&s.vector_field(&last))
    };
    let centred = mean_zero(&last);
    let nearest = if traj.blew_up {
        None
    } else {
        match enumerate(s, globals, 0) {
            Ok(eqs) => eqs
                .into_iter()
                .map(|e| {
                    let d = norm(&e.x.iter().zip(&centred).map(|(a, b)| a - b).collect::<Vec<_>>());
                    NearestEquilibrium {
                        x: e.x,
                        provenance: e.provenance,
                        distance: d,
                    }
                })
                .min_by(|a, b| a.distance.total_cmp(&b.distance)),
            Err(e) => {
                log::warn!("no equilibrium catalogue for the summary: {e}");
                None
            }
        }
    };
    let summary = SimulationSummary {
        schema: SCHEMA,
        steps: traj.len().saturating_sub(1),
        t_end: traj.final_time(),
        blew_up: traj.blew_up,
        mean_drift,
        max_potential_increase,
        terminal_residual,
        terminal_radius: norm(&centred),
        terminal_state: last,
        nearest_equilibrium: nearest,
    };
    Ok((traj, summary))
}
