//! End-to-end acceptance suite: one line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use consensus_core::dynamics::{mean, mean_zero, norm};
use consensus_core::equilibria::{
    block_detailed_balance, compose_coalescence, detailed_balance, refine, Equilibrium, REFINE_TOL,
};
use consensus_core::linalg::{max_generalized_rayleigh, WeightedLaplacian};
use consensus_core::stability::{
    connectivity_test, cut_set_scan, cycle_verdict, multi_edge_resistance_test, one_edge_resistance_test,
    resistance_pair_test, restricted_inertia, schur_reduce, spectral_verdict, tree_verdict, Conclusion,
};
use consensus_core::{CouplingAssignment, CouplingFunction, Graph, Inertia, SymMatrix, System};
use consensus_lab::demo::{
    c3_circle_study, continuum_study, k4_study, kn_eigen_study, non_detailed_balance_study, schur_example_study, Study,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn from_study(st: consensus_lab::CliResult<Study>, extra: &str) -> Outcome {
    let st = st.map_err(|e| e.to_string())?;
    if st.passed() {
        Ok(format!("{} checks{extra}", st.checks.len()))
    } else {
        Err(st
            .failures()
            .iter()
            .map(|c| format!("{}: expected {}, got {}", c.name, c.expected, c.actual))
            .collect::<Vec<_>>()
            .join("; "))
    }
}

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Graph {
    let mut pairs = BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        pairs.insert((a.min(b), a.max(b)));
    }
    let max_edges = n * (n - 1) / 2;
    let target = (n - 1 + extra).min(max_edges);
    while pairs.len() < target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    Graph::new(n, &pairs).expect("valid pairs")
}

/// Odd cubic `c1·y + c3·y³` with roots `0, ±√(−c1/c3)`, or quintic
/// `c·y(r1² − y²)(r2² − y²)` with five simple roots.
fn random_odd_polynomial(rng: &mut ChaCha8Rng, quintic: bool) -> CouplingFunction {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let coeffs = if quintic {
        let c = sign * rng.gen_range(0.2..1.0);
        let r1: f64 = rng.gen_range(0.5..1.0);
        let r2: f64 = rng.gen_range(r1 + 0.4..2.0);
        let (a, b) = (r1 * r1, r2 * r2);
        vec![c * a * b, -c * (a + b), c]
    } else {
        vec![sign * rng.gen_range(0.3..2.0), -sign * rng.gen_range(0.3..2.0)]
    };
    CouplingFunction::odd_polynomial(&coeffs).expect("odd")
}

/// Cubic `c1·y − c3·y³` with `c3 > 0`, so the potential is coercive and
/// trajectories stay bounded whatever the sign of `c1`.
fn bounded_cubic(rng: &mut ChaCha8Rng) -> CouplingFunction {
    let c1 = rng.gen_range(-2.0..2.0);
    let c3 = rng.gen_range(0.3..2.0);
    CouplingFunction::odd_polynomial(&[c1, -c3]).expect("odd")
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let out = from_study(k4_study(), "");
    let secs = t.elapsed().as_secs_f64();
    match out {
        Ok(s) if secs < 1.0 => Ok(format!("{s}, {secs:.3} s")),
        Ok(_) => Err(format!("runtime {secs:.3} s >= 1 s")),
        e => e,
    }
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let out = from_study(c3_circle_study(7, 20), " over 50 family samples and 20 trajectories");
    let secs = t.elapsed().as_secs_f64();
    match out {
        Ok(s) if secs < 5.0 => Ok(format!("{s}, {secs:.3} s")),
        Ok(_) => Err(format!("runtime {secs:.3} s >= 5 s")),
        e => e,
    }
}

/// Every decisive conclusion a criterion reaches on `split`-level data must
/// match the bare spectral verdict.
fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut equilibria = 0;
    let mut decisive = 0;
    let mut disagreements = Vec::new();
    let mut tight = 0;
    for inst in 0..500 {
        let quintic = inst % 5 == 4;
        let n = if quintic {
            rng.gen_range(3..=6)
        } else {
            rng.gen_range(3..=10)
        };
        let extra = rng.gen_range(0..=3);
        let g = random_connected_graph(&mut rng, n, extra);
        let coupling: CouplingAssignment = if rng.gen_bool(0.3) {
            CouplingAssignment::PerEdge(
                (0..g.edge_count())
                    .map(|_| random_odd_polynomial(&mut rng, quintic))
                    .collect(),
            )
        } else {
            random_odd_polynomial(&mut rng, quintic).into()
        };
        let s = System::new(g.clone(), coupling).map_err(|e| e.to_string())?;
        let mut eqs: Vec<Equilibrium> = match detailed_balance(&s, 10.0, 200_000) {
            Ok(mut db) => {
                db.shuffle(&mut rng);
                db.truncate(3);
                db
            }
            Err(_) => Vec::new(),
        };
        for _ in 0..2 {
            let guess: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            if let Ok(e) = refine(&s, &guess, 100) {
                if e.residual <= REFINE_TOL {
                    eqs.push(e);
                }
            }
        }
        for eq in &eqs {
            equilibria += 1;
            let split = s.signed_split(&eq.x);
            let truth = spectral_verdict(&split.jacobian(), 1e-9)
                .map_err(|e| e.to_string())?
                .verdict;
            let mut found: Vec<(&str, Conclusion)> = vec![
                ("connectivity", connectivity_test(&split).conclusion),
                ("cut_set", cut_set_scan(&split).conclusion),
                ("resistance_pair", resistance_pair_test(&split, None).conclusion),
            ];
            let one = one_edge_resistance_test(&split);
            found.push(("one_edge", one.conclusion));
            if one.edge.is_some() && (one.rho - 1.0).abs() > 1e-3 {
                tight += 1;
                if one.conclusion.verdict() != truth {
                    disagreements.push(format!("instance {inst}: one-edge not tight (rho = {})", one.rho));
                }
            }
            if let Ok(m) = multi_edge_resistance_test(&split) {
                found.push(("multi_edge", m.conclusion));
            }
            if g.is_tree() {
                let v = tree_verdict(&s, eq).map_err(|e| e.to_string())?;
                found.push(("tree", v.evidence[0].conclusion));
            }
            if g.is_cycle() {
                found.push(("cycle", cycle_verdict(&split).conclusion));
            }
            if split.l_minus().is_connected() {
                let red = schur_reduce(&split, 1e-9).map_err(|e| e.to_string())?;
                if !red.inertia_preserved() {
                    disagreements.push(format!("instance {inst}: Schur step changed the inertia"));
                }
                found.push(("reduced connectivity", connectivity_test(&red.split).conclusion));
                found.push(("reduced one_edge", one_edge_resistance_test(&red.split).conclusion));
                if let Ok(m) = multi_edge_resistance_test(&red.split) {
                    found.push(("reduced multi_edge", m.conclusion));
                }
            }
            for (name, c) in found {
                if c.is_decisive() {
                    decisive += 1;
                    if c.verdict() != truth {
                        disagreements.push(format!("instance {inst}: {name} says {c:?}, spectrum says {truth}"));
                    }
                }
            }
        }
    }
    if !disagreements.is_empty() {
        return Err(format!(
            "{} disagreements: {}",
            disagreements.len(),
            disagreements[..disagreements.len().min(5)].join("; ")
        ));
    }
    if tight == 0 {
        return Err("one-edge test never applied away from rho = 1".into());
    }
    Ok(format!(
        "500 instances, {equilibria} equilibria, {decisive} decisive criterion verdicts, 0 disagreements, one-edge tight on {tight}"
    ))
}

fn random_psd(rng: &mut ChaCha8Rng, k: usize, rank: usize) -> DMatrix<f64> {
    let q = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..rank {
        let col = q.column(i);
        m += rng.gen_range(0.1..10.0) * col * col.transpose();
    }
    (&m + m.transpose()) * 0.5
}

/// `max_{x ⊥ ker A} xᵀB†x / xᵀA†x` computed independently with nalgebra.
fn dual_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let eb = SymmetricEigen::new(b.clone());
    let b_scale = eb.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let inv = eb.eigenvalues.map(|v| if v > 1e-9 * b_scale { 1.0 / v } else { 0.0 });
    let b_pinv = &eb.eigenvectors * DMatrix::from_diagonal(&inv) * eb.eigenvectors.transpose();
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let range: Vec<usize> = (0..a.nrows()).filter(|&i| eig.eigenvalues[i] > 1e-9 * scale).collect();
    let w = DMatrix::from_fn(a.nrows(), range.len(), |r, c| {
        eig.eigenvectors[(r, range[c])] * eig.eigenvalues[range[c]].sqrt()
    });
    let m = w.transpose() * b_pinv * &w;
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=10);
        let (ra, rb) = (rng.gen_range(1..=k), rng.gen_range(1..=k));
        let a = random_psd(&mut rng, k, ra);
        let b = random_psd(&mut rng, k, rb);
        let lhs = max_generalized_rayleigh(
            &SymMatrix::new(a.clone()).map_err(|e| e.to_string())?,
            &SymMatrix::new(b.clone()).map_err(|e| e.to_string())?,
            1e-9,
        )
        .map_err(|e| e.to_string())?;
        let rhs = dual_ratio(&a, &b);
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    if worst <= 1e-7 {
        Ok(format!("200 pairs, worst relative gap {worst:.2e}"))
    } else {
        Err(format!("worst relative gap {worst:.2e}"))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = [0.0_f64; 3];
    for _ in 0..100 {
        // Series: a weighted path.
        let n = rng.gen_range(2..=10);
        let w: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.1..10.0)).collect();
        let l = WeightedLaplacian::from_weights(&Graph::path(n), &w).map_err(|e| e.to_string())?;
        let expect: f64 = w.iter().map(|v| 1.0 / v).sum();
        worst[0] = worst[0].max(rel(l.effective_resistance(0, n - 1), expect));

        // Parallel: node 0 and 1 joined directly and by disjoint detours.
        let paths = rng.gen_range(1..=4);
        let mut pairs = vec![(0usize, 1usize)];
        let mut weights = vec![rng.gen_range(0.1..10.0)];
        let mut conductance = 1.0 / (1.0 / weights[0]);
        let mut next = 2;
        for _ in 0..paths {
            let len = rng.gen_range(2..=4);
            let mut prev = 0;
            let mut r = 0.0;
            for step in 0..len {
                let to = if step + 1 == len { 1 } else { next };
                if step + 1 != len {
                    next += 1;
                }
                let wt = rng.gen_range(0.1..10.0);
                pairs.push((prev.min(to), prev.max(to)));
                weights.push(wt);
                r += 1.0 / wt;
                prev = to;
            }
            conductance += 1.0 / r;
        }
        let g = Graph::new(next, &pairs).map_err(|e| e.to_string())?;
        let l = WeightedLaplacian::from_weights(&g, &weights).map_err(|e| e.to_string())?;
        worst[1] = worst[1].max(rel(l.effective_resistance(0, 1), 1.0 / conductance));

        // Kron reduction keeps resistances between the remaining nodes.
        let n = rng.gen_range(4..=10);
        let extra = rng.gen_range(0..=n);
        let g = random_connected_graph(&mut rng, n, extra);
        let w: Vec<f64> = (0..g.edge_count()).map(|_| rng.gen_range(0.1..10.0)).collect();
        let l = WeightedLaplacian::from_weights(&g, &w).map_err(|e| e.to_string())?;
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut rng);
        let removed: Vec<usize> = nodes[..rng.gen_range(1..=n - 2)].to_vec();
        let kept: Vec<usize> = (0..n).filter(|v| !removed.contains(v)).collect();
        let red = l.kron_reduce(&removed).map_err(|e| e.to_string())?;
        for i in 0..kept.len() {
            for j in (i + 1)..kept.len() {
                worst[2] = worst[2].max(rel(
                    red.effective_resistance(i, j),
                    l.effective_resistance(kept[i], kept[j]),
                ));
            }
        }
    }
    let msg = format!(
        "100 constructions each; worst relative error series {:.1e}, parallel {:.1e}, Kron {:.1e}",
        worst[0], worst[1], worst[2]
    );
    if worst.iter().all(|&w| w <= 1e-8) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn motif(rng: &mut ChaCha8Rng) -> Graph {
    match rng.gen_range(0..4) {
        0 => Graph::path(2),
        1 => Graph::cycle(rng.gen_range(3..=6)),
        2 => Graph::complete(rng.gen_range(3..=4)),
        _ => {
            // Cycle with one chord: 2-connected but neither cycle nor clique.
            let n = rng.gen_range(4..=5);
            let mut pairs: Vec<(usize, usize)> = (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect();
            pairs.push((0, 2));
            Graph::new(n, &pairs).expect("valid")
        }
    }
}

fn snap(y: &[f64]) -> Vec<i64> {
    y.iter().map(|v| (v * 1e8).round() as i64).collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut states = 0usize;
    for inst in 0..100 {
        let (g1, g2) = (motif(&mut rng), motif(&mut rng));
        let (n1, n2) = (g1.node_count(), g2.node_count());
        let glue = rng.gen_range(0..n1);
        let at = rng.gen_range(0..n2);
        // Node `at` of g2 becomes node `glue` of g1; the others follow g1's.
        let map = |v: usize| {
            if v == at {
                glue
            } else {
                n1 + if v < at { v } else { v - 1 }
            }
        };
        let mut pairs: Vec<(usize, usize)> = g1.edges().to_vec();
        pairs.extend(g2.edges().iter().map(|&(a, b)| {
            let (a, b) = (map(a), map(b));
            (a.min(b), a.max(b))
        }));
        let g = Graph::new(n1 + n2 - 1, &pairs).map_err(|e| e.to_string())?;
        let c1: f64 = rng.gen_range(0.3..2.0);
        let f = CouplingFunction::odd_polynomial(&[c1, -rng.gen_range(0.3..2.0)]).expect("odd");
        let s = System::uniform(g.clone(), f).map_err(|e| e.to_string())?;
        let dec = g.block_decomposition().map_err(|e| e.to_string())?;
        let per_block = block_detailed_balance(&s, &dec, 10.0, 1_000_000).map_err(|e| e.to_string())?;
        let comp = compose_coalescence(&s, &dec, &per_block).map_err(|e| e.to_string())?;
        let composed: BTreeSet<Vec<i64>> = comp.edge_tuples().map(|y| snap(&y)).collect();
        let whole: BTreeSet<Vec<i64>> = detailed_balance(&s, 10.0, 1_000_000)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|e| snap(&e.y))
            .collect();
        if composed != whole || composed.len() as u128 != comp.count() {
            return Err(format!(
                "instance {inst}: {} composed vs {} whole-graph states",
                composed.len(),
                whole.len()
            ));
        }
        let subs: Vec<_> = dec
            .blocks
            .iter()
            .map(|b| s.restrict(&b.edges).map(|r| r.0))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let stride = (comp.count() / 60).max(1);
        let mut idx = 0u128;
        while idx < comp.count() {
            let e = comp.get(idx).expect("in range");
            let whole_in = restricted_inertia(&s.jacobian(&e.x), 1e-9).map_err(|e| e.to_string())?;
            let mut sum = Inertia::default();
            for (b, sub) in dec.blocks.iter().zip(&subs) {
                let yb: Vec<f64> = b.edges.iter().map(|&k| e.y[k]).collect();
                let xb = sub.node_from_edges(&yb);
                sum = sum + restricted_inertia(&sub.jacobian(&xb), 1e-9).map_err(|e| e.to_string())?;
            }
            if sum != whole_in {
                return Err(format!(
                    "instance {inst}, state {idx}: block signs {sum} vs whole {whole_in}"
                ));
            }
            states += 1;
            idx += stride;
        }
    }
    Ok(format!(
        "100 two-block graphs, sets equal, sign unions match on {states} states"
    ))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut drift, mut increase, mut grad_err) = (0.0_f64, f64::NEG_INFINITY, 0.0_f64);
    for _ in 0..20 {
        let n = rng.gen_range(3..=8);
        let extra = rng.gen_range(0..=3);
        let g = random_connected_graph(&mut rng, n, extra);
        let coupling: CouplingAssignment = match rng.gen_range(0..3) {
            0 => bounded_cubic(&mut rng).into(),
            1 => CouplingFunction::sine(rng.gen_range(0.5..2.0)).expect("sine").into(),
            _ => CouplingAssignment::PerEdge((0..g.edge_count()).map(|_| bounded_cubic(&mut rng)).collect()),
        };
        let s = System::new(g, coupling).map_err(|e| e.to_string())?;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let traj = s.integrate(&x0, 5.0, 1e-3).map_err(|e| e.to_string())?;
        if traj.blew_up {
            return Err("trajectory blew up".into());
        }
        let m0 = mean(&x0);
        let mut prev = s.potential(&x0).map_err(|e| e.to_string())?;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            drift = drift.max((mean(x) - m0).abs() / (1.0 + t));
            let v = s.potential(x).map_err(|e| e.to_string())?;
            increase = increase.max(v - prev);
            prev = v;
        }
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let field = s.vector_field(&x);
            let h = 1e-5;
            for i in 0..n {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let d = (s.potential(&xp).map_err(|e| e.to_string())? - s.potential(&xm).map_err(|e| e.to_string())?)
                    / (2.0 * h);
                grad_err = grad_err.max((-d - field[i]).abs() / (1.0 + field[i].abs()));
            }
        }
    }
    let msg = format!(
        "20 systems; mean drift/(1+t) {drift:.1e}, max potential step {increase:.1e}, gradient error {grad_err:.1e}"
    );
    if drift <= 1e-9 && increase <= 1e-8 && grad_err <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = CouplingFunction::odd_polynomial(&[-1.0, -1.0]).expect("odd");
    let mut worst: f64 = 0.0;
    let mut longest: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(3..=12);
        let extra = rng.gen_range(0..=n);
        let g = random_connected_graph(&mut rng, n, extra);
        let max_deg = (0..n).map(|v| g.degree(v)).max().unwrap_or(1) as f64;
        let s = System::uniform(g, f.clone()).map_err(|e| e.to_string())?;
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // |y| ≤ 2 keeps f' ≥ −13, so this step stays inside the RK4 region.
        let dt = 1.0 / (13.0 * max_deg);
        let mut t = 0.0;
        while norm(&mean_zero(&x)) > 1e-6 && t < 5000.0 {
            let traj = s.integrate(&x, 20.0, dt).map_err(|e| e.to_string())?;
            x = traj.final_state().to_vec();
            t += 20.0;
        }
        worst = worst.max(norm(&mean_zero(&x)));
        longest = longest.max(t);
    }
    if worst <= 1e-6 {
        Ok(format!(
            "20 graphs, terminal distance to consensus <= {worst:.1e} by t = {longest}"
        ))
    } else {
        Err(format!("terminal distance {worst:.1e}"))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("K4 equilibria and stability", criterion_1),
        ("non-detailed-balance K4 equilibrium", || {
            from_study(non_detailed_balance_study(), "")
        }),
        ("C3 circle", criterion_3),
        ("Schur recursion on the 5-node instance", || {
            from_study(schur_example_study(), "")
        }),
        ("K_n closed-form eigenvalues", || {
            from_study(kn_eigen_study(5, 50), " over 33 (n, n0) cells x 50 pairs")
        }),
        ("criterion soundness sweep", criterion_6),
        ("max-ratio duality", criterion_7),
        ("resistance laws", criterion_8),
        ("coalescence", criterion_9),
        ("conservation and gradient structure", criterion_10),
        ("consensus-only convergence", criterion_11),
        ("cycle continuum", || from_study(continuum_study(), "")),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("[PASS] {:>2}. {name}: {msg} ({secs:.2} s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {msg} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
