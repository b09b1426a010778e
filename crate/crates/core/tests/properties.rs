use consensus_core::equilibria::detailed_balance;
use consensus_core::linalg::{eigen_symmetric, inertia, laplacian_from_weights, schur_complement};
use consensus_core::stability::{classify, ClassifyOptions};
use consensus_core::{CouplingFunction, Graph, SignedSplit, SymMatrix, System, Verdict};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Connected graph: a random recursive tree plus a chosen subset of the
/// remaining pairs.
fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (Just(n), parents, proptest::collection::vec(any::<bool>(), n * n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    if extra[i * n + j] && !edges.contains(&(i, j)) && edges.len() < 2 * n {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(n, &edges).unwrap()
        })
}

fn coupling() -> impl Strategy<Value = CouplingFunction> {
    prop_oneof![
        (0.2..2.0f64, 0.2..2.0f64).prop_map(|(a, b)| CouplingFunction::odd_polynomial(&[a, -b]).unwrap()),
        (0.3..2.0f64).prop_map(|a| CouplingFunction::sine(a).unwrap()),
        (-2.0..-0.1f64).prop_map(|s| CouplingFunction::linear(s).unwrap()),
    ]
}

fn system_and_state() -> impl Strategy<Value = (System, Vec<f64>)> {
    (connected_graph(7), coupling()).prop_flat_map(|(g, f)| {
        let n = g.node_count();
        let s = System::uniform(g, f).unwrap();
        (Just(s), proptest::collection::vec(-2.0..2.0f64, n))
    })
}

fn sym_matrix(max_k: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_k).prop_flat_map(|k| {
        proptest::collection::vec(-5.0..5.0f64, k * k).prop_map(move |v| SymMatrix::from_upper(k, |i, j| v[i * k + j]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_reconstructs(m in sym_matrix(8)) {
        let e = eigen_symmetric(&m).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let k = m.dim();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let back = &e.vectors * d * e.vectors.transpose();
        let vtv = e.vectors.transpose() * &e.vectors;
        let scale = m.max_abs().max(1.0);
        prop_assert!((back - m.as_matrix()).amax() <= 1e-10 * scale);
        prop_assert!((vtv - DMatrix::<f64>::identity(k, k)).amax() <= 1e-10);
    }

    #[test]
    fn inertia_is_congruence_invariant(m in sym_matrix(6), seed in proptest::collection::vec(-1.0..1.0f64, 36)) {
        let k = m.dim();
        // Unit lower-triangular transforms are always invertible.
        let t = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else if i > j { seed[i * 6 + j] } else { 0.0 });
        let c = SymMatrix::new(&t * m.as_matrix() * t.transpose()).unwrap();
        let a = inertia(&m, 1e-9).unwrap();
        prop_assert_eq!(a.dim(), k);
        let spectrum = eigen_symmetric(&m).unwrap().values;
        let well_separated = spectrum.iter().all(|v| v.abs() > 1e-6 || *v == 0.0);
        if well_separated {
            prop_assert_eq!(a, inertia(&c, 1e-9).unwrap());
        }
    }

    #[test]
    fn field_conserves_the_mean_and_matches_matrix_form((s, x) in system_and_state()) {
        let f = s.vector_field(&x);
        prop_assert!(f.iter().sum::<f64>().abs() <= 1e-12 * (1.0 + f.iter().map(|v| v.abs()).sum::<f64>()));
        let fm = s.vector_field_matrix(&x);
        for (a, b) in f.iter().zip(&fm) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn potential_is_a_gradient((s, x) in system_and_state()) {
        let f = s.vector_field(&x);
        let h = 1e-6;
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let d = (s.potential(&xp).unwrap() - s.potential(&xm).unwrap()) / (2.0 * h);
            prop_assert!((d + f[i]).abs() <= 1e-6 * (1.0 + f[i].abs()));
        }
    }

    #[test]
    fn jacobian_is_the_signed_split((s, x) in system_and_state()) {
        let j = s.jacobian(&x);
        let split = s.signed_split(&x);
        let diff = split.l_plus().matrix().sub(split.l_minus().matrix());
        prop_assert!((j.as_matrix() - diff.as_matrix()).amax() <= 1e-12);
        for r in 0..j.dim() {
            prop_assert!(j.as_matrix().row(r).sum().abs() <= 1e-12 * (1.0 + j.max_abs()));
        }
        let h = 1e-6;
        for c in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (s.vector_field(&xp), s.vector_field(&xm));
            for r in 0..x.len() {
                let d = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((d - j.get(r, c)).abs() <= 1e-5 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn cycle_and_cut_spaces_are_orthogonal(g in connected_graph(8)) {
        let cycles = g.cycle_space_basis().unwrap();
        let cuts = g.cut_space_basis().unwrap();
        prop_assert_eq!(cycles.len(), g.edge_count() + 1 - g.node_count());
        prop_assert_eq!(cuts.len(), g.node_count() - 1);
        for c in &cycles {
            for k in &cuts {
                let dot: f64 = c.iter().zip(k).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn blocks_partition_the_edges(g in connected_graph(9)) {
        let dec = g.block_decomposition().unwrap();
        let mut seen = vec![0usize; g.edge_count()];
        for b in &dec.blocks {
            for &e in &b.edges {
                seen[e] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        // Block-cut tree: Σ (|nodes| − 1) = n − 1.
        let total: usize = dec.blocks.iter().map(|b| b.nodes.len() - 1).sum();
        prop_assert_eq!(total, g.node_count() - 1);
        for &v in &dec.cut_nodes {
            prop_assert!(dec.blocks.iter().filter(|b| b.nodes.contains(&v)).count() >= 2);
        }
    }

    #[test]
    fn effective_resistance_is_a_metric(g in connected_graph(7), w in proptest::collection::vec(0.1..5.0f64, 14)) {
        let l = laplacian_from_weights(&g, &w[..g.edge_count()]).unwrap();
        let r = l.resistance_matrix();
        let n = g.node_count();
        for i in 0..n {
            prop_assert!(r[i][i].abs() <= 1e-12);
            for j in 0..n {
                prop_assert!((r[i][j] - r[j][i]).abs() <= 1e-10);
                for k in 0..n {
                    prop_assert!(r[i][j] <= r[i][k] + r[k][j] + 1e-9);
                }
            }
        }
        // Rayleigh monotonicity: an edge's resistance never exceeds 1/w.
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            prop_assert!(r[a][b] <= 1.0 / w[e] + 1e-9);
        }
    }

    #[test]
    fn schur_complement_adds_the_pivot_sign_to_the_inertia(m in sym_matrix(6)) {
        prop_assume!(m.dim() >= 2);
        let pivot = m.get(0, 0);
        prop_assume!(pivot.abs() > 0.5);
        let sc = schur_complement(&m, &[0]).unwrap();
        let mut a = inertia(&sc, 1e-9).unwrap();
        if pivot > 0.0 { a.positive += 1 } else { a.negative += 1 }
        let spectrum = eigen_symmetric(&m).unwrap().values;
        prop_assume!(spectrum.iter().all(|v| v.abs() > 1e-6));
        prop_assert_eq!(a, inertia(&m, 1e-9).unwrap());
    }

    #[test]
    fn roots_are_symmetric_zeros(f in coupling()) {
        let r = f.roots(10.0).unwrap();
        prop_assert!(r.contains(&0.0));
        for (a, b) in r.iter().zip(r.iter().rev()) {
            prop_assert!((a + b).abs() <= 1e-12);
        }
        for y in r {
            prop_assert!(f.eval(y).abs() <= 1e-9);
        }
    }

    #[test]
    fn detailed_balance_states_are_equilibria(g in connected_graph(6), f in coupling()) {
        let s = System::uniform(g, f).unwrap();
        for e in detailed_balance(&s, 4.0, 100_000).unwrap() {
            prop_assert!(e.is_valid(), "residual {}", e.residual);
            prop_assert!(e.x.iter().sum::<f64>().abs() <= 1e-9);
        }
    }

    #[test]
    fn classify_agrees_with_the_spectrum(g in connected_graph(6), f in coupling()) {
        let s = System::uniform(g, f).unwrap();
        for e in detailed_balance(&s, 4.0, 100_000).unwrap() {
            let v = classify(&s, &e, &ClassifyOptions { continuum_check: false, ..Default::default() }).unwrap();
            let top = v.spectrum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scale = v.spectrum.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            match v.verdict {
                Verdict::Stable => prop_assert!(top < -1e-9 * scale),
                Verdict::Unstable => prop_assert!(top > 1e-9 * scale),
                Verdict::Inconclusive => prop_assert!(top.abs() <= 1e-9 * scale),
            }
        }
    }

    #[test]
    fn signed_split_resistances_are_positive(g in connected_graph(6), w in proptest::collection::vec(-2.0..2.0f64, 12)) {
        let split = SignedSplit::from_signed_weights(&g, &w[..g.edge_count()]).unwrap();
        if split.l_minus().is_connected() {
            for &e in split.positive_edges() {
                let (a, b) = g.edge(e);
                prop_assert!(split.r_minus(a, b) > 0.0);
            }
        }
    }
}
