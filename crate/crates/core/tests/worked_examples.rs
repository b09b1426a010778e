use consensus_core::equilibria::{clique_equilibria, detailed_balance, tree_equilibria, Provenance};
use consensus_core::linalg::eigen_symmetric;
use consensus_core::stability::{
    classify, clique_thresholds, clique_verdict, cycle_verdict, kn_eigenvalues, schur_reduce, ClassifyOptions,
};
use consensus_core::{CouplingFunction, Equilibrium, Graph, SignedSplit, System, Verdict};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn star_tree_stable_states_are_the_falling_branches() {
    let s = System::uniform(Graph::star(3), CouplingFunction::cubic()).unwrap();
    let trees = tree_equilibria(&s, 10.0, 1000).unwrap();
    assert_eq!(trees.len(), 27);
    let mut stable = 0;
    for t in &trees {
        let v = classify(&s, &t.equilibrium, &ClassifyOptions::default()).unwrap();
        let all_falling = t.signs.iter().all(|&d| d < 0);
        assert_eq!(v.verdict == Verdict::Stable, all_falling);
        stable += usize::from(all_falling);
    }
    assert_eq!(stable, 8);
}

#[test]
fn k4_clique_thresholds_and_verdicts() {
    let f = CouplingFunction::cubic();
    let (a, b) = clique_thresholds(f.derivative(0.0), f.derivative(1.0));
    assert!(close(a, 1.0 / 3.0, 1e-12));
    assert!(close(b, 2.0 / 3.0, 1e-12));
    let verdicts: Vec<Verdict> = (1..=4)
        .map(|n0| clique_verdict(&f, 1.0, 4, n0).unwrap().verdict)
        .collect();
    assert_eq!(
        verdicts,
        [Verdict::Unstable, Verdict::Stable, Verdict::Unstable, Verdict::Unstable]
    );
}

#[test]
fn kn_closed_form_matches_the_jacobian() {
    let f = CouplingFunction::cubic();
    let (d0, da) = (f.derivative(0.0), f.derivative(1.0));
    for n in 3..=7 {
        let s = System::uniform(Graph::complete(n), f.clone()).unwrap();
        for n0 in 1..n {
            let x: Vec<f64> = (0..n).map(|i| if i < n0 { 0.0 } else { 1.0 }).collect();
            let mut spectrum = eigen_symmetric(&s.jacobian(&x)).unwrap().values;
            let mut closed = kn_eigenvalues(n, n0, d0, da).unwrap();
            spectrum.sort_by(f64::total_cmp);
            closed.sort_by(f64::total_cmp);
            assert_eq!(spectrum.len(), closed.len());
            for (a, b) in spectrum.iter().zip(&closed) {
                assert!(close(*a, *b, 1e-10), "n = {n}, n0 = {n0}: {spectrum:?} vs {closed:?}");
            }
        }
    }
}

#[test]
fn clique_forms_are_equilibria() {
    let eqs = clique_equilibria(&CouplingFunction::cubic(), 5, 10.0).unwrap();
    assert!(!eqs.is_empty());
    let s = System::uniform(Graph::complete(5), CouplingFunction::cubic()).unwrap();
    for e in eqs {
        assert!(matches!(e.provenance, Provenance::CliqueForm { .. }));
        let again = Equilibrium::from_state(&s, &e.x, Provenance::Refined);
        assert!(again.is_valid());
    }
}

#[test]
fn triangle_states_split_by_cycle_law() {
    let s = System::uniform(Graph::cycle(3), CouplingFunction::cubic()).unwrap();
    let eqs = detailed_balance(&s, 10.0, 1000).unwrap();
    assert_eq!(eqs.len(), 7);
    for e in &eqs {
        let split = s.signed_split(&e.x);
        let ev = cycle_verdict(&split);
        let spectral = classify(
            &s,
            e,
            &ClassifyOptions {
                continuum_check: false,
                ..Default::default()
            },
        )
        .unwrap();
        if ev.conclusion.is_decisive() {
            assert_eq!(ev.conclusion.verdict(), spectral.verdict, "{:?}", e.x);
        }
    }
}

#[test]
fn cycle_family_member_is_stable_through_the_continuum() {
    // A C₃ member at λ = 0 has a zero mode tangent to the family.
    let s = System::uniform(Graph::cycle(3), CouplingFunction::cubic()).unwrap();
    let x = [1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0];
    let e = Equilibrium::from_state(&s, &x, Provenance::Refined);
    assert!(e.is_valid());
    let plain = classify(
        &s,
        &e,
        &ClassifyOptions {
            continuum_check: false,
            ..Default::default()
        },
    )
    .unwrap();
    let full = classify(&s, &e, &ClassifyOptions::default()).unwrap();
    assert_eq!(plain.verdict, Verdict::Inconclusive);
    assert_eq!(full.verdict, Verdict::Stable);
    assert!(full.find("equilibrium_continuum").is_some());
}

#[test]
fn schur_reduction_on_k4_with_one_positive_edge() {
    // Without edge (1,2) the negative graph has r⁻(1,2) = 1 (two parallel
    // two-hop paths), so eliminating nodes 3 and 4 leaves net weight p − 1.
    let g = Graph::complete(4);
    for p in [0.5, 2.0] {
        let w: Vec<f64> = g.edges().iter().map(|&e| if e == (0, 1) { p } else { -1.0 }).collect();
        let split = SignedSplit::from_signed_weights(&g, &w).unwrap();
        assert!(close(split.r_minus(0, 1), 1.0, 1e-12));
        let red = schur_reduce(&split, 1e-9).unwrap();
        assert!(red.inertia_preserved());
        if p > 1.0 {
            assert_eq!(red.kept, [0, 1]);
            assert!(close(red.split.weights()[0], p - 1.0, 1e-12));
        } else {
            // A negative net edge leaves nothing positive, so one more node goes.
            assert_eq!(red.kept.len(), 1);
        }
        let top = eigen_symmetric(&split.jacobian()).unwrap().values[3];
        assert_eq!(top > 1e-9, p > 1.0);
    }
}
