//! Randomized invariants: neighborhood construction against a brute-force
//! line-graph oracle, least squares against explicit normal equations, and
//! structural properties of rewiring, preprocessing and the lead-lag map.

use std::collections::BTreeSet;
use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;

use gnar_edge::gnar::{build_design, fit, AlphaMode, GnarEdgeSpec};
use gnar_edge::graph::{hamming, rewire, DirectedGraph, EdgeNeighborhoods, NeighborWeightMatrix};
use gnar_edge::leadlag::lead_lag_matrix;
use gnar_edge::panel::{preprocess, EdgePanel};

fn arb_graph(max_n: usize, allow_loops: bool) -> impl Strategy<Value = DirectedGraph> {
    (2..=max_n).prop_flat_map(move |n| {
        proptest::collection::btree_set((0..n as u32, 0..n as u32), 1..(2 * n * n).min(60)).prop_map(
            move |pairs| {
                let edges: Vec<(u32, u32)> = pairs
                    .into_iter()
                    .filter(|&(s, t)| allow_loops || s != t)
                    .collect();
                let edges = if edges.is_empty() { vec![(0, 1)] } else { edges };
                DirectedGraph::new(n, edges).unwrap()
            },
        )
    })
}

fn arb_panel(max_edges: usize) -> impl Strategy<Value = EdgePanel> {
    (arb_graph(6, false), 6usize..12).prop_flat_map(move |(g, t)| {
        let k = g.edge_count().min(max_edges);
        let g = Arc::new(DirectedGraph::new(g.node_count(), g.edges()[..k].to_vec()).unwrap());
        proptest::collection::vec(-3.0f64..3.0, k * t).prop_map(move |vals| {
            let values = Array2::from_shape_vec((k, t), vals).unwrap();
            EdgePanel::new(Arc::clone(&g), values, None).unwrap()
        })
    })
}

/// Set of edges sharing an endpoint with `e`, excluding `e` itself; the
/// adjacency relation of the line graph, written out directly.
fn adjacent_edges(g: &DirectedGraph, e: u32) -> BTreeSet<u32> {
    let (i, j) = g.edges()[e as usize];
    let mut out = BTreeSet::new();
    for (f, &(s, t)) in g.edges().iter().enumerate() {
        let f = f as u32;
        if f == e {
            continue;
        }
        if s == i || s == j || t == i || t == j {
            out.insert(f);
        }
    }
    out
}

/// Stage sets by breadth-first search over [`adjacent_edges`], with the
/// set-difference convention: each stage excludes everything nearer.
fn brute_force_stages(g: &DirectedGraph, e: u32, r_max: usize) -> Vec<BTreeSet<u32>> {
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    seen.insert(e);
    let mut frontier: BTreeSet<u32> = BTreeSet::new();
    frontier.insert(e);
    let mut stages = Vec::with_capacity(r_max);
    for _ in 0..r_max {
        let mut next = BTreeSet::new();
        for &f in &frontier {
            for a in adjacent_edges(g, f) {
                if !seen.contains(&a) {
                    next.insert(a);
                }
            }
        }
        seen.extend(next.iter().copied());
        stages.push(next.clone());
        frontier = next;
    }
    stages
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn neighborhoods_match_the_brute_force_line_graph(g in arb_graph(12, true)) {
        let r_max = 3;
        let neigh = EdgeNeighborhoods::build(&g, r_max);
        for e in 0..g.edge_count() as u32 {
            let expected = brute_force_stages(&g, e, r_max);
            for r in 1..=r_max {
                let got: BTreeSet<u32> = neigh.stage(r, e).iter().copied().collect();
                prop_assert_eq!(&got, &expected[r - 1], "edge {} stage {}", e, r);
            }
        }
    }

    #[test]
    fn weight_rows_sum_to_one_or_zero(g in arb_graph(10, true), r in 1usize..4) {
        let w = NeighborWeightMatrix::from_graph(&g, r).unwrap();
        for e in 0..g.edge_count() as u32 {
            let sum = w.row_sum(e);
            if w.row(e).0.is_empty() {
                prop_assert_eq!(sum, 0.0);
            } else {
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rewiring_preserves_shape_and_is_deterministic(g in arb_graph(8, false), p in 0.0f64..1.0, seed in 0u64..1000) {
        let a = rewire(&g, p, seed).unwrap();
        let b = rewire(&g, p, seed).unwrap();
        prop_assert_eq!(&a.graph, &b.graph);
        prop_assert_eq!(&a.relabel, &b.relabel);
        prop_assert_eq!(a.graph.edge_count(), g.edge_count());
        prop_assert_eq!(a.graph.node_count(), g.node_count());
        let mut sorted = a.relabel.clone();
        sorted.sort_unstable();
        let identity: Vec<u32> = (0..g.edge_count() as u32).collect();
        prop_assert_eq!(sorted, identity);
    }

    #[test]
    fn rewiring_with_zero_probability_is_the_identity(g in arb_graph(8, false), seed in 0u64..1000) {
        let out = rewire(&g, 0.0, seed).unwrap();
        prop_assert_eq!(&out.graph, &g);
        prop_assert_eq!(out.moved, 0);
        prop_assert_eq!(hamming(&g, &out.graph).unwrap(), 0.0);
    }

    #[test]
    fn hamming_is_a_bounded_symmetric_distance(a in arb_graph(7, false), b in arb_graph(7, false)) {
        prop_assume!(a.node_count() == b.node_count());
        let d = hamming(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, hamming(&b, &a).unwrap());
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(d == 0.0, a.edges() == b.edges());
    }

    #[test]
    fn preprocessing_round_trips_to_raw_levels(panel in arb_panel(8)) {
        prop_assume!(preprocess(&panel).is_ok());
        let (scaled, record) = preprocess(&panel).unwrap();
        prop_assert_eq!(scaled.t_len(), panel.t_len() - 1);
        for e in 0..panel.k() {
            let mut level = panel.values()[(e, 0)];
            for t in 0..scaled.t_len() {
                level += record.sds[e] * scaled.values()[(e, t)];
                prop_assert!((level - panel.values()[(e, t + 1)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lead_lag_matrix_is_exactly_skew_symmetric(panel in arb_panel(8)) {
        prop_assume!(lead_lag_matrix(&panel).is_ok());
        let s = lead_lag_matrix(&panel).unwrap();
        let k = panel.k();
        for i in 0..k {
            prop_assert_eq!(s[(i, i)], 0.0);
            for j in 0..k {
                if j != i {
                    prop_assert_eq!(s[(i, j)].to_bits(), (-s[(j, i)]).to_bits());
                }
                prop_assert!(s[(i, j)].abs() <= 2.0 + 1e-9);
            }
        }
    }
}

/// Solves the normal equations `Z'Z b = Z'y` by Gaussian elimination with
/// partial pivoting; the desk-scale oracle for the fitting code.
fn normal_equations(z: &Array2<f64>, y: &[f64]) -> Vec<f64> {
    let p = z.ncols();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = z.column(i).dot(&z.column(j));
        }
        a[i][p] = z.column(i).iter().zip(y).map(|(u, v)| u * v).sum();
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs())).unwrap();
        a.swap(col, pivot);
        for row in 0..p {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for j in col..=p {
                    a[row][j] -= factor * a[col][j];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn simulated_panel(seed: u64, t: usize) -> EdgePanel {
    use gnar_edge::gnar::GnarCoefficients;
    use gnar_edge::simulate::{gen_er_m, simulate_gnar_edge, InnovationModel};
    let graph = Arc::new(gen_er_m(8, 24, false, seed).unwrap());
    let spec = GnarEdgeSpec::global(1, vec![1]).unwrap();
    let coeffs = GnarCoefficients::global(vec![0.25], vec![vec![0.3]]);
    simulate_gnar_edge(&graph, &spec, &coeffs, t, &InnovationModel::default(), 30, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stacked_ols_agrees_with_the_normal_equations(seed in 0u64..500, lag in 1usize..3, stage in 0usize..3) {
        let panel = simulated_panel(seed, 30);
        let spec = GnarEdgeSpec {
            max_lag: lag,
            neighbor_stages: vec![stage; lag],
            alpha_mode: AlphaMode::Global,
            intercept: false,
        };
        let neigh = Arc::new(EdgeNeighborhoods::build(panel.graph().as_ref(), spec.max_stage()));
        let design = build_design(&panel, &neigh, &spec).unwrap();
        prop_assume!(fit(&design).is_ok());
        let fitted = fit(&design).unwrap();
        let oracle = normal_equations(design.z(), design.y());
        for (a, b) in fitted.coefficients().iter().zip(&oracle) {
            prop_assert!((a.estimate - b).abs() < 1e-8, "{} vs {}", a.estimate, b);
        }
    }

    #[test]
    fn coefficients_are_invariant_to_panel_scale(seed in 0u64..500, scale in 0.1f64..10.0) {
        let panel = simulated_panel(seed, 40);
        let spec = GnarEdgeSpec::global(1, vec![1]).unwrap();
        let base = gnar_edge::gnar::fit_gnar_edge(&panel, &spec).unwrap();
        let rescaled = EdgePanel::new(
            Arc::clone(panel.graph()),
            panel.values() * scale,
            None,
        ).unwrap();
        let scaled_fit = gnar_edge::gnar::fit_gnar_edge(&rescaled, &spec).unwrap();
        for (a, b) in base.coefficients().iter().zip(scaled_fit.coefficients()) {
            prop_assert!((a.estimate - b.estimate).abs() < 1e-8);
        }
    }
}
