//! Generates one graph from each random model, compares small-world
//! statistics with their Erdos-Renyi expectations, and perturbs a graph by
//! random rewiring.

use gnar_edge::graph::{hamming, rewire, small_world_stats};
use gnar_edge::simulate::{standard_recipe, GraphModel};

fn main() -> gnar_edge::Result<()> {
    let seed = 42;
    for (model, label) in [
        (GraphModel::Er, "erdos-renyi"),
        (GraphModel::Sbm, "stochastic block"),
        (GraphModel::Rdp, "random dot product"),
    ] {
        let g = standard_recipe(model).generate(seed)?;
        let stats = small_world_stats(&g);
        println!("{label}: {} nodes, {} edges, density {:.3}", g.node_count(), g.edge_count(), g.density());
        println!(
            "  clustering {:.3} (er expectation {:.3})",
            stats.avg_local_clustering, stats.er_expected_clustering
        );
        match (stats.avg_shortest_path, stats.er_expected_aspl) {
            (Some(aspl), Some(expected)) => {
                println!("  avg shortest path {aspl:.3} (er expectation {expected:.3})")
            }
            _ => println!("  avg shortest path undefined ({} unreachable pairs)", stats.unreachable_pairs),
        }
    }

    let g = standard_recipe(GraphModel::Er).generate(seed)?;
    println!("\nrewiring the erdos-renyi graph:");
    for p in [0.0, 0.1, 0.3] {
        let outcome = rewire(&g, p, seed)?;
        let distance = hamming(&g, &outcome.graph)?;
        println!("  p={p:<4} moved {:>3} edges, normalised hamming distance {distance:.3}", outcome.moved);
    }
    Ok(())
}
