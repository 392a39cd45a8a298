//! Scores every edge by how strongly it leads the rest of the network and
//! keeps only the top slice, shrinking a dense panel to a sparse subnetwork
//! before any model is fitted.

use gnar_edge::leadlag::{lead_lag_matrix, leadingness_scores, sparsify_top_k};
use gnar_edge::simulate::regime;

fn main() -> gnar_edge::Result<()> {
    let setting = regime("regime2")?;
    let (graph, panel) = setting.simulate_one(3)?;
    println!(
        "full network: {} edges on {} nodes, density {:.3}",
        graph.edge_count(),
        graph.node_count(),
        graph.density()
    );

    let s = lead_lag_matrix(&panel)?;
    let scores = leadingness_scores(&panel)?;
    // The score of an edge is its row sum in the pairwise lead-lag matrix.
    let row_sum: f64 = (0..graph.edge_count()).map(|j| s[(0, j)]).sum();
    println!("edge 0: matrix row sum {row_sum:.4}, leadingness score {:.4}", scores[0]);

    let top_k = graph.edge_count() / 4;
    let sparse = sparsify_top_k(&panel, top_k)?;
    println!(
        "\nkept the {top_k} most leading edges: density {:.3}, panel now {} rows x {} columns",
        sparse.graph.density(),
        sparse.panel.graph().edge_count(),
        sparse.panel.t_len()
    );

    println!("\n{:<6} {:>14} {:>10}", "rank", "edge", "score");
    for (rank, &label) in sparse.kept.iter().take(5).enumerate() {
        let (s, t) = graph.edge(label)?;
        println!("{:<6} {:>9} -> {:<3} {:>10.4}", rank + 1, s, t, sparse.scores[label as usize]);
    }
    Ok(())
}
