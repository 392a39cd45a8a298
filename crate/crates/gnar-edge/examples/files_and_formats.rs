//! Round-trips every file format through disk: the edge-list graph CSV,
//! the wide panel CSV, and the JSON model document, then forecasts from
//! the reloaded model.

use std::fs;

use gnar_edge::gnar::fit_gnar_edge;
use gnar_edge::io::{load_model, load_panel, save_graph, save_model, save_panel, ModelDocument};
use gnar_edge::simulate::regime;

fn main() -> gnar_edge::Result<()> {
    let dir = std::env::temp_dir().join("gnar-edge-formats");
    fs::create_dir_all(&dir)?;

    let setting = regime("regime1")?;
    let (graph, panel) = setting.simulate_one(5)?;

    let graph_path = dir.join("graph.csv");
    let panel_path = dir.join("panel.csv");
    let model_path = dir.join("model.json");
    save_graph(&graph, &graph_path)?;
    save_panel(&panel, &panel_path)?;

    let text = fs::read_to_string(&graph_path)?;
    println!("graph csv starts with:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }

    let reloaded = load_panel(&panel_path)?;
    println!(
        "\npanel csv reloads to {} edges x {} time points (graph embedded in the rows)",
        reloaded.graph().edge_count(),
        reloaded.t_len()
    );

    let fitted = fit_gnar_edge(&reloaded, &setting.spec)?;
    save_model(&ModelDocument::from_gnar(&fitted, None), &model_path)?;
    let document = load_model(&model_path)?;
    println!("\nmodel document kind: {}", document.model_name());

    let forecast = document.forecast_one_step(&reloaded)?;
    println!("one-step forecast for the first three edges: {:.4}, {:.4}, {:.4}", forecast[0], forecast[1], forecast[2]);

    println!("\nfiles written under {}", dir.display());
    Ok(())
}
