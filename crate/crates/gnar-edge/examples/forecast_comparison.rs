//! Compares one-step forecast accuracy of the network model against
//! per-edge autoregressions and an unrestricted vector autoregression on
//! sparse graphs, where pooling information across neighbouring edges
//! matters most.

use gnar_edge::experiments::{prediction_experiment, ModelConfig};
use gnar_edge::gnar::GnarEdgeSpec;
use gnar_edge::simulate::{regime, GraphRecipe};

fn main() -> gnar_edge::Result<()> {
    let mut setting = regime("regime4")?;
    setting.graph = GraphRecipe::er_density(20, 0.1);
    setting.replications = 25;

    let models = vec![
        ModelConfig::gnar("gnar(3,[2,2,2])", GnarEdgeSpec::global(3, vec![2, 2, 2])?),
        ModelConfig::gnar("gnar(3,[0,0,0])", GnarEdgeSpec::global(3, vec![0, 0, 0])?),
        ModelConfig::ar("per-edge ar(3)", 3),
        ModelConfig::var("var(1)", 1),
    ];
    let outcome = prediction_experiment(&setting, &models, 1);

    println!(
        "one-step forecasts, {} replications at density 0.1 ({} dropped):\n",
        setting.replications,
        outcome.failures.len()
    );
    println!("{:<18} {:>10}", "model", "mean rmse");
    let mut ranked: Vec<&String> = outcome.models.iter().collect();
    ranked.sort_by(|a, b| {
        outcome.mean_rmse(a).unwrap().total_cmp(&outcome.mean_rmse(b).unwrap())
    });
    for name in ranked {
        println!("{:<18} {:>10.4}", name, outcome.mean_rmse(name).unwrap());
    }
    Ok(())
}
