//! The whole workflow on a dense 90-node panel shaped like real transaction
//! data: difference and standardise, keep the most leading edges, search a
//! grid of lag orders and neighbourhood depths by one-step forecast error,
//! and run residual diagnostics on the winner.

use gnar_edge::pipeline::{run_pipeline, synthetic_real_shaped_panel, PipelineConfig};

fn main() -> gnar_edge::Result<()> {
    let raw = synthetic_real_shaped_panel(7)?;
    println!(
        "raw panel: {} edges on {} nodes, {} time points",
        raw.graph().edge_count(),
        raw.graph().node_count(),
        raw.t_len()
    );

    let config = PipelineConfig::default();
    let outcome = run_pipeline(&raw, &config)?;

    println!(
        "kept top {} leading edges, sparse density {:.4}\n",
        outcome.kept.len(),
        outcome.sparse_density
    );

    println!("grid of one-step forecast rmse (rows: lag, columns: neighbourhood stage):");
    print!("{:<5}", "lag");
    for stage in &config.stages {
        print!(" {:>8}", format!("r={stage}"));
    }
    println!();
    for &lag in &config.lags {
        print!("{lag:<5}");
        for &stage in &config.stages {
            let entry = outcome.grid.iter().find(|e| e.max_lag == lag && e.stage == stage).unwrap();
            match entry.rmse {
                Some(v) => print!(" {v:>8.4}"),
                None => print!(" {:>8}", "-"),
            }
        }
        println!();
    }

    println!(
        "\nbest model: lag {} with {}-stage neighbours, rmse {:.4}",
        outcome.best_lag, outcome.best_stage, outcome.best_rmse
    );
    println!("per-edge ar at the same lag: rmse {:.4}", outcome.ar_rmse);
    if let Some(one) = outcome.one_stage_rmse {
        println!("1-stage network model at the same lag: rmse {one:.4}");
    }

    if let Some(test) = &outcome.report.normality {
        println!("\nresidual shapiro-wilk: W = {:.4}, p = {:.3}", test.w, test.p_value);
    }
    Ok(())
}
