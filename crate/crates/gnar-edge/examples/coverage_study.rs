//! Runs a Monte Carlo coverage experiment: many independent panels are
//! simulated and refitted, and for every coefficient the empirical coverage
//! of its 95% confidence interval is tallied together with the estimation
//! error.

use gnar_edge::experiments::coverage_experiment;
use gnar_edge::simulate::regime;

fn main() -> gnar_edge::Result<()> {
    let mut setting = regime("regime3")?;
    setting.replications = 25;

    let outcome = coverage_experiment(&setting, 1);
    println!(
        "{} replications of {} ({} failed to fit)",
        setting.replications,
        outcome.regime,
        outcome.failures.len()
    );
    println!("\n{:<10} {:>8} {:>9} {:>9}", "parameter", "true", "coverage", "rmse");
    for s in &outcome.summary {
        println!("{:<10} {:>8.3} {:>9.2} {:>9.4}", s.parameter, s.truth, s.coverage, s.rmse);
    }
    Ok(())
}
