//! Replication harness: coverage, prediction and misspecification
//! experiments over simulation regimes.
//!
//! Replication `i` of an experiment seeded with `s` derives its own seed as
//! `s + i`; that seed feeds a master generator whose first draws become the
//! graph seed, the simulation seed and (for rewiring) the rewire seed.
//! Replications run in parallel and are reassembled in index order, so
//! results are independent of thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::baselines::{fit_ar_per_edge, fit_var, OneStepForecast};
use crate::error::{Error, Result};
use crate::gnar::{
    fit_gnar_edge, predict_with_coefficients, AlphaCoefficients, FittedGnarEdge, GnarCoefficients,
    GnarEdgeSpec,
};
use crate::graph::{hamming, rewire, EdgeNeighborhoods};
use crate::panel::EdgePanel;
use crate::simulate::{simulate_gnar_edge, InnovationModel, SimulationRegime};

/// One parameter estimate from one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub replication: usize,
    pub parameter: String,
    pub truth: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
    pub abs_error: f64,
}

/// Per-parameter aggregate over all successful replications.
#[derive(Debug, Clone)]
pub struct ParameterSummary {
    pub parameter: String,
    pub truth: f64,
    pub coverage: f64,
    pub rmse: f64,
}

/// Result of a coverage experiment; failed replications are recorded with
/// their error text and excluded from the summary.
#[derive(Debug, Clone)]
pub struct CoverageOutcome {
    pub regime: String,
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<ParameterSummary>,
    pub failures: Vec<(usize, String)>,
}

/// True parameter values in design-column order, named as in the fitted
/// coefficient table.
pub fn truth_parameters(spec: &GnarEdgeSpec, coeffs: &GnarCoefficients) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if spec.intercept {
        out.push(("intercept".to_string(), coeffs.intercept));
    }
    match &coeffs.alphas {
        AlphaCoefficients::Global(a) => {
            for (l, v) in a.iter().enumerate() {
                out.push((format!("alpha_{}", l + 1), *v));
            }
        }
        AlphaCoefficients::EdgeSpecific(rows) => {
            for l in 0..spec.max_lag {
                for (e, row) in rows.iter().enumerate() {
                    out.push((format!("alpha_{}_edge_{e}", l + 1), row[l]));
                }
            }
        }
    }
    for (l, stage_betas) in coeffs.betas.iter().enumerate() {
        for (r, v) in stage_betas.iter().enumerate() {
            out.push((format!("beta_{}_{}", l + 1, r + 1), *v));
        }
    }
    out
}

fn rows_from_fit(
    replication: usize,
    truth: &[(String, f64)],
    fitted: &FittedGnarEdge,
) -> Result<Vec<ReplicationRow>> {
    let coefs = fitted.coefficients();
    if coefs.len() != truth.len() {
        return Err(Error::ModelPanelMismatch { expected: truth.len(), got: coefs.len() });
    }
    Ok(coefs
        .iter()
        .zip(truth)
        .map(|(c, (name, t))| {
            debug_assert_eq!(&c.name, name);
            ReplicationRow {
                replication,
                parameter: name.clone(),
                truth: *t,
                estimate: c.estimate,
                ci_low: c.ci_low,
                ci_high: c.ci_high,
                covered: c.ci_low <= *t && *t <= c.ci_high,
                abs_error: (c.estimate - *t).abs(),
            }
        })
        .collect())
}

fn summarize(truth: &[(String, f64)], rows: &[ReplicationRow]) -> Vec<ParameterSummary> {
    truth
        .iter()
        .map(|(name, t)| {
            let of_param: Vec<&ReplicationRow> = rows.iter().filter(|r| &r.parameter == name).collect();
            let n = of_param.len() as f64;
            let coverage = of_param.iter().filter(|r| r.covered).count() as f64 / n.max(1.0);
            let mse = of_param.iter().map(|r| r.abs_error * r.abs_error).sum::<f64>() / n.max(1.0);
            ParameterSummary { parameter: name.clone(), truth: *t, coverage, rmse: mse.sqrt() }
        })
        .collect()
}

/// Splits indexed per-replication results into ordered rows and failures.
fn assemble<T>(results: Vec<(usize, std::result::Result<T, String>)>) -> (Vec<T>, Vec<(usize, String)>) {
    let mut results = results;
    results.sort_by_key(|(i, _)| *i);
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failures.push((i, e)),
        }
    }
    (ok, failures)
}

/// Simulates `regime.replications` fresh graph-plus-panel pairs, fits the
/// regime's own specification to each, and aggregates confidence-interval
/// coverage and RMSE per parameter.
pub fn coverage_experiment(regime: &SimulationRegime, seed: u64) -> CoverageOutcome {
    let truth = truth_parameters(&regime.spec, &regime.coefficients);
    let results: Vec<(usize, std::result::Result<Vec<ReplicationRow>, String>)> = (0..regime.replications)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<Vec<ReplicationRow>> {
                let (_, panel) = regime.simulate_one(seed + i as u64)?;
                let fitted = fit_gnar_edge(&panel, &regime.spec)?;
                rows_from_fit(i, &truth, &fitted)
            };
            (i, run().map_err(|e| e.to_string()))
        })
        .collect();
    let (per_rep, failures) = assemble(results);
    let rows: Vec<ReplicationRow> = per_rep.into_iter().flatten().collect();
    let summary = summarize(&truth, &rows);
    CoverageOutcome { regime: regime.name.clone(), rows, summary, failures }
}

/// A forecasting model entering a prediction comparison.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub name: String,
    pub kind: ModelKind,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Gnar(GnarEdgeSpec),
    ArPerEdge { max_lag: usize, intercept: bool },
    Var { max_lag: usize, intercept: bool },
    /// Known coefficients applied without estimation.
    FixedCoefficients { spec: GnarEdgeSpec, coeffs: GnarCoefficients },
}

impl ModelConfig {
    pub fn gnar(name: &str, spec: GnarEdgeSpec) -> Self {
        ModelConfig { name: name.to_string(), kind: ModelKind::Gnar(spec) }
    }

    pub fn ar(name: &str, max_lag: usize) -> Self {
        ModelConfig { name: name.to_string(), kind: ModelKind::ArPerEdge { max_lag, intercept: true } }
    }

    pub fn var(name: &str, max_lag: usize) -> Self {
        ModelConfig { name: name.to_string(), kind: ModelKind::Var { max_lag, intercept: true } }
    }
}

impl ModelKind {
    fn forecast(&self, train: &EdgePanel) -> Result<Vec<f64>> {
        match self {
            ModelKind::Gnar(spec) => fit_gnar_edge(train, spec)?.forecast_one_step(train),
            ModelKind::ArPerEdge { max_lag, intercept } => {
                fit_ar_per_edge(train, *max_lag, *intercept)?.forecast_one_step(train)
            }
            ModelKind::Var { max_lag, intercept } => {
                fit_var(train, *max_lag, *intercept)?.forecast_one_step(train)
            }
            ModelKind::FixedCoefficients { spec, coeffs } => {
                let neigh = EdgeNeighborhoods::build(train.graph(), spec.max_stage());
                predict_with_coefficients(spec, coeffs, &neigh, train)
            }
        }
    }
}

/// Per-model one-step RMSE samples across replications.
#[derive(Debug, Clone)]
pub struct PredictionOutcome {
    pub regime: String,
    pub models: Vec<String>,
    /// `rmse[m][j]` is model `m`'s RMSE in the j-th successful replication.
    pub rmse: Vec<Vec<f64>>,
    pub failures: Vec<(usize, String)>,
}

impl PredictionOutcome {
    pub fn mean_rmse(&self, model: &str) -> Option<f64> {
        let idx = self.models.iter().position(|m| m == model)?;
        let sample = &self.rmse[idx];
        if sample.is_empty() {
            return None;
        }
        Some(sample.iter().sum::<f64>() / sample.len() as f64)
    }
}

/// Holds out each replication's final column, fits every model on the rest
/// and scores the one-step forecasts. A replication failing for any model
/// is dropped for all models, keeping the samples aligned.
pub fn prediction_experiment(regime: &SimulationRegime, models: &[ModelConfig], seed: u64) -> PredictionOutcome {
    let results: Vec<(usize, std::result::Result<Vec<f64>, String>)> = (0..regime.replications)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<Vec<f64>> {
                let (_, panel) = regime.simulate_one(seed + i as u64)?;
                let t = panel.t_len();
                let train = panel.truncate(t - 1)?;
                let actual = panel.column(t - 1);
                models
                    .iter()
                    .map(|m| {
                        let forecast = m.kind.forecast(&train)?;
                        let mse = forecast
                            .iter()
                            .zip(actual.iter())
                            .map(|(f, a)| (f - a) * (f - a))
                            .sum::<f64>()
                            / forecast.len() as f64;
                        Ok(mse.sqrt())
                    })
                    .collect()
            };
            (i, run().map_err(|e| e.to_string()))
        })
        .collect();
    let (per_rep, failures) = assemble(results);
    let mut rmse = vec![Vec::with_capacity(per_rep.len()); models.len()];
    for rep in per_rep {
        for (m, v) in rep.into_iter().enumerate() {
            rmse[m].push(v);
        }
    }
    PredictionOutcome {
        regime: regime.name.clone(),
        models: models.iter().map(|m| m.name.clone()).collect(),
        rmse,
        failures,
    }
}

/// The three studied departures from the fitting assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Misspecification {
    HeavyTail { df: f64 },
    CorrInnov { rho: f64 },
    Rewire { p: f64 },
}

impl Misspecification {
    pub fn label(&self) -> String {
        match self {
            Misspecification::HeavyTail { df } => format!("heavy_tail(df={df})"),
            Misspecification::CorrInnov { rho } => format!("corr_innov(rho={rho})"),
            Misspecification::Rewire { p } => format!("rewire(p={p})"),
        }
    }
}

/// Misspecification report: estimation rows exactly as in the coverage
/// experiment, one-step prediction RMSE per replication, and the mean graph
/// Hamming distance when the graph itself was perturbed.
#[derive(Debug, Clone)]
pub struct MisspecOutcome {
    pub regime: String,
    pub kind: String,
    pub rows: Vec<ReplicationRow>,
    pub summary: Vec<ParameterSummary>,
    pub prediction_rmse: Vec<f64>,
    pub mean_hamming: Option<f64>,
    pub failures: Vec<(usize, String)>,
}

/// Simulates each replication under the misspecified setting and fits the
/// regime's standard model. For `HeavyTail` and `CorrInnov` the innovations
/// change; for `Rewire` the data stay clean but estimation uses a perturbed
/// graph with each series kept on its physical edge. With `Rewire { p: 0 }`
/// the whole report coincides with the clean coverage experiment.
pub fn misspecification_suite(regime: &SimulationRegime, kind: Misspecification, seed: u64) -> MisspecOutcome {
    let truth = truth_parameters(&regime.spec, &regime.coefficients);
    let innovation = match kind {
        Misspecification::HeavyTail { df } => InnovationModel::StudentT { df, rescale: false },
        Misspecification::CorrInnov { rho } => InnovationModel::TimeEquicorrelated { rho, sigma: 1.0 },
        Misspecification::Rewire { .. } => regime.innovation.clone(),
    };
    type RepOutput = (Vec<ReplicationRow>, f64, Option<f64>);
    let results: Vec<(usize, std::result::Result<RepOutput, String>)> = (0..regime.replications)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<RepOutput> {
                let mut master = ChaCha12Rng::seed_from_u64(seed + i as u64);
                let graph_seed = master.next_u64();
                let sim_seed = master.next_u64();
                let rewire_seed = master.next_u64();
                let graph = std::sync::Arc::new(regime.graph.generate(graph_seed)?);
                let panel = simulate_gnar_edge(
                    &graph,
                    &regime.spec,
                    &regime.coefficients,
                    regime.t_len,
                    &innovation,
                    0,
                    sim_seed,
                )?;
                let (panel, distance) = match kind {
                    Misspecification::Rewire { p } => {
                        let outcome = rewire(&graph, p, rewire_seed)?;
                        let permuted = panel.relabel_rows(outcome.graph.clone(), &outcome.relabel)?;
                        let d = hamming(&graph, &outcome.graph)?;
                        (permuted, Some(d))
                    }
                    _ => (panel, None),
                };
                let fitted = fit_gnar_edge(&panel, &regime.spec)?;
                let rows = rows_from_fit(i, &truth, &fitted)?;
                let t = panel.t_len();
                let train = panel.truncate(t - 1)?;
                let forecast = fit_gnar_edge(&train, &regime.spec)?.forecast_one_step(&train)?;
                let actual = panel.column(t - 1);
                let mse = forecast
                    .iter()
                    .zip(actual.iter())
                    .map(|(f, a)| (f - a) * (f - a))
                    .sum::<f64>()
                    / forecast.len() as f64;
                Ok((rows, mse.sqrt(), distance))
            };
            (i, run().map_err(|e| e.to_string()))
        })
        .collect();
    let (per_rep, failures) = assemble(results);
    let mut rows = Vec::new();
    let mut prediction_rmse = Vec::with_capacity(per_rep.len());
    let mut distances = Vec::new();
    for (r, rmse, d) in per_rep {
        rows.extend(r);
        prediction_rmse.push(rmse);
        if let Some(d) = d {
            distances.push(d);
        }
    }
    let summary = summarize(&truth, &rows);
    let mean_hamming = if distances.is_empty() {
        None
    } else {
        Some(distances.iter().sum::<f64>() / distances.len() as f64)
    };
    MisspecOutcome {
        regime: regime.name.clone(),
        kind: kind.label(),
        rows,
        summary,
        prediction_rmse,
        mean_hamming,
        failures,
    }
}
