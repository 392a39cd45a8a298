//! On-disk formats: edge-list and wide panel CSV, fitted-model JSON
//! documents, leadingness rankings, experiment report tables, the regime
//! manifest and per-run manifests with input digests.
//!
//! All text is UTF-8 with LF line endings; floating point numbers are
//! written in Rust's shortest round-trip form, so saving and reloading a
//! value reproduces it bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{ArEdgeFit, ArPerEdgeModel, OneStepForecast, VarModel};
use crate::diagnostics::ResidualReport;
use crate::error::{Error, Result};
use crate::experiments::{ParameterSummary, PredictionOutcome, ReplicationRow};
use crate::gnar::{
    predict_with_coefficients, Coefficient, FittedGnarEdge, GnarCoefficients, GnarEdgeSpec,
};
use crate::graph::{DirectedGraph, EdgeNeighborhoods};
use crate::panel::{EdgePanel, ScalingRecord};
use crate::simulate::{builtin_regimes, SimulationRegime};

/// RNG algorithm identifier recorded in manifests and report headers.
pub const RNG_ID: &str = "chacha12";

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, reason: reason.into() }
}

/// Canonical edge-list serialization: a node-count comment, the
/// `source,target` header, then one integer pair per edge in label order.
pub fn write_graph(g: &DirectedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n={}", g.node_count());
    out.push_str("source,target\n");
    for &(s, t) in g.edges() {
        let _ = writeln!(out, "{s},{t}");
    }
    out
}

/// Parses the edge-list format. The node-count comment is optional; when
/// missing, the node count is the largest endpoint plus one.
pub fn parse_graph(text: &str, path: &Path) -> Result<DirectedGraph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                n = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("bad node count '{v}'")))?,
                );
            }
            continue;
        }
        if !saw_header {
            if line != "source,target" {
                return Err(parse_err(path, line_no, "expected header 'source,target'"));
            }
            saw_header = true;
            continue;
        }
        let (s, t) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, line_no, "expected two comma-separated fields"))?;
        let s: u32 = s.trim().parse().map_err(|_| parse_err(path, line_no, format!("bad source '{s}'")))?;
        let t: u32 = t.trim().parse().map_err(|_| parse_err(path, line_no, format!("bad target '{t}'")))?;
        edges.push((s, t));
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing header 'source,target'"));
    }
    let n = n.unwrap_or_else(|| {
        edges.iter().map(|&(s, t)| s.max(t) as usize + 1).max().unwrap_or(0)
    });
    DirectedGraph::new(n, edges)
}

pub fn save_graph(g: &DirectedGraph, path: &Path) -> Result<()> {
    fs::write(path, write_graph(g))?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<DirectedGraph> {
    parse_graph(&fs::read_to_string(path)?, path)
}

/// Wide panel serialization: node-count comment, header
/// `source,target,t0,…`, one row per edge in label order.
pub fn write_panel(panel: &EdgePanel) -> String {
    let g = panel.graph();
    let mut out = String::new();
    let _ = writeln!(out, "# n={}", g.node_count());
    out.push_str("source,target");
    for t in 0..panel.t_len() {
        let _ = write!(out, ",t{t}");
    }
    out.push('\n');
    for (e, &(s, t)) in g.edges().iter().enumerate() {
        let _ = write!(out, "{s},{t}");
        for v in panel.values().row(e) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses the wide panel format. Rows may appear in any order; they are
/// re-sorted to the canonical lexicographic edge labeling. The graph is
/// reconstructed from the rows themselves.
pub fn parse_panel(text: &str, path: &Path) -> Result<EdgePanel> {
    let mut n: Option<usize> = None;
    let mut t_len: Option<usize> = None;
    let mut rows: Vec<(u32, u32, Vec<f64>)> = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                n = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| parse_err(path, line_no, format!("bad node count '{v}'")))?,
                );
            }
            continue;
        }
        if !saw_header {
            let mut fields = line.split(',');
            if fields.next() != Some("source") || fields.next() != Some("target") {
                return Err(parse_err(path, line_no, "header must start with 'source,target'"));
            }
            let count = fields.count();
            if count == 0 {
                return Err(parse_err(path, line_no, "header has no time columns"));
            }
            t_len = Some(count);
            saw_header = true;
            continue;
        }
        let t_len = t_len.unwrap();
        let mut fields = line.split(',');
        let s = fields.next().unwrap_or("");
        let t = fields.next().unwrap_or("");
        let s: u32 = s.trim().parse().map_err(|_| parse_err(path, line_no, format!("bad source '{s}'")))?;
        let t: u32 = t.trim().parse().map_err(|_| parse_err(path, line_no, format!("bad target '{t}'")))?;
        let mut values = Vec::with_capacity(t_len);
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad value '{field}'")))?;
            values.push(v);
        }
        if values.len() != t_len {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {t_len} values, found {}", values.len()),
            ));
        }
        rows.push((s, t, values));
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing header 'source,target,t0,…'"));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "panel has no edge rows"));
    }
    rows.sort_by_key(|&(s, t, _)| (s, t));
    let n = n.unwrap_or_else(|| {
        rows.iter().map(|&(s, t, _)| s.max(t) as usize + 1).max().unwrap_or(0)
    });
    let graph = DirectedGraph::new(n, rows.iter().map(|&(s, t, _)| (s, t)).collect())?;
    let t_len = t_len.unwrap();
    let mut values = Array2::zeros((rows.len(), t_len));
    for (e, (_, _, row)) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().enumerate() {
            values[(e, i)] = v;
        }
    }
    EdgePanel::new(Arc::new(graph), values, None)
}

pub fn save_panel(panel: &EdgePanel, path: &Path) -> Result<()> {
    fs::write(path, write_panel(panel))?;
    Ok(())
}

pub fn load_panel(path: &Path) -> Result<EdgePanel> {
    parse_panel(&fs::read_to_string(path)?, path)
}

/// Fitted-model document, dispatched on the `model_type` field. Every
/// variant can forecast one step ahead from a compatible panel; the
/// optional scaling record travels with models fitted on preprocessed
/// panels so forecasts can be mapped back to raw levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum ModelDocument {
    Gnar {
        spec: GnarEdgeSpec,
        coefficients: Vec<Coefficient>,
        values: GnarCoefficients,
        sigma2: f64,
        n_obs: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scaling: Option<ScalingRecord>,
    },
    Ar {
        max_lag: usize,
        intercept: bool,
        edges: Vec<ArEdgeFit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scaling: Option<ScalingRecord>,
    },
    Var {
        max_lag: usize,
        intercept: Vec<f64>,
        has_intercept: bool,
        /// Row-major `K x K` matrix per lag.
        matrices: Vec<Vec<Vec<f64>>>,
        sigma2: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scaling: Option<ScalingRecord>,
    },
}

impl ModelDocument {
    pub fn from_gnar(fit: &FittedGnarEdge, scaling: Option<ScalingRecord>) -> Self {
        ModelDocument::Gnar {
            spec: fit.spec().clone(),
            coefficients: fit.coefficients().to_vec(),
            values: fit.coefficient_values().clone(),
            sigma2: fit.sigma2(),
            n_obs: fit.n_obs(),
            scaling,
        }
    }

    pub fn from_ar(model: &ArPerEdgeModel, scaling: Option<ScalingRecord>) -> Self {
        ModelDocument::Ar {
            max_lag: model.max_lag(),
            intercept: model.has_intercept(),
            edges: model.edge_fits().to_vec(),
            scaling,
        }
    }

    pub fn from_var(model: &VarModel, scaling: Option<ScalingRecord>) -> Self {
        let k = model.intercept().len();
        let matrices = (1..=model.max_lag())
            .map(|l| {
                let m = model.matrix(l);
                (0..k).map(|i| m.row(i).to_vec()).collect()
            })
            .collect();
        ModelDocument::Var {
            max_lag: model.max_lag(),
            intercept: model.intercept().to_vec(),
            has_intercept: model.has_intercept(),
            matrices,
            sigma2: model.equation_sigma2().to_vec(),
            scaling,
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            ModelDocument::Gnar { .. } => "gnar",
            ModelDocument::Ar { .. } => "ar",
            ModelDocument::Var { .. } => "var",
        }
    }

    pub fn scaling(&self) -> Option<&ScalingRecord> {
        match self {
            ModelDocument::Gnar { scaling, .. }
            | ModelDocument::Ar { scaling, .. }
            | ModelDocument::Var { scaling, .. } => scaling.as_ref(),
        }
    }

    pub fn max_lag(&self) -> usize {
        match self {
            ModelDocument::Gnar { spec, .. } => spec.max_lag,
            ModelDocument::Ar { max_lag, .. } | ModelDocument::Var { max_lag, .. } => *max_lag,
        }
    }

    /// In-sample one-step residuals on a panel, one row per edge and one
    /// column per forecastable time point.
    pub fn residual_panel(&self, panel: &EdgePanel) -> Result<Array2<f64>> {
        let l = self.max_lag();
        let t = panel.t_len();
        if t <= l {
            return Err(Error::SeriesTooShort { t, min: l + 1 });
        }
        let k = panel.k();
        let mut out = Array2::zeros((k, t - l));
        if let ModelDocument::Gnar { spec, values, .. } = self {
            let neigh =
                Arc::new(EdgeNeighborhoods::build(panel.graph().as_ref(), spec.max_stage()));
            for ti in l..t {
                let prefix = panel.truncate(ti)?;
                let f = predict_with_coefficients(spec, values, &neigh, &prefix)?;
                for e in 0..k {
                    out[(e, ti - l)] = panel.values()[(e, ti)] - f[e];
                }
            }
        } else {
            for ti in l..t {
                let prefix = panel.truncate(ti)?;
                let f = self.forecast_one_step(&prefix)?;
                for e in 0..k {
                    out[(e, ti - l)] = panel.values()[(e, ti)] - f[e];
                }
            }
        }
        Ok(out)
    }

    /// One-step forecast from the stored coefficients. For the network
    /// model the neighborhood sets are rebuilt from the panel's graph.
    pub fn forecast_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>> {
        match self {
            ModelDocument::Gnar { spec, values, .. } => {
                let neigh =
                    Arc::new(EdgeNeighborhoods::build(panel.graph().as_ref(), spec.max_stage()));
                predict_with_coefficients(spec, values, &neigh, panel)
            }
            ModelDocument::Ar { max_lag, intercept, edges, .. } => {
                ArPerEdgeModel::from_parts(*max_lag, *intercept, edges.clone())?
                    .forecast_one_step(panel)
            }
            ModelDocument::Var { max_lag, intercept, has_intercept, matrices, sigma2, .. } => {
                let k = intercept.len();
                let mut dense = Vec::with_capacity(*max_lag);
                for m in matrices {
                    let mut a = Array2::zeros((k, k));
                    for (i, row) in m.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            a[(i, j)] = *v;
                        }
                    }
                    dense.push(a);
                }
                VarModel::from_parts(*max_lag, intercept.clone(), *has_intercept, dense, sigma2.clone())?
                    .forecast_one_step(panel)
            }
        }
    }
}

pub fn save_model(doc: &ModelDocument, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelDocument> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// One-step forecast as CSV, one row per edge.
pub fn write_forecast(graph: &DirectedGraph, forecast: &[f64]) -> String {
    let mut out = String::from("source,target,forecast\n");
    for (&(s, t), v) in graph.edges().iter().zip(forecast) {
        let _ = writeln!(out, "{s},{t},{v}");
    }
    out
}

const DEGENERATE_NOTE: &str = "# error=constant-series\n";

/// Per-timestamp residual summaries as CSV; `first_t` is the panel time
/// index of the first residual column.
pub fn write_residual_summary(report: &ResidualReport, first_t: usize) -> String {
    let mut out = String::from("t,min,q1,median,q3,max,outliers,mean\n");
    for (i, tp) in report.per_time.iter().enumerate() {
        let s = &tp.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            first_t + i,
            s.min,
            s.q1,
            s.median,
            s.q3,
            s.max,
            tp.outliers,
            report.mean_series[i]
        );
    }
    out
}

/// ACF of the mean residual series as CSV; a degenerate series yields a
/// commented error flag instead of rows.
pub fn write_acf_csv(report: &ResidualReport) -> String {
    let mut out = String::new();
    if let Some(acf) = &report.acf {
        out.push_str("lag,value\n");
        for (lag, v) in acf.iter().enumerate() {
            let _ = writeln!(out, "{lag},{v}");
        }
    } else {
        out.push_str(DEGENERATE_NOTE);
        out.push_str("lag,value\n");
    }
    out
}

/// Normal QQ pairs of the standardized mean residual series as CSV.
pub fn write_qq_csv(report: &ResidualReport) -> String {
    let mut out = String::new();
    if let Some(qq) = &report.qq {
        out.push_str("theoretical,empirical\n");
        for (th, emp) in qq {
            let _ = writeln!(out, "{th},{emp}");
        }
    } else {
        out.push_str(DEGENERATE_NOTE);
        out.push_str("theoretical,empirical\n");
    }
    out
}

/// Shapiro-Wilk result as CSV.
pub fn write_normality_csv(report: &ResidualReport) -> String {
    match &report.normality {
        Some(t) => format!("w,p_value\n{},{}\n", t.w, t.p_value),
        None => format!("{DEGENERATE_NOTE}w,p_value\n"),
    }
}

/// Plot-ready document: histogram bins of the mean residual series plus
/// the QQ pairs and ACF stems, with nulls for degenerate series.
pub fn plot_document(report: &ResidualReport) -> serde_json::Value {
    let histogram = {
        let xs = &report.mean_series;
        let (lo, hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if hi - lo <= f64::MIN_POSITIVE {
            serde_json::Value::Null
        } else {
            let bins = (xs.len() as f64).log2().ceil() as usize + 1;
            let width = (hi - lo) / bins as f64;
            let mut counts = vec![0usize; bins];
            for v in xs {
                let idx = (((v - lo) / width) as usize).min(bins - 1);
                counts[idx] += 1;
            }
            let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
            serde_json::json!({ "edges": edges, "counts": counts })
        }
    };
    serde_json::json!({
        "histogram": histogram,
        "qq": report.qq,
        "acf": report.acf,
        "normality": report.normality,
    })
}

/// Leadingness ranking as CSV, most leading edge first.
pub fn write_leadingness(graph: &DirectedGraph, scores: &[f64], ranked: &[u32]) -> String {
    let mut out = String::from("source,target,score,rank\n");
    for (rank, &e) in ranked.iter().enumerate() {
        let (s, t) = graph.edges()[e as usize];
        let _ = writeln!(out, "{s},{t},{},{}", scores[e as usize], rank + 1);
    }
    out
}

/// Per-replication coverage rows as CSV.
pub fn write_replication_rows(regime: &str, rows: &[ReplicationRow]) -> String {
    let mut out =
        String::from("regime,replication,parameter,estimate,ci_low,ci_high,covered,abs_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{regime},{},{},{},{},{},{},{}",
            r.replication, r.parameter, r.estimate, r.ci_low, r.ci_high, r.covered, r.abs_error
        );
    }
    out
}

/// Aggregated per-parameter coverage and RMSE as CSV.
pub fn write_parameter_summaries(regime: &str, summaries: &[ParameterSummary]) -> String {
    let mut out = String::from("regime,parameter,truth,coverage,rmse\n");
    for s in summaries {
        let _ = writeln!(out, "{regime},{},{},{},{}", s.parameter, s.truth, s.coverage, s.rmse);
    }
    out
}

/// Per-replication one-step RMSE for each compared model as CSV.
pub fn write_prediction_rmse(outcome: &PredictionOutcome) -> String {
    let mut out = String::from("regime,replication,model,rmse\n");
    for (rep, row) in outcome.rmse.iter().enumerate() {
        for (name, value) in outcome.models.iter().zip(row) {
            let _ = writeln!(out, "{},{rep},{name},{value}", outcome.regime);
        }
    }
    out
}

/// Built-in regime table plus the pinned RNG, for `--regime` lookups and
/// report headers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeManifest {
    pub rng: String,
    pub regimes: Vec<SimulationRegime>,
}

pub fn regime_manifest() -> RegimeManifest {
    RegimeManifest { rng: RNG_ID.to_string(), regimes: builtin_regimes() }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Record of one command invocation: resolved parameters, the seed and
/// RNG, and a digest of every input file. Identical runs produce
/// identical manifests, so manifest equality certifies reproducibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            rng: RNG_ID.to_string(),
            seed: None,
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    /// Records the SHA-256 digest of an input file.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
