//! The edge-level network autoregressive model: specification, design
//! matrix, least-squares estimation, one-step forecasting and the VAR view.
//!
//! Writing `X_e(t)` for the series on edge `e` and `N^r(e)` for its stage-`r`
//! neighbouring edges, the model with maximum lag `L` and stage counts
//! `R_1, ..., R_L` is
//!
//! ```text
//! X_e(t) = sum_{l=1..L} [ alpha_{e,l} X_e(t-l)
//!          + sum_{r=1..R_l} beta_{l,r} mean_{f in N^r(e)} X_f(t-l) ] + u_e(t)
//! ```
//!
//! In the global mode `alpha_{e,l} = alpha_l` is shared by every edge; the
//! edge-specific mode gives each edge its own autoregressive coefficients
//! while the neighbour coefficients stay pooled. Stacking all `(edge, time)`
//! rows yields one ordinary least squares problem, solved by column-pivoted
//! QR. Standard errors use `sigma2 = RSS / (n_obs - n_params)` and the 95%
//! intervals the fixed normal quantile 1.959964.
//!
//! Collecting terms per lag gives the restricted VAR form
//!
//! ```text
//! X(t) = sum_l Psi_l X(t-l) + u(t),
//! Psi_l = diag(alpha_{., l}) + sum_r beta_{l,r} W^(r)
//! ```
//!
//! with `W^(r)` the stage-`r` normalising weight matrix; `to_var_matrices`
//! materialises the `Psi_l` for cross-checks.

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeNeighborhoods};
use crate::linalg::{lstsq, LstsqError};
use crate::panel::EdgePanel;

/// Fixed 97.5% normal quantile used for the confidence intervals.
pub const Z_975: f64 = 1.959964;

/// Whether the autoregressive coefficients are pooled across edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Global,
    EdgeSpecific,
}

/// Model order: maximum lag, neighbour stages per lag, coefficient pooling
/// and an optional intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnarEdgeSpec {
    pub max_lag: usize,
    /// `neighbor_stages[l - 1]` is `R_l`, the number of stages entering at
    /// lag `l`. Zero disables neighbour terms at that lag.
    pub neighbor_stages: Vec<usize>,
    pub alpha_mode: AlphaMode,
    #[serde(default)]
    pub intercept: bool,
}

impl GnarEdgeSpec {
    /// Global-alpha specification without intercept, the form used by all
    /// built-in regimes.
    pub fn global(max_lag: usize, neighbor_stages: Vec<usize>) -> Result<Self> {
        let spec = GnarEdgeSpec { max_lag, neighbor_stages, alpha_mode: AlphaMode::Global, intercept: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_lag == 0 {
            return Err(Error::InvalidParameter { name: "max_lag", reason: "must be at least 1".into() });
        }
        if self.neighbor_stages.len() != self.max_lag {
            return Err(Error::StageListMismatch { stages: self.neighbor_stages.len(), lag: self.max_lag });
        }
        Ok(())
    }

    /// Highest stage appearing at any lag; zero when no neighbour terms.
    pub fn max_stage(&self) -> usize {
        self.neighbor_stages.iter().copied().max().unwrap_or(0)
    }

    /// Number of regression columns for a graph with `k` edges.
    pub fn n_params(&self, k: usize) -> usize {
        let alpha = match self.alpha_mode {
            AlphaMode::Global => self.max_lag,
            AlphaMode::EdgeSpecific => self.max_lag * k,
        };
        alpha + self.neighbor_stages.iter().sum::<usize>() + usize::from(self.intercept)
    }
}

/// Autoregressive coefficient values in either pooling mode. Edge-specific
/// values are stored per edge, each row holding that edge's `L` lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaCoefficients {
    Global(Vec<f64>),
    EdgeSpecific(Vec<Vec<f64>>),
}

impl AlphaCoefficients {
    pub fn get(&self, e: usize, l: usize) -> f64 {
        match self {
            AlphaCoefficients::Global(a) => a[l],
            AlphaCoefficients::EdgeSpecific(a) => a[e][l],
        }
    }
}

/// A complete set of model coefficient values, used both as simulation
/// ground truth and as the payload of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnarCoefficients {
    pub alphas: AlphaCoefficients,
    /// `betas[l - 1][r - 1]` is `beta_{l,r}`; inner vectors may be empty.
    pub betas: Vec<Vec<f64>>,
    #[serde(default)]
    pub intercept: f64,
}

impl GnarCoefficients {
    pub fn global(alphas: Vec<f64>, betas: Vec<Vec<f64>>) -> Self {
        GnarCoefficients { alphas: AlphaCoefficients::Global(alphas), betas, intercept: 0.0 }
    }

    /// Checks the shapes against a specification and edge count.
    pub fn conforms_to(&self, spec: &GnarEdgeSpec, k: usize) -> Result<()> {
        let ok = match (&self.alphas, spec.alpha_mode) {
            (AlphaCoefficients::Global(a), AlphaMode::Global) => a.len() == spec.max_lag,
            (AlphaCoefficients::EdgeSpecific(a), AlphaMode::EdgeSpecific) => {
                a.len() == k && a.iter().all(|row| row.len() == spec.max_lag)
            }
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidParameter { name: "alphas", reason: "shape does not match the specification".into() });
        }
        if self.betas.len() != spec.max_lag
            || self.betas.iter().zip(&spec.neighbor_stages).any(|(b, &r)| b.len() != r)
        {
            return Err(Error::InvalidParameter { name: "betas", reason: "shape does not match the specification".into() });
        }
        Ok(())
    }
}

/// Sufficient-condition stationarity diagnostic: the largest, over edges, of
/// `sum_l (|alpha_{e,l}| + sum_r |beta_{l,r}|)`. Values below one guarantee
/// stationarity; values above one are inconclusive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StationarityCheck {
    pub value: f64,
    pub satisfied: bool,
}

pub fn stationarity_check(coeffs: &GnarCoefficients) -> StationarityCheck {
    let beta_total: f64 = coeffs.betas.iter().flatten().map(|b| b.abs()).sum();
    let alpha_max = match &coeffs.alphas {
        AlphaCoefficients::Global(a) => a.iter().map(|v| v.abs()).sum::<f64>(),
        AlphaCoefficients::EdgeSpecific(rows) => rows
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
    };
    let value = alpha_max + beta_total;
    StationarityCheck { value, satisfied: value < 1.0 }
}

/// Stacked regression problem. Rows run time-major: all edges at the first
/// usable time point, then the next, so row `(t - L) * K + e` belongs to
/// edge `e` at time `t`. Columns are the intercept (when enabled), the
/// alpha block ordered by lag (and by edge within a lag in the
/// edge-specific mode), then `beta_{l,r}` ordered by lag and stage.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    z: Array2<f64>,
    y: Vec<f64>,
    names: Vec<String>,
    spec: GnarEdgeSpec,
    k: usize,
    t: usize,
    graph: Arc<DirectedGraph>,
    neigh: Arc<EdgeNeighborhoods>,
}

impl DesignMatrix {
    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }
}

/// Per-stage uniform neighbour averages for every column of a panel:
/// `out[r - 1][(e, t)] = mean over N^r(e) of column t`. Shared by design
/// construction and forecasting.
fn neighbor_average_panel(panel: &EdgePanel, neigh: &EdgeNeighborhoods, max_stage: usize) -> Vec<Array2<f64>> {
    let k = panel.k();
    let t_len = panel.t_len();
    let mut out = Vec::with_capacity(max_stage);
    let mut col = vec![0.0; k];
    for r in 1..=max_stage {
        let mut avg = Array2::zeros((k, t_len));
        for t in 0..t_len {
            for (e, slot) in col.iter_mut().enumerate() {
                *slot = panel.values()[(e, t)];
            }
            for e in 0..k {
                avg[(e, t)] = neigh.stage_average(r, e as u32, &col);
            }
        }
        out.push(avg);
    }
    out
}

/// Builds the stacked design for a panel, a precomputed neighbourhood
/// structure on the same graph, and a specification.
pub fn build_design(panel: &EdgePanel, neigh: &Arc<EdgeNeighborhoods>, spec: &GnarEdgeSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let k = panel.k();
    let t = panel.t_len();
    let lag = spec.max_lag;
    if neigh.edge_count() != k {
        return Err(Error::PanelShapeMismatch { rows: k, k: neigh.edge_count() });
    }
    if neigh.r_max() < spec.max_stage() {
        return Err(Error::InvalidParameter {
            name: "neighborhoods",
            reason: format!("built to stage {}, specification needs {}", neigh.r_max(), spec.max_stage()),
        });
    }
    if t <= lag {
        return Err(Error::SeriesTooShort { t, min: lag + 1 });
    }

    let averages = neighbor_average_panel(panel, neigh, spec.max_stage());

    let n_obs = k * (t - lag);
    let p = spec.n_params(k);
    let mut names = Vec::with_capacity(p);
    if spec.intercept {
        names.push("intercept".to_string());
    }
    match spec.alpha_mode {
        AlphaMode::Global => {
            for l in 1..=lag {
                names.push(format!("alpha_{l}"));
            }
        }
        AlphaMode::EdgeSpecific => {
            for l in 1..=lag {
                for e in 0..k {
                    names.push(format!("alpha_{l}_edge_{e}"));
                }
            }
        }
    }
    for l in 1..=lag {
        for r in 1..=spec.neighbor_stages[l - 1] {
            names.push(format!("beta_{l}_{r}"));
        }
    }

    let mut z = Array2::zeros((n_obs, p));
    let mut y = Vec::with_capacity(n_obs);
    let values = panel.values();
    let mut row = 0usize;
    for ti in lag..t {
        for e in 0..k {
            y.push(values[(e, ti)]);
            let mut c = 0usize;
            if spec.intercept {
                z[(row, c)] = 1.0;
                c += 1;
            }
            match spec.alpha_mode {
                AlphaMode::Global => {
                    for l in 1..=lag {
                        z[(row, c)] = values[(e, ti - l)];
                        c += 1;
                    }
                }
                AlphaMode::EdgeSpecific => {
                    for l in 1..=lag {
                        z[(row, c + e)] = values[(e, ti - l)];
                        c += k;
                    }
                }
            }
            for l in 1..=lag {
                for r in 1..=spec.neighbor_stages[l - 1] {
                    z[(row, c)] = averages[r - 1][(e, ti - l)];
                    c += 1;
                }
            }
            row += 1;
        }
    }

    Ok(DesignMatrix {
        z,
        y,
        names,
        spec: spec.clone(),
        k,
        t,
        graph: Arc::clone(panel.graph()),
        neigh: Arc::clone(neigh),
    })
}

/// One estimated coefficient with its stacked-OLS uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// A fitted model: coefficient table, residual panel and the structures
/// needed to forecast.
#[derive(Debug, Clone)]
pub struct FittedGnarEdge {
    spec: GnarEdgeSpec,
    coefficients: Vec<Coefficient>,
    values: GnarCoefficients,
    sigma2: f64,
    n_obs: usize,
    residuals: Array2<f64>,
    graph: Arc<DirectedGraph>,
    neigh: Arc<EdgeNeighborhoods>,
}

/// Estimates the model on a prepared design.
pub fn fit(design: &DesignMatrix) -> Result<FittedGnarEdge> {
    let n_obs = design.n_obs();
    let p = design.n_params();
    if n_obs <= p {
        return Err(Error::TooFewObservations { n_obs, n_params: p });
    }
    let sol = lstsq(&design.z, &design.y).map_err(|e| match e {
        LstsqError::RankDeficient(cols) => {
            Error::SingularDesign(cols.into_iter().map(|c| design.names[c].clone()).collect())
        }
    })?;
    let sigma2 = sol.rss / (n_obs - p) as f64;
    let coefficients: Vec<Coefficient> = design
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = sol.coef[j];
            let std_error = (sigma2 * sol.xtx_inv_diag[j]).sqrt();
            Coefficient {
                name: name.clone(),
                estimate,
                std_error,
                ci_low: estimate - Z_975 * std_error,
                ci_high: estimate + Z_975 * std_error,
            }
        })
        .collect();

    // Residual panel, K x (T - L), from the time-major row layout.
    let k = design.k;
    let t_res = design.t - design.spec.max_lag;
    let mut residuals = Array2::zeros((k, t_res));
    for ti in 0..t_res {
        for e in 0..k {
            let row = ti * k + e;
            let fitted: f64 = design.z.row(row).iter().zip(&sol.coef).map(|(z, b)| z * b).sum();
            residuals[(e, ti)] = design.y[row] - fitted;
        }
    }

    let values = unpack_coefficients(&design.spec, k, &sol.coef);

    Ok(FittedGnarEdge {
        spec: design.spec.clone(),
        coefficients,
        values,
        sigma2,
        n_obs,
        residuals,
        graph: Arc::clone(&design.graph),
        neigh: Arc::clone(&design.neigh),
    })
}

/// Convenience wrapper: builds the neighbourhood structure and design, then
/// fits.
pub fn fit_gnar_edge(panel: &EdgePanel, spec: &GnarEdgeSpec) -> Result<FittedGnarEdge> {
    spec.validate()?;
    let neigh = Arc::new(EdgeNeighborhoods::build(panel.graph(), spec.max_stage()));
    let design = build_design(panel, &neigh, spec)?;
    fit(&design)
}

fn unpack_coefficients(spec: &GnarEdgeSpec, k: usize, coef: &[f64]) -> GnarCoefficients {
    let mut idx = 0usize;
    let intercept = if spec.intercept {
        idx += 1;
        coef[0]
    } else {
        0.0
    };
    let alphas = match spec.alpha_mode {
        AlphaMode::Global => {
            let a = coef[idx..idx + spec.max_lag].to_vec();
            idx += spec.max_lag;
            AlphaCoefficients::Global(a)
        }
        AlphaMode::EdgeSpecific => {
            let mut rows = vec![vec![0.0; spec.max_lag]; k];
            for l in 0..spec.max_lag {
                for (e, row) in rows.iter_mut().enumerate() {
                    row[l] = coef[idx + l * k + e];
                }
            }
            idx += spec.max_lag * k;
            AlphaCoefficients::EdgeSpecific(rows)
        }
    };
    let mut betas = Vec::with_capacity(spec.max_lag);
    for l in 0..spec.max_lag {
        let r_l = spec.neighbor_stages[l];
        betas.push(coef[idx..idx + r_l].to_vec());
        idx += r_l;
    }
    GnarCoefficients { alphas, betas, intercept }
}

impl FittedGnarEdge {
    pub fn spec(&self) -> &GnarEdgeSpec {
        &self.spec
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    /// Coefficient table in design-column order.
    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    /// Coefficient values reshaped for simulation or the VAR view.
    pub fn coefficient_values(&self) -> &GnarCoefficients {
        &self.values
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    /// Residual panel, one row per edge, one column per regressed time
    /// point.
    pub fn residuals(&self) -> &Array2<f64> {
        &self.residuals
    }

    pub fn stationarity(&self) -> StationarityCheck {
        stationarity_check(&self.values)
    }

    /// Forecasts the next column of a panel aligned to the fitted graph,
    /// using its last `L` observed columns.
    pub fn predict_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>> {
        predict_with_coefficients(&self.spec, &self.values, &self.neigh, panel)
    }

    /// Innovation covariance estimate `T^{-1} U U^T` over the residual
    /// panel.
    pub fn innovation_covariance(&self) -> Array2<f64> {
        innovation_covariance(&self.residuals)
    }

    /// Dense-free VAR form: one sparse `Psi_l` per lag. The intercept, when
    /// present, is not part of the matrices.
    pub fn to_var_matrices(&self) -> Vec<SparseRowMatrix> {
        var_matrices(&self.spec, &self.values, &self.neigh)
    }
}

/// One-step forecast from explicit coefficient values; shared by fitted
/// models and the simulator-side cross checks.
pub fn predict_with_coefficients(
    spec: &GnarEdgeSpec,
    coeffs: &GnarCoefficients,
    neigh: &EdgeNeighborhoods,
    panel: &EdgePanel,
) -> Result<Vec<f64>> {
    let k = panel.k();
    if k != neigh.edge_count() {
        return Err(Error::ModelPanelMismatch { expected: neigh.edge_count(), got: k });
    }
    coeffs.conforms_to(spec, k)?;
    let t = panel.t_len();
    if t < spec.max_lag {
        return Err(Error::SeriesTooShort { t, min: spec.max_lag });
    }
    let values = panel.values();
    // Neighbour averages of the last L columns, indexed [r - 1][l - 1][e].
    let max_stage = spec.max_stage();
    let mut avgs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(max_stage);
    let mut col = vec![0.0; k];
    for r in 1..=max_stage {
        let mut per_lag = Vec::with_capacity(spec.max_lag);
        for l in 1..=spec.max_lag {
            for (e, slot) in col.iter_mut().enumerate() {
                *slot = values[(e, t - l)];
            }
            per_lag.push((0..k).map(|e| neigh.stage_average(r, e as u32, &col)).collect());
        }
        avgs.push(per_lag);
    }
    let mut out = Vec::with_capacity(k);
    for e in 0..k {
        let mut v = coeffs.intercept;
        for l in 1..=spec.max_lag {
            v += coeffs.alphas.get(e, l - 1) * values[(e, t - l)];
            for r in 1..=spec.neighbor_stages[l - 1] {
                v += coeffs.betas[l - 1][r - 1] * avgs[r - 1][l - 1][e];
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// `T^{-1} U U^T` for a residual panel `U` with `T` columns.
pub fn innovation_covariance(residuals: &Array2<f64>) -> Array2<f64> {
    let k = residuals.nrows();
    let t = residuals.ncols();
    let mut sigma = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            let mut s = 0.0;
            for ti in 0..t {
                s += residuals[(a, ti)] * residuals[(b, ti)];
            }
            s /= t as f64;
            sigma[(a, b)] = s;
            sigma[(b, a)] = s;
        }
    }
    sigma
}

/// Sparse row-major matrix used for the VAR form of a fitted model.
#[derive(Debug, Clone)]
pub struct SparseRowMatrix {
    k: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseRowMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c as usize]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c as usize == j)
            .map(|&(_, v)| v)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.k, self.k));
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(i, c as usize)] = v;
            }
        }
        m
    }
}

pub fn var_matrices(spec: &GnarEdgeSpec, coeffs: &GnarCoefficients, neigh: &EdgeNeighborhoods) -> Vec<SparseRowMatrix> {
    let k = neigh.edge_count();
    let mut out = Vec::with_capacity(spec.max_lag);
    for l in 1..=spec.max_lag {
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(k);
        for e in 0..k {
            let mut row: Vec<(u32, f64)> = Vec::new();
            let a = coeffs.alphas.get(e, l - 1);
            if a != 0.0 {
                row.push((e as u32, a));
            }
            for r in 1..=spec.neighbor_stages[l - 1] {
                let set = neigh.stage(r, e as u32);
                if set.is_empty() {
                    continue;
                }
                let w = coeffs.betas[l - 1][r - 1] / set.len() as f64;
                for &f in set {
                    row.push((f, w));
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            rows.push(row);
        }
        out.push(SparseRowMatrix { k, rows });
    }
    out
}
