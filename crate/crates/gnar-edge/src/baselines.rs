//! Benchmark forecasters: an independent autoregression per edge and an
//! unrestricted vector autoregression across all edges.
//!
//! The per-edge model drops all network structure; the VAR estimates a full
//! `K x K` matrix per lag and is only practical for small edge counts. Both
//! share the [`OneStepForecast`] trait with the network model so forecast
//! comparisons can treat them uniformly.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnar::{innovation_covariance, FittedGnarEdge};
use crate::linalg::{lstsq, LstsqError};
use crate::panel::EdgePanel;

/// Common interface for anything that can extend a panel by one column.
pub trait OneStepForecast {
    /// Forecast of the column after the panel's last one, entry per edge.
    fn forecast_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>>;
    /// Total number of estimated coefficients.
    fn parameter_count(&self) -> usize;
    /// Short label for report rows.
    fn model_name(&self) -> &'static str;
}

impl OneStepForecast for FittedGnarEdge {
    fn forecast_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>> {
        self.predict_one_step(panel)
    }

    fn parameter_count(&self) -> usize {
        self.n_params()
    }

    fn model_name(&self) -> &'static str {
        "gnar"
    }
}

/// Coefficients of one edge's autoregression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArEdgeFit {
    pub intercept: f64,
    /// `phis[l - 1]` multiplies the value `l` steps back.
    pub phis: Vec<f64>,
    pub sigma2: f64,
}

/// Independent AR(L) per edge, each estimated by ordinary least squares.
#[derive(Debug, Clone)]
pub struct ArPerEdgeModel {
    max_lag: usize,
    intercept: bool,
    edges: Vec<ArEdgeFit>,
    residuals: Array2<f64>,
}

pub fn fit_ar_per_edge(panel: &EdgePanel, max_lag: usize, intercept: bool) -> Result<ArPerEdgeModel> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter { name: "max_lag", reason: "must be at least 1".into() });
    }
    let k = panel.k();
    let t = panel.t_len();
    if t <= max_lag {
        return Err(Error::SeriesTooShort { t, min: max_lag + 1 });
    }
    let n = t - max_lag;
    let p = max_lag + usize::from(intercept);
    if n <= p {
        return Err(Error::TooFewObservations { n_obs: n, n_params: p });
    }
    let values = panel.values();
    let mut edges = Vec::with_capacity(k);
    let mut residuals = Array2::zeros((k, n));
    let mut z = Array2::zeros((n, p));
    let mut y = vec![0.0; n];
    for e in 0..k {
        for (i, ti) in (max_lag..t).enumerate() {
            let mut c = 0;
            if intercept {
                z[(i, c)] = 1.0;
                c += 1;
            }
            for l in 1..=max_lag {
                z[(i, c)] = values[(e, ti - l)];
                c += 1;
            }
            y[i] = values[(e, ti)];
        }
        let sol = lstsq(&z, &y).map_err(|err| match err {
            LstsqError::RankDeficient(cols) => Error::SingularDesign(
                cols.into_iter().map(|c| ar_column_name(e, c, intercept)).collect(),
            ),
        })?;
        for (i, r) in residuals.row_mut(e).iter_mut().enumerate() {
            let fitted: f64 = z.row(i).iter().zip(&sol.coef).map(|(a, b)| a * b).sum();
            *r = y[i] - fitted;
        }
        let (icept, phis) = if intercept {
            (sol.coef[0], sol.coef[1..].to_vec())
        } else {
            (0.0, sol.coef.clone())
        };
        edges.push(ArEdgeFit { intercept: icept, phis, sigma2: sol.rss / (n - p) as f64 });
    }
    Ok(ArPerEdgeModel { max_lag, intercept, edges, residuals })
}

fn ar_column_name(edge: usize, col: usize, intercept: bool) -> String {
    if intercept && col == 0 {
        format!("edge_{edge}_intercept")
    } else {
        format!("edge_{edge}_phi_{}", col + usize::from(!intercept))
    }
}

impl ArPerEdgeModel {
    /// Rebuilds a model from stored coefficients, as when loading a fitted
    /// model document. The residual panel is empty.
    pub fn from_parts(max_lag: usize, intercept: bool, edges: Vec<ArEdgeFit>) -> Result<Self> {
        if max_lag == 0 || edges.iter().any(|e| e.phis.len() != max_lag) {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: format!("every edge needs exactly {max_lag} lag coefficients"),
            });
        }
        let k = edges.len();
        Ok(ArPerEdgeModel { max_lag, intercept, edges, residuals: Array2::zeros((k, 0)) })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn edge_fits(&self) -> &[ArEdgeFit] {
        &self.edges
    }

    pub fn residuals(&self) -> &Array2<f64> {
        &self.residuals
    }
}

impl OneStepForecast for ArPerEdgeModel {
    fn forecast_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>> {
        if panel.k() != self.edges.len() {
            return Err(Error::ModelPanelMismatch { expected: self.edges.len(), got: panel.k() });
        }
        let t = panel.t_len();
        if t < self.max_lag {
            return Err(Error::SeriesTooShort { t, min: self.max_lag });
        }
        let values = panel.values();
        Ok(self
            .edges
            .iter()
            .enumerate()
            .map(|(e, fit)| {
                let mut v = fit.intercept;
                for (l, phi) in fit.phis.iter().enumerate() {
                    v += phi * values[(e, t - 1 - l)];
                }
                v
            })
            .collect())
    }

    fn parameter_count(&self) -> usize {
        self.edges.len() * (self.max_lag + usize::from(self.intercept))
    }

    fn model_name(&self) -> &'static str {
        "ar"
    }
}

/// Unrestricted VAR(L) estimated equation by equation.
#[derive(Debug, Clone)]
pub struct VarModel {
    max_lag: usize,
    intercept: Vec<f64>,
    has_intercept: bool,
    /// `matrices[l - 1]` is the dense coefficient matrix at lag `l`.
    matrices: Vec<Array2<f64>>,
    sigma2: Vec<f64>,
    residuals: Array2<f64>,
}

pub fn fit_var(panel: &EdgePanel, max_lag: usize, intercept: bool) -> Result<VarModel> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter { name: "max_lag", reason: "must be at least 1".into() });
    }
    let k = panel.k();
    let t = panel.t_len();
    if t <= max_lag {
        return Err(Error::SeriesTooShort { t, min: max_lag + 1 });
    }
    let n = t - max_lag;
    let p = k * max_lag + usize::from(intercept);
    if n <= p {
        return Err(Error::TooFewObservations { n_obs: n, n_params: p });
    }
    let values = panel.values();
    // Shared regressor block: intercept, then all edges at lag 1, lag 2, ...
    let mut z = Array2::zeros((n, p));
    for (i, ti) in (max_lag..t).enumerate() {
        let mut c = 0;
        if intercept {
            z[(i, c)] = 1.0;
            c += 1;
        }
        for l in 1..=max_lag {
            for j in 0..k {
                z[(i, c)] = values[(j, ti - l)];
                c += 1;
            }
        }
    }
    let mut matrices = vec![Array2::zeros((k, k)); max_lag];
    let mut icept = vec![0.0; k];
    let mut sigma2 = Vec::with_capacity(k);
    let mut residuals = Array2::zeros((k, n));
    let mut y = vec![0.0; n];
    for eq in 0..k {
        for (i, ti) in (max_lag..t).enumerate() {
            y[i] = values[(eq, ti)];
        }
        let sol = lstsq(&z, &y).map_err(|err| match err {
            LstsqError::RankDeficient(cols) => Error::SingularDesign(
                cols.into_iter().map(|c| var_column_name(eq, c, k, intercept)).collect(),
            ),
        })?;
        let mut c = 0;
        if intercept {
            icept[eq] = sol.coef[0];
            c += 1;
        }
        for (l, matrix) in matrices.iter_mut().enumerate() {
            for j in 0..k {
                matrix[(eq, j)] = sol.coef[c + l * k + j];
            }
        }
        c += k * max_lag;
        debug_assert_eq!(c, p);
        for (i, r) in residuals.row_mut(eq).iter_mut().enumerate() {
            let fitted: f64 = z.row(i).iter().zip(&sol.coef).map(|(a, b)| a * b).sum();
            *r = y[i] - fitted;
        }
        sigma2.push(sol.rss / (n - p) as f64);
    }
    Ok(VarModel { max_lag, intercept: icept, has_intercept: intercept, matrices, sigma2, residuals })
}

fn var_column_name(eq: usize, col: usize, k: usize, intercept: bool) -> String {
    if intercept && col == 0 {
        return format!("eq_{eq}_intercept");
    }
    let c = col - usize::from(intercept);
    format!("eq_{eq}_lag_{}_edge_{}", c / k + 1, c % k)
}

impl VarModel {
    /// Rebuilds a model from stored matrices, as when loading a fitted
    /// model document. The residual panel is empty.
    pub fn from_parts(
        max_lag: usize,
        intercept: Vec<f64>,
        has_intercept: bool,
        matrices: Vec<Array2<f64>>,
        sigma2: Vec<f64>,
    ) -> Result<Self> {
        let k = intercept.len();
        let square = matrices.iter().all(|m| m.nrows() == k && m.ncols() == k);
        if max_lag == 0 || matrices.len() != max_lag || !square || sigma2.len() != k {
            return Err(Error::InvalidParameter {
                name: "matrices",
                reason: format!("need {max_lag} matrices of shape {k} x {k}"),
            });
        }
        Ok(VarModel {
            max_lag,
            intercept,
            has_intercept,
            matrices,
            sigma2,
            residuals: Array2::zeros((k, 0)),
        })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn matrix(&self, lag: usize) -> &Array2<f64> {
        &self.matrices[lag - 1]
    }

    pub fn intercept(&self) -> &[f64] {
        &self.intercept
    }

    pub fn equation_sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn residuals(&self) -> &Array2<f64> {
        &self.residuals
    }

    pub fn innovation_covariance(&self) -> Array2<f64> {
        innovation_covariance(&self.residuals)
    }
}

impl OneStepForecast for VarModel {
    fn forecast_one_step(&self, panel: &EdgePanel) -> Result<Vec<f64>> {
        let k = self.intercept.len();
        if panel.k() != k {
            return Err(Error::ModelPanelMismatch { expected: k, got: panel.k() });
        }
        let t = panel.t_len();
        if t < self.max_lag {
            return Err(Error::SeriesTooShort { t, min: self.max_lag });
        }
        let values = panel.values();
        let mut out = self.intercept.clone();
        for (l, matrix) in self.matrices.iter().enumerate() {
            for eq in 0..k {
                let mut s = 0.0;
                for j in 0..k {
                    s += matrix[(eq, j)] * values[(j, t - 1 - l)];
                }
                out[eq] += s;
            }
        }
        Ok(out)
    }

    fn parameter_count(&self) -> usize {
        let k = self.intercept.len();
        k * (k * self.max_lag + usize::from(self.has_intercept))
    }

    fn model_name(&self) -> &'static str {
        "var"
    }
}
