//! Edge panels: one finite-valued time series per labelled edge, stored as a
//! `K x T` matrix whose row order follows the graph's edge labels.
//!
//! The preprocessing used before model fitting is first-order differencing
//! followed by a per-edge standardisation: each differenced row is divided
//! by its own sample standard deviation (computed with the `n - 1`
//! denominator). The resulting [`ScalingRecord`] keeps the per-edge scales
//! and the last raw levels so one-step forecasts can be mapped back to the
//! raw scale: `raw = last_level + sd * scaled`.

use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone)]
pub struct EdgePanel {
    graph: Arc<DirectedGraph>,
    values: Array2<f64>,
    times: Option<Vec<String>>,
}

impl EdgePanel {
    /// Wraps a `K x T` value matrix aligned to `graph`'s edge labels.
    /// Rejects shape mismatches, non-finite entries and mislabelled time
    /// axes.
    pub fn new(graph: Arc<DirectedGraph>, values: Array2<f64>, times: Option<Vec<String>>) -> Result<Self> {
        if values.nrows() != graph.edge_count() {
            return Err(Error::PanelShapeMismatch { rows: values.nrows(), k: graph.edge_count() });
        }
        if let Some(ts) = &times {
            if ts.len() != values.ncols() {
                return Err(Error::InvalidParameter {
                    name: "times",
                    reason: format!("{} labels for {} columns", ts.len(), values.ncols()),
                });
            }
        }
        for ((e, t), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { edge: e, t });
            }
        }
        Ok(EdgePanel { graph, values, times })
    }

    pub fn graph(&self) -> &Arc<DirectedGraph> {
        &self.graph
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Number of edges (rows).
    pub fn k(&self) -> usize {
        self.values.nrows()
    }

    /// Number of observed time points (columns).
    pub fn t_len(&self) -> usize {
        self.values.ncols()
    }

    pub fn times(&self) -> Option<&[String]> {
        self.times.as_deref()
    }

    pub fn row(&self, e: u32) -> ArrayView1<'_, f64> {
        self.values.row(e as usize)
    }

    pub fn column(&self, t: usize) -> ArrayView1<'_, f64> {
        self.values.column(t)
    }

    /// Panel restricted to the first `t` columns.
    pub fn truncate(&self, t: usize) -> Result<EdgePanel> {
        if t == 0 || t > self.t_len() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("{t} outside 1..={}", self.t_len()),
            });
        }
        Ok(EdgePanel {
            graph: Arc::clone(&self.graph),
            values: self.values.slice(ndarray::s![.., ..t]).to_owned(),
            times: self.times.as_ref().map(|ts| ts[..t].to_vec()),
        })
    }

    /// Keeps the rows in `keep` (labels of the current graph, in any order)
    /// and rebuilds the graph on the same node set from the surviving edges.
    /// Rows are re-sorted to the new graph's label order.
    pub fn select_edges(&self, keep: &[u32]) -> Result<(Arc<DirectedGraph>, EdgePanel)> {
        let mut pairs = Vec::with_capacity(keep.len());
        for &label in keep {
            pairs.push(self.graph.edge(label)?);
        }
        let sub = Arc::new(DirectedGraph::new(self.graph.node_count(), pairs)?);
        let t = self.t_len();
        let mut values = Array2::zeros((sub.edge_count(), t));
        for &label in keep {
            let (s, tt) = self.graph.edge(label)?;
            let new_label = sub.label(s, tt).expect("kept edge present");
            values.row_mut(new_label as usize).assign(&self.values.row(label as usize));
        }
        let panel = EdgePanel { graph: Arc::clone(&sub), values, times: self.times.clone() };
        Ok((sub, panel))
    }

    /// Reattaches the rows to a relabeled graph on the same node set: row
    /// `e` moves to `relabel[e]`. `relabel` must be a permutation of the
    /// labels, as produced by graph rewiring.
    pub fn relabel_rows(&self, graph: DirectedGraph, relabel: &[u32]) -> Result<EdgePanel> {
        let k = self.k();
        if graph.edge_count() != k {
            return Err(Error::ModelPanelMismatch { expected: k, got: graph.edge_count() });
        }
        if relabel.len() != k {
            return Err(Error::ModelPanelMismatch { expected: k, got: relabel.len() });
        }
        let mut seen = vec![false; k];
        let mut values = Array2::zeros((k, self.t_len()));
        for (e, &dst) in relabel.iter().enumerate() {
            let dst = dst as usize;
            if dst >= k || seen[dst] {
                return Err(Error::InvalidParameter {
                    name: "relabel",
                    reason: "not a permutation of the edge labels".into(),
                });
            }
            seen[dst] = true;
            values.row_mut(dst).assign(&self.values.row(e));
        }
        EdgePanel::new(Arc::new(graph), values, self.times.clone())
    }
}

/// Per-edge scales and last raw levels produced by [`preprocess`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRecord {
    /// Sample standard deviation of each edge's differenced training series.
    pub sds: Vec<f64>,
    /// Last raw level of each edge in the training panel.
    pub last_levels: Vec<f64>,
}

impl ScalingRecord {
    /// Differences a raw panel and divides by the stored scales, without
    /// re-estimating them. Used when a model fitted on scaled data receives
    /// new raw observations.
    pub fn rescale(&self, panel: &EdgePanel) -> Result<EdgePanel> {
        if panel.k() != self.sds.len() {
            return Err(Error::PanelShapeMismatch { rows: panel.k(), k: self.sds.len() });
        }
        difference_and_scale(panel, &self.sds)
    }

    /// Maps a one-step forecast on the scaled data back to the raw level
    /// scale, anchored at the supplied raw levels (usually the last observed
    /// column): `raw = last + sd * scaled`.
    pub fn to_raw_forecast(&self, scaled: &[f64], last_raw: &[f64]) -> Result<Vec<f64>> {
        if scaled.len() != self.sds.len() || last_raw.len() != self.sds.len() {
            return Err(Error::PanelShapeMismatch { rows: scaled.len(), k: self.sds.len() });
        }
        Ok((0..scaled.len())
            .map(|e| last_raw[e] + self.sds[e] * scaled[e])
            .collect())
    }

    /// Scaled increment `(next - prev) / sd` per edge; the holdout analogue
    /// of [`preprocess`] for a single new column.
    pub fn scale_increment(&self, prev: &[f64], next: &[f64]) -> Result<Vec<f64>> {
        if prev.len() != self.sds.len() || next.len() != self.sds.len() {
            return Err(Error::PanelShapeMismatch { rows: next.len(), k: self.sds.len() });
        }
        Ok((0..prev.len())
            .map(|e| (next[e] - prev[e]) / self.sds[e])
            .collect())
    }
}

/// First-order differences, then divides each row by its sample standard
/// deviation. A panel with `T` columns yields one with `T - 1`. Fails when
/// `T < 3` or when some edge's differenced series has zero scale.
///
/// ```
/// # use std::sync::Arc;
/// # use gnar_edge::graph::DirectedGraph;
/// # use gnar_edge::panel::{preprocess, EdgePanel};
/// let g = Arc::new(DirectedGraph::new(2, vec![(0, 1)]).unwrap());
/// let p = EdgePanel::new(g, ndarray::arr2(&[[1.0, 3.0, 2.0, 5.0]]), None).unwrap();
/// let (scaled, rec) = preprocess(&p).unwrap();
/// assert!((rec.sds[0] - 2.0816659994661326).abs() < 1e-12);
/// assert!((scaled.values()[(0, 0)] - 0.9607689228305228).abs() < 1e-12);
/// let raw = rec.to_raw_forecast(&[0.9607689228305228], &[5.0]).unwrap();
/// assert!((raw[0] - 7.0).abs() < 1e-12);
/// ```
pub fn preprocess(panel: &EdgePanel) -> Result<(EdgePanel, ScalingRecord)> {
    if panel.t_len() < 3 {
        return Err(Error::SeriesTooShort { t: panel.t_len(), min: 3 });
    }
    let k = panel.k();
    let t = panel.t_len();
    let mut sds = Vec::with_capacity(k);
    for e in 0..k {
        let row = panel.values.row(e);
        let m = t - 1;
        let mut mean = 0.0;
        for i in 0..m {
            mean += row[i + 1] - row[i];
        }
        mean /= m as f64;
        let mut ss = 0.0;
        for i in 0..m {
            let d = (row[i + 1] - row[i]) - mean;
            ss += d * d;
        }
        let sd = (ss / (m - 1) as f64).sqrt();
        if sd <= f64::MIN_POSITIVE || !sd.is_finite() {
            let (s, tt) = panel.graph.edge(e as u32)?;
            return Err(Error::DegenerateEdge(s, tt));
        }
        sds.push(sd);
    }
    let scaled = difference_and_scale(panel, &sds)?;
    let last_levels = panel.values.column(t - 1).to_vec();
    Ok((scaled, ScalingRecord { sds, last_levels }))
}

fn difference_and_scale(panel: &EdgePanel, sds: &[f64]) -> Result<EdgePanel> {
    if panel.t_len() < 2 {
        return Err(Error::SeriesTooShort { t: panel.t_len(), min: 2 });
    }
    let k = panel.k();
    let t = panel.t_len();
    let mut out = Array2::zeros((k, t - 1));
    for e in 0..k {
        for i in 0..t - 1 {
            out[(e, i)] = (panel.values[(e, i + 1)] - panel.values[(e, i)]) / sds[e];
        }
    }
    let times = panel.times.as_ref().map(|ts| ts[1..].to_vec());
    EdgePanel::new(Arc::clone(&panel.graph), out, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr2;

    fn two_edge_panel(values: Array2<f64>) -> EdgePanel {
        let g = Arc::new(DirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        EdgePanel::new(g, values, None).unwrap()
    }

    #[test]
    fn rejects_shape_mismatch_and_non_finite() {
        let g = Arc::new(DirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        let err = EdgePanel::new(Arc::clone(&g), arr2(&[[1.0, 2.0]]), None).unwrap_err();
        assert!(matches!(err, Error::PanelShapeMismatch { rows: 1, k: 2 }));
        let err = EdgePanel::new(g, arr2(&[[1.0, f64::NAN], [0.0, 0.0]]), None).unwrap_err();
        assert!(matches!(err, Error::NonFinite { edge: 0, t: 1 }));
    }

    #[test]
    fn preprocess_matches_hand_arithmetic() {
        // Row [1, 3, 2, 5]: differences [2, -1, 3], sd = 2.0816659994661326,
        // scaled [0.96076892, -0.48038446, 1.44115338].
        let p = two_edge_panel(arr2(&[[1.0, 3.0, 2.0, 5.0], [0.0, 1.0, 3.0, 2.0]]));
        let (scaled, rec) = preprocess(&p).unwrap();
        assert_relative_eq!(rec.sds[0], 2.0816659994661326, epsilon = 1e-14);
        assert_relative_eq!(scaled.values()[(0, 0)], 0.9607689228305228, epsilon = 1e-14);
        assert_relative_eq!(scaled.values()[(0, 1)], -0.4803844614152614, epsilon = 1e-14);
        assert_relative_eq!(scaled.values()[(0, 2)], 1.4411533842457842, epsilon = 1e-14);
        assert_eq!(rec.last_levels, vec![5.0, 2.0]);
    }

    #[test]
    fn forecast_round_trip_restores_raw_scale() {
        let p = two_edge_panel(arr2(&[[1.0, 3.0, 2.0, 5.0], [0.0, 1.0, 3.0, 2.0]]));
        let (scaled, rec) = preprocess(&p).unwrap();
        let last_scaled: Vec<f64> = scaled.column(scaled.t_len() - 1).to_vec();
        let raw = rec.to_raw_forecast(&last_scaled, &rec.last_levels.clone()).unwrap();
        // Undoing the scaling of the final increment recovers the final level
        // plus that same increment.
        assert_relative_eq!(raw[0], 5.0 + (5.0 - 2.0), epsilon = 1e-12);
        assert_relative_eq!(raw[1], 2.0 + (2.0 - 3.0), epsilon = 1e-12);
    }

    #[test]
    fn scaled_rows_have_unit_sample_sd() {
        let g = Arc::new(DirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        let mut values = Array2::zeros((2, 40));
        for e in 0..2 {
            for t in 0..40 {
                values[(e, t)] = ((e + 1) as f64 * 0.7 * t as f64).sin() * (3.0 + e as f64) + t as f64;
            }
        }
        let p = EdgePanel::new(g, values, None).unwrap();
        let (scaled, _) = preprocess(&p).unwrap();
        for e in 0..2 {
            let row = scaled.row(e as u32);
            let m = row.len() as f64;
            let mean = row.sum() / m;
            let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
            assert_relative_eq!((ss / (m - 1.0)).sqrt(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_row_is_a_named_error() {
        let p = two_edge_panel(arr2(&[[2.0, 2.0, 2.0, 2.0], [0.0, 1.0, 3.0, 2.0]]));
        let err = preprocess(&p).unwrap_err();
        assert!(matches!(err, Error::DegenerateEdge(0, 1)));
        // A linear ramp also differences to a constant.
        let p = two_edge_panel(arr2(&[[0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 3.0, 2.0]]));
        assert!(preprocess(&p).is_err());
    }

    #[test]
    fn too_short_panel_is_rejected() {
        let p = two_edge_panel(arr2(&[[1.0, 2.0], [0.0, 1.0]]));
        assert!(matches!(preprocess(&p).unwrap_err(), Error::SeriesTooShort { t: 2, min: 3 }));
    }

    #[test]
    fn rescale_uses_stored_scales() {
        let train = two_edge_panel(arr2(&[[1.0, 3.0, 2.0, 5.0], [0.0, 1.0, 3.0, 2.0]]));
        let (_, rec) = preprocess(&train).unwrap();
        let full = two_edge_panel(arr2(&[[1.0, 3.0, 2.0, 5.0, 6.0], [0.0, 1.0, 3.0, 2.0, 4.0]]));
        let scaled = rec.rescale(&full).unwrap();
        assert_eq!(scaled.t_len(), 4);
        assert_relative_eq!(scaled.values()[(0, 3)], 1.0 / rec.sds[0], epsilon = 1e-14);
        let inc = rec.scale_increment(&[5.0, 2.0], &[6.0, 4.0]).unwrap();
        assert_relative_eq!(inc[0], 1.0 / rec.sds[0], epsilon = 1e-14);
        assert_relative_eq!(inc[1], 2.0 / rec.sds[1], epsilon = 1e-14);
    }

    #[test]
    fn select_edges_relabels_and_reorders() {
        let g = Arc::new(DirectedGraph::new(4, vec![(0, 1), (1, 2), (3, 0)]).unwrap());
        let p = EdgePanel::new(
            g,
            arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
            Some(vec!["a".into(), "b".into()]),
        )
        .unwrap();
        // Keep (3,0) and (0,1); in the new graph (0,1) sorts first.
        let (sub, panel) = p.select_edges(&[2, 0]).unwrap();
        assert_eq!(sub.edges(), &[(0, 1), (3, 0)]);
        assert_eq!(panel.values().row(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(panel.values().row(1).to_vec(), vec![5.0, 6.0]);
        assert_eq!(panel.times().unwrap(), ["a", "b"]);
    }

    #[test]
    fn relabel_rows_permutes_onto_the_new_graph() {
        let g = Arc::new(DirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        let p = EdgePanel::new(g, arr2(&[[1.0, 2.0], [3.0, 4.0]]), None).unwrap();
        let swapped = DirectedGraph::new(3, vec![(0, 2), (1, 0)]).unwrap();
        // Old edge 0 becomes label 1, old edge 1 becomes label 0.
        let out = p.relabel_rows(swapped, &[1, 0]).unwrap();
        assert_eq!(out.values().row(0).to_vec(), vec![3.0, 4.0]);
        assert_eq!(out.values().row(1).to_vec(), vec![1.0, 2.0]);
        assert!(p
            .relabel_rows(DirectedGraph::new(3, vec![(0, 2), (1, 0)]).unwrap(), &[1, 1])
            .is_err());
    }
}
