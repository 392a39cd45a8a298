//! Lag-1 cross-correlation lead-lag analysis and top-k edge sparsification.
//!
//! For edges `a` and `b` the score is
//!
//! ```text
//! S(a, b) = corr(X_a(t-1), X_b(t)) - corr(X_a(t), X_b(t-1))
//! ```
//!
//! positive when `a` leads `b`. The matrix is skew-symmetric with zero
//! diagonal. An edge's leadingness is its row sum; because the row sum only
//! needs the aggregate of all standardized series, leadingness is computed
//! in `O(KT)` without materialising the `K x K` matrix.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::panel::EdgePanel;

/// Standardized lag window (`t = 0..T-1`) and lead window (`t = 1..T`) of
/// every row, using the population standard deviation over each window.
fn standardized_windows(panel: &EdgePanel) -> Result<(Array2<f64>, Array2<f64>)> {
    let k = panel.k();
    let t = panel.t_len();
    if t < 3 {
        return Err(Error::SeriesTooShort { t, min: 3 });
    }
    let n = t - 1;
    let values = panel.values();
    let mut z0 = Array2::zeros((k, n));
    let mut z1 = Array2::zeros((k, n));
    for e in 0..k {
        for (out, offset) in [(&mut z0, 0usize), (&mut z1, 1usize)] {
            let mut mean = 0.0;
            for i in 0..n {
                mean += values[(e, i + offset)];
            }
            mean /= n as f64;
            let mut var = 0.0;
            for i in 0..n {
                let d = values[(e, i + offset)] - mean;
                var += d * d;
            }
            let sd = (var / n as f64).sqrt();
            if sd <= f64::MIN_POSITIVE.sqrt() {
                return Err(Error::ConstantSeries);
            }
            for i in 0..n {
                out[(e, i)] = (values[(e, i + offset)] - mean) / sd;
            }
        }
    }
    Ok((z0, z1))
}

/// Full `K x K` lead-lag matrix. Quadratic in the edge count; prefer
/// [`leadingness_scores`] when only the ranking is needed.
pub fn lead_lag_matrix(panel: &EdgePanel) -> Result<Array2<f64>> {
    let (z0, z1) = standardized_windows(panel)?;
    let k = panel.k();
    let n = z0.ncols() as f64;
    let mut s = Array2::zeros((k, k));
    for a in 0..k {
        for b in (a + 1)..k {
            let forward: f64 = z0.row(a).iter().zip(z1.row(b)).map(|(x, y)| x * y).sum();
            let backward: f64 = z0.row(b).iter().zip(z1.row(a)).map(|(x, y)| x * y).sum();
            let v = (forward - backward) / n;
            s[(a, b)] = v;
            s[(b, a)] = -v;
        }
    }
    Ok(s)
}

/// Row sums of the lead-lag matrix in `O(KT)`: since
/// `sum_b corr(X_a(t-1), X_b(t))` is the correlation of `a`'s lag window
/// with the aggregate of all lead windows, only the two aggregate series
/// are needed.
pub fn leadingness_scores(panel: &EdgePanel) -> Result<Vec<f64>> {
    let (z0, z1) = standardized_windows(panel)?;
    let n = z0.ncols();
    let k = panel.k();
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    for e in 0..k {
        for i in 0..n {
            g0[i] += z0[(e, i)];
            g1[i] += z1[(e, i)];
        }
    }
    let mut scores = Vec::with_capacity(k);
    for e in 0..k {
        let mut forward = 0.0;
        let mut backward = 0.0;
        for i in 0..n {
            forward += z0[(e, i)] * g1[i];
            backward += z1[(e, i)] * g0[i];
        }
        scores.push((forward - backward) / n as f64);
    }
    Ok(scores)
}

/// Edge labels ordered by decreasing score, ties broken by ascending label.
pub fn ranked_labels(scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    order.sort_by(|&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// A sparsified network: the `top_k` leading edges, their subgraph on the
/// original node set, and the panel restricted to the surviving rows.
#[derive(Debug)]
pub struct SparsifyOutcome {
    pub graph: std::sync::Arc<crate::graph::DirectedGraph>,
    pub panel: EdgePanel,
    /// Kept labels of the original graph, in rank order.
    pub kept: Vec<u32>,
    /// Leadingness of every original edge.
    pub scores: Vec<f64>,
}

pub fn sparsify_top_k(panel: &EdgePanel, top_k: usize) -> Result<SparsifyOutcome> {
    let k = panel.k();
    if top_k == 0 || top_k > k {
        return Err(Error::InvalidParameter {
            name: "top_k",
            reason: format!("{top_k} outside 1..={k}"),
        });
    }
    let scores = leadingness_scores(panel)?;
    let kept: Vec<u32> = ranked_labels(&scores).into_iter().take(top_k).collect();
    let (graph, panel) = panel.select_edges(&kept)?;
    Ok(SparsifyOutcome { graph, panel, kept, scores })
}
