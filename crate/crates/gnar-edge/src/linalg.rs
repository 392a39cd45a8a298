//! Dense least squares through Householder QR with column pivoting.
//!
//! The solver never forms `Z^T Z`; coefficients come from back-substitution
//! against the pivoted `R` factor and the diagonal of `(Z^T Z)^{-1}` needed
//! for standard errors is assembled from `R^{-1}`. Pivoting makes the
//! factorisation rank-revealing: columns whose remaining mass falls below a
//! relative threshold are reported back by index so callers can name the
//! collinear regressors.

use ndarray::Array2;

#[derive(Debug, Clone)]
pub(crate) struct Lstsq {
    pub coef: Vec<f64>,
    pub rss: f64,
    /// Diagonal of `(Z^T Z)^{-1}` in the original column order.
    pub xtx_inv_diag: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum LstsqError {
    /// Indices (original column order) of the columns pivoted out as
    /// linearly dependent.
    RankDeficient(Vec<usize>),
}

pub(crate) fn lstsq(z: &Array2<f64>, y: &[f64]) -> Result<Lstsq, LstsqError> {
    let n = z.nrows();
    let p = z.ncols();
    assert!(n >= p, "caller must ensure at least as many rows as columns");
    assert_eq!(y.len(), n);

    // Column-major working copy; column swaps become pointer swaps.
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| z.column(j).to_vec()).collect();
    let mut qty = y.to_vec();
    let mut piv: Vec<usize> = (0..p).collect();

    let mut norms2: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let reference: Vec<f64> = norms2.clone();

    let max_norm0 = norms2.iter().cloned().fold(0.0, f64::max).sqrt();
    let tol = f64::EPSILON * (n.max(p) as f64) * max_norm0;

    let mut rank = p;
    for j in 0..p {
        // Refresh downdated norms that have lost too much mass, then pivot.
        for c in j..p {
            if norms2[c] < 1e-6 * reference[c] {
                norms2[c] = cols[c][j..].iter().map(|v| v * v).sum();
            }
        }
        let (best, &best_norm2) = norms2[j..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i + j, v))
            .unwrap();
        cols.swap(j, best);
        norms2.swap(j, best);
        piv.swap(j, best);

        let sigma: f64 = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let _ = best_norm2;
        if sigma <= tol {
            rank = j;
            break;
        }

        // Householder reflector sending cols[j][j..] to alpha * e1.
        let x0 = cols[j][j];
        let alpha = if x0 >= 0.0 { -sigma } else { sigma };
        let v0 = x0 - alpha;
        // v^T v = -2 * alpha * v0.
        let vtv = -2.0 * alpha * v0;
        cols[j][j] = alpha;

        for c in (j + 1)..p {
            let mut dot = v0 * cols[c][j];
            for i in (j + 1)..n {
                dot += cols[j][i] * cols[c][i];
            }
            let s = 2.0 * dot / vtv;
            cols[c][j] -= s * v0;
            for i in (j + 1)..n {
                cols[c][i] -= s * cols[j][i];
            }
            norms2[c] -= cols[c][j] * cols[c][j];
            if norms2[c] < 0.0 {
                norms2[c] = 0.0;
            }
        }
        {
            let mut dot = v0 * qty[j];
            for i in (j + 1)..n {
                dot += cols[j][i] * qty[i];
            }
            let s = 2.0 * dot / vtv;
            qty[j] -= s * v0;
            for i in (j + 1)..n {
                qty[i] -= s * cols[j][i];
            }
        }
    }

    if rank < p {
        let mut dropped: Vec<usize> = piv[rank..].to_vec();
        dropped.sort_unstable();
        return Err(LstsqError::RankDeficient(dropped));
    }

    // R is stored with R[r, c] = cols[c][r] for c >= r.
    let mut coef_perm = vec![0.0; p];
    for r in (0..p).rev() {
        let mut v = qty[r];
        for c in (r + 1)..p {
            v -= cols[c][r] * coef_perm[c];
        }
        coef_perm[r] = v / cols[r][r];
    }
    let mut coef = vec![0.0; p];
    for j in 0..p {
        coef[piv[j]] = coef_perm[j];
    }

    let rss: f64 = qty[p..].iter().map(|v| v * v).sum();

    // R^{-1} column by column, then squared row norms give the diagonal of
    // (R^T R)^{-1} = (Z^T Z)^{-1} up to the pivot permutation.
    let mut rinv = vec![vec![0.0; p]; p];
    for c in 0..p {
        for r in (0..=c).rev() {
            let mut v = if r == c { 1.0 } else { 0.0 };
            for m in (r + 1)..=c {
                v -= cols[m][r] * rinv[m][c];
            }
            rinv[r][c] = v / cols[r][r];
        }
    }
    let mut xtx_inv_diag = vec![0.0; p];
    for j in 0..p {
        let row_norm2: f64 = (j..p).map(|c| rinv[j][c] * rinv[j][c]).sum();
        xtx_inv_diag[piv[j]] = row_norm2;
    }

    Ok(Lstsq { coef, rss, xtx_inv_diag })
}
