//! Residual diagnostics: per-timestamp distribution summaries, the mean
//! residual series with its autocorrelation, normal QQ data and the
//! Shapiro-Wilk normality test (Royston's AS R94 approximation).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse standard normal CDF, Wichura's AS 241 (PPND16), accurate to
/// about 1e-16 over (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p = {p} outside (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Upper or lower tail of the standard normal distribution, AS 66.
fn alnorm(x: f64, upper: bool) -> f64 {
    let mut up = upper;
    let mut z = x;
    if z < 0.0 {
        up = !up;
        z = -z;
    }
    if z > 7.0 && !(up && z <= 18.66) {
        return if up { 0.0 } else { 1.0 };
    }
    let y = 0.5 * z * z;
    let tail = if z <= 1.28 {
        0.5 - z
            * (0.398942280444
                - 0.399903438504 * y
                    / (y + 5.75885480458
                        - 29.8213557808 / (y + 2.62433121679 + 48.6959930692 / (y + 5.92885724438))))
    } else {
        0.398942280385 * (-y).exp()
            / (z - 3.8052e-8
                + 1.00000615302
                    / (z + 3.98064794e-4
                        + 1.98615381364
                            / (z - 0.151679116635
                                + 5.29330324926
                                    / (z + 4.8385912808
                                        - 15.1508972451
                                            / (z + 0.742380924027 + 30.789933034 / (z + 3.99019417011))))))
    };
    if up {
        tail
    } else {
        1.0 - tail
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Result of the Shapiro-Wilk test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilkTest {
    pub w: f64,
    pub p_value: f64,
}

/// Shapiro-Wilk normality test for sample sizes 8 through 5000, following
/// Royston's AS R94 approximation for both the weights and the p-value.
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilkTest> {
    let n = sample.len();
    if n < 8 {
        return Err(Error::SampleTooSmall { n });
    }
    if n > 5000 {
        return Err(Error::InvalidParameter {
            name: "sample",
            reason: format!("{n} observations exceed the supported maximum of 5000"),
        });
    }
    let mut x: Vec<f64> = sample.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    if x[n - 1] - x[0] <= f64::MIN_POSITIVE {
        return Err(Error::ConstantSeries);
    }

    // Expected normal order statistics and Royston-adjusted weights.
    let nf = n as f64;
    let mut m: Vec<f64> = (1..=n)
        .map(|i| normal_quantile((i as f64 - 0.375) / (nf + 0.25)))
        .collect();
    let summ2: f64 = m.iter().map(|v| v * v).sum();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / nf.sqrt();
    let a_n = poly(&[0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056], rsn) + m[n - 1] / ssumm2;
    let a_n1 = poly(&[0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633], rsn) + m[n - 2] / ssumm2;
    let phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2])
        / (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
    let sqrt_phi = phi.sqrt();
    for v in m.iter_mut() {
        *v /= sqrt_phi;
    }
    m[n - 1] = a_n;
    m[n - 2] = a_n1;
    m[0] = -a_n;
    m[1] = -a_n1;

    let mean = x.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, ai) in x.iter().zip(&m) {
        num += ai * xi;
        den += (xi - mean) * (xi - mean);
    }
    let w = (num * num / den).clamp(0.0, 1.0);

    let p_value = {
        let y = (1.0 - w).ln();
        let (z_mean, z_sd, y) = if n <= 11 {
            let gamma = poly(&[-2.273, 0.459], nf);
            let y = -(gamma - y).ln();
            (
                poly(&[0.5440, -0.39978, 0.025054, -0.0006714], nf),
                poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp(),
                y,
            )
        } else {
            let ln_n = nf.ln();
            (
                poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n),
                poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp(),
                y,
            )
        };
        alnorm((y - z_mean) / z_sd, true)
    };
    Ok(ShapiroWilkTest { w, p_value })
}

/// Sample autocorrelation with the biased (denominator `n`) convention;
/// `out[h]` is the lag-`h` value and `out[0]` is exactly one.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::InvalidParameter {
            name: "max_lag",
            reason: format!("{max_lag} not below the series length {n}"),
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom <= f64::MIN_POSITIVE {
        return Err(Error::ConstantSeries);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for h in 1..=max_lag {
        let mut s = 0.0;
        for t in h..n {
            s += (series[t] - mean) * (series[t - h] - mean);
        }
        out.push(s / denom);
    }
    Ok(out)
}

/// QQ pairs (theoretical standard normal quantile, standardized empirical
/// quantile), sorted by quantile. The series is standardized with its
/// sample mean and sample (n-1) standard deviation.
pub fn qq_points(series: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::SampleTooSmall { n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= f64::MIN_POSITIVE {
        return Err(Error::ConstantSeries);
    }
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = series.iter().map(|v| (v - mean) / sd).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (normal_quantile((i as f64 + 0.5) / n as f64), v))
        .collect())
}

/// Box-plot style five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 == sorted.len() {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

impl FiveNumberSummary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SampleTooSmall { n: 0 });
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(FiveNumberSummary {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }

    /// Count of values outside the 1.5 IQR whiskers.
    pub fn count_outliers(&self, values: &[f64]) -> usize {
        let iqr = self.q3 - self.q1;
        let lo = self.q1 - 1.5 * iqr;
        let hi = self.q3 + 1.5 * iqr;
        values.iter().filter(|v| **v < lo || **v > hi).count()
    }
}

/// Distribution summary of one residual column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePointSummary {
    pub summary: FiveNumberSummary,
    pub outliers: usize,
}

/// Full diagnostic report over a residual panel (edges by time points).
/// The autocorrelation, QQ data and normality test all run on the mean
/// residual series; they are absent when that series is degenerate
/// (constant, as with an exact fit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub per_time: Vec<TimePointSummary>,
    pub mean_series: Vec<f64>,
    pub acf: Option<Vec<f64>>,
    pub qq: Option<Vec<(f64, f64)>>,
    pub normality: Option<ShapiroWilkTest>,
}

pub fn residual_report(residuals: &Array2<f64>, max_lag: usize) -> Result<ResidualReport> {
    let t = residuals.ncols();
    if t < 8 {
        return Err(Error::SampleTooSmall { n: t });
    }
    if max_lag >= t {
        return Err(Error::InvalidParameter {
            name: "max_lag",
            reason: format!("{max_lag} not below the residual length {t}"),
        });
    }
    let k = residuals.nrows() as f64;
    let mut per_time = Vec::with_capacity(t);
    let mut mean_series = Vec::with_capacity(t);
    let mut column = vec![0.0; residuals.nrows()];
    for ti in 0..t {
        for (e, slot) in column.iter_mut().enumerate() {
            *slot = residuals[(e, ti)];
        }
        // Sorting first makes every downstream number independent of the
        // ordering of the edge rows, including the floating-point sums.
        column.sort_by(|a, b| a.total_cmp(b));
        let summary = FiveNumberSummary::of(&column)?;
        per_time.push(TimePointSummary { outliers: summary.count_outliers(&column), summary });
        mean_series.push(column.iter().sum::<f64>() / k);
    }
    let acf = match acf(&mean_series, max_lag) {
        Ok(v) => Some(v),
        Err(Error::ConstantSeries) => None,
        Err(e) => return Err(e),
    };
    let qq = match qq_points(&mean_series) {
        Ok(v) => Some(v),
        Err(Error::ConstantSeries) => None,
        Err(e) => return Err(e),
    };
    let normality = match shapiro_wilk(&mean_series) {
        Ok(v) => Some(v),
        Err(Error::ConstantSeries) => None,
        Err(e) => return Err(e),
    };
    Ok(ResidualReport { per_time, mean_series, acf, qq, normality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn normal_quantile_matches_reference_values() {
        assert_relative_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-15);
        assert_relative_eq!(normal_quantile(0.975), 1.959963984540054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.025), -1.959963984540054, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.9), 1.2815515655446004, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.99), 2.3263478740408408, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(0.999), 3.090232306167813, epsilon = 1e-12);
        assert_relative_eq!(normal_quantile(1e-9), -5.997807015008182, epsilon = 1e-9);
    }

    #[test]
    fn acf_basics() {
        let alternating: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = acf(&alternating, 2).unwrap();
        assert_eq!(r[0], 1.0);
        assert!(r[1] < -0.9, "lag-1 {}", r[1]);
        assert!(r[2] > 0.85);
        assert!(matches!(acf(&[1.0, 1.0, 1.0], 1), Err(Error::ConstantSeries)));
        assert!(acf(&alternating, 20).is_err());
    }

    #[test]
    fn acf_of_ar1_decays_geometrically() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut x = vec![0.0; 2000];
        for t in 1..2000 {
            x[t] = 0.7 * x[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        let r = acf(&x, 5).unwrap();
        for (k, v) in r.iter().enumerate().skip(1) {
            let expected = 0.7f64.powi(k as i32);
            assert!((v - expected).abs() < 0.05, "lag {k}: {v} vs {expected}");
        }
    }

    #[test]
    fn shapiro_wilk_matches_reference_implementation() {
        // Reference W and p values computed with scipy 1.15.3
        // (scipy.stats.shapiro) on these exact samples.
        let a = [
            1.690526, -0.465937, 0.03282, 0.407516, -0.788923, 0.002066, -0.00089, -1.754724,
            1.017658, 0.600499, -0.625429, -0.171548, 0.505299, -0.261356, -0.242749, -1.453241,
            0.55458, 0.123881, 0.27446, -1.526525,
        ];
        let t = shapiro_wilk(&a).unwrap();
        assert_relative_eq!(t.w, 0.9682290141754482, max_relative = 1e-6);
        assert_relative_eq!(t.p_value, 0.7171235477624376, max_relative = 1e-4);

        let b: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let t = shapiro_wilk(&b).unwrap();
        assert_relative_eq!(t.w, 0.6411192275791566, max_relative = 1e-6);
        assert!(t.p_value < 0.01);
        assert_relative_eq!(t.p_value, 8.099750290870789e-6, max_relative = 1e-3);

        let c = [148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0];
        let t = shapiro_wilk(&c).unwrap();
        assert_relative_eq!(t.w, 0.9822817035169561, max_relative = 1e-6);
        assert_relative_eq!(t.p_value, 0.9733029149412554, max_relative = 1e-4);

        let d = [
            148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0,
        ];
        let t = shapiro_wilk(&d).unwrap();
        assert_relative_eq!(t.w, 0.7888146948631716, max_relative = 1e-6);
        assert_relative_eq!(t.p_value, 0.006703814061898823, max_relative = 1e-4);
    }

    #[test]
    fn shapiro_wilk_on_a_normal_quantile_grid_is_near_one() {
        let grid: Vec<f64> = (1..=50).map(|i| normal_quantile((i as f64 - 0.5) / 50.0)).collect();
        let t = shapiro_wilk(&grid).unwrap();
        assert!(t.w > 0.99, "w {}", t.w);
        assert_relative_eq!(t.w, 0.9992035683859155, max_relative = 1e-6);
        assert!(t.p_value > 0.99);
    }

    #[test]
    fn shapiro_wilk_rejects_bad_inputs() {
        assert!(matches!(shapiro_wilk(&[1.0; 5]).unwrap_err(), Error::SampleTooSmall { n: 5 }));
        assert!(matches!(shapiro_wilk(&[2.0; 12]).unwrap_err(), Error::ConstantSeries));
    }

    #[test]
    fn normality_test_is_calibrated_at_the_nominal_level() {
        let mut rejections = 0;
        for seed in 0..200 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let sample: Vec<f64> = (0..83).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            if shapiro_wilk(&sample).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        // Binomial(200, 0.05): mean 10, three sigma just over 9.
        assert!((2..=22).contains(&rejections), "{rejections} rejections");
    }

    #[test]
    fn qq_points_are_sorted_and_standardized() {
        let series = [4.0, 8.0, 6.0, 2.0, 10.0, 0.0, 12.0, -2.0, 14.0, 16.0];
        let qq = qq_points(&series).unwrap();
        assert_eq!(qq.len(), 10);
        for pair in qq.windows(2) {
            assert!(pair[0].0 < pair[1].0);
            assert!(pair[0].1 <= pair[1].1);
        }
        let mean: f64 = qq.iter().map(|(_, v)| v).sum::<f64>() / 10.0;
        assert_relative_eq!(mean, 0.0, epsilon = 1e-12);
        assert_relative_eq!(qq[0].0, normal_quantile(0.05), epsilon = 1e-12);
    }

    #[test]
    fn five_number_summary_uses_interpolated_quartiles() {
        let values: Vec<f64> = (1..=9).map(f64::from).collect();
        let s = FiveNumberSummary::of(&values).unwrap();
        assert_eq!(s.min, 1.0);
        assert_eq!(s.q1, 3.0);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.q3, 7.0);
        assert_eq!(s.max, 9.0);
        let skewed = [1.0, 2.0, 3.0, 4.0, 100.0];
        let s = FiveNumberSummary::of(&skewed).unwrap();
        assert_eq!(s.count_outliers(&skewed), 1);
    }

    #[test]
    fn residual_report_covers_degenerate_and_noisy_panels() {
        let zeros = Array2::zeros((4, 10));
        let r = residual_report(&zeros, 3).unwrap();
        assert!(r.acf.is_none());
        assert!(r.normality.is_none());
        assert!(r.qq.is_none());
        assert_eq!(r.mean_series, vec![0.0; 10]);
        assert!(r.per_time.iter().all(|s| s.summary.max == 0.0 && s.outliers == 0));

        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let noisy = Array2::from_shape_fn((6, 40), |_| rng.sample::<f64, _>(StandardNormal));
        let r = residual_report(&noisy, 5).unwrap();
        assert_eq!(r.acf.as_ref().unwrap()[0], 1.0);
        assert_eq!(r.qq.as_ref().unwrap().len(), 40);
        assert!(r.normality.unwrap().p_value > 0.0);

        // Permuting the edge rows changes nothing in the report.
        let mut permuted = noisy.clone();
        for e in 0..6 {
            permuted.row_mut(e).assign(&noisy.row((e + 3) % 6));
        }
        let r2 = residual_report(&permuted, 5).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn report_rejects_short_panels() {
        let small = Array2::zeros((3, 6));
        assert!(matches!(residual_report(&small, 2).unwrap_err(), Error::SampleTooSmall { n: 6 }));
    }
}
