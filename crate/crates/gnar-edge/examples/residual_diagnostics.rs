//! Fits a model and inspects the residual panel: five-number summaries per
//! time point, the autocorrelation of the mean residual series, and a
//! Shapiro-Wilk normality test, the standard checks before trusting the
//! confidence intervals.

use gnar_edge::diagnostics::residual_report;
use gnar_edge::gnar::fit_gnar_edge;
use gnar_edge::simulate::regime;

fn main() -> gnar_edge::Result<()> {
    let setting = regime("regime1")?;
    let (_, panel) = setting.simulate_one(19)?;
    let fitted = fit_gnar_edge(&panel, &setting.spec)?;

    let report = residual_report(fitted.residuals(), 10)?;

    println!("mean residual series, first 5 fitted time points:");
    println!("{:<4} {:>8} {:>8} {:>8} {:>8} {:>8}  outliers", "t", "min", "q1", "median", "q3", "max");
    for (t, point) in report.per_time.iter().take(5).enumerate() {
        let s = &point.summary;
        println!(
            "{:<4} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3}  {}",
            t, s.min, s.q1, s.median, s.q3, s.max, point.outliers
        );
    }

    if let Some(acf) = &report.acf {
        let flagged: Vec<usize> = (1..acf.len())
            .filter(|&l| acf[l].abs() > 2.0 / (report.mean_series.len() as f64).sqrt())
            .collect();
        println!("\nacf of the mean residual series up to lag {}:", acf.len() - 1);
        println!("  lag 1..3 = {:.3}, {:.3}, {:.3}", acf[1], acf[2], acf[3]);
        if flagged.is_empty() {
            println!("  no lag exceeds the two-standard-error band");
        } else {
            println!("  lags beyond the two-standard-error band: {flagged:?}");
        }
    }

    if let Some(test) = &report.normality {
        println!("\nshapiro-wilk on the mean residuals: W = {:.4}, p = {:.3}", test.w, test.p_value);
    }
    if let Some(qq) = &report.qq {
        let (theory, sample) = qq[qq.len() / 2];
        println!("qq plot midpoint: theoretical {theory:.3} vs sample {sample:.3}");
    }
    Ok(())
}
