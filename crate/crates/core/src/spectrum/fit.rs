//! Power-law fit `N(d) = α·d^β` of spectrum histograms.

use serde::{Deserialize, Serialize};

use super::SpectrumReport;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub beta: f64,
    /// Root-mean-square residual in the natural-log domain.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(ln d, ln N)` for positive `(d, N)` pairs.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a power-law fit needs at least 3 nonempty bins, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit points share one abscissa".into()));
    }
    let beta = sxy / sxx;
    let ln_alpha = my - beta * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - ln_alpha - beta * p.0).powi(2)).sum();
    Ok(PowerLawFit {
        alpha: ln_alpha.exp(),
        beta,
        residual: (ss / n).sqrt(),
        points: pts.len(),
    })
}

/// Fit the unit-bin histogram of `report`, using bins that start at or
/// above `from` (default: the minimum distance). Each bin is placed at its
/// left edge.
pub fn histogram_fit(report: &SpectrumReport, from: Option<f64>) -> Result<PowerLawFit> {
    let lo = from.or(report.d2_min).unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = report
        .histogram()
        .into_iter()
        .filter(|&(k, _)| k as f64 >= lo.floor())
        .map(|(k, c)| (k as f64, c as f64))
        .collect();
    power_law_fit(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::cartesian_spectrum;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..20).map(|d| (d as f64, 3.5 * (d as f64).powf(4.25))).collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!((fit.alpha - 3.5).abs() < 1e-6);
        assert!((fit.beta - 4.25).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn cartesian_counts_grow() {
        let (a, _) = cartesian_spectrum(10);
        let pts: Vec<(f64, f64)> = a.iter().enumerate().map(|(k, &v)| (4.0 * (k + 1) as f64, v as f64)).collect();
        assert!(power_law_fit(&pts).unwrap().beta > 0.0);
    }

    #[test]
    fn too_few_bins() {
        assert!(power_law_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(power_law_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.0), (4.0, 5.0)]).is_err());
    }
}
