//! Refinement-study helpers: observed orders, log-log fits and shell maxima.

use crate::error::{Error, Result};
use crate::geometry::DistanceData;
use crate::grid::MaskedGrid;

/// Observed order `log(e_coarse / e_fine) / log(refinement)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, refinement: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && refinement > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "observed order needs positive errors and refinement > 1 (got {e_coarse}, {e_fine}, {refinement})"
        )));
    }
    Ok((e_coarse / e_fine).ln() / refinement.ln())
}

/// Orders between consecutive `(spacing, error)` pairs.
pub fn observed_orders(samples: &[(f64, f64)]) -> Result<Vec<f64>> {
    samples
        .windows(2)
        .map(|w| observed_order(w[0].1, w[1].1, w[0].0 / w[1].0))
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("log-log fit needs two or more paired samples".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("log-log fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

/// Max of `metric` over the nodes with `|d - level| <= half_width`, per level.
/// Levels without a sampled node yield an error.
pub fn shell_maxima<F>(grid: &MaskedGrid, levels: &[f64], half_width: f64, metric: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &DistanceData) -> Option<f64>,
{
    let mut out = vec![f64::NEG_INFINITY; levels.len()];
    for id in 0..grid.len() {
        let Some(dd) = grid.distance_data(id) else {
            continue;
        };
        for (k, level) in levels.iter().enumerate() {
            if (dd.d - level).abs() <= half_width {
                if let Some(v) = metric(id, dd).filter(|v| v.is_finite()) {
                    out[k] = out[k].max(v);
                }
            }
        }
    }
    if let Some(k) = out.iter().position(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::InvalidArgument(format!("no node samples the shell d = {}", levels[k])));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_of_power_laws() {
        let x = [0.02, 0.04, 0.08];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(2.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.5).abs() < 1e-12);
        let o = observed_orders(&[(0.1, 4e-3), (0.05, 1e-3)]).unwrap();
        assert!((o[0] - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(observed_order(0.0, 1.0, 2.0).is_err());
    }
}
