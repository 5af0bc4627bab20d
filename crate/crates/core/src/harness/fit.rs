use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `ln ratio` on `ln n`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::Config(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Config("all points must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= f64::EPSILON * k {
        return Err(Error::Config("x values have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(Fit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_law() {
        let pts: Vec<_> = [16.0, 64.0, 256.0, 1024.0].iter().map(|&n: &f64| (n, 3.0 * n.sqrt())).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn n_over_log_n_approaches_one() {
        let pts: Vec<_> = (6..=12).map(|e| 2f64.powi(e)).map(|n| (n, n / n.ln())).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!(f.slope > 0.8 && f.slope < 1.0, "{}", f.slope);
    }

    #[test]
    fn constant_and_degenerate() {
        let f = fit_scaling(&[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(fit_scaling(&[(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)]).is_err());
        assert!(fit_scaling(&[(2.0, 1.0), (3.0, 3.0)]).is_err());
        assert!(fit_scaling(&[(2.0, 1.0), (3.0, -3.0), (4.0, 1.0)]).is_err());
    }
}
