use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

/// Mean and standard error (sample variance with `n - 1`) in index order.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: f64::NAN, std_error: f64::NAN, count: 0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std_error, count: n as u64 }
}

/// Pearson goodness-of-fit outcome after pooling sparse bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

impl ChiSquare {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Chi-square test of `observed` against `expected` counts. Adjacent bins
/// are pooled left to right until each pooled bin expects at least 5.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidParameter("observed and expected counts differ in length".into()));
    }
    if expected.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("expected counts must be finite and non-negative".into()));
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex;
        if e >= 5.0 {
            pooled.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pooled.push((o, e)),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::InvalidParameter("fewer than two bins with enough expected mass".into()));
    }
    let statistic = pooled.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    Ok(ChiSquare { statistic, dof, p_value: 1.0 - dist.cdf(statistic), bins: pooled.len() })
}

/// Ordinary least squares fit of `log value` on `log n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residual-based standard error of the slope.
    pub slope_std_error: f64,
}

pub fn scaling_regression(points: &[(f64, f64)]) -> Result<Regression> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(Error::InvalidParameter(format!("point {p:?} is not positive")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all n are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_std_error = (sse / (m - 2.0) / sxx).sqrt();
    Ok(Regression { slope, intercept, r_squared, slope_std_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = (1..8).map(|i| {
            let n = 2f64.powi(i + 9);
            (n, 3.0 * n.powf(1.0 / 3.0))
        }).collect();
        let r = scaling_regression(&pts).unwrap();
        assert!((r.slope - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_slope() {
        let r = scaling_regression(&[(1.0, 2.0), (10.0, 2.0), (100.0, 2.0)]).unwrap();
        assert!(r.slope.abs() < 1e-15);
        assert!(scaling_regression(&[(1.0, 2.0), (10.0, 0.0), (100.0, 2.0)]).is_err());
        assert!(scaling_regression(&[(1.0, 2.0), (10.0, 2.0)]).is_err());
    }

    #[test]
    fn chi_square_pools_and_scores() {
        let c = chi_square(&[50, 50], &[50.0, 50.0]).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-12);
        let c = chi_square(&[10, 0, 1, 89], &[10.0, 0.5, 0.5, 89.0]).unwrap();
        assert_eq!(c.bins, 2);
        let c = chi_square(&[90, 10], &[50.0, 50.0]).unwrap();
        assert!(c.p_value < 1e-10);
    }

    #[test]
    fn summary_of_constant_sample() {
        let s = summarize(&[2.0; 10]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std_error, 0.0);
        let s = summarize(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std_error - 1.0).abs() < 1e-15);
    }
}
