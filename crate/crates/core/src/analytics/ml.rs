use super::special::ln_gamma;
use crate::{Error, Result};

/// Parameters `(alpha, theta)` of a generalized Mittag-Leffler law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlParams {
    alpha: f64,
    theta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) || !(theta > -alpha) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("need 0 < alpha < 1 and theta > -alpha, got ({alpha}, {theta})")));
        }
        Ok(Self { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `E[M^p] = Gamma(theta+1) Gamma(theta/alpha+p+1) / (Gamma(theta/alpha+1) Gamma(theta+p alpha+1))`.
pub fn ml_moment(params: MlParams, p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::InvalidParameter(format!("moment order {p} must be non-negative")));
    }
    let MlParams { alpha, theta } = params;
    let r = theta / alpha;
    Ok((ln_gamma(theta + 1.0) + ln_gamma(r + p + 1.0) - ln_gamma(r + 1.0) - ln_gamma(theta + p * alpha + 1.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::gamma;

    #[test]
    fn moments() {
        let half = MlParams::new(0.5, 0.5).unwrap();
        assert!((ml_moment(half, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((ml_moment(half, 1.0).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((ml_moment(half, 2.0).unwrap() - 4.0).abs() < 1e-13);
        let p = MlParams::new(2.0 / 3.0, 1.0 / 3.0).unwrap();
        let want = gamma(4.0 / 3.0) * gamma(2.5) / gamma(1.5);
        assert!((ml_moment(p, 1.0).unwrap() - want).abs() < 1e-13);
        assert!((want - 1.339_469_4).abs() < 1e-6);
    }

    #[test]
    fn domain() {
        assert!(MlParams::new(1.0, 0.5).is_err());
        assert!(MlParams::new(0.5, -0.5).is_err());
        assert!(ml_moment(MlParams::new(0.5, 0.0).unwrap(), -1.0).is_err());
    }
}
