use crate::{Error, Result};

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `gamma_k(x) = Gamma(1/k + x) / Gamma(1 + x)`.
pub fn gamma_k(k: usize, x: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArity(k));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_k needs x >= 0, got {x}")));
    }
    let a = 1.0 / k as f64;
    Ok((ln_gamma(a + x) - ln_gamma(1.0 + x)).exp())
}

/// `n x`, snapped to the nearest integer when within rounding error of it.
pub(crate) fn guarded_product(n: u64, x: f64) -> f64 {
    let y = n as f64 * x;
    let r = y.round();
    if (y - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        y
    }
}

/// `1 + sum_{j=1}^{m} prod_{i<j} (y - i) / (n - i)` with `m = floor(y)`,
/// accumulated term by term; stops once terms are negligible.
pub(crate) fn falling_ratio_sum(n: u64, y: f64, m: u64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for j in 1..=m {
        let i = (j - 1) as f64;
        term *= (y - i) / (n as f64 - i);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `beta_n(x) = 1 + sum_{j=1}^{floor(nx)} prod_{i<j} (nx - i)/(n - i)`.
pub fn beta_n(n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("beta_n needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("beta_n needs x in [0, 1], got {x}")));
    }
    let y = guarded_product(n, x);
    Ok(falling_ratio_sum(n, y, y.floor() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_k_values() {
        for k in 2..7 {
            let g = gamma_k(k, 0.0).unwrap();
            assert!((g - gamma(1.0 / k as f64)).abs() < 1e-13 * g);
        }
        assert!((gamma_k(2, 1.0).unwrap() - 0.886_226_925_452_758).abs() < 1e-13);
        assert!(gamma_k(2, -0.1).is_err());
        assert!(gamma_k(1, 1.0).is_err());
    }

    #[test]
    fn gamma_k_limit() {
        let n: f64 = 1e6;
        let x: f64 = 0.5;
        let ratio = n.powf(0.5) * gamma_k(2, n * x).unwrap() / x.powf(-0.5);
        assert!((ratio - 1.0).abs() < 1e-4);
    }

    #[test]
    fn gamma_k_monotone_and_dominated() {
        for k in [2, 3, 5] {
            let e = 1.0 - 1.0 / k as f64;
            let mut prev = f64::INFINITY;
            let mut sup: f64 = 0.0;
            for i in 0..4000 {
                let x = i as f64 * 0.05;
                let g = gamma_k(k, x).unwrap();
                assert!(g <= prev + 1e-15);
                prev = g;
                if x >= 1.0 {
                    sup = sup.max(g * x.powf(e));
                }
            }
            for x in [1e3, 1e4, 1e5, 1e6] {
                sup = sup.max(gamma_k(k, x).unwrap() * x.powf(e));
            }
            assert!(sup.is_finite() && sup < 2.0);
        }
    }

    #[test]
    fn beta_values() {
        for n in 1..20 {
            assert_eq!(beta_n(n, 0.0).unwrap(), 1.0);
            assert!((beta_n(n, 1.0).unwrap() - (n + 1) as f64).abs() < 1e-12);
        }
        assert!((beta_n(2, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(beta_n(3, 1.5).is_err());
        // 0.3 * 10 rounds to 2.9999999999999996 in floating point.
        assert!((beta_n(10, 0.3).unwrap() - (1.0 + 0.3 + 0.3 * 2.0 / 9.0 + 0.3 * 2.0 / 9.0 / 8.0)).abs() < 1e-14);
    }

    #[test]
    fn beta_bound() {
        for n in [1u64, 2, 5, 17, 100, 1000] {
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                assert!((1.0 - x) * beta_n(n, x).unwrap() <= 1.0 + 1e-12);
            }
        }
    }
}
