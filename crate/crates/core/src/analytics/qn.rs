use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::special::{beta_n, falling_ratio_sum, gamma, gamma_k, ln_gamma};
use crate::{Error, Result};

fn check(k: usize, n: u64, lam: &[u64]) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArity(k));
    }
    if lam.len() != k {
        return Err(Error::InvalidParameter(format!("split {lam:?} must have {k} parts")));
    }
    if lam.iter().sum::<u64>() != n {
        return Err(Error::InvalidParameter(format!("split {lam:?} does not sum to {n}")));
    }
    Ok(())
}

/// All `lambda in N^k` with `lambda_1 + ... + lambda_k = n`, in
/// lexicographic order.
pub fn compositions(k: usize, n: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = vec![0; k];
    fn rec(i: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    if k > 0 {
        rec(0, n, &mut cur, &mut out);
    }
    out
}

/// `q_n(lambda)`, the law of the root split of `T_{n+1}(k)`:
///
/// `1/(k Gamma(1/k)^{k-1}) prod_i Gamma(1/k + lambda_i)/lambda_i!
///  * n!/Gamma(1/k + n + 1) * sum_{j=1}^{lambda_1 + 1} lambda_1!/(lambda_1 - j + 1)! (n - j + 1)!/n!`,
///
/// evaluated in log space.
pub fn qn_pmf(k: usize, n: u64, lam: &[u64]) -> Result<f64> {
    check(k, n, lam)?;
    let a = 1.0 / k as f64;
    let mut ln = -(k as f64).ln() - (k as f64 - 1.0) * ln_gamma(a);
    for &l in lam {
        ln += ln_gamma(a + l as f64) - ln_gamma(l as f64 + 1.0);
    }
    ln += ln_gamma(n as f64 + 1.0) - ln_gamma(a + n as f64 + 1.0);
    let sum = falling_ratio_sum(n, lam[0] as f64, lam[0]);
    Ok((ln + sum.ln()).exp())
}

/// The same law written with `gamma_k` and `beta_n`:
/// `1/(k Gamma(1/k)^{k-1}) prod_i gamma_k(lambda_i) / ((n+1) gamma_k(n+1)) * beta_n(lambda_1/n)`.
pub fn qn_factored(k: usize, n: u64, lam: &[u64]) -> Result<f64> {
    check(k, n, lam)?;
    let a = 1.0 / k as f64;
    let mut v = 1.0 / (k as f64 * gamma(a).powi(k as i32 - 1));
    for &l in lam {
        v *= gamma_k(k, l as f64)?;
    }
    v /= (n as f64 + 1.0) * gamma_k(k, n as f64 + 1.0)?;
    let b = if n == 0 { 1.0 } else { beta_n(n, lam[0] as f64 / n as f64)? };
    Ok(v * b)
}

/// Exact `q_n(lambda)`:
/// `n!/prod lambda_i! * prod_i prod_{p=1}^{lambda_i - 1}(1 + kp) / prod_{p=1}^{n}(1 + kp)`
/// times the falling-factorial sum.
pub fn qn_rational(k: usize, lam: &[u64]) -> Result<BigRational> {
    let n: u64 = lam.iter().sum();
    check(k, n, lam)?;
    let int = |x: u64| BigInt::from(x);
    let fact = |m: u64| (1..=m).fold(BigInt::one(), |acc, i| acc * int(i));
    let rising = |m: u64| (1..m).fold(BigInt::one(), |acc, p| acc * int(1 + k as u64 * p));
    let mut num = fact(n);
    let mut den = BigInt::one();
    for &l in lam {
        num *= rising(l);
        den *= fact(l);
    }
    den *= rising(n + 1);
    let l1 = lam[0];
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for j in 0..=l1 {
        sum += &term;
        if j < l1 {
            term = term * BigRational::new(int(l1 - j), int(n - j));
        }
    }
    Ok(BigRational::new(num, den) * sum)
}
