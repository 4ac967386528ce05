use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::{Error, Result};

/// Increasing `kp`-subsets of `0..k` in lexicographic order.
pub fn subsets(k: usize, kp: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=k - left {
            cur.push(i);
            rec(i + 1, k, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if kp <= k {
        rec(0, k, kp, &mut Vec::new(), &mut out);
    }
    out
}

fn check_arity(k: usize, kp: usize) -> Result<()> {
    if k < 3 || kp < 2 || kp >= k {
        return Err(Error::InvalidPruneArity { arity: k, pruned: kp });
    }
    Ok(())
}

fn falling(a: usize, b: usize) -> u64 {
    (b + 1..=a).map(|x| x as u64).product()
}

/// Exact marking kernel on rational input. Subset `I` of the blocks
/// (0-based) is kept with probability
/// `(k'-1)!(k-k')!/(k-1)! * sum_{j in I} w_j / sum_j w_j`, where
/// `w_j = prod_{i != j} (1 - s_i)`.
pub fn mark_pmf_exact(s: &[BigRational], kp: usize) -> Result<Vec<(Vec<usize>, BigRational)>> {
    let k = s.len();
    check_arity(k, kp)?;
    let one = BigRational::one();
    if s.iter().any(|x| x < &BigRational::zero() || x >= &one) {
        return Err(Error::InvalidParameter("marking needs 0 <= s_i < 1".into()));
    }
    if s.iter().fold(BigRational::zero(), |a, x| a + x) != one {
        return Err(Error::InvalidParameter("marking needs a point of the simplex".into()));
    }
    let w: Vec<BigRational> = (0..k)
        .map(|j| (0..k).filter(|&i| i != j).fold(one.clone(), |acc, i| acc * (&one - &s[i])))
        .collect();
    let total = w.iter().fold(BigRational::zero(), |a, x| a + x);
    // (k'-1)!(k-k')!/(k-1)! = 1 / C(k-1, k'-1)
    let binom = falling(k - 1, k - kp) / (1..kp).map(|x| x as u64).product::<u64>();
    let coef = BigRational::new(BigInt::one(), BigInt::from(binom));
    Ok(subsets(k, kp)
        .into_iter()
        .map(|set| {
            let num = set.iter().fold(BigRational::zero(), |a, &j| a + &w[j]);
            (set, &coef * num / &total)
        })
        .collect())
}

/// Floating-point marking kernel; see [`mark_pmf_exact`].
pub fn mark_pmf(s: &[f64], kp: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    let k = s.len();
    check_arity(k, kp)?;
    if s.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::InvalidParameter("marking needs 0 <= s_i < 1".into()));
    }
    if (s.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("marking needs a point of the simplex".into()));
    }
    let w: Vec<f64> = (0..k).map(|j| (0..k).filter(|&i| i != j).map(|i| 1.0 - s[i]).product()).collect();
    let total: f64 = w.iter().sum();
    let binom = falling(k - 1, k - kp) / (1..kp).map(|x| x as u64).product::<u64>();
    Ok(subsets(k, kp)
        .into_iter()
        .map(|set| {
            let num: f64 = set.iter().map(|&j| w[j]).sum();
            (set, num / (total * binom as f64))
        })
        .collect())
}

/// Draws a kept subset from the marking kernel with one uniform draw.
pub fn mark_sample<R: Rng + ?Sized>(s: &[f64], kp: usize, rng: &mut R) -> Result<Vec<usize>> {
    let pmf = mark_pmf(s, kp)?;
    let mut u: f64 = rng.random();
    let last = pmf.len() - 1;
    for (i, (set, p)) in pmf.iter().enumerate() {
        if u < *p || i == last {
            return Ok(set.clone());
        }
        u -= p;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn worked_example() {
        let pmf = mark_pmf_exact(&[q(1, 2), q(1, 3), q(1, 6)], 2).unwrap();
        let probs: Vec<_> = pmf.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(probs, vec![q(35, 94), q(32, 94), q(27, 94)]);
        assert_eq!(pmf[0].0, vec![0, 1]);
        assert_eq!(pmf[2].0, vec![1, 2]);
    }

    #[test]
    fn uniform_input_gives_uniform_subsets() {
        for (k, kp) in [(3, 2), (4, 2), (4, 3), (6, 4)] {
            let s = vec![q(1, k as i64); k];
            let pmf = mark_pmf_exact(&s, kp).unwrap();
            let n = pmf.len() as i64;
            assert!(pmf.iter().all(|(_, p)| *p == q(1, n)));
        }
    }

    #[test]
    fn exact_normalization() {
        let mut rng = replicate(3, 0);
        for _ in 0..1000 {
            let k = rng.random_range(3..7);
            let kp = rng.random_range(2..k);
            let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..50)).collect();
            let t: i64 = raw.iter().sum();
            let s: Vec<_> = raw.iter().map(|&x| q(x, t)).collect();
            let total = mark_pmf_exact(&s, kp).unwrap().into_iter().fold(BigRational::zero(), |a, (_, p)| a + p);
            assert_eq!(total, BigRational::one());
        }
    }

    #[test]
    fn rejects_degenerate_split() {
        assert!(mark_pmf(&[1.0, 0.0, 0.0], 2).is_err());
        assert!(mark_pmf_exact(&[q(1, 1), q(0, 1), q(0, 1)], 2).is_err());
        assert!(mark_pmf(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn float_matches_exact() {
        let f = mark_pmf(&[0.5, 1.0 / 3.0, 1.0 / 6.0], 2).unwrap();
        for ((_, p), want) in f.iter().zip([35.0, 32.0, 27.0]) {
            assert!((p - want / 94.0).abs() < 1e-15);
        }
        assert_eq!(subsets(4, 2).len(), 6);
    }
}
