use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::density::{dims, dislocation_density, DensityKind};
use super::special::{gamma, ln_gamma};
use crate::{Error, Result};

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Self { value: mean, std_error: (var / nf).sqrt(), samples: n }
    }

    fn scaled(self, c: f64) -> Self {
        Self { value: self.value * c, std_error: self.std_error * c.abs(), samples: self.samples }
    }

    /// `(value - target) / std_error`; a zero-variance estimate within
    /// rounding of the target scores zero.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if self.std_error == 0.0 && diff.abs() <= 1e-12 * target.abs().max(1.0) {
            return 0.0;
        }
        diff / self.std_error
    }
}

/// Fills `out` with a symmetric Dirichlet(`alpha`) vector from normalized
/// Gamma(`alpha`) variates; exact zeros are redrawn.
pub fn dirichlet_sample<R: Rng + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let mut total = 0.0;
        for x in out.iter_mut() {
            let mut v = g.sample(rng);
            while v == 0.0 {
                v = g.sample(rng);
            }
            *x = v;
            total += v;
        }
        if total.is_finite() && total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
            if out.iter().all(|&x| x > 0.0) {
                return;
            }
        }
    }
}

fn accumulate<R: Rng + ?Sized>(
    k: usize,
    n: u64,
    rng: &mut R,
    mut sample_value: impl FnMut(&[f64]) -> f64,
) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let alpha = 1.0 / k as f64;
    let mut s = vec![0.0; k];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        dirichlet_sample(alpha, rng, &mut s);
        let v = sample_value(&s);
        if !v.is_finite() || v.abs() > 1e150 {
            return Err(Error::InvalidParameter(format!("integrand is unbounded near {s:?}")));
        }
        sum += v;
        sum_sq += v * v;
    }
    Ok(Estimate::from_sums(sum, sum_sq, n))
}

fn sorted_desc(s: &[f64]) -> Vec<f64> {
    let mut d = s.to_vec();
    d.sort_by(|a, b| b.total_cmp(a));
    d
}

/// Estimates `int f(s) (1 - s_1) nu(ds)` for the measure `kind` by
/// importance sampling from Dirichlet(1/k), using
/// `nu_k(ds) = Gamma(1/k)/k (1 - s_1)^{-1} Dir_k(1/k)(ds)` and the fact that
/// the other three measures are images of `nu_k`.
pub fn simplex_integral<R: Rng + ?Sized>(
    kind: DensityKind,
    k: usize,
    kp: Option<usize>,
    f: impl Fn(&[f64]) -> f64,
    n: u64,
    rng: &mut R,
) -> Result<Estimate> {
    let m = dims(kind, k, kp)?;
    let c = gamma(1.0 / k as f64) / k as f64;
    let est = accumulate(k, n, rng, |s| match kind {
        DensityKind::NuK => f(s),
        DensityKind::NuKK => f(&s[..m]),
        DensityKind::NuKDown | DensityKind::NuKKDown => {
            let d = sorted_desc(&s[..m]);
            f(&d) * (1.0 - d[0]) / (1.0 - s[0])
        }
    })?;
    Ok(est.scaled(c))
}

/// `phi(q) = int (1 - sum_i s_i^{q+1}) nu(ds)` for a decreasing kind.
pub fn laplace_exponent<R: Rng + ?Sized>(
    kind: DensityKind,
    k: usize,
    kp: Option<usize>,
    q: f64,
    n: u64,
    rng: &mut R,
) -> Result<Estimate> {
    if !kind.is_decreasing() {
        return Err(Error::InvalidParameter("the Laplace exponent uses a decreasing kind".into()));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must be non-negative")));
    }
    let m = dims(kind, k, kp)?;
    let c = gamma(1.0 / k as f64) / k as f64;
    let est = accumulate(k, n, rng, |s| {
        let kept: f64 = s[..m].iter().map(|x| x.powf(q + 1.0)).sum();
        (1.0 - kept) / (1.0 - s[0])
    })?;
    Ok(est.scaled(c))
}

/// `prod Gamma(a_i) / Gamma(sum a_i)`, the value of
/// `int_{S_K} prod s_i^{a_i - 1} ds`.
pub fn dirichlet_normalizer(a: &[f64]) -> f64 {
    let ln: f64 = a.iter().map(|&x| ln_gamma(x)).sum::<f64>() - ln_gamma(a.iter().sum());
    ln.exp()
}

/// Estimates `int_{S_K} prod s_i^{a_i - 1} ds` by importance sampling from
/// the symmetric Dirichlet(`proposal`).
pub fn dirichlet_integral<R: Rng + ?Sized>(a: &[f64], proposal: f64, n: u64, rng: &mut R) -> Result<Estimate> {
    if a.len() < 2 || a.iter().any(|&x| !(x > 0.0)) || !(proposal > 0.0) {
        return Err(Error::InvalidParameter("exponents and proposal must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let kk = a.len();
    let ln_norm = ln_gamma(kk as f64 * proposal) - kk as f64 * ln_gamma(proposal);
    let mut s = vec![0.0; kk];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        dirichlet_sample(proposal, rng, &mut s);
        let ln_w: f64 = s.iter().zip(a).map(|(x, &ai)| (ai - proposal) * x.ln()).sum::<f64>() - ln_norm;
        let w = ln_w.exp();
        sum += w;
        sum_sq += w * w;
    }
    Ok(Estimate::from_sums(sum, sum_sq, n))
}

/// Estimates `int f(s) nu(ds)` for the measure `kind` by evaluating
/// [`dislocation_density`] at Dirichlet(`proposal`) points: on `S_k` for
/// the unpruned kinds, and on `S_{k'+1}` with the last coordinate dropped
/// for the pruned ones. Draws that round onto the boundary are redrawn.
pub fn density_integral<R: Rng + ?Sized>(
    kind: DensityKind,
    k: usize,
    kp: Option<usize>,
    f: impl Fn(&[f64]) -> f64,
    proposal: f64,
    n: u64,
    rng: &mut R,
) -> Result<Estimate> {
    let m = dims(kind, k, kp)?;
    if !(proposal > 0.0) {
        return Err(Error::InvalidParameter(format!("proposal exponent {proposal} must be positive")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let dim = if kind.is_pruned() { m + 1 } else { m };
    let ln_norm = ln_gamma(dim as f64 * proposal) - dim as f64 * ln_gamma(proposal);
    let mut s = vec![0.0; dim];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let density = loop {
            dirichlet_sample(proposal, rng, &mut s);
            match dislocation_density(kind, k, kp, &s[..m]) {
                Err(Error::Singular(_)) => continue,
                other => break other?,
            }
        };
        let ln_q = ln_norm + s.iter().map(|x| (proposal - 1.0) * x.ln()).sum::<f64>();
        let v = f(&s[..m]) * density / ln_q.exp();
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("integrand is unbounded near {s:?}")));
        }
        sum += v;
        sum_sq += v * v;
    }
    Ok(Estimate::from_sums(sum, sum_sq, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate;

    #[test]
    fn dirichlet_samples_are_interior_points_of_the_simplex() {
        let mut rng = replicate(0, 0);
        let mut s = vec![0.0; 5];
        for _ in 0..1000 {
            dirichlet_sample(0.2, &mut rng, &mut s);
            assert!(s.iter().all(|&x| x > 0.0 && x < 1.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn total_mass_identity() {
        let mut rng = replicate(1, 0);
        let est = simplex_integral(DensityKind::NuK, 2, None, |_| 1.0, 200_000, &mut rng).unwrap();
        let target = std::f64::consts::PI.sqrt() / 2.0;
        assert!(est.z_score(target).abs() < 4.0, "{est:?}");
    }

    #[test]
    fn dirichlet_normalization() {
        assert!((dirichlet_normalizer(&[1.0 / 3.0; 3]) - 19.225).abs() < 1e-3);
        let mut rng = replicate(2, 0);
        let est = dirichlet_integral(&[1.0 / 3.0; 3], 0.5, 200_000, &mut rng).unwrap();
        assert!(est.z_score(dirichlet_normalizer(&[1.0 / 3.0; 3])).abs() < 4.0, "{est:?}");
    }

    #[test]
    fn binary_laplace_exponent() {
        // Mean spine length sqrt(pi) forces phi(1/2) = 1/sqrt(pi).
        let mut rng = replicate(3, 0);
        let est = laplace_exponent(DensityKind::NuKDown, 2, None, 0.5, 200_000, &mut rng).unwrap();
        assert!(est.z_score(1.0 / std::f64::consts::PI.sqrt()).abs() < 4.0, "{est:?}");
    }

    #[test]
    fn laplace_exponent_increases() {
        let mut prev = -1.0;
        for (i, q) in [0.0, 0.25, 0.5, 1.0, 2.0].into_iter().enumerate() {
            let mut rng = replicate(4, i as u64);
            let est = laplace_exponent(DensityKind::NuKDown, 3, None, q, 50_000, &mut rng).unwrap();
            assert!(est.value >= 0.0 && est.value > prev);
            prev = est.value;
        }
    }

    #[test]
    fn guards() {
        let mut rng = replicate(5, 0);
        assert!(simplex_integral(DensityKind::NuK, 2, None, |_| 1.0, 0, &mut rng).is_err());
        assert!(simplex_integral(DensityKind::NuK, 2, None, |s| 1.0 / (s[1] * 0.0), 10, &mut rng).is_err());
        assert!(laplace_exponent(DensityKind::NuK, 2, None, 0.5, 10, &mut rng).is_err());
    }

    #[test]
    fn density_integral_recovers_mass_identity() {
        let mut rng = replicate(4, 0);
        for k in 2..=4 {
            let est = density_integral(DensityKind::NuK, k, None, |s| 1.0 - s[0], 1.5 / k as f64, 200_000, &mut rng)
                .unwrap();
            let target = gamma(1.0 / k as f64) / k as f64;
            assert!(est.z_score(target).abs() < 4.0, "k = {k}: {est:?} vs {target}");
        }
    }
}
