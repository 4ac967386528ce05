use super::special::ln_gamma;
use crate::{Error, Result};

/// The four dislocation measures attached to the growing trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityKind {
    /// `nu_k` on `S_k`, the scaling limit of the split laws.
    NuK,
    /// `nu_k` symmetrized onto decreasing sequences.
    NuKDown,
    /// `nu_{k,k'}` on `S_{k', <=}`, the image of `nu_k` under keeping the
    /// first `k'` blocks.
    NuKK,
    /// `nu_{k,k'}` symmetrized onto decreasing sequences.
    NuKKDown,
}

impl DensityKind {
    pub fn is_pruned(self) -> bool {
        matches!(self, Self::NuKK | Self::NuKKDown)
    }

    pub fn is_decreasing(self) -> bool {
        matches!(self, Self::NuKDown | Self::NuKKDown)
    }
}

/// Checks `k` and `k'` against the kind and returns the number of free
/// coordinates.
pub(crate) fn dims(kind: DensityKind, k: usize, kp: Option<usize>) -> Result<usize> {
    if k < 2 {
        return Err(Error::InvalidArity(k));
    }
    match (kind.is_pruned(), kp) {
        (false, _) => Ok(k),
        (true, Some(kp)) if (1..k).contains(&kp) => Ok(kp),
        (true, Some(kp)) => Err(Error::InvalidPruneArity { arity: k, pruned: kp }),
        (true, None) => Err(Error::InvalidParameter("pruned densities need k'".into())),
    }
}

/// Density of `kind` at `s` against `ds_1 ... ds_{k-1}` on `S_k` (resp.
/// `ds_1 ... ds_{k'}` on `S_{k', <=}`). For the decreasing kinds the value
/// is zero off the closed Weyl chamber `s_1 >= ... >= s_m`.
pub fn dislocation_density(kind: DensityKind, k: usize, kp: Option<usize>, s: &[f64]) -> Result<f64> {
    let m = dims(kind, k, kp)?;
    if s.len() != m {
        return Err(Error::InvalidParameter(format!("expected {m} coordinates, got {}", s.len())));
    }
    let total: f64 = s.iter().sum();
    let pruned = kind.is_pruned();
    if (!pruned && (total - 1.0).abs() > 1e-12) || (pruned && total > 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("{s:?} is outside the simplex")));
    }
    if s.iter().any(|&x| !(x > 0.0 && x < 1.0)) || (pruned && total >= 1.0) {
        return Err(Error::Singular(s.to_vec()));
    }
    if kind.is_decreasing() && s.windows(2).any(|w| w[0] < w[1]) {
        return Ok(0.0);
    }
    let kf = k as f64;
    let a = 1.0 / kf;
    let mut ln = -kf.ln() + s.iter().map(|x| -(1.0 - a) * x.ln()).sum::<f64>();
    if pruned {
        let kpf = m as f64;
        ln += -(kpf - 1.0) * ln_gamma(a) - ln_gamma(1.0 - kpf / kf) - (kpf / kf) * (1.0 - total).ln();
    } else {
        ln -= (kf - 1.0) * ln_gamma(a);
    }
    let tail = if kind.is_decreasing() {
        let fact: f64 = (1..m).map(|i| i as f64).product();
        fact * s.iter().map(|x| 1.0 / (1.0 - x)).sum::<f64>()
    } else {
        1.0 / (1.0 - s[0])
    };
    Ok(ln.exp() * tail)
}

/// `sqrt(2/pi) (s_1 s_2)^{-3/2}` on `s_1 >= s_2`, the binary dislocation
/// density normalized as for the Brownian tree.
pub fn brownian_density(s: &[f64; 2]) -> f64 {
    if s[0] < s[1] {
        return 0.0;
    }
    (2.0 / std::f64::consts::PI).sqrt() * (s[0] * s[1]).powf(-1.5)
}

/// `sqrt(2/pi) (s_1 s_2)^{-1/2} (1/(1-s_1) + 1/(1-s_2))` on `s_1 >= s_2`.
pub fn brownian_density_alt(s: &[f64; 2]) -> f64 {
    if s[0] < s[1] {
        return 0.0;
    }
    (2.0 / std::f64::consts::PI).sqrt() * (s[0] * s[1]).powf(-0.5) * (1.0 / (1.0 - s[0]) + 1.0 / (1.0 - s[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate;
    use rand::Rng;

    fn perms(v: &[f64]) -> Vec<Vec<f64>> {
        if v.len() <= 1 {
            return vec![v.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..v.len() {
            let mut rest = v.to_vec();
            let x = rest.remove(i);
            for mut p in perms(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn binary_example_value() {
        let v = brownian_density(&[0.75, 0.25]);
        assert!((v - 9.827).abs() < 5e-4, "{v}");
        // The general formula at k = 2 carries the constant 1/(2 sqrt(pi)).
        let g = dislocation_density(DensityKind::NuKDown, 2, None, &[0.75, 0.25]).unwrap();
        assert!((g - 0.1875f64.powf(-1.5) / (2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-12 * g);
    }

    #[test]
    fn binary_printed_forms_agree() {
        let mut rng = replicate(1, 0);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(0.5..1.0);
            let s = [x, 1.0 - x];
            if s[1] <= 0.0 {
                continue;
            }
            let (a, b) = (brownian_density(&s), brownian_density_alt(&s));
            assert!((a - b).abs() <= 1e-10 * a);
            let g = dislocation_density(DensityKind::NuKDown, 2, None, &s).unwrap();
            assert!((a / g - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn decreasing_is_symmetrized() {
        let mut rng = replicate(2, 0);
        for k in 2..6 {
            for _ in 0..200 {
                let mut s: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let t: f64 = s.iter().sum();
                s.iter_mut().for_each(|x| *x /= t);
                s.sort_by(|a, b| b.total_cmp(a));
                let down = dislocation_density(DensityKind::NuKDown, k, None, &s).unwrap();
                let sym: f64 = perms(&s).iter().map(|p| dislocation_density(DensityKind::NuK, k, None, p).unwrap()).sum();
                assert!((down - sym).abs() <= 1e-10 * down);
            }
        }
    }

    #[test]
    fn pruned_decreasing_is_symmetrized() {
        let mut rng = replicate(3, 0);
        for (k, kp) in [(3, 2), (4, 2), (4, 3), (5, 3)] {
            for _ in 0..200 {
                let mut s: Vec<f64> = (0..kp).map(|_| rng.random::<f64>() + 1e-3).collect();
                let t: f64 = s.iter().sum::<f64>() / rng.random_range(0.05..0.95);
                s.iter_mut().for_each(|x| *x /= t);
                s.sort_by(|a, b| b.total_cmp(a));
                let down = dislocation_density(DensityKind::NuKKDown, k, Some(kp), &s).unwrap();
                let sym: f64 =
                    perms(&s).iter().map(|p| dislocation_density(DensityKind::NuKK, k, Some(kp), p).unwrap()).sum();
                assert!((down - sym).abs() <= 1e-10 * down);
            }
        }
    }

    #[test]
    fn boundary_and_order() {
        assert!(matches!(dislocation_density(DensityKind::NuK, 2, None, &[1.0, 0.0]), Err(Error::Singular(_))));
        assert!(matches!(
            dislocation_density(DensityKind::NuKK, 3, Some(2), &[0.5, 0.5]),
            Err(Error::Singular(_))
        ));
        assert_eq!(dislocation_density(DensityKind::NuKDown, 3, None, &[0.2, 0.5, 0.3]).unwrap(), 0.0);
        assert!(dislocation_density(DensityKind::NuKK, 3, None, &[0.2, 0.5]).is_err());
        assert!(dislocation_density(DensityKind::NuK, 3, None, &[0.2, 0.5]).is_err());
    }
}
