//! Closed-form quantities attached to the growing trees and their limits.

mod density;
mod mark;
mod ml;
mod qn;
mod quadrature;
mod special;

pub use density::{brownian_density, brownian_density_alt, dislocation_density, DensityKind};
pub use mark::{mark_pmf, mark_pmf_exact, mark_sample, subsets};
pub use ml::{ml_moment, MlParams};
pub use qn::{compositions, qn_factored, qn_pmf, qn_rational};
pub use quadrature::{
    density_integral, dirichlet_integral, dirichlet_normalizer, dirichlet_sample, laplace_exponent, simplex_integral, Estimate,
};
pub use special::{beta_n, gamma, gamma_k, ln_gamma};

use crate::{Error, Result};

/// Which simplex a [`MassSplit`] lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// `s_1 + ... + s_k = 1`.
    Simplex,
    /// `s_1 + ... + s_k' <= 1`.
    SubSimplex,
}

const SUM_TOL: f64 = 1e-12;

/// A point of `S_k` or of `S_{k', <=}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassSplit {
    s: Vec<f64>,
    flavor: Flavor,
}

impl MassSplit {
    pub fn new(s: Vec<f64>, flavor: Flavor) -> Result<Self> {
        if s.is_empty() || s.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidParameter(format!("entries of {s:?} must lie in [0, 1]")));
        }
        let total: f64 = s.iter().sum();
        let ok = match flavor {
            Flavor::Simplex => (total - 1.0).abs() <= SUM_TOL,
            Flavor::SubSimplex => total <= 1.0 + SUM_TOL,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("{s:?} has sum {total} outside its simplex")));
        }
        Ok(Self { s, flavor })
    }

    pub fn simplex(s: Vec<f64>) -> Result<Self> {
        Self::new(s, Flavor::Simplex)
    }

    pub fn sub_simplex(s: Vec<f64>) -> Result<Self> {
        Self::new(s, Flavor::SubSimplex)
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn is_decreasing(&self) -> bool {
        self.s.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn decreasing(&self) -> Self {
        let mut s = self.s.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        Self { s, flavor: self.flavor }
    }

    /// The distance `d_k`: sum of entrywise absolute differences.
    pub fn distance(&self, other: &Self) -> f64 {
        self.s.iter().zip(&other.s).map(|(a, b)| (a - b).abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_split_domain() {
        assert!(MassSplit::simplex(vec![0.5, 0.5]).is_ok());
        assert!(MassSplit::simplex(vec![0.5, 0.4]).is_err());
        assert!(MassSplit::sub_simplex(vec![0.5, 0.4]).is_ok());
        assert!(MassSplit::sub_simplex(vec![0.7, 0.4]).is_err());
        assert!(MassSplit::simplex(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn decreasing_is_idempotent() {
        let s = MassSplit::simplex(vec![0.2, 0.5, 0.3]).unwrap();
        let d = s.decreasing();
        assert_eq!(d.values(), &[0.5, 0.3, 0.2]);
        assert_eq!(d.decreasing(), d);
        assert!(d.is_decreasing() && !s.is_decreasing());
        assert!((s.distance(&d) - 0.6).abs() < 1e-15);
    }
}
