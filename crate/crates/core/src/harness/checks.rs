//! Identity suites shared by the command line and the test targets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use super::exact::{enumerate_exact, markov_branching_check, martingale_check, martingale_check_tree, to_f64, ExactCheck};
use super::stats::{chi_square, ChiSquare};
use crate::analytics::{
    compositions, density_integral, dirichlet_integral, dirichlet_normalizer, gamma, mark_pmf, mark_pmf_exact,
    mark_sample, qn_factored, qn_pmf, simplex_integral, DensityKind, Estimate,
};
use crate::crp::{attachment_tables, spine_tables, TreeRestaurant};
use crate::marginals::{
    marginal_tree, project_map, projection_gap, pushforward_measure, FiniteMeasure, MarginalTree, Point, Subtree,
};
use crate::metricspace::{hausdorff_embedded, hausdorff_nested, prokhorov, prokhorov_bruteforce, DistanceMatrix};
use crate::rng::derive;
use crate::treegrow::GrowingTree;
use crate::{Error, Result};

/// Significance level of every chi-square comparison.
pub const CHI_SQUARE_LEVEL: f64 = 0.001;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn exact(name: impl Into<String>, c: &ExactCheck) -> Self {
        let detail = match c.failures.first() {
            None => format!("{} cases", c.cases),
            Some(f) => format!("{} of {} cases fail, first: {f}", c.failures.len(), c.cases),
        };
        Self::new(name, c.passed(), detail)
    }

    fn z(name: impl Into<String>, est: Estimate, target: f64, bound: f64) -> Self {
        let z = est.z_score(target);
        Self::new(
            name,
            z.abs() <= bound,
            format!("{:.6} +- {:.2e} vs {target:.6} (z = {z:.2})", est.value, est.std_error),
        )
    }

    fn chi(name: impl Into<String>, c: &ChiSquare) -> Self {
        Self::new(
            name,
            c.passes(CHI_SQUARE_LEVEL),
            format!("chi2 = {:.2} on {} dof, p = {:.4}", c.statistic, c.dof, c.p_value),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Suite {
    pub name: String,
    pub checks: Vec<Check>,
}

impl Suite {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), checks: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Largest `|qn_pmf - enumeration|` over the support of `q_n`.
pub fn qn_enumeration_gap(k: usize, n: u64) -> Result<f64> {
    let law = enumerate_exact(k, n)?;
    let mut worst: f64 = 0.0;
    for lambda in compositions(k, n) {
        let exact = law.splits.get(&lambda).map(to_f64).unwrap_or(0.0);
        worst = worst.max((qn_pmf(k, n, &lambda)? - exact).abs());
    }
    Ok(worst)
}

/// `q_n` against the enumeration (where it is feasible), the two printed
/// forms against each other and the total mass, for `n <= n_max`.
pub fn qn_suite(k: usize, n_max: u64) -> Result<Suite> {
    let mut suite = Suite::new(format!("qn k={k}"));
    if k <= super::exact::MAX_ARITY {
        let top = n_max.min(super::exact::MAX_STEPS - 1);
        let worst = (0..=top).map(|n| qn_enumeration_gap(k, n)).collect::<Result<Vec<_>>>()?;
        let worst = worst.into_iter().fold(0.0, f64::max);
        suite.push(Check::new(
            format!("q_n equals enumeration for n <= {top}"),
            worst <= 1e-12,
            format!("max gap {worst:.2e}"),
        ));
        if k == 2 || k == 3 {
            let law = enumerate_exact(k, 1)?;
            let anchors: Vec<(Vec<u64>, BigRational)> = if k == 2 {
                vec![(vec![1, 0], ratio(2, 3)), (vec![0, 1], ratio(1, 3))]
            } else {
                vec![(vec![1, 0, 0], ratio(1, 2)), (vec![0, 1, 0], ratio(1, 4)), (vec![0, 0, 1], ratio(1, 4))]
            };
            let exact_ok = anchors.iter().all(|(l, p)| law.splits.get(l) == Some(p));
            let float_ok = anchors.iter().all(|(l, p)| matches!(qn_pmf(k, 1, l), Ok(x) if (x - to_f64(p)).abs() <= 1e-12));
            suite.push(Check::new("q_1 anchors", exact_ok && float_ok, format!("{anchors:?}")));
        }
    }
    let (mut mass_gap, mut form_gap): (f64, f64) = (0.0, 0.0);
    for n in 0..=n_max {
        let mut total = 0.0;
        for lambda in compositions(k, n) {
            let a = qn_pmf(k, n, &lambda)?;
            let b = qn_factored(k, n, &lambda)?;
            total += a;
            form_gap = form_gap.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
        }
        mass_gap = mass_gap.max((total - 1.0).abs());
    }
    suite.push(Check::new(format!("sum of q_n is 1 for n <= {n_max}"), mass_gap <= 1e-9, format!("{mass_gap:.2e}")));
    suite.push(Check::new("printed forms of q_n agree", form_gap <= 1e-10, format!("max relative gap {form_gap:.2e}")));
    Ok(suite)
}

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Proposal exponent giving finite variance for [`density_integral`] on
/// `nu_k`.
fn proposal_for(k: usize) -> f64 {
    1.5 / k as f64
}

/// `int (1 - s_1) nu_k(ds) = Gamma(1/k)/k` for `k = 2..=5` and the Dirichlet
/// normalization on a few exponent vectors.
pub fn dirichlet_suite(samples: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("dirichlet");
    for k in 2..=5 {
        let mut rng = derive(seed, 10, k as u64);
        let est = density_integral(DensityKind::NuK, k, None, |s| 1.0 - s[0], proposal_for(k), samples, &mut rng)?;
        suite.push(Check::z(format!("int (1-s_1) nu_{k} = Gamma(1/{k})/{k}"), est, gamma(1.0 / k as f64) / k as f64, 3.0));
    }
    let third = [1.0 / 3.0; 3];
    let exact = dirichlet_normalizer(&third);
    suite.push(Check::new(
        "Gamma(1/3)^3 normalization",
        (exact - gamma(1.0 / 3.0).powi(3)).abs() <= 1e-12 * exact && (exact - 19.225).abs() < 1e-3,
        format!("{exact:.6}"),
    ));
    let cases: [(&[f64], f64); 4] =
        [(&third, 0.5), (&[0.5, 1.5, 2.0], 0.5), (&[0.25; 4], 0.3), (&[1.0, 1.0], 1.0)];
    for (i, (a, p)) in cases.into_iter().enumerate() {
        let mut rng = derive(seed, 11, i as u64);
        let est = dirichlet_integral(a, p, samples, &mut rng)?;
        suite.push(Check::z(format!("Dirichlet integral {a:?}"), est, dirichlet_normalizer(a), 3.0));
    }
    Ok(suite)
}

/// Named test functions on decreasing sequences.
pub fn test_function(id: &str) -> Result<fn(&[f64]) -> f64> {
    Ok(match id {
        "one" => |_| 1.0,
        "s1" => |s| s[0],
        "sum_sq" => |s| s.iter().map(|x| x * x).sum(),
        "dust" => |s| 1.0 - s.iter().sum::<f64>(),
        other => return Err(Error::InvalidParameter(format!("unknown test function {other:?}"))),
    })
}

pub const TEST_FUNCTIONS: [&str; 4] = ["one", "s1", "sum_sq", "dust"];

/// Both sides of `int g d(nu_k^{down,*}) = int g d(nu_{k,k'}^down)` with
/// `g(s) = f(s)(1 - s_1)`, estimated from independent streams.
pub fn mark_pushforward(
    k: usize,
    kp: usize,
    f: fn(&[f64]) -> f64,
    samples: u64,
    seed: u64,
    index: u64,
) -> Result<(Estimate, Estimate)> {
    let g = move |v: &[f64]| f(v) * (1.0 - v[0]);
    let lhs_integrand = |d: &[f64]| -> f64 {
        let pmf = mark_pmf(d, kp).expect("interior point of the simplex");
        let total: f64 = pmf
            .iter()
            .map(|(set, p)| {
                let mut kept: Vec<f64> = set.iter().map(|&i| d[i]).collect();
                kept.sort_by(|a, b| b.total_cmp(a));
                p * g(&kept)
            })
            .sum();
        total / (1.0 - d[0])
    };
    let lhs = simplex_integral(DensityKind::NuKDown, k, None, lhs_integrand, samples, &mut derive(seed, 20, 2 * index))?;
    let rhs = simplex_integral(DensityKind::NuKKDown, k, Some(kp), f, samples, &mut derive(seed, 20, 2 * index + 1))?;
    Ok((lhs, rhs))
}

/// `(lhs - rhs)` over the combined standard error.
pub fn combined_z(a: Estimate, b: Estimate) -> f64 {
    let se = (a.std_error * a.std_error + b.std_error * b.std_error).sqrt();
    (a.value - b.value) / se
}

pub fn mark_pushforward_suite(pairs: &[(usize, usize)], samples: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("mark pushforward");
    let mut index = 0;
    for &(k, kp) in pairs {
        for id in ["one", "s1"] {
            let (lhs, rhs) = mark_pushforward(k, kp, test_function(id)?, samples, seed, index)?;
            index += 1;
            let z = combined_z(lhs, rhs);
            suite.push(Check::new(
                format!("nu*_{k} = nu_{k},{kp} on {id}"),
                z.abs() <= 3.0,
                format!("{:.6} vs {:.6} (z = {z:.2})", lhs.value, rhs.value),
            ));
        }
    }
    Ok(suite)
}

/// Exact normalization, the worked example and sampler frequencies.
pub fn mark_suite(draws: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("mark");
    let pmf = mark_pmf_exact(&[ratio(1, 2), ratio(1, 3), ratio(1, 6)], 2)?;
    let want = [ratio(35, 94), ratio(32, 94), ratio(27, 94)];
    let ok = pmf.iter().map(|(_, p)| p).eq(want.iter());
    suite.push(Check::new("worked example (1/2,1/3,1/6)", ok, format!("{:?}", pmf.iter().map(|(_, p)| p.to_string()).collect::<Vec<_>>())));

    let mut rng = derive(seed, 30, 0);
    let mut bad = 0;
    for _ in 0..1000 {
        let k = rng.random_range(3..7);
        let kp = rng.random_range(2..k);
        let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..100)).collect();
        let t: i64 = raw.iter().sum();
        let s: Vec<_> = raw.iter().map(|&x| ratio(x, t)).collect();
        let total = mark_pmf_exact(&s, kp)?.into_iter().fold(BigRational::zero(), |a, (_, p)| a + p);
        if total != BigRational::one() {
            bad += 1;
        }
    }
    suite.push(Check::new("exact normalization on 1000 rational splits", bad == 0, format!("{bad} failures")));

    let inputs: [(&[f64], usize); 3] =
        [(&[0.5, 1.0 / 3.0, 1.0 / 6.0], 2), (&[0.4, 0.3, 0.2, 0.1], 2), (&[0.4, 0.3, 0.2, 0.1], 3)];
    for (i, (s, kp)) in inputs.into_iter().enumerate() {
        let pmf = mark_pmf(s, kp)?;
        let mut counts = vec![0u64; pmf.len()];
        let mut rng = derive(seed, 31, i as u64);
        for _ in 0..draws {
            let set = mark_sample(s, kp, &mut rng)?;
            counts[pmf.iter().position(|(x, _)| *x == set).expect("sampled a listed subset")] += 1;
        }
        let expected: Vec<f64> = pmf.iter().map(|(_, p)| p * draws as f64).collect();
        suite.push(Check::chi(format!("sampler frequencies {s:?}, k'={kp}"), &chi_square(&counts, &expected)?));
    }
    Ok(suite)
}

fn random_point<R: Rng + ?Sized>(t: &MarginalTree, rng: &mut R) -> Point {
    let v = rng.random_range(0..t.vertex_count());
    if v == t.root() {
        return Point::at(v);
    }
    Point { vertex: v, up: rng.random::<f64>() * t.edge_len(v) }
}

/// Appendix-style metric lemmas on `pairs` random `(T_n, p)`.
pub fn metric_suite(pairs: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("metric");
    let (mut gap_fail, mut embed_fail, mut lip_fail, mut prok_fail, mut iso_worst) = (0, 0, 0, 0, 0.0f64);
    let mut brute_worst: f64 = 0.0;
    for r in 0..pairs {
        let mut rng = derive(seed, 40, r);
        let k = rng.random_range(2..=4);
        let n = rng.random_range(1..=40);
        let g = GrowingTree::grown(k, n, &mut rng)?;
        let p = rng.random_range(0..=n);
        let t = MarginalTree::from_growing(&g);
        let sub = Subtree::spanned(&t, (k as u64 - 1) * p + 1);
        let z = projection_gap(&t, &sub)?;
        if hausdorff_nested(&t, &sub)? != z {
            gap_fail += 1;
        }
        let e = t.embed()?;
        let ep = marginal_tree(&g, p)?.embed()?;
        if (hausdorff_embedded(&e, &ep)? - z).abs() > 1e-9 {
            embed_fail += 1;
        }

        let pi = project_map(&t, &sub)?;
        for _ in 0..50 {
            let (x, y) = (random_point(&t, &mut rng), random_point(&t, &mut rng));
            if t.distance(pi.apply(x), pi.apply(y)) > t.distance(x, y) + 1e-9 {
                lip_fail += 1;
            }
        }

        let mu = FiniteMeasure::uniform_on_leaves(&t);
        let nu = pushforward_measure(&mu, &pi)?;
        let mut points: Vec<Point> = mu.atoms().iter().map(|a| a.0).collect();
        points.extend(nu.atoms().iter().map(|a| a.0));
        let (mut a, mut b) = (vec![0.0; points.len()], vec![0.0; points.len()]);
        mu.atoms().iter().enumerate().for_each(|(i, x)| a[i] = x.1);
        let off = mu.atoms().len();
        nu.atoms().iter().enumerate().for_each(|(i, x)| b[off + i] = x.1);
        // On the unit-height rescaling, where the bound is not trivially met.
        let c = 1.0 / t.tree_height();
        let d = DistanceMatrix::from_fn(points.len(), |i, j| c * t.distance(points[i], points[j]))?;
        if prokhorov(&a, &b, &d)? > c * z + 1e-12 {
            prok_fail += 1;
        }

        for u in 0..t.vertex_count() {
            let cu = e.vertex_coords(u);
            for v in u + 1..t.vertex_count() {
                let gap = (cu.l1_distance(&e.vertex_coords(v)) - t.distance(Point::at(u), Point::at(v))).abs();
                iso_worst = iso_worst.max(gap);
            }
        }
        for _ in 0..20 {
            let (x, y) = (random_point(&t, &mut rng), random_point(&t, &mut rng));
            let gap = (e.point_coords(x).l1_distance(&e.point_coords(y)) - t.distance(x, y)).abs();
            iso_worst = iso_worst.max(gap);
        }

        let size_a = rng.random_range(1..=5);
        let size_b = rng.random_range(1..=5);
        let pts: Vec<Point> = (0..size_a + size_b).map(|_| random_point(&t, &mut rng)).collect();
        let mut wa = vec![0.0; pts.len()];
        let mut wb = vec![0.0; pts.len()];
        for i in 0..size_a {
            wa[i] = rng.random::<f64>() + 0.05;
        }
        for i in size_a..pts.len() {
            wb[i] = rng.random::<f64>() + 0.05;
        }
        let (sa, sb): (f64, f64) = (wa.iter().sum(), wb.iter().sum());
        wa.iter_mut().for_each(|x| *x /= sa);
        wb.iter_mut().for_each(|x| *x /= sb);
        let scale = 1.0 / t.tree_height().max(1.0);
        let d = DistanceMatrix::from_fn(pts.len(), |i, j| scale * t.distance(pts[i], pts[j]))?;
        let exact = prokhorov(&wa, &wb, &d)?;
        let brute = prokhorov_bruteforce(&wa, &wb, &d, 1e-8)?;
        brute_worst = brute_worst.max((exact - brute).abs());
    }
    suite.push(Check::new("d_H(T_n, T^p_n) = Z_pi", gap_fail == 0, format!("{gap_fail} of {pairs} differ")));
    suite.push(Check::new("embedded d_H = Z_pi", embed_fail == 0, format!("{embed_fail} of {pairs} differ")));
    suite.push(Check::new("projection is 1-Lipschitz", lip_fail == 0, format!("{lip_fail} violations")));
    suite.push(Check::new("d_P(mu_n, pi_* mu_n) <= Z_pi", prok_fail == 0, format!("{prok_fail} violations")));
    suite.push(Check::new("prokhorov equals subset oracle", brute_worst <= 1e-6, format!("max gap {brute_worst:.2e}")));
    suite.push(Check::new("stick-breaking embedding is isometric", iso_worst <= 1e-9, format!("max gap {iso_worst:.2e}")));
    Ok(suite)
}

pub fn martingale_suite(k: usize, steps: u64, random_trees: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("martingale");
    suite.push(Check::exact(format!("Z_n/(kn+1) identity on all states, k={k}, n<={steps}"), &martingale_check(k, steps)?));
    let mut check = ExactCheck::default();
    for r in 0..random_trees {
        let mut rng = derive(seed, 50, r);
        let n = rng.random_range(1..=30);
        martingale_check_tree(&GrowingTree::grown(k, n, &mut rng)?, &mut check);
    }
    suite.push(Check::exact(format!("Z_n/(kn+1) identity on {random_trees} random trees"), &check));
    Ok(suite)
}

pub fn mb_suite(k: usize, n: u64) -> Result<Suite> {
    let mut suite = Suite::new("markov branching");
    suite.push(Check::exact(format!("factorization k={k}, n<={n}"), &markov_branching_check(k, n)?));
    Ok(suite)
}

/// Observed and expected one-step seatings of a tree restaurant, binned
/// by table position (tables past `cap - 1` pooled) with a last bin for a
/// new table.
pub fn restaurant_transitions(
    k: usize,
    transitions: u64,
    seed: u64,
    domain: u64,
    restaurant: impl Fn(&GrowingTree) -> Result<TreeRestaurant>,
) -> Result<ChiSquare> {
    const CAP: usize = 8;
    const START: u64 = 20;
    const RUN: u64 = 50;
    let mut observed = vec![0u64; CAP + 1];
    let mut expected = vec![0.0; CAP + 1];
    let runs = transitions.div_ceil(RUN);
    let mut done = 0;
    for r in 0..runs {
        let mut rng = derive(seed, domain, r);
        let mut tree = GrowingTree::grown(k, START, &mut rng)?;
        let mut before = restaurant(&tree)?;
        for _ in 0..RUN {
            if done == transitions {
                break;
            }
            let state = &before.state;
            for i in 0..state.table_count() {
                expected[i.min(CAP - 1)] += state.join_probability(i);
            }
            expected[CAP] += state.new_table_probability();
            tree.grow_step(&mut rng);
            let after = restaurant(&tree)?;
            observed[classify(&before, &after)?.map_or(CAP, |i| i.min(CAP - 1))] += 1;
            before = after;
            done += 1;
        }
    }
    chi_square(&observed, &expected)
}

/// `Some(i)` when the client joined table `i` of `before`, `None` when it
/// opened a table.
fn classify(before: &TreeRestaurant, after: &TreeRestaurant) -> Result<Option<usize>> {
    let mismatch = || Error::InvalidParameter("restaurant changed by more than one client".into());
    let grown: Vec<usize> = before
        .keys
        .iter()
        .enumerate()
        .filter_map(|(i, &key)| match after.size_of(key) {
            Some(s) if s == before.state.tables()[i] => None,
            _ => Some(i),
        })
        .collect();
    match (after.keys.len() - before.keys.len(), grown.as_slice()) {
        (1, []) => Ok(None),
        (0, [i]) if after.size_of(before.keys[*i]) == Some(before.state.tables()[*i] + 1) => Ok(Some(*i)),
        _ => Err(mismatch()),
    }
}

pub fn crp_suite(k: usize, p: u64, transitions: u64, seed: u64) -> Result<Suite> {
    let mut suite = Suite::new("restaurants");
    let c = restaurant_transitions(k, transitions, seed, 60, |t| spine_tables(t, 1))?;
    suite.push(Check::chi(format!("spine (1/{k},1/{k}) seating"), &c));
    let c = restaurant_transitions(k, transitions, seed, 61, |t| attachment_tables(t, p))?;
    suite.push(Check::chi(format!("attachment (1/{k},{p}+1/{k}) seating"), &c));
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for suite in [qn_suite(2, 6).unwrap(), qn_suite(3, 4).unwrap(), mb_suite(2, 3).unwrap(), mark_suite(20_000, 1).unwrap()] {
            assert!(suite.passed(), "{suite:?}");
        }
    }

    #[test]
    fn metric_suite_passes_on_a_few_pairs() {
        let s = metric_suite(20, 3).unwrap();
        assert!(s.passed(), "{s:?}");
    }

    #[test]
    fn restaurants_pass() {
        let s = crp_suite(3, 2, 20_000, 5).unwrap();
        assert!(s.passed(), "{s:?}");
    }

    #[test]
    fn unknown_test_function() {
        assert!(test_function("nope").is_err());
        assert!(TEST_FUNCTIONS.iter().all(|id| test_function(id).is_ok()));
    }
}
