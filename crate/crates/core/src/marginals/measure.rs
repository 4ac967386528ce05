use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MarginalTree, Point, Projection};
use crate::{Error, Result};

/// Finitely supported measure given by `(point, mass)` atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure {
    atoms: Vec<(Point, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureAtomJson {
    pub edge: usize,
    pub offset: f64,
    pub mass: f64,
}

const PROBABILITY_TOL: f64 = 1e-12;

impl FiniteMeasure {
    pub fn new(atoms: Vec<(Point, f64)>) -> Result<Self> {
        if let Some((_, m)) = atoms.iter().find(|(_, m)| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("mass {m} is negative or not finite")));
        }
        Ok(Self { atoms })
    }

    /// Uniform probability on the leaves of `tree`.
    pub fn uniform_on_leaves(tree: &MarginalTree) -> Self {
        let leaves: Vec<_> = tree.leaves().collect();
        let w = 1.0 / leaves.len() as f64;
        Self { atoms: leaves.into_iter().map(|l| (Point::at(l), w)).collect() }
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total() - 1.0).abs() <= PROBABILITY_TOL
    }

    pub fn check_on(&self, tree: &MarginalTree) -> Result<()> {
        self.atoms.iter().try_for_each(|(p, _)| tree.check_point(*p))
    }

    /// Merges atoms sitting at the same point and sorts them by location.
    pub fn merged(&self) -> Self {
        let mut acc: BTreeMap<(usize, u64), f64> = BTreeMap::new();
        for (p, m) in &self.atoms {
            *acc.entry((p.vertex, p.up.to_bits())).or_insert(0.0) += m;
        }
        let atoms = acc.into_iter().map(|((v, up), m)| (Point { vertex: v, up: f64::from_bits(up) }, m)).collect();
        Self { atoms }
    }

    pub fn to_json_atoms(&self, tree: &MarginalTree) -> Vec<MeasureAtomJson> {
        self.atoms
            .iter()
            .map(|(p, m)| MeasureAtomJson { edge: tree.external_id(p.vertex), offset: p.up, mass: *m })
            .collect()
    }

    pub fn to_json(&self, tree: &MarginalTree) -> String {
        serde_json::to_string(&self.to_json_atoms(tree)).expect("measure serializes")
    }

    pub fn from_json(text: &str, tree: &MarginalTree) -> Result<Self> {
        let raw: Vec<MeasureAtomJson> = serde_json::from_str(text)?;
        let atoms = raw
            .into_iter()
            .map(|a| Ok((tree.point(a.edge, a.offset)?, a.mass)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }
}

/// Image measure `pi_* mu`, with atoms at a common point merged.
pub fn pushforward_measure(mu: &FiniteMeasure, pi: &Projection<'_>) -> Result<FiniteMeasure> {
    mu.check_on(pi.tree())?;
    let atoms = mu.atoms.iter().map(|&(p, m)| (pi.apply(p), m)).collect();
    Ok(FiniteMeasure { atoms }.merged())
}

/// A mass function sampled at the vertices: `values[v] = m(v)`. It is
/// taken constant on open edges, so `m(v-) = m(v)` and `m(v+)` is the sum of
/// the values at the children of `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassFunction {
    pub values: Vec<f64>,
}

impl MassFunction {
    pub fn right_limit(&self, tree: &MarginalTree, v: usize) -> f64 {
        tree.children(v).iter().map(|&c| self.values[c]).sum()
    }
}

/// `m(v) = mu(T_v)`, where `T_v` is the closed subtree below vertex `v`.
pub fn mass_function(tree: &MarginalTree, mu: &FiniteMeasure) -> Result<MassFunction> {
    mu.check_on(tree)?;
    let n = tree.vertex_count();
    let mut at_vertex = vec![0.0; n];
    let mut on_edge = vec![0.0; n];
    for &(p, m) in &mu.atoms {
        if p.up == 0.0 {
            at_vertex[p.vertex] += m;
        } else {
            on_edge[p.vertex] += m;
        }
    }
    let mut values = at_vertex;
    for &v in tree.topological().iter().rev() {
        if let Some(parent) = tree.parent(v) {
            values[parent] += values[v] + on_edge[v];
        }
    }
    Ok(MassFunction { values })
}

const MASS_TOL: f64 = 1e-12;

/// The measure with `mu(T_v) = m(v)`: an atom `m(v) - m(v+)` at each vertex.
pub fn measure_from_mass_function(tree: &MarginalTree, m: &MassFunction) -> Result<FiniteMeasure> {
    if m.values.len() != tree.vertex_count() {
        return Err(Error::DomainMismatch(format!(
            "{} mass values for {} vertices",
            m.values.len(),
            tree.vertex_count()
        )));
    }
    let mut atoms = Vec::new();
    for &v in tree.topological() {
        let here = m.values[v];
        let plus = m.right_limit(tree, v);
        let atom = here - plus;
        if !here.is_finite() || here < 0.0 || atom < -MASS_TOL * here.abs().max(1.0) {
            return Err(Error::MassFunction { vertex: tree.external_id(v) });
        }
        if atom > 0.0 {
            atoms.push((Point::at(v), atom));
        }
    }
    Ok(FiniteMeasure { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::{project_map, Subtree};

    fn y_tree() -> MarginalTree {
        let ranks = [(1, 2), (2, 3)].into_iter().collect();
        MarginalTree::new(vec![0, 1, 2, 3], &[(0, 1, 1.0), (1, 2, 2.0), (1, 3, 2.0)], 0, ranks).unwrap()
    }

    #[test]
    fn single_edge_mass_function() {
        let t = MarginalTree::new(vec![0, 1], &[(0, 1, 3.0)], 0, [(1, 1)].into_iter().collect()).unwrap();
        let m = MassFunction { values: vec![1.0, 1.0] };
        let mu = measure_from_mass_function(&t, &m).unwrap();
        assert_eq!(mu.atoms(), &[(Point::at(t.local(1).unwrap()), 1.0)]);
    }

    #[test]
    fn additive_split_and_round_trip() {
        let t = y_tree();
        let mut values = vec![0.0; 4];
        values[t.local(0).unwrap()] = 1.0;
        values[t.local(1).unwrap()] = 1.0;
        values[t.local(2).unwrap()] = 0.625;
        values[t.local(3).unwrap()] = 0.375;
        let m = MassFunction { values };
        let mu = measure_from_mass_function(&t, &m).unwrap();
        assert_eq!(mu.atoms().len(), 2);
        assert!(mu.is_probability());
        assert_eq!(mass_function(&t, &mu).unwrap(), m);
    }

    #[test]
    fn violation_reports_vertex() {
        let t = y_tree();
        let mut values = vec![1.0; 4];
        values[t.local(1).unwrap()] = 1.0;
        let err = measure_from_mass_function(&t, &MassFunction { values }).unwrap_err();
        assert!(matches!(err, Error::MassFunction { vertex: 1 }));
    }

    #[test]
    fn pushforward_merges_on_boundary() {
        let t = y_tree();
        let sub = Subtree::from_vertices(&t, [0, 1]).unwrap();
        let pi = project_map(&t, &sub).unwrap();
        let mu = FiniteMeasure::uniform_on_leaves(&t);
        let nu = pushforward_measure(&mu, &pi).unwrap();
        assert_eq!(nu.atoms(), &[(Point::at(t.local(1).unwrap()), 1.0)]);

        let id = project_map(&t, &Subtree::whole(&t)).unwrap();
        assert_eq!(pushforward_measure(&mu, &id).unwrap(), mu.merged());
    }

    #[test]
    fn json_round_trip() {
        let t = y_tree();
        let mu = FiniteMeasure::new(vec![(t.point(2, 0.5).unwrap(), 0.25), (Point::at(t.local(3).unwrap()), 0.75)]).unwrap();
        let s = mu.to_json(&t);
        assert_eq!(FiniteMeasure::from_json(&s, &t).unwrap(), mu);
        assert!(FiniteMeasure::from_json(r#"[{"edge":9,"offset":0,"mass":1}]"#, &t).is_err());
    }
}
