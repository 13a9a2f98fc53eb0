//! Protograph data model.
//!
//! A protograph is a small bipartite multigraph between check-node classes and
//! variable-node classes. Parallel edges are stored once with a multiplicity.
//! Lifting by a factor `M` replaces every edge instance with an `M x M`
//! permutation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Location of a variable class inside a coupled chain (positions are 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub chain: u32,
    pub index: u32,
}

/// One protograph edge, possibly carrying parallel copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProtoEdge {
    pub check: usize,
    pub var: usize,
    pub mult: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protograph {
    name: String,
    num_checks: usize,
    num_vars: usize,
    /// Sorted by `(check, var)`, no duplicate pairs.
    edges: Vec<ProtoEdge>,
    punctured: BTreeSet<usize>,
    positions: BTreeMap<usize, Position>,
}

impl Protograph {
    /// Builds a protograph from explicit parts.
    ///
    /// Edges may be given in any order; duplicate `(check, var)` pairs and zero
    /// multiplicities are rejected.
    pub fn new(
        name: impl Into<String>,
        num_checks: usize,
        num_vars: usize,
        edges: impl IntoIterator<Item = ProtoEdge>,
        punctured: impl IntoIterator<Item = usize>,
        positions: impl IntoIterator<Item = (usize, Position)>,
    ) -> Result<Self> {
        let mut sorted: Vec<ProtoEdge> = edges.into_iter().collect();
        sorted.sort();
        for e in &sorted {
            if e.check >= num_checks || e.var >= num_vars {
                return Err(Error::InvalidProtograph(format!(
                    "edge ({}, {}) out of range",
                    e.check, e.var
                )));
            }
            if e.mult == 0 {
                return Err(Error::InvalidProtograph(format!(
                    "edge ({}, {}) has zero multiplicity",
                    e.check, e.var
                )));
            }
        }
        for w in sorted.windows(2) {
            if (w[0].check, w[0].var) == (w[1].check, w[1].var) {
                return Err(Error::InvalidProtograph(format!(
                    "duplicate edge ({}, {})",
                    w[0].check, w[0].var
                )));
            }
        }
        let punctured: BTreeSet<usize> = punctured.into_iter().collect();
        if let Some(&v) = punctured.iter().find(|&&v| v >= num_vars) {
            return Err(Error::InvalidProtograph(format!(
                "punctured variable {v} out of range"
            )));
        }
        let positions: BTreeMap<usize, Position> = positions.into_iter().collect();
        if let Some(&v) = positions.keys().find(|&&v| v >= num_vars) {
            return Err(Error::InvalidProtograph(format!(
                "position for variable {v} out of range"
            )));
        }
        Ok(Protograph {
            name: name.into(),
            num_checks,
            num_vars,
            edges: sorted,
            punctured,
            positions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn edges(&self) -> &[ProtoEdge] {
        &self.edges
    }

    pub fn punctured(&self) -> &BTreeSet<usize> {
        &self.punctured
    }

    pub fn is_punctured(&self, var: usize) -> bool {
        self.punctured.contains(&var)
    }

    pub fn positions(&self) -> &BTreeMap<usize, Position> {
        &self.positions
    }

    pub fn position(&self, var: usize) -> Option<Position> {
        self.positions.get(&var).copied()
    }

    /// Sum of all multiplicities.
    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(|e| e.mult as usize).sum()
    }

    pub fn multiplicity(&self, check: usize, var: usize) -> u32 {
        self.edges
            .binary_search_by(|e| (e.check, e.var).cmp(&(check, var)))
            .map(|i| self.edges[i].mult)
            .unwrap_or(0)
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_checks];
        for e in &self.edges {
            deg[e.check] += e.mult as usize;
        }
        deg
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vars];
        for e in &self.edges {
            deg[e.var] += e.mult as usize;
        }
        deg
    }

    /// Dense base matrix `B` (rows are checks).
    pub fn base_matrix(&self) -> Vec<Vec<u32>> {
        let mut b = vec![vec![0; self.num_vars]; self.num_checks];
        for e in &self.edges {
            b[e.check][e.var] = e.mult;
        }
        b
    }

    /// Edge instances with parallel edges expanded, ordered by `(check, var)`.
    pub fn edge_instances(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.total_edges());
        for e in &self.edges {
            for _ in 0..e.mult {
                out.push((e.check, e.var));
            }
        }
        out
    }

    pub fn design_rate(&self) -> Result<DesignRate> {
        DesignRate::of(self)
    }

    /// Structural audit: degree profile, isolated nodes, connectivity and
    /// duplicate pairs. Problems are reported, never raised.
    pub fn validate(&self) -> ValidationReport {
        let check_degrees = self.check_degrees();
        let var_degrees = self.var_degrees();
        let mut issues = Vec::new();
        for w in self.edges.windows(2) {
            if (w[0].check, w[0].var) == (w[1].check, w[1].var) {
                issues.push(Issue::DuplicateEdge {
                    check: w[0].check,
                    var: w[0].var,
                });
            }
        }
        for (c, &d) in check_degrees.iter().enumerate() {
            if d == 0 {
                issues.push(Issue::IsolatedCheck(c));
            }
        }
        for (v, &d) in var_degrees.iter().enumerate() {
            if d == 0 {
                issues.push(Issue::IsolatedVar(v));
            }
        }
        let components = self.components();
        if components > 1 {
            issues.push(Issue::Disconnected { components });
        }
        ValidationReport {
            check_degrees,
            var_degrees,
            components,
            issues,
        }
    }

    /// Number of connected components, counting every node (checks first).
    fn components(&self) -> usize {
        let n = self.num_checks + self.num_vars;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.check);
            let b = find(&mut parent, self.num_checks + e.var);
            if a != b {
                parent[a] = b;
            }
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }
}

/// Problems found by [`Protograph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    IsolatedCheck(usize),
    IsolatedVar(usize),
    Disconnected { components: usize },
    DuplicateEdge { check: usize, var: usize },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::IsolatedCheck(c) => write!(f, "check {c} has no edges"),
            Issue::IsolatedVar(v) => write!(f, "variable {v} has no edges"),
            Issue::Disconnected { components } => {
                write!(f, "graph splits into {components} components")
            }
            Issue::DuplicateEdge { check, var } => {
                write!(f, "duplicate edge ({check}, {var})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub check_degrees: Vec<usize>,
    pub var_degrees: Vec<usize>,
    pub components: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn is_connected(&self) -> bool {
        self.components == 1
    }
}

/// Exact design rate `(n_v - n_c) / (n_v - |punctured|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignRate {
    pub numerator: i64,
    pub denominator: i64,
}

impl DesignRate {
    pub fn of(p: &Protograph) -> Result<Self> {
        let transmitted = p.num_vars as i64 - p.punctured.len() as i64;
        if transmitted <= 0 {
            return Err(Error::NonPositiveLength);
        }
        Ok(Self::reduced(
            p.num_vars as i64 - p.num_checks as i64,
            transmitted,
        ))
    }

    pub fn reduced(numerator: i64, denominator: i64) -> Self {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(numerator, denominator).max(1);
        DesignRate {
            numerator: numerator / g,
            denominator: denominator / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for DesignRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Incremental construction with multiplicity merging.
#[derive(Debug, Clone, Default)]
pub struct ProtographBuilder {
    name: String,
    num_checks: usize,
    num_vars: usize,
    edges: BTreeMap<(usize, usize), u32>,
    punctured: BTreeSet<usize>,
    positions: BTreeMap<usize, Position>,
}

impl ProtographBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ProtographBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Appends `n` check classes and returns the first new index.
    pub fn add_checks(&mut self, n: usize) -> usize {
        let first = self.num_checks;
        self.num_checks += n;
        first
    }

    /// Appends `n` variable classes and returns the first new index.
    pub fn add_vars(&mut self, n: usize) -> usize {
        let first = self.num_vars;
        self.num_vars += n;
        first
    }

    pub fn add_edge(&mut self, check: usize, var: usize, mult: u32) {
        debug_assert!(check < self.num_checks && var < self.num_vars);
        if mult > 0 {
            *self.edges.entry((check, var)).or_insert(0) += mult;
        }
    }

    pub fn puncture(&mut self, var: usize) {
        self.punctured.insert(var);
    }

    pub fn set_position(&mut self, var: usize, pos: Position) {
        self.positions.insert(var, pos);
    }

    pub fn check_degree(&self, check: usize) -> usize {
        self.edges
            .iter()
            .filter(|((c, _), _)| *c == check)
            .map(|(_, &m)| m as usize)
            .sum()
    }

    pub fn var_degree(&self, var: usize) -> usize {
        self.edges
            .iter()
            .filter(|((_, v), _)| *v == var)
            .map(|(_, &m)| m as usize)
            .sum()
    }

    pub fn build(self) -> Protograph {
        Protograph {
            name: self.name,
            num_checks: self.num_checks,
            num_vars: self.num_vars,
            edges: self
                .edges
                .into_iter()
                .map(|((check, var), mult)| ProtoEdge { check, var, mult })
                .collect(),
            punctured: self.punctured,
            positions: self.positions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(check: usize, var: usize, mult: u32) -> ProtoEdge {
        ProtoEdge { check, var, mult }
    }

    #[test]
    fn rejects_duplicates_and_zero_multiplicity() {
        let dup = Protograph::new("d", 1, 2, [edge(0, 0, 1), edge(0, 0, 2)], [], []);
        assert!(matches!(dup, Err(Error::InvalidProtograph(_))));
        let zero = Protograph::new("z", 1, 2, [edge(0, 1, 0)], [], []);
        assert!(matches!(zero, Err(Error::InvalidProtograph(_))));
        let range = Protograph::new("r", 1, 2, [edge(1, 0, 1)], [], []);
        assert!(matches!(range, Err(Error::InvalidProtograph(_))));
    }

    #[test]
    fn isolated_check_is_reported() {
        let p = Protograph::new("iso", 2, 2, [edge(0, 0, 2), edge(0, 1, 2)], [], []).unwrap();
        let report = p.validate();
        assert!(!report.is_ok());
        assert!(report.issues.contains(&Issue::IsolatedCheck(1)));
    }

    #[test]
    fn rate_counts_punctured_variables() {
        let p = Protograph::new(
            "punct",
            1,
            3,
            [edge(0, 0, 1), edge(0, 1, 1), edge(0, 2, 1)],
            [2],
            [],
        )
        .unwrap();
        let r = p.design_rate().unwrap();
        assert_eq!((r.numerator, r.denominator), (1, 1));
        let all = Protograph::new("all", 1, 1, [edge(0, 0, 1)], [0], []).unwrap();
        assert_eq!(all.design_rate(), Err(Error::NonPositiveLength));
    }

    #[test]
    fn builder_merges_parallel_edges() {
        let mut b = ProtographBuilder::new("m");
        let c = b.add_checks(1);
        let v = b.add_vars(1);
        b.add_edge(c, v, 1);
        b.add_edge(c, v, 2);
        let p = b.build();
        assert_eq!(p.multiplicity(0, 0), 3);
        assert_eq!(p.edge_instances().len(), 3);
    }
}
