//! Edge-instance index shared by the density evolution engines.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::Protograph;

/// Parallel edges expanded into distinct instances, with compressed
/// adjacency lists on both sides.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    /// `(check, var)` per instance, ordered by check then var.
    pub edges: Vec<(usize, usize)>,
    check_ptr: Vec<usize>,
    var_ptr: Vec<usize>,
    var_list: Vec<usize>,
}

impl EdgeIndex {
    pub fn new(p: &Protograph) -> Self {
        let edges = p.edge_instances();
        let mut check_ptr = vec![0; p.num_checks() + 1];
        let mut var_ptr = vec![0; p.num_vars() + 1];
        for &(c, v) in &edges {
            check_ptr[c + 1] += 1;
            var_ptr[v + 1] += 1;
        }
        for i in 0..p.num_checks() {
            check_ptr[i + 1] += check_ptr[i];
        }
        for i in 0..p.num_vars() {
            var_ptr[i + 1] += var_ptr[i];
        }
        let mut fill = var_ptr.clone();
        let mut var_list = vec![0; edges.len()];
        for (e, &(_, v)) in edges.iter().enumerate() {
            var_list[fill[v]] = e;
            fill[v] += 1;
        }
        EdgeIndex {
            edges,
            check_ptr,
            var_ptr,
            var_list,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.var_ptr.len() - 1
    }

    /// Edge instances of check `c` form a contiguous range.
    pub fn check_edges(&self, c: usize) -> core::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_list[self.var_ptr[v]..self.var_ptr[v + 1]]
    }
}

/// Coarsest equitable partition of the protograph's nodes.
///
/// Two variables share a class when they agree on puncturing and, class by
/// class, have the same number of edge instances to checks; likewise for
/// checks. Messages of a flooding decoder then depend only on the pair of
/// classes at the ends of an edge, so density evolution can run on the
/// quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub var_class: Vec<usize>,
    pub check_class: Vec<usize>,
    /// One member of each variable class.
    pub var_reps: Vec<usize>,
    pub check_reps: Vec<usize>,
    /// Per variable class: `(check class, edge instances)` seen by any member.
    pub var_nbrs: Vec<Vec<(usize, usize)>>,
    pub check_nbrs: Vec<Vec<(usize, usize)>>,
}

fn signatures(
    own: &[usize],
    adj: &[Vec<(usize, usize)>],
    other: &[usize],
) -> Vec<(usize, Vec<(usize, usize)>)> {
    own.iter()
        .zip(adj)
        .map(|(&c, nbrs)| {
            let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
            for &(n, m) in nbrs {
                *tally.entry(other[n]).or_default() += m;
            }
            (c, tally.into_iter().collect())
        })
        .collect()
}

fn relabel<T: Ord + Clone>(sigs: &[T]) -> (Vec<usize>, usize) {
    let mut ids: BTreeMap<T, usize> = BTreeMap::new();
    for s in sigs {
        let next = ids.len();
        ids.entry(s.clone()).or_insert(next);
    }
    (sigs.iter().map(|s| ids[s]).collect(), ids.len())
}

impl Quotient {
    pub fn new(p: &Protograph) -> Self {
        let mut var_adj = vec![Vec::new(); p.num_vars()];
        let mut check_adj = vec![Vec::new(); p.num_checks()];
        for e in p.edges() {
            var_adj[e.var].push((e.check, e.mult as usize));
            check_adj[e.check].push((e.var, e.mult as usize));
        }
        let flags: Vec<bool> = (0..p.num_vars()).map(|v| p.is_punctured(v)).collect();
        let (mut vc, mut nv) = relabel(&flags);
        let (mut cc, mut nc) = (vec![0; p.num_checks()], usize::from(p.num_checks() > 0));
        loop {
            let (new_vc, new_nv) = relabel(&signatures(&vc, &var_adj, &cc));
            let (new_cc, new_nc) = relabel(&signatures(&cc, &check_adj, &new_vc));
            let stable = new_nv == nv && new_nc == nc;
            vc = new_vc;
            cc = new_cc;
            nv = new_nv;
            nc = new_nc;
            if stable {
                break;
            }
        }
        let reps = |classes: &[usize], n: usize| {
            let mut r = vec![usize::MAX; n];
            for (i, &c) in classes.iter().enumerate().rev() {
                r[c] = i;
            }
            r
        };
        let var_reps = reps(&vc, nv);
        let check_reps = reps(&cc, nc);
        let var_nbrs = var_reps
            .iter()
            .map(|&v| signatures(&[0], &var_adj[v..=v], &cc).remove(0).1)
            .collect();
        let check_nbrs = check_reps
            .iter()
            .map(|&c| signatures(&[0], &check_adj[c..=c], &vc).remove(0).1)
            .collect();
        Quotient {
            var_class: vc,
            check_class: cc,
            var_reps,
            check_reps,
            var_nbrs,
            check_nbrs,
        }
    }

    pub fn num_var_classes(&self) -> usize {
        self.var_reps.len()
    }

    pub fn num_check_classes(&self) -> usize {
        self.check_reps.len()
    }
}

/// For each `i`, the product of `vals` over all indices except `i`, computed
/// with prefix and suffix products (no division).
pub(crate) fn exclusive_products(vals: &[f64], out: &mut [f64]) {
    let n = vals.len();
    let mut acc = 1.0;
    for i in 0..n {
        out[i] = acc;
        acc *= vals[i];
    }
    let mut acc = 1.0;
    for i in (0..n).rev() {
        out[i] *= acc;
        acc *= vals[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_chain, build_loop, build_uncoupled, ConnectionStyle};

    #[test]
    fn parallel_edges_are_distinct_instances() {
        let p = build_uncoupled(3, 6).unwrap();
        let idx = EdgeIndex::new(&p);
        assert_eq!(idx.num_edges(), 6);
        assert_eq!(idx.check_edges(0), 0..6);
        assert_eq!(idx.var_edges(1), &[3, 4, 5]);
    }

    #[test]
    fn exclusive_products_skip_own_index() {
        let mut out = [0.0; 4];
        exclusive_products(&[2.0, 3.0, 0.0, 5.0], &mut out);
        assert_eq!(out, [0.0, 0.0, 30.0, 0.0]);
    }

    #[test]
    fn quotient_of_chain_folds_mirror_positions() {
        // positions t and L+1-t are equivalent, and so are the two classes at
        // each position
        let q = Quotient::new(&build_chain(3, 6, 8).unwrap());
        assert_eq!(q.num_var_classes(), 4);
        assert_eq!(q.num_check_classes(), 5);
        assert_eq!(q.var_class[0], q.var_class[15]);
        assert_eq!(q.var_class[0], q.var_class[1]);
        let uncoupled = Quotient::new(&build_uncoupled(3, 6).unwrap());
        assert_eq!(uncoupled.var_nbrs, vec![vec![(0, 3)]]);
        assert_eq!(uncoupled.check_nbrs, vec![vec![(0, 6)]]);
    }

    #[test]
    fn quotient_is_equitable() {
        let p = build_loop(3, 6, 12, None, ConnectionStyle::Full).unwrap();
        let q = Quotient::new(&p);
        let mut counts = vec![BTreeMap::new(); p.num_vars()];
        for e in p.edges() {
            *counts[e.var].entry(q.check_class[e.check]).or_insert(0) += e.mult as usize;
        }
        for v in 0..p.num_vars() {
            let got: Vec<(usize, usize)> = counts[v].clone().into_iter().collect();
            assert_eq!(got, q.var_nbrs[q.var_class[v]]);
        }
        assert!(q.num_var_classes() < p.num_vars());
    }
}
