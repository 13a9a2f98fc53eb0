//! Lifting a protograph to a binary parity-check matrix.
//!
//! Every edge instance (a protograph edge of multiplicity `m` contributes `m`
//! instances) becomes an `M x M` permutation block. Circulant blocks are the
//! default; fully random permutations are available too. With `girth6` set,
//! the lift is rejected or repaired until no two columns share two rows.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Protograph, Result};

/// How permutation blocks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Permutations {
    /// Cyclic shifts of the identity (quasi-cyclic codes).
    #[default]
    Circulant,
    /// Uniformly random permutations.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftConfig {
    pub lift: usize,
    pub seed: u64,
    pub girth6: bool,
    pub permutations: Permutations,
    /// Restarts (circulant) or repair rounds (random) before giving up.
    pub attempts: usize,
}

impl LiftConfig {
    pub fn new(lift: usize, seed: u64, girth6: bool) -> Self {
        LiftConfig {
            lift,
            seed,
            girth6,
            permutations: Permutations::Circulant,
            attempts: 200,
        }
    }
}

/// Sparse binary parity-check matrix with row and column adjacency.
///
/// Column `v * M + i` is copy `i` of variable class `v`; row `c * M + i` is
/// copy `i` of check class `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    n: usize,
    m: usize,
    lift: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
    punctured: Vec<bool>,
    source: String,
    seed: u64,
}

impl SparseParityCheck {
    /// Matrix from explicit row lists (column indices per row).
    pub fn from_rows(n: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidProtograph(format!("row {r} repeats a column")));
            }
            for &c in row.iter() {
                let c = c as usize;
                if c >= n {
                    return Err(Error::InvalidProtograph(format!("row {r} names column {c} >= {n}")));
                }
                cols[c].push(r as u32);
            }
        }
        Ok(SparseParityCheck {
            n,
            m: rows.len(),
            lift: 1,
            rows,
            cols,
            punctured: vec![false; n],
            source: String::new(),
            seed: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lift(&self) -> usize {
        self.lift
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_punctured(&self, col: usize) -> bool {
        self.punctured[col]
    }

    pub fn transmitted(&self) -> usize {
        self.punctured.iter().filter(|&&p| !p).count()
    }

    /// Protograph name the matrix was lifted from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whether `word` satisfies every parity check.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ word[c as usize]) & 1 == 0)
    }

    /// Number of column pairs sharing two or more rows (each such pair closes
    /// a 4-cycle).
    pub fn four_cycle_pairs(&self) -> usize {
        self.shared_pairs().len()
    }

    /// Column pairs that share at least two rows, as `(a, b)` with `a < b`.
    pub fn shared_pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs = Vec::new();
        for row in &self.rows {
            for (i, &a) in row.iter().enumerate() {
                for &b in &row[i + 1..] {
                    pairs.push((a.min(b), a.max(b)));
                }
            }
        }
        pairs.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let mut j = i + 1;
            while j < pairs.len() && pairs[j] == pairs[i] {
                j += 1;
            }
            if j - i >= 2 {
                out.push(pairs[i]);
            }
            i = j;
        }
        out
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        let words = self.n.div_ceil(64);
        let mut mat: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for &c in row {
                    bits[c as usize / 64] ^= 1 << (c % 64);
                }
                bits
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.n {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..mat.len()).find(|&r| mat[r][w] & b != 0) else {
                continue;
            };
            mat.swap(rank, p);
            let pivot = mat[rank].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for (x, y) in row[w..].iter_mut().zip(&pivot[w..]) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Actual code rate `1 - rank / n` over transmitted bits.
    pub fn rate(&self) -> f64 {
        let k = self.n - self.rank();
        k as f64 / self.transmitted() as f64
    }
}

/// One edge instance of the protograph.
#[derive(Debug, Clone, Copy)]
struct Instance {
    check: usize,
    var: usize,
}

fn instances(p: &Protograph) -> Vec<Instance> {
    p.edge_instances()
        .into_iter()
        .map(|(check, var)| Instance { check, var })
        .collect()
}

/// Lift `p` by `cfg.lift`. Deterministic in `(p, cfg)`.
pub fn lift(p: &Protograph, cfg: &LiftConfig) -> Result<SparseParityCheck> {
    if cfg.lift == 0 {
        return Err(Error::InvalidProtograph("lift factor must be at least 1".into()));
    }
    let max_mult = p.edges().iter().map(|e| e.mult as usize).max().unwrap_or(0);
    if max_mult > cfg.lift {
        return Err(Error::InvalidProtograph(format!(
            "multiplicity {max_mult} exceeds lift factor {}",
            cfg.lift
        )));
    }
    let inst = instances(p);
    let perms = match cfg.permutations {
        Permutations::Circulant => circulant_shifts(p, &inst, cfg)?
            .into_iter()
            .map(|s| (0..cfg.lift).map(|x| ((x + s) % cfg.lift) as u32).collect())
            .collect(),
        Permutations::Random => random_perms(p, &inst, cfg)?,
    };
    Ok(assemble(p, &inst, &perms, cfg))
}

/// Builds the matrix: instance `e` connects column `var*M + x` to row
/// `check*M + perm[e][x]`.
fn assemble(p: &Protograph, inst: &[Instance], perms: &[Vec<u32>], cfg: &LiftConfig) -> SparseParityCheck {
    let m_lift = cfg.lift;
    let n = p.num_vars() * m_lift;
    let m = p.num_checks() * m_lift;
    let mut rows = vec![Vec::new(); m];
    let mut cols = vec![Vec::new(); n];
    for (e, perm) in inst.iter().zip(perms) {
        for (x, &r) in perm.iter().enumerate() {
            let col = e.var * m_lift + x;
            let row = e.check * m_lift + r as usize;
            rows[row].push(col as u32);
            cols[col].push(row as u32);
        }
    }
    rows.iter_mut().for_each(|r| r.sort_unstable());
    cols.iter_mut().for_each(|c| c.sort_unstable());
    let punctured = (0..n).map(|c| p.is_punctured(c / m_lift)).collect();
    SparseParityCheck {
        n,
        m,
        lift: m_lift,
        rows,
        cols,
        punctured,
        source: p.name().into(),
        seed: cfg.seed,
    }
}

/// Greedy circulant assignment: each instance draws its shift uniformly from
/// the values that keep parallel instances disjoint and, with `girth6`, close
/// no 4-cycle with the shifts already placed. A dead end restarts on a fresh
/// stream.
fn circulant_shifts(p: &Protograph, inst: &[Instance], cfg: &LiftConfig) -> Result<Vec<usize>> {
    let m = cfg.lift;
    let mut at_var: Vec<Vec<usize>> = vec![Vec::new(); p.num_vars()];
    let mut at_check: Vec<Vec<usize>> = vec![Vec::new(); p.num_checks()];
    let mut last = (0, 0);
    for attempt in 0..cfg.attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt as u64);
        at_var.iter_mut().for_each(Vec::clear);
        at_check.iter_mut().for_each(Vec::clear);
        let mut shift = vec![0usize; inst.len()];
        let mut forbidden = vec![false; m];
        let mut ok = true;
        for (idx, e) in inst.iter().enumerate() {
            forbidden.iter_mut().for_each(|f| *f = false);
            for &o in &at_check[e.check] {
                if inst[o].var == e.var {
                    forbidden[shift[o]] = true;
                }
            }
            if cfg.girth6 {
                forbid_cycles(idx, e, inst, &shift, &at_var, &at_check, m, &mut forbidden);
            }
            let free = forbidden.iter().filter(|&&f| !f).count();
            if free == 0 {
                ok = false;
                last = (e.var * m, first_partner(e, inst, &at_check) * m);
                break;
            }
            let pick = rng.random_range(0..free);
            shift[idx] = (0..m).filter(|&s| !forbidden[s]).nth(pick).unwrap();
            at_var[e.var].push(idx);
            at_check[e.check].push(idx);
        }
        if ok {
            return Ok(shift);
        }
    }
    Err(Error::GirthBudget {
        attempts: cfg.attempts.max(1),
        col_a: last.0,
        col_b: last.1,
    })
}

fn first_partner(e: &Instance, inst: &[Instance], at_check: &[Vec<usize>]) -> usize {
    at_check[e.check].first().map_or(e.var, |&o| inst[o].var)
}

/// Marks every shift of the new instance `idx` that would close a 4-cycle.
///
/// With row = (col + shift) mod M, the path new -> e2 (same variable) -> e3
/// (same check as e2) -> e4 (back at the new check) closes when
/// `s1 - s2 + s3 - s4 = 0 (mod M)`, provided the two rows and the two columns
/// are distinct. The new instance may itself take the e3 role.
#[allow(clippy::too_many_arguments)]
fn forbid_cycles(
    idx: usize,
    e: &Instance,
    inst: &[Instance],
    shift: &[usize],
    at_var: &[Vec<usize>],
    at_check: &[Vec<usize>],
    m: usize,
    forbidden: &mut [bool],
) {
    let md = |x: isize| x.rem_euclid(m as isize) as usize;
    // Paths that use the new instance once.
    for &e2 in &at_var[e.var] {
        let c2 = inst[e2].check;
        let s2 = shift[e2] as isize;
        for &e3 in &at_check[c2] {
            let v2 = inst[e3].var;
            let s3 = shift[e3] as isize;
            if v2 == e.var && s2 == s3 {
                continue;
            }
            for &e4 in &at_check[e.check] {
                if inst[e4].var != v2 {
                    continue;
                }
                let s1 = md(s2 - s3 + shift[e4] as isize);
                if c2 == e.check && s1 as isize == s2 {
                    continue;
                }
                forbidden[s1] = true;
            }
        }
    }
    // Paths that use the new instance twice (as e1 and e3): then e2 and e4
    // are both at the new (check, variable) pair and 2*s1 = s2 + s4.
    let parallel: Vec<usize> = at_check[e.check]
        .iter()
        .copied()
        .filter(|&o| inst[o].var == e.var && o != idx)
        .collect();
    for &a in &parallel {
        for &b in &parallel {
            for s1 in 0..m {
                let (s2, s4) = (shift[a], shift[b]);
                if s2 != s1 && s4 != s1 && (2 * s1) % m == (s2 + s4) % m {
                    forbidden[s1] = true;
                }
            }
        }
    }
}

/// Random permutations, repaired by transpositions until parallel instances
/// are disjoint and, with `girth6`, no 4-cycles remain.
fn random_perms(p: &Protograph, inst: &[Instance], cfg: &LiftConfig) -> Result<Vec<Vec<u32>>> {
    let m = cfg.lift;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut perms: Vec<Vec<u32>> = inst
        .iter()
        .map(|_| {
            let mut v: Vec<u32> = (0..m as u32).collect();
            v.shuffle(&mut rng);
            v
        })
        .collect();
    let mut last = (0, 0);
    for _ in 0..cfg.attempts.max(1) {
        let h = assemble(p, inst, &perms, cfg);
        let mut bad: BTreeSet<(usize, usize)> = BTreeSet::new();
        // Coinciding parallel entries.
        for (a, ea) in inst.iter().enumerate() {
            for (b, eb) in inst.iter().enumerate().skip(a + 1) {
                if ea.check == eb.check && ea.var == eb.var {
                    for x in 0..m {
                        if perms[a][x] == perms[b][x] {
                            bad.insert((b, x));
                        }
                    }
                }
            }
        }
        if cfg.girth6 {
            for (a, b) in h.shared_pairs() {
                last = (a as usize, b as usize);
                let (vb, xb) = (b as usize / m, b as usize % m);
                // Move one entry of column b: pick the instance owning its
                // first row shared with column a.
                let rows_a = h.col(a as usize);
                if let Some(&r) = h.col(b as usize).iter().find(|r| rows_a.contains(r)) {
                    let c = r as usize / m;
                    let rl = r % m as u32;
                    if let Some(e) = (0..inst.len())
                        .find(|&e| inst[e].check == c && inst[e].var == vb && perms[e][xb] == rl)
                    {
                        bad.insert((e, xb));
                    }
                }
            }
        }
        if bad.is_empty() {
            return Ok(perms);
        }
        for (e, x) in bad {
            let y = rng.random_range(0..m);
            perms[e].swap(x, y);
        }
    }
    Err(Error::GirthBudget {
        attempts: cfg.attempts.max(1),
        col_a: last.0,
        col_b: last.1,
    })
}
