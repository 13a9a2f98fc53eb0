//! Belief propagation on a lifted parity-check matrix: a peeling decoder for
//! the erasure channel and flooding sum-product for soft inputs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::lift::SparseParityCheck;

/// Outcome of peeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelOutcome {
    /// Columns still erased at the fixpoint, ascending.
    pub residual: Vec<usize>,
    /// Number of peeling rounds (checks of degree one processed in waves).
    pub rounds: usize,
}

impl PeelOutcome {
    pub fn success(&self) -> bool {
        self.residual.is_empty()
    }
}

/// Peels erasures through checks with exactly one erased neighbour.
/// `erased[c]` marks column `c` as erased.
pub fn decode_bec(h: &SparseParityCheck, erased: &[bool]) -> PeelOutcome {
    peel(h, erased, |_| 0)
}

/// Peeling with the order inside each wave drawn from `rng`. The residual
/// set does not depend on the order.
pub fn decode_bec_shuffled<R: Rng>(h: &SparseParityCheck, erased: &[bool], rng: &mut R) -> PeelOutcome {
    peel(h, erased, |len| rng.random_range(0..len))
}

fn peel(h: &SparseParityCheck, erased: &[bool], mut pick: impl FnMut(usize) -> usize) -> PeelOutcome {
    assert_eq!(erased.len(), h.n());
    let mut erased = erased.to_vec();
    let mut count: Vec<u32> = h
        .rows()
        .iter()
        .map(|row| row.iter().filter(|&&c| erased[c as usize]).count() as u32)
        .collect();
    let mut wave: Vec<usize> = (0..h.m()).filter(|&r| count[r] == 1).collect();
    let mut rounds = 0;
    while !wave.is_empty() {
        rounds += 1;
        let mut next = Vec::new();
        while !wave.is_empty() {
            let r = wave.swap_remove(pick(wave.len()));
            if count[r] != 1 {
                continue;
            }
            let col = h.row(r).iter().map(|&c| c as usize).find(|&c| erased[c]).unwrap();
            erased[col] = false;
            for &r2 in h.col(col) {
                let r2 = r2 as usize;
                count[r2] -= 1;
                if count[r2] == 1 {
                    next.push(r2);
                }
            }
        }
        wave = next;
    }
    PeelOutcome {
        residual: (0..h.n()).filter(|&c| erased[c]).collect(),
        rounds,
    }
}

/// Result of one sum-product run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftOutcome {
    /// Hard decisions, one per column.
    pub decision: Vec<u8>,
    /// Iterations performed; 0 if the channel decisions already satisfy
    /// every check.
    pub iterations: usize,
    /// Whether the decision has zero syndrome.
    pub codeword: bool,
}

// Message magnitudes are clipped to this value.
const LLR_CLIP: f64 = 30.0;

/// `phi(x) = -ln tanh(x/2)`, its own inverse on `x > 0`.
///
/// Above `PHI_LO` the function is close to `2 e^-x` and is tabulated directly,
/// so linear interpolation keeps a relative error near `step^2 / 8`. Below, the
/// smooth part `phi(x) + ln x` is tabulated instead and one log is taken.
#[derive(Debug, Clone)]
struct PhiTable {
    high: Vec<f64>,
    low: Vec<f64>,
}

const PHI_LO: f64 = 0.5;
const PHI_SCALE: f64 = 128.0;

fn phi_exact(x: f64) -> f64 {
    if x < 1e-12 {
        return LLR_CLIP;
    }
    let e = libm::exp(-x);
    libm::log((1.0 + e) / (1.0 - e))
}

fn smooth_part(x: f64) -> f64 {
    if x == 0.0 {
        core::f64::consts::LN_2
    } else {
        phi_exact(x) + libm::log(x)
    }
}

#[inline]
fn interpolate(table: &[f64], t: f64) -> f64 {
    let i = t as usize;
    let f = t - i as f64;
    table[i] + f * (table[i + 1] - table[i])
}

impl PhiTable {
    fn new() -> Self {
        let count = ((LLR_CLIP - PHI_LO) * PHI_SCALE) as usize + 2;
        let high = (0..count).map(|i| phi_exact(PHI_LO + i as f64 / PHI_SCALE)).collect();
        let count = (PHI_LO * PHI_SCALE) as usize + 2;
        let low = (0..count).map(|i| smooth_part(i as f64 / PHI_SCALE)).collect();
        PhiTable { high, low }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        if x < PHI_LO {
            if x < 1e-12 {
                return LLR_CLIP;
            }
            // Single precision is plenty here: phi(x) > 1.4 on this branch.
            return (interpolate(&self.low, x * PHI_SCALE) - libm::logf(x as f32) as f64).min(LLR_CLIP);
        }
        let t = (x - PHI_LO) * PHI_SCALE;
        if t as usize + 1 >= self.high.len() {
            return 0.0;
        }
        interpolate(&self.high, t)
    }
}

/// Flooding sum-product decoder with reusable message buffers.
#[derive(Debug, Clone)]
pub struct SumProduct<'h> {
    h: &'h SparseParityCheck,
    /// For each column, the edge ids (row-major positions) of its entries.
    col_edges: Vec<Vec<u32>>,
    row_start: Vec<usize>,
    edge_col: Vec<u32>,
    to_check: Vec<f64>,
    to_var: Vec<f64>,
    phi_buf: Vec<f64>,
    phi: PhiTable,
    max_iters: usize,
}

impl<'h> SumProduct<'h> {
    pub fn new(h: &'h SparseParityCheck, max_iters: usize) -> Self {
        let mut row_start = Vec::with_capacity(h.m() + 1);
        let mut edge_col = Vec::with_capacity(h.num_edges());
        let mut col_edges = vec![Vec::new(); h.n()];
        row_start.push(0);
        for row in h.rows() {
            for &c in row {
                col_edges[c as usize].push(edge_col.len() as u32);
                edge_col.push(c);
            }
            row_start.push(edge_col.len());
        }
        let e = edge_col.len();
        SumProduct {
            h,
            col_edges,
            row_start,
            edge_col,
            to_check: vec![0.0; e],
            to_var: vec![0.0; e],
            phi_buf: Vec::new(),
            phi: PhiTable::new(),
            max_iters,
        }
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    fn syndrome_ok(&self, decision: &[u8]) -> bool {
        (0..self.h.m()).all(|r| {
            self.edge_col[self.row_start[r]..self.row_start[r + 1]]
                .iter()
                .fold(0u8, |acc, &c| acc ^ decision[c as usize])
                == 0
        })
    }

    /// Decodes channel LLRs (positive favours bit 0).
    pub fn decode(&mut self, llr: &[f64]) -> SoftOutcome {
        let h = self.h;
        assert_eq!(llr.len(), h.n());
        let mut decision: Vec<u8> = llr.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.syndrome_ok(&decision) {
            return SoftOutcome { decision, iterations: 0, codeword: true };
        }
        for (c, edges) in self.col_edges.iter().enumerate() {
            let l = llr[c].clamp(-LLR_CLIP, LLR_CLIP);
            for &e in edges {
                self.to_check[e as usize] = l;
            }
        }
        for it in 1..=self.max_iters {
            // Check update in the phi domain: magnitudes add as phi values,
            // signs multiply.
            for r in 0..h.m() {
                let span = self.row_start[r]..self.row_start[r + 1];
                self.phi_buf.clear();
                let mut total = 0.0;
                let mut negative = false;
                for e in span.clone() {
                    let m = self.to_check[e];
                    negative ^= m < 0.0;
                    let f = self.phi.eval(m.abs());
                    total += f;
                    self.phi_buf.push(f);
                }
                for (i, e) in span.enumerate() {
                    let mag = self.phi.eval((total - self.phi_buf[i]).max(0.0)).min(LLR_CLIP);
                    let flip = negative ^ (self.to_check[e] < 0.0);
                    self.to_var[e] = if flip { -mag } else { mag };
                }
            }
            // Variable update and decisions.
            for (c, edges) in self.col_edges.iter().enumerate() {
                let total = llr[c] + edges.iter().map(|&e| self.to_var[e as usize]).sum::<f64>();
                decision[c] = u8::from(total < 0.0);
                for &e in edges {
                    let e = e as usize;
                    self.to_check[e] = (total - self.to_var[e]).clamp(-LLR_CLIP, LLR_CLIP);
                }
            }
            if self.syndrome_ok(&decision) {
                return SoftOutcome { decision, iterations: it, codeword: true };
            }
        }
        SoftOutcome {
            decision,
            iterations: self.max_iters,
            codeword: false,
        }
    }
}

/// One-shot sum-product decode.
pub fn decode_awgn(h: &SparseParityCheck, llr: &[f64], max_iters: usize) -> SoftOutcome {
    SumProduct::new(h, max_iters).decode(llr)
}
