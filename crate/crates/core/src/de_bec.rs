//! Protograph density evolution on the binary erasure channel.
//!
//! Messages are erasure probabilities per directed edge instance. One
//! iteration updates every check-to-variable message from the previous
//! variable-to-check messages, then every variable-to-check message:
//!
//! ```text
//! q_kj = 1 - prod_{j' in V(k) \ j} (1 - p_j'k)
//! p_jk = eps_j * prod_{k' in C(j) \ k} q_k'j
//! Pb(j) = eps_j * prod_{k in C(j)} q_kj
//! ```
//!
//! Parallel edges are separate instances, so a message never excludes its
//! twin. Punctured variables see a channel erasure probability of one.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{exclusive_products, EdgeIndex};
use crate::protograph::Position;
use crate::{Error, Protograph, Result};

/// Message and bit erasure probabilities after `iteration` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct ErasureDeState {
    /// Check-to-variable erasure probability per edge instance.
    pub q: Vec<f64>,
    /// Variable-to-check erasure probability per edge instance.
    pub p: Vec<f64>,
    /// Bit erasure probability per variable class.
    pub pb: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecDeConfig {
    /// Convergence target for the largest bit erasure probability.
    pub target_pb: f64,
    pub max_iters: usize,
    /// A run stops as stalled once no bit erasure probability improves by
    /// this much in one iteration.
    pub stall: f64,
    /// Check that every message is non-increasing at every step.
    pub audit_monotone: bool,
}

impl Default for BecDeConfig {
    fn default() -> Self {
        BecDeConfig {
            target_pb: 1e-6,
            max_iters: 100_000,
            stall: 1e-12,
            audit_monotone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeRunResult {
    pub converged: bool,
    pub iterations: usize,
    pub max_pb_final: f64,
    /// `false` if the audit saw any message increase (only meaningful when
    /// `audit_monotone` was set).
    pub monotone: bool,
}

/// Density evolution engine bound to one protograph.
#[derive(Debug, Clone)]
pub struct BecDe {
    index: EdgeIndex,
    punctured: Vec<bool>,
    scratch_len: usize,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    Ok(())
}

impl BecDe {
    pub fn new(p: &Protograph) -> Self {
        let index = EdgeIndex::new(p);
        let scratch_len = (0..index.num_checks())
            .map(|c| index.check_edges(c).len())
            .chain((0..index.num_vars()).map(|v| index.var_edges(v).len()))
            .max()
            .unwrap_or(0);
        BecDe {
            punctured: (0..p.num_vars()).map(|v| p.is_punctured(v)).collect(),
            index,
            scratch_len,
        }
    }

    pub fn index(&self) -> &EdgeIndex {
        &self.index
    }

    pub fn channel(&self, var: usize, eps: f64) -> f64 {
        if self.punctured[var] {
            1.0
        } else {
            eps
        }
    }

    /// Iteration-0 state: every variable-to-check message equals the channel
    /// erasure probability.
    pub fn initial_state(&self, eps: f64) -> Result<ErasureDeState> {
        check_eps(eps)?;
        let p = self
            .index
            .edges
            .iter()
            .map(|&(_, v)| self.channel(v, eps))
            .collect();
        let pb = (0..self.index.num_vars()).map(|v| self.channel(v, eps)).collect();
        Ok(ErasureDeState {
            q: vec![1.0; self.index.num_edges()],
            p,
            pb,
            iteration: 0,
        })
    }

    /// Updates all check nodes from `state.p` (writes `state.q`).
    pub fn update_check(&self, c: usize, state: &mut ErasureDeState, buf: &mut [f64], out: &mut [f64]) {
        let range = self.index.check_edges(c);
        let d = range.len();
        for (i, e) in range.clone().enumerate() {
            buf[i] = 1.0 - state.p[e];
        }
        exclusive_products(&buf[..d], &mut out[..d]);
        for (i, e) in range.enumerate() {
            state.q[e] = 1.0 - out[i];
        }
    }

    /// Updates one variable from `state.q` (writes its `p` messages and `pb`).
    pub fn update_var(&self, v: usize, eps: f64, state: &mut ErasureDeState, buf: &mut [f64], out: &mut [f64]) {
        let ch = self.channel(v, eps);
        let edges = self.index.var_edges(v);
        let d = edges.len();
        for (i, &e) in edges.iter().enumerate() {
            buf[i] = state.q[e];
        }
        exclusive_products(&buf[..d], &mut out[..d]);
        for (i, &e) in edges.iter().enumerate() {
            state.p[e] = ch * out[i];
        }
        state.pb[v] = ch * buf[..d].iter().product::<f64>();
    }

    pub(crate) fn scratch(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.scratch_len], vec![0.0; self.scratch_len])
    }

    /// One full iteration (all checks, then all variables).
    pub fn step(&self, state: &mut ErasureDeState, eps: f64) -> Result<()> {
        check_eps(eps)?;
        let (mut buf, mut out) = self.scratch();
        for c in 0..self.index.num_checks() {
            self.update_check(c, state, &mut buf, &mut out);
        }
        for v in 0..self.index.num_vars() {
            self.update_var(v, eps, state, &mut buf, &mut out);
        }
        state.iteration += 1;
        Ok(())
    }

    /// Bit erasure probabilities from the current check messages.
    pub fn bit_erasure(&self, state: &ErasureDeState, eps: f64) -> Vec<f64> {
        (0..self.index.num_vars())
            .map(|v| {
                let ch = self.channel(v, eps);
                ch * self
                    .index
                    .var_edges(v)
                    .iter()
                    .map(|&e| state.q[e])
                    .product::<f64>()
            })
            .collect()
    }

    /// Iterates until the largest bit erasure probability reaches the target,
    /// the run stalls, or the iteration budget runs out. `observe` sees the
    /// state after every iteration.
    pub fn run_with(
        &self,
        eps: f64,
        cfg: &BecDeConfig,
        mut observe: impl FnMut(&ErasureDeState),
    ) -> Result<DeRunResult> {
        let mut state = self.initial_state(eps)?;
        let mut prev = state.clone();
        let mut monotone = true;
        let mut max_pb = state.pb.iter().cloned().fold(0.0, f64::max);
        while state.iteration < cfg.max_iters {
            if cfg.audit_monotone {
                prev.clone_from(&state);
            } else {
                prev.pb.clone_from(&state.pb);
            }
            self.step(&mut state, eps)?;
            observe(&state);
            if cfg.audit_monotone && state.iteration > 1 {
                let up = |a: &[f64], b: &[f64]| a.iter().zip(b).any(|(new, old)| new > old);
                if up(&state.q, &prev.q) || up(&state.p, &prev.p) || up(&state.pb, &prev.pb) {
                    monotone = false;
                }
            }
            max_pb = state.pb.iter().cloned().fold(0.0, f64::max);
            if max_pb <= cfg.target_pb {
                return Ok(DeRunResult {
                    converged: true,
                    iterations: state.iteration,
                    max_pb_final: max_pb,
                    monotone,
                });
            }
            let improvement = state
                .pb
                .iter()
                .zip(&prev.pb)
                .map(|(new, old)| old - new)
                .fold(f64::NEG_INFINITY, f64::max);
            if improvement < cfg.stall {
                break;
            }
        }
        Ok(DeRunResult {
            converged: false,
            iterations: state.iteration,
            max_pb_final: max_pb,
            monotone,
        })
    }

    pub fn run(&self, eps: f64, cfg: &BecDeConfig) -> Result<DeRunResult> {
        self.run_with(eps, cfg, |_| {})
    }

    pub fn converges(&self, eps: f64, cfg: &BecDeConfig) -> bool {
        self.run(eps, cfg).map(|r| r.converged).unwrap_or(false)
    }
}

/// One density evolution iteration on a fresh engine.
pub fn de_step(p: &Protograph, state: &ErasureDeState, eps: f64) -> Result<ErasureDeState> {
    let mut next = state.clone();
    BecDe::new(p).step(&mut next, eps)?;
    Ok(next)
}

pub fn run_de(p: &Protograph, eps: f64, cfg: &BecDeConfig) -> Result<DeRunResult> {
    BecDe::new(p).run(eps, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BecThreshold {
    pub epsilon_star: f64,
    /// Largest probed erasure probability that converged.
    pub lower: f64,
    /// Smallest probed erasure probability that did not converge.
    pub upper: f64,
    pub tol: f64,
    /// Iterations used by the converging run at `lower`.
    pub iterations: usize,
    pub probes: usize,
    /// Spot checks below `lower` converged and above `upper` did not.
    pub monotone_audit: bool,
}

/// Bisection on the convergence predicate over `[0, 1]`; returns the midpoint
/// of the final bracket.
pub fn threshold_bec(p: &Protograph, tol: f64, cfg: &BecDeConfig) -> BecThreshold {
    let de = BecDe::new(p);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut iterations = 1;
    let mut probes = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        probes += 1;
        match de.run(mid, cfg) {
            Ok(r) if r.converged => {
                lo = mid;
                iterations = r.iterations;
            }
            _ => hi = mid,
        }
    }
    let monotone_audit = [0.5, 0.9].iter().all(|&f| de.converges(lo * f, cfg))
        && [0.1, 0.5].iter().all(|&f| !de.converges(hi + (1.0 - hi) * f, cfg));
    BecThreshold {
        epsilon_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        tol,
        iterations,
        probes,
        monotone_audit,
    }
}

/// Mean bit erasure probability over the variables at one chain position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub chain: u32,
    pub position: u32,
    pub mean_pb: f64,
}

/// Per-position bit erasure probabilities at the requested iterations.
pub fn de_trace(p: &Protograph, eps: f64, iterations: &[usize]) -> Result<Vec<TraceRow>> {
    let mut groups: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
    for v in 0..p.num_vars() {
        let pos = p.position(v).ok_or(Error::MissingPositions(v))?;
        groups.entry(pos).or_default().push(v);
    }
    let mut wanted: Vec<usize> = iterations.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let de = BecDe::new(p);
    let mut state = de.initial_state(eps)?;
    let mut rows = Vec::new();
    for &it in &wanted {
        while state.iteration < it {
            de.step(&mut state, eps)?;
        }
        for (pos, vars) in &groups {
            let mean = vars.iter().map(|&v| state.pb[v]).sum::<f64>() / vars.len() as f64;
            rows.push(TraceRow {
                iteration: it,
                chain: pos.chain,
                position: pos.index,
                mean_pb: mean,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{build_chain, build_uncoupled};
    use crate::ProtoEdge;

    #[test]
    fn zero_erasure_clears_everything() {
        let p = build_chain(3, 6, 8).unwrap();
        let de = BecDe::new(&p);
        let mut s = de.initial_state(0.0).unwrap();
        de.step(&mut s, 0.0).unwrap();
        assert!(s.q.iter().chain(&s.p).chain(&s.pb).all(|&x| x == 0.0));
        let r = de.run(0.0, &BecDeConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn full_erasure_is_a_fixed_point() {
        let p = build_uncoupled(3, 6).unwrap();
        let de = BecDe::new(&p);
        let mut s = de.initial_state(1.0).unwrap();
        for _ in 0..5 {
            de.step(&mut s, 1.0).unwrap();
        }
        assert!(s.p.iter().all(|&x| x == 1.0));
        assert!(!de.run(1.0, &BecDeConfig::default()).unwrap().converged);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let p = build_uncoupled(3, 6).unwrap();
        let de = BecDe::new(&p);
        assert_eq!(de.initial_state(1.5), Err(Error::InvalidProbability(1.5)));
        let mut s = de.initial_state(0.3).unwrap();
        assert!(de.step(&mut s, -0.1).is_err());
    }

    #[test]
    fn degree_one_check_sends_certainty() {
        let p = Protograph::new(
            "leaf",
            2,
            2,
            [
                ProtoEdge { check: 0, var: 0, mult: 1 },
                ProtoEdge { check: 1, var: 0, mult: 1 },
                ProtoEdge { check: 1, var: 1, mult: 2 },
            ],
            [],
            [],
        )
        .unwrap();
        let de = BecDe::new(&p);
        let mut s = de.initial_state(0.7).unwrap();
        de.step(&mut s, 0.7).unwrap();
        assert_eq!(s.q[0], 0.0);
    }

    #[test]
    fn uncoupled_stalls_just_below_threshold() {
        let p = build_uncoupled(3, 6).unwrap();
        let de = BecDe::new(&p);
        let eps = 0.4294;
        let mut s = de.initial_state(eps).unwrap();
        let mut last = eps;
        for _ in 0..10 {
            de.step(&mut s, eps).unwrap();
            let now = s.p[0];
            assert!(now < last);
            assert!(now > 1e-2);
            last = now;
        }
    }

    #[test]
    fn matches_hand_recursion_on_regular_block() {
        // (3,6) block: x_{i} = eps (1 - (1 - x_{i-1})^5)^2
        let p = build_uncoupled(3, 6).unwrap();
        let de = BecDe::new(&p);
        let eps = 0.4;
        let mut s = de.initial_state(eps).unwrap();
        let mut x: f64 = eps;
        for _ in 0..20 {
            de.step(&mut s, eps).unwrap();
            x = eps * (1.0 - (1.0 - x).powi(5)).powi(2);
            for &pe in &s.p {
                assert!((pe - x).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trace_needs_positions() {
        let p = Protograph::new("bare", 1, 2, [ProtoEdge { check: 0, var: 0, mult: 1 }, ProtoEdge { check: 0, var: 1, mult: 1 }], [], []).unwrap();
        assert_eq!(de_trace(&p, 0.3, &[1]), Err(Error::MissingPositions(0)));
        let c = build_chain(3, 6, 5).unwrap();
        let rows = de_trace(&c, 0.0, &[1]).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.mean_pb == 0.0));
    }
}
