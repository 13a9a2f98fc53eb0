//! Selective node-update scheduling on erasure density evolution.
//!
//! Each sweep visits all checks, then all variables, in index order. A node
//! keeps its previously emitted messages whenever its update is suppressed:
//!
//! 1. a variable whose bit erasure probability is already below `pb_max`;
//! 2. a check none of whose variables was updated in the previous sweep, or a
//!    variable none of whose checks was updated earlier in the current sweep
//!    (at the start every node counts as freshly updated);
//! 3. a variable whose bit erasure probability would improve by a relative
//!    amount below `theta`.
//!
//! The complexity measure is the number of performed updates divided by the
//! number of nodes.

use alloc::vec;
use alloc::vec::Vec;

use crate::de_bec::{BecDe, ErasureDeState};
use crate::{Error, Protograph, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    /// Target bit erasure probability.
    pub pb_max: f64,
    /// Relative improvement below which a variable update is skipped.
    pub theta: f64,
    pub max_sweeps: usize,
    /// With `false` every node is updated in every sweep (plain flooding).
    pub suppress: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            pb_max: 1e-5,
            theta: 1e-2,
            max_sweeps: 10_000,
            suppress: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    /// Mean number of updates per node.
    pub i_eff: f64,
    pub total_updates: u64,
    pub check_updates: Vec<u64>,
    pub var_updates: Vec<u64>,
    pub sweeps: usize,
    pub converged: bool,
    pub max_pb: f64,
}

fn validate(eps: f64, cfg: &ScheduleConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    if !(cfg.pb_max > 0.0) || !(0.0..1.0).contains(&cfg.theta) {
        return Err(Error::InvalidProbability(cfg.pb_max.min(cfg.theta)));
    }
    Ok(())
}

/// Scheduled density evolution; `observe` sees the state after each sweep.
pub fn scheduled_de_with(
    p: &Protograph,
    eps: f64,
    cfg: &ScheduleConfig,
    mut observe: impl FnMut(&ErasureDeState),
) -> Result<ComplexityReport> {
    validate(eps, cfg)?;
    let de = BecDe::new(p);
    let idx = de.index();
    let (nc, nv) = (idx.num_checks(), idx.num_vars());
    let mut state = de.initial_state(eps)?;
    let (mut buf, mut out) = de.scratch();
    let mut check_updates = vec![0u64; nc];
    let mut var_updates = vec![0u64; nv];
    // nodes updated in the latest sweep; all fresh before the first one
    let mut var_fresh = vec![true; nv];
    let mut check_fresh = vec![true; nc];
    let converged = |pb: &[f64]| pb.iter().all(|&x| x < cfg.pb_max);
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps && !converged(&state.pb) {
        sweeps += 1;
        let mut performed = 0u64;
        for c in 0..nc {
            let active = !cfg.suppress || idx.check_edges(c).any(|e| var_fresh[idx.edges[e].1]);
            check_fresh[c] = active;
            if active {
                de.update_check(c, &mut state, &mut buf, &mut out);
                check_updates[c] += 1;
                performed += 1;
            }
        }
        for v in 0..nv {
            let mut active = true;
            if cfg.suppress {
                let old = state.pb[v];
                let edges = idx.var_edges(v);
                if old < cfg.pb_max || !edges.iter().any(|&e| check_fresh[idx.edges[e].0]) {
                    active = false;
                } else {
                    let new = de.channel(v, eps) * edges.iter().map(|&e| state.q[e]).product::<f64>();
                    let gain = if old > 0.0 { (old - new) / old } else { 0.0 };
                    active = gain >= cfg.theta;
                }
            }
            var_fresh[v] = active;
            if active {
                de.update_var(v, eps, &mut state, &mut buf, &mut out);
                var_updates[v] += 1;
                performed += 1;
            }
        }
        state.iteration += 1;
        observe(&state);
        if performed == 0 {
            break;
        }
    }
    let total_updates: u64 = check_updates.iter().chain(&var_updates).sum();
    Ok(ComplexityReport {
        i_eff: total_updates as f64 / (nc + nv) as f64,
        total_updates,
        check_updates,
        var_updates,
        sweeps,
        converged: converged(&state.pb),
        max_pb: state.pb.iter().cloned().fold(0.0, f64::max),
    })
}

pub fn scheduled_de(p: &Protograph, eps: f64, cfg: &ScheduleConfig) -> Result<ComplexityReport> {
    scheduled_de_with(p, eps, cfg, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityRow {
    pub epsilon: f64,
    pub i_eff: f64,
    pub converged: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexitySweep {
    pub rows: Vec<ComplexityRow>,
    /// Largest grid point at which the scheduled decoder converged.
    pub scheduled_threshold: Option<f64>,
}

impl ComplexitySweep {
    pub fn from_rows(rows: Vec<ComplexityRow>) -> Self {
        let scheduled_threshold = rows
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.epsilon)
            .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
        ComplexitySweep {
            rows,
            scheduled_threshold,
        }
    }
}

pub fn complexity_row(p: &Protograph, eps: f64, cfg: &ScheduleConfig) -> Result<ComplexityRow> {
    let r = scheduled_de(p, eps, cfg)?;
    Ok(ComplexityRow {
        epsilon: eps,
        i_eff: r.i_eff,
        converged: r.converged,
        sweeps: r.sweeps,
    })
}

/// One scheduled run per grid point.
pub fn complexity_sweep(p: &Protograph, grid: &[f64], cfg: &ScheduleConfig) -> Result<ComplexitySweep> {
    let rows = grid
        .iter()
        .map(|&e| complexity_row(p, e, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexitySweep::from_rows(rows))
}
