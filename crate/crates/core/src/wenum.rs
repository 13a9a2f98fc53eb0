//! Asymptotic ensemble weight enumerators and minimum distance growth rates.
//!
//! For a lifting factor `M`, the ensemble-average number of codewords whose
//! weight fraction on variable node `v` is `δ_v` grows like
//! `exp(M · F(δ))` with
//!
//! ```text
//! F(δ) = Σ_checks a_c(δ on the check's edges) − Σ_vars (deg v − 1) · H(δ_v)
//! ```
//!
//! where `a_c` is the exponent of the number of ways to place the edge weights
//! of one check type so that every lifted copy has even parity. The spectral
//! shape `r(δ)` maximizes `F / n` over all `δ_v` that average to `δ`, and the
//! minimum distance growth rate is its first positive zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Protograph, Result};

/// Binary entropy in nats.
pub fn entropy_nats(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * libm::log(p) - (1.0 - p) * libm::log1p(-p)
}

fn ln_binom(m: u32, k: u32) -> f64 {
    let k = k.min(m - k);
    (0..k).map(|i| libm::log((m - i) as f64) - libm::log((i + 1) as f64)).sum()
}

/// One check type with its incident edges grouped by variable.
#[derive(Debug, Clone)]
struct CheckTerm {
    /// (variable, number of parallel edges)
    groups: Vec<(usize, u32)>,
    /// Every per-group count vector with even total, flattened.
    counts: Vec<u32>,
    log_weight: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct CheckSolve {
    value: f64,
    converged: bool,
}

impl CheckTerm {
    fn new(groups: Vec<(usize, u32)>) -> Self {
        let ng = groups.len();
        let mut counts = Vec::new();
        let mut log_weight = Vec::new();
        let mut cur = vec![0u32; ng];
        loop {
            if cur.iter().sum::<u32>() % 2 == 0 {
                counts.extend_from_slice(&cur);
                log_weight.push(cur.iter().zip(&groups).map(|(&n, &(_, m))| ln_binom(m, n)).sum());
            }
            let mut i = 0;
            while i < ng && cur[i] == groups[i].1 {
                cur[i] = 0;
                i += 1;
            }
            if i == ng {
                break;
            }
            cur[i] += 1;
        }
        CheckTerm {
            groups,
            counts,
            log_weight,
        }
    }

    fn num_configs(&self) -> usize {
        self.log_weight.len()
    }

    fn config(&self, c: usize) -> &[u32] {
        let ng = self.groups.len();
        &self.counts[c * ng..(c + 1) * ng]
    }

    /// Whether the weights lie in the parity polytope of the expanded edges.
    fn feasible(&self, delta: &[f64]) -> bool {
        let mut best = 0.0;
        let mut odd = false;
        let mut closest = f64::INFINITY;
        for (g, &(_, m)) in self.groups.iter().enumerate() {
            let d = delta[g];
            let (inside, outside) = (d - 1.0, -d);
            best += m as f64 * inside.max(outside);
            if d > 0.5 && m % 2 == 1 {
                odd = !odd;
            }
            closest = closest.min(libm::fabs(2.0 * d - 1.0));
        }
        if self.groups.is_empty() {
            return true;
        }
        if !odd {
            best -= closest;
        }
        best <= -1.0 + 1e-12
    }

    /// Minimizes the Legendre objective; `y` holds the log-activities of the
    /// free groups on entry (warm start) and on exit. When `curvature` is
    /// given it receives `diag(m) Cov⁻¹ diag(m)` over all groups (zero rows
    /// for groups pinned at 0 or 1), the negated Hessian of the value in `delta`.
    fn solve(&self, delta: &[f64], y: &mut [f64], curvature: Option<&mut [f64]>) -> CheckSolve {
        if !self.feasible(delta) {
            return CheckSolve {
                value: f64::NEG_INFINITY,
                converged: true,
            };
        }
        let ng = self.groups.len();
        let free: Vec<usize> = (0..ng).filter(|&g| delta[g] > 0.0 && delta[g] < 1.0).collect();
        let allowed: Vec<usize> = (0..self.num_configs())
            .filter(|&c| {
                let n = self.config(c);
                (0..ng).all(|g| {
                    if delta[g] <= 0.0 {
                        n[g] == 0
                    } else if delta[g] >= 1.0 {
                        n[g] == self.groups[g].1
                    } else {
                        true
                    }
                })
            })
            .collect();
        if allowed.is_empty() {
            return CheckSolve {
                value: f64::NEG_INFINITY,
                converged: true,
            };
        }
        let nf = free.len();
        let target: Vec<f64> = free.iter().map(|&g| self.groups[g].1 as f64 * delta[g]).collect();
        let mut yf: Vec<f64> = free.iter().map(|&g| y[g]).collect();

        // objective, and optionally mean and covariance of the free counts
        let eval = |yf: &[f64], moments: Option<(&mut [f64], &mut [f64])>| -> f64 {
            let expo = |c: usize| {
                let n = self.config(c);
                self.log_weight[c] + free.iter().zip(yf).map(|(&g, &t)| n[g] as f64 * t).sum::<f64>()
            };
            let peak = allowed.iter().map(|&c| expo(c)).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            if let Some((mean, cov)) = moments {
                mean.iter_mut().for_each(|x| *x = 0.0);
                cov.iter_mut().for_each(|x| *x = 0.0);
                for &c in &allowed {
                    let w = libm::exp(expo(c) - peak);
                    z += w;
                    let n = self.config(c);
                    for (i, &gi) in free.iter().enumerate() {
                        let ni = n[gi] as f64;
                        mean[i] += w * ni;
                        for (j, &gj) in free.iter().enumerate().take(i + 1) {
                            cov[i * nf + j] += w * ni * n[gj] as f64;
                        }
                    }
                }
                for m in mean.iter_mut() {
                    *m /= z;
                }
                for i in 0..nf {
                    for j in 0..=i {
                        let v = cov[i * nf + j] / z - mean[i] * mean[j];
                        cov[i * nf + j] = v;
                        cov[j * nf + i] = v;
                    }
                }
            } else {
                for &c in &allowed {
                    z += libm::exp(expo(c) - peak);
                }
            }
            peak + libm::log(z) - yf.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>()
        };

        let mut mean = vec![0.0; nf];
        let mut cov = vec![0.0; nf * nf];
        let mut value = eval(&yf, Some((&mut mean, &mut cov)));
        let mut converged = nf == 0;
        let mut step = vec![0.0; nf];
        let mut trial = vec![0.0; nf];
        for _ in 0..200 {
            let grad: Vec<f64> = mean.iter().zip(&target).map(|(a, b)| a - b).collect();
            if grad.iter().zip(&target).all(|(g, t)| libm::fabs(*g) <= 1e-10 * t) {
                converged = true;
                break;
            }
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            solve_damped(&cov, &neg, &mut step);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                for i in 0..nf {
                    trial[i] = yf[i] + t * step[i];
                }
                if trial == yf {
                    break;
                }
                let v = eval(&trial, None);
                if v <= value + 1e-4 * t * slope {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // no further progress is representable in floating point
                converged = grad.iter().zip(&target).all(|(g, t)| libm::fabs(*g) <= 1e-6 * t);
                break;
            }
            yf.copy_from_slice(&trial);
            value = eval(&yf, Some((&mut mean, &mut cov)));
        }
        for (i, &g) in free.iter().enumerate() {
            y[g] = yf[i];
        }
        if let Some(out) = curvature {
            out.iter_mut().for_each(|x| *x = 0.0);
            let mut col = vec![0.0; nf];
            let mut unit = vec![0.0; nf];
            for j in 0..nf {
                unit.iter_mut().for_each(|u| *u = 0.0);
                unit[j] = self.groups[free[j]].1 as f64;
                solve_damped(&cov, &unit, &mut col);
                for i in 0..nf {
                    out[free[i] * ng + free[j]] = self.groups[free[i]].1 as f64 * col[i];
                }
            }
        }
        CheckSolve { value, converged }
    }
}

/// Solves `a x = b` for symmetric positive semidefinite `a`, adding the
/// smallest diagonal shift that makes the Cholesky factorization succeed.
fn solve_damped(a: &[f64], b: &[f64], x: &mut [f64]) {
    let n = b.len();
    let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
    let mut shift = 0.0;
    let mut l = vec![0.0; n * n];
    while !cholesky(a, shift, &mut l, n) {
        shift = if shift == 0.0 { 1e-14 * trace.max(1e-300) } else { shift * 100.0 };
    }
    cholesky_solve(&l, n, b, x);
}

/// Lower factor of `a + shift I`; `false` if not positive definite.
fn cholesky(a: &[f64], shift: f64, l: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64], x: &mut [f64]) {
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (x[i] - s) / l[i * n + i];
    }
}

/// Exponent (nats per lifted copy) of the number of even-parity placements of
/// edge weights `fractions` on one check.
pub fn check_enumerator_rate(fractions: &[f64]) -> Result<f64> {
    if let Some(&bad) = fractions.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::InvalidProbability(bad));
    }
    let term = CheckTerm::new(fractions.iter().enumerate().map(|(i, _)| (i, 1)).collect());
    let mut y: Vec<f64> = fractions.iter().map(|&d| initial_activity(d)).collect();
    let s = term.solve(fractions, &mut y, None);
    if !s.converged {
        return Err(Error::Optimizer(format!("check minimization stalled at {fractions:?}")));
    }
    Ok(s.value)
}

fn initial_activity(d: f64) -> f64 {
    let d = d.clamp(1e-12, 1.0 - 1e-12);
    libm::log(d / (1.0 - d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConfig {
    /// Random starting points in addition to the uniform one.
    pub random_starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stationarity tolerance on the spread of per-variable gradients.
    pub tol: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            random_starts: 8,
            seed: 0x5eed,
            max_iters: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSample {
    pub delta: f64,
    /// Spectral shape value in bits per code bit.
    pub r_bits: f64,
    /// Whether the best start reached stationarity.
    pub converged: bool,
    pub iterations: usize,
    /// Gap between the best and worst start optimum, in bits.
    pub start_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRateCurve {
    pub samples: Vec<GrowthSample>,
    /// Smallest positive zero located on the sampled grid, if any.
    pub delta_min: Option<f64>,
    /// Number of protograph variables used as normalizer.
    pub n: usize,
}

/// The maximization problem for one protograph.
///
/// Variables joined by a degree-2 check always carry equal weight, so they
/// share one optimization variable ("group") and checks see groups, with
/// multiplicities summed over the group's members. Variables pinned at zero
/// weight are dropped from the problem, which can create new ties.
#[derive(Debug, Clone)]
pub struct SpectralShape {
    n: usize,
    degrees: Vec<usize>,
    /// Edges of every check as (variable, multiplicity).
    edges: Vec<Vec<(usize, u32)>>,
    /// Group of each variable, `None` for variables pinned at zero.
    group_of: Vec<Option<usize>>,
    group_size: Vec<usize>,
    /// Σ (deg v − 1) over the members of each group.
    entropy_weight: Vec<f64>,
    /// Groups sharing a check.
    neighbours: Vec<Vec<usize>>,
    checks: Vec<CheckTerm>,
}

#[derive(Clone)]
struct Point {
    groups: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
    /// Negated Hessian, row-major.
    curvature: Vec<f64>,
    y: Vec<Vec<f64>>,
    exact: bool,
}

struct Ascent {
    value: f64,
    converged: bool,
    iterations: usize,
}

impl SpectralShape {
    pub fn new(p: &Protograph) -> Result<Self> {
        if let Some(&v) = p.punctured().iter().next() {
            return Err(Error::InvalidProtograph(format!("variable {v} is punctured")));
        }
        let n = p.num_vars();
        if n == 0 {
            return Err(Error::NonPositiveLength);
        }
        let mut edges: Vec<Vec<(usize, u32)>> = vec![Vec::new(); p.num_checks()];
        for e in p.edges() {
            edges[e.check].push((e.var, e.mult));
        }
        Ok(Self::build(p.var_degrees(), edges, &vec![true; n]))
    }

    fn build(degrees: Vec<usize>, edges: Vec<Vec<(usize, u32)>>, alive: &[bool]) -> Self {
        let n = degrees.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for list in &edges {
            let live: Vec<(usize, u32)> = list.iter().cloned().filter(|&(v, _)| alive[v]).collect();
            if let [(a, 1), (b, 1)] = live[..] {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let mut group_of = vec![None; n];
        let mut group_size = Vec::new();
        let mut entropy_weight = Vec::new();
        let mut label = vec![usize::MAX; n];
        for v in (0..n).filter(|&v| alive[v]) {
            let r = root(&mut parent, v);
            if label[r] == usize::MAX {
                label[r] = group_size.len();
                group_size.push(0);
                entropy_weight.push(0.0);
            }
            let k = label[r];
            group_of[v] = Some(k);
            group_size[k] += 1;
            entropy_weight[k] += degrees[v] as f64 - 1.0;
        }
        let ng = group_size.len();
        let mut neighbours = vec![Vec::new(); ng];
        let mut checks = Vec::with_capacity(edges.len());
        for list in &edges {
            let mut groups: Vec<(usize, u32)> = Vec::new();
            for &(v, m) in list {
                let Some(k) = group_of[v] else { continue };
                match groups.iter_mut().find(|(g, _)| *g == k) {
                    Some(entry) => entry.1 += m,
                    None => groups.push((k, m)),
                }
            }
            for &(a, _) in &groups {
                for &(b, _) in &groups {
                    if a != b && !neighbours[a].contains(&b) {
                        neighbours[a].push(b);
                    }
                }
            }
            if !groups.is_empty() {
                checks.push(CheckTerm::new(groups));
            }
        }
        SpectralShape {
            n,
            degrees,
            edges,
            group_of,
            group_size,
            entropy_weight,
            neighbours,
            checks,
        }
    }

    /// The problem with every variable of a zero-weight group removed, and
    /// `groups` carried over to the new grouping.
    fn restrict(&self, groups: &[f64]) -> (Self, Vec<f64>) {
        let alive: Vec<bool> = self.group_of.iter().map(|k| k.is_some_and(|k| groups[k] > 0.0)).collect();
        let sub = Self::build(self.degrees.clone(), self.edges.clone(), &alive);
        let mut sum = vec![0.0; sub.group_size.len()];
        for v in 0..self.n {
            if let (Some(old), Some(new)) = (self.group_of[v], sub.group_of[v]) {
                sum[new] += groups[old];
            }
        }
        let start = sum.iter().zip(&sub.group_size).map(|(s, &c)| s / c as f64).collect();
        (sub, start)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    fn evaluate(&self, groups: &[f64], warm: &[Vec<f64>], with_curvature: bool) -> Point {
        let ng = groups.len();
        let mut value = 0.0;
        let mut exact = true;
        let mut grad = vec![0.0; ng];
        let mut curvature = if with_curvature { vec![0.0; ng * ng] } else { Vec::new() };
        let mut y = warm.to_vec();
        let mut local = Vec::new();
        let mut local_curv = Vec::new();
        for (c, term) in self.checks.iter().enumerate() {
            local.clear();
            local.extend(term.groups.iter().map(|&(k, _)| groups[k]));
            let d = term.groups.len();
            local_curv.clear();
            local_curv.resize(d * d, 0.0);
            let s = term.solve(&local, &mut y[c], with_curvature.then_some(&mut local_curv[..]));
            if s.value == f64::NEG_INFINITY {
                return Point {
                    groups: groups.to_vec(),
                    value: f64::NEG_INFINITY,
                    grad: Vec::new(),
                    curvature: Vec::new(),
                    y,
                    exact,
                };
            }
            exact &= s.converged;
            value += s.value;
            for (i, &(k, m)) in term.groups.iter().enumerate() {
                grad[k] -= m as f64 * y[c][i];
                if with_curvature {
                    for (j, &(l, _)) in term.groups.iter().enumerate() {
                        curvature[k * ng + l] += local_curv[i * d + j];
                    }
                }
            }
        }
        for k in 0..ng {
            let g = groups[k];
            if g == 0.0 {
                grad[k] = 0.0;
                continue;
            }
            let w = self.entropy_weight[k];
            value -= w * entropy_nats(g);
            grad[k] -= w * libm::log((1.0 - g) / g);
            if with_curvature {
                curvature[k * ng + k] -= w / (g * (1.0 - g));
            }
        }
        Point {
            groups: groups.to_vec(),
            value,
            grad,
            curvature,
            y,
            exact,
        }
    }

    fn cold_start(&self, groups: &[f64]) -> Vec<Vec<f64>> {
        self.checks
            .iter()
            .map(|t| t.groups.iter().map(|&(k, _)| initial_activity(groups[k])).collect())
            .collect()
    }

    /// Weighted spread of the per-variable gradients; zero at a stationary
    /// point of the constrained problem.
    fn spread(&self, pt: &Point, total: f64) -> f64 {
        let sizes = &self.group_size;
        let unit: Vec<f64> = pt.grad.iter().zip(sizes).map(|(g, &s)| g / s as f64).collect();
        let mass: Vec<f64> = pt.groups.iter().zip(sizes).map(|(g, &s)| g * s as f64).collect();
        let mean: f64 = unit.iter().zip(&mass).map(|(u, m)| u * m).sum::<f64>() / total;
        let var = unit.iter().zip(&mass).map(|(u, m)| m * (u - mean) * (u - mean)).sum::<f64>() / total;
        libm::sqrt(var)
    }

    /// Damped Newton ascent on `{Σ size_k g_k = total, 0 ≤ g_k < 1}`.
    ///
    /// The damping term `μ · size_k / g_k` is the curvature of the relative
    /// entropy, which keeps steps well scaled near the boundary. Groups whose
    /// weight collapses towards zero are removed and the ascent continues on
    /// the reduced problem.
    fn ascend(&self, start: &[f64], total: f64, cfg: &GrowthConfig, budget: usize) -> Ascent {
        let ng = start.len();
        let sizes: Vec<f64> = self.group_size.iter().map(|&s| s as f64).collect();
        let mut cur = self.evaluate(start, &self.cold_start(start), true);
        let done = |cur: &Point, converged: bool, iterations: usize| Ascent {
            value: cur.value,
            converged: converged && cur.exact,
            iterations,
        };
        if !cur.value.is_finite() {
            return done(&cur, false, 0);
        }
        let mut mu = 1e-3;
        let mut l = vec![0.0; ng * ng];
        let mut b = vec![0.0; ng * ng];
        let (mut w1, mut w2) = (vec![0.0; ng], vec![0.0; ng]);
        for it in 0..budget {
            if self.spread(&cur, total) < cfg.tol {
                return done(&cur, true, it);
            }
            let mut moved = false;
            for _ in 0..60 {
                for i in 0..ng {
                    b[i * ng..(i + 1) * ng].copy_from_slice(&cur.curvature[i * ng..(i + 1) * ng]);
                    b[i * ng + i] += mu * sizes[i] / cur.groups[i];
                }
                if !cholesky(&b, 0.0, &mut l, ng) {
                    mu = (mu * 10.0).max(1e-8);
                    continue;
                }
                cholesky_solve(&l, ng, &cur.grad, &mut w1);
                cholesky_solve(&l, ng, &sizes, &mut w2);
                let lambda = dot(&sizes, &w1) / dot(&sizes, &w2);
                let step: Vec<f64> = (0..ng).map(|i| w1[i] - lambda * w2[i]).collect();
                let slope = dot(&cur.grad, &step);
                if !(slope > 1e-15 * (1.0 + libm::fabs(cur.value))) {
                    return done(&cur, true, it);
                }
                // stay strictly inside the box
                let mut t: f64 = 1.0;
                for i in 0..ng {
                    let g = cur.groups[i];
                    if step[i] < 0.0 {
                        t = t.min(0.9 * g / -step[i]);
                    } else if step[i] > 0.0 {
                        t = t.min(0.9 * (1.0 - g) / step[i]);
                    }
                }
                let next: Vec<f64> = (0..ng).map(|i| cur.groups[i] + t * step[i]).collect();
                let trial = self.evaluate(&next, &cur.y, true);
                if trial.value >= cur.value + 1e-4 * t * slope {
                    mu = if t == 1.0 { mu * 0.25 } else { mu };
                    cur = trial;
                    moved = true;
                    break;
                }
                mu = (mu * 4.0).max(1e-8);
            }
            if !moved {
                return done(&cur, false, it);
            }
            let peak = cur.groups.iter().cloned().fold(0.0, f64::max);
            if cur.groups.iter().any(|&g| g < 1e-12 * peak) {
                let zeroed: Vec<f64> = cur.groups.iter().map(|&g| if g < 1e-12 * peak { 0.0 } else { g }).collect();
                let (sub, start) = self.restrict(&zeroed);
                let mass: f64 = start.iter().zip(&sub.group_size).map(|(g, &s)| g * s as f64).sum();
                let start: Vec<f64> = start.iter().map(|g| g * total / mass).collect();
                let rest = sub.ascend(&start, total, cfg, budget - it - 1);
                if rest.value >= cur.value {
                    return Ascent {
                        iterations: rest.iterations + it + 1,
                        ..rest
                    };
                }
                return done(&cur, false, it);
            }
        }
        done(&cur, false, budget)
    }

    /// Starting point concentrating the weight on a graph ball around `seed`.
    fn ball_start(&self, seed: usize, radius: usize, total: f64) -> Vec<f64> {
        let ng = self.group_size.len();
        let mut dist = vec![usize::MAX; ng];
        let mut frontier = vec![seed];
        dist[seed] = 0;
        for r in 1..=radius {
            let mut next = Vec::new();
            for &k in &frontier {
                for &u in &self.neighbours[k] {
                    if dist[u] == usize::MAX {
                        dist[u] = r;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        let raw: Vec<f64> = dist.iter().map(|&d| if d != usize::MAX { 1.0 } else { 1e-3 }).collect();
        self.normalized(&raw, total)
    }

    fn normalized(&self, raw: &[f64], total: f64) -> Vec<f64> {
        let mass: f64 = raw.iter().zip(&self.group_size).map(|(u, &s)| u * s as f64).sum();
        raw.iter().map(|u| (u * total / mass).min(0.5)).collect()
    }

    /// `r(δ)` in bits, maximized over the uniform start and random starts.
    ///
    /// Half of the random starts are localized on graph balls of random
    /// centre and radius; the others draw independent log-normal weights.
    pub fn sample(&self, delta: f64, cfg: &GrowthConfig) -> Result<GrowthSample> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidProbability(delta));
        }
        let ng = self.group_size.len();
        if delta == 0.0 {
            return Ok(GrowthSample {
                delta,
                r_bits: 0.0,
                converged: true,
                iterations: 0,
                start_spread: 0.0,
            });
        }
        if delta > 0.5 {
            return Err(Error::Optimizer(format!("weight fraction {delta} above 1/2 is not sampled")));
        }
        let total = delta * self.n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ delta.to_bits());
        let mut starts = vec![vec![delta; ng]];
        for i in 0..cfg.random_starts {
            if i % 2 == 0 {
                let seed = (rng.next_u64() % ng as u64) as usize;
                let radius = 1 + (rng.next_u64() % 3) as usize;
                starts.push(self.ball_start(seed, radius, total));
            } else {
                let raw: Vec<f64> = (0..ng).map(|_| libm::exp(2.0 * normal(&mut rng))).collect();
                starts.push(self.normalized(&raw, total));
            }
        }
        let mut best: Option<(f64, bool, usize)> = None;
        let mut worst = f64::INFINITY;
        for mut start in starts {
            // pull infeasible starts towards the uniform point
            let mut blend = 0.5;
            while self.evaluate(&start, &self.cold_start(&start), false).value == f64::NEG_INFINITY {
                if blend < 1e-3 {
                    start = vec![delta; ng];
                    break;
                }
                start.iter_mut().for_each(|g| *g = (1.0 - blend) * *g + blend * delta);
                blend *= 0.5;
            }
            let run = self.ascend(&start, total, cfg, cfg.max_iters);
            worst = worst.min(run.value);
            if best.is_none_or(|(v, _, _)| run.value > v) {
                best = Some((run.value, run.converged, run.iterations));
            }
        }
        let (value, converged, iterations) = best.expect("at least the uniform start");
        if !value.is_finite() {
            return Err(Error::Optimizer(format!("no feasible weight assignment at delta = {delta}")));
        }
        let scale = 1.0 / (self.n as f64 * LN_2);
        Ok(GrowthSample {
            delta,
            r_bits: value * scale,
            converged,
            iterations,
            start_spread: (value - worst) * scale,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard normal draw (Box-Muller).
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = 1.0 - unit_f64(rng);
    let v = unit_f64(rng);
    libm::sqrt(-2.0 * libm::log(u)) * libm::cos(2.0 * core::f64::consts::PI * v)
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Logarithmic grid of `count` points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..count).map(|i| libm::exp(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

/// Samples `r(δ)` on `grid` and refines the first sign change by bisection.
pub fn growth_rate(p: &Protograph, grid: &[f64], cfg: &GrowthConfig) -> Result<GrowthRateCurve> {
    let shape = SpectralShape::new(p)?;
    let samples = grid.iter().map(|&d| shape.sample(d, cfg)).collect::<Result<Vec<_>>>()?;
    let delta_min = first_root(&shape, &samples, cfg)?;
    Ok(GrowthRateCurve {
        samples,
        delta_min,
        n: shape.n,
    })
}

fn first_root(shape: &SpectralShape, samples: &[GrowthSample], cfg: &GrowthConfig) -> Result<Option<f64>> {
    let pos = samples.iter().filter(|s| s.delta > 0.0).collect::<Vec<_>>();
    for w in pos.windows(2) {
        if w[0].r_bits < 0.0 && w[1].r_bits >= 0.0 {
            return refine_root(shape, w[0], w[1], cfg).map(Some);
        }
    }
    Ok(None)
}

/// Illinois-style false position on a bracket with `r(lo) < 0 ≤ r(hi)`.
fn refine_root(shape: &SpectralShape, lo: &GrowthSample, hi: &GrowthSample, cfg: &GrowthConfig) -> Result<f64> {
    let (mut a, mut fa) = (lo.delta, lo.r_bits);
    let (mut b, mut fb) = (hi.delta, hi.r_bits);
    let mut side = 0i8;
    for _ in 0..60 {
        if b - a <= 1e-6 {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        // keep clear of the endpoints so the bracket always shrinks
        let margin = 0.05 * (b - a);
        c = c.clamp(a + margin, b - margin);
        let fc = shape.sample(c, cfg)?.r_bits;
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fb - fa != 0.0 { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinDistance {
    pub delta_min: f64,
    pub asymptotically_good: bool,
    /// Probe points visited before the bracket was found.
    pub probes: Vec<GrowthSample>,
}

/// First positive zero of `r(δ)`, scanning a geometric probe sequence from
/// `1e-3` up to `1/2` and refining inside the bracketing step by false
/// position.
pub fn min_distance_growth(p: &Protograph, cfg: &GrowthConfig) -> Result<MinDistance> {
    let shape = SpectralShape::new(p)?;
    let mut probes: Vec<GrowthSample> = Vec::new();
    let mut delta: f64 = 1e-3;
    loop {
        let s = shape.sample(delta, cfg)?;
        probes.push(s);
        if s.r_bits >= 0.0 {
            break;
        }
        if delta >= 0.5 {
            return Err(Error::AmbiguousCurve(format!(
                "r stays negative up to delta = 0.5 (r = {:.3e} bits)",
                s.r_bits
            )));
        }
        delta = (delta * 1.2).min(0.5);
    }
    if probes.len() == 1 {
        return Ok(MinDistance {
            delta_min: 0.0,
            asymptotically_good: false,
            probes,
        });
    }
    let (lo, hi) = (&probes[probes.len() - 2], &probes[probes.len() - 1]);
    let delta_min = refine_root(&shape, lo, hi, cfg)?;
    Ok(MinDistance {
        delta_min,
        asymptotically_good: true,
        probes,
    })
}

/// Largest `(M!)^edges` product enumerated exactly.
const MAX_PERMUTATION_CHOICES: u128 = 5_000_000;
/// Largest code length of a single lift.
const MAX_LIFTED_LENGTH: usize = 64;
/// Largest code dimension whose codewords are listed.
const MAX_DIMENSION: usize = 22;

/// Exact average weight spectrum over all liftings with one permutation per
/// edge instance; entry `w` is the mean number of codewords of weight `w`.
pub fn exact_small_lift_enumerator(p: &Protograph, lift: usize) -> Result<Vec<f64>> {
    if lift == 0 || lift > 4 {
        return Err(Error::SizeGuard(format!("lifting factor {lift} outside 1..=4")));
    }
    let instances = p.edge_instances();
    let perms = permutations(lift);
    let choices = (perms.len() as u128).checked_pow(instances.len() as u32).unwrap_or(u128::MAX);
    let n = p.num_vars() * lift;
    if choices > MAX_PERMUTATION_CHOICES || n > MAX_LIFTED_LENGTH {
        return Err(Error::SizeGuard(format!(
            "{choices} permutation choices for a length-{n} code"
        )));
    }
    let mut totals = vec![0u128; n + 1];
    let mut pick = vec![0usize; instances.len()];
    let mut rows = vec![0u64; p.num_checks() * lift];
    loop {
        rows.iter_mut().for_each(|r| *r = 0);
        for (e, &(c, v)) in instances.iter().enumerate() {
            let perm = &perms[pick[e]];
            for i in 0..lift {
                rows[c * lift + i] ^= 1u64 << (v * lift + perm[i]);
            }
        }
        let basis = null_space(&mut rows, n);
        if basis.len() > MAX_DIMENSION {
            return Err(Error::SizeGuard(format!("null space of dimension {}", basis.len())));
        }
        // Gray-code walk over all codewords
        let mut word = 0u64;
        totals[0] += 1;
        for i in 1u64..(1u64 << basis.len()) {
            word ^= basis[i.trailing_zeros() as usize];
            totals[word.count_ones() as usize] += 1;
        }
        let mut e = 0;
        while e < pick.len() && pick[e] + 1 == perms.len() {
            pick[e] = 0;
            e += 1;
        }
        if e == pick.len() {
            break;
        }
        pick[e] += 1;
    }
    Ok(totals.into_iter().map(|t| t as f64 / choices as f64).collect())
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// Basis of `{x : rows · x = 0}` over GF(2) for `n`-bit words.
fn null_space(rows: &mut [u64], n: usize) -> Vec<u64> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let bit = 1u64 << col;
        let Some(r) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(rank, r);
        for i in 0..rows.len() {
            if i != rank && rows[i] & bit != 0 {
                rows[i] ^= rows[rank];
            }
        }
        pivots.push(col);
        rank += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut x = 1u64 << free;
            for (r, &pc) in pivots.iter().enumerate() {
                if rows[r] >> free & 1 == 1 {
                    x |= 1u64 << pc;
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::build_uncoupled;
    use crate::ProtoEdge;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn empty_weight_costs_nothing() {
        assert_eq!(check_enumerator_rate(&[0.0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn degree_two_check_is_binary_entropy() {
        for d in [0.01, 0.1, 0.3, 0.5, 0.8] {
            let a = check_enumerator_rate(&[d, d]).unwrap();
            assert!(close(a, entropy_nats(d), 1e-9), "{d}: {a}");
        }
    }

    #[test]
    fn forced_pattern_has_one_configuration() {
        assert_eq!(check_enumerator_rate(&[1.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(check_enumerator_rate(&[1.0, 0.0, 0.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn unequal_degree_two_weights_are_infeasible() {
        assert_eq!(check_enumerator_rate(&[0.1, 0.2]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn matches_direct_count_for_large_lift() {
        // Number of even-parity placements of weights (w, w, w) over M checks,
        // counted by a transfer over checks; compare exponents.
        let m = 600usize;
        let w = 120usize;
        // state: remaining weight per edge type; at each check choose a subset
        // of even size. Count via generating function in log space is heavy,
        // so use the closed form: pairs {1,2},{1,3},{2,3} with counts a,b,c
        // satisfy a+b=b+c=a+c=w, so a=b=c=w/2 and the count is a multinomial.
        let h = w / 2;
        let ln_fact = |k: usize| (1..=k).map(|i| libm::log(i as f64)).sum::<f64>();
        let exact = ln_fact(m) - 3.0 * ln_fact(h) - ln_fact(m - 3 * h);
        let d = w as f64 / m as f64;
        let a = check_enumerator_rate(&[d, d, d]).unwrap();
        assert!(close(exact / m as f64, a, 0.02), "{} vs {a}", exact / m as f64);
    }

    #[test]
    fn single_degree_two_check_spectrum() {
        let edges = [ProtoEdge { check: 0, var: 0, mult: 1 }, ProtoEdge { check: 0, var: 1, mult: 1 }];
        let p = Protograph::new("pair", 1, 2, edges, [], []).unwrap();
        let s = exact_small_lift_enumerator(&p, 2).unwrap();
        assert_eq!(s, vec![1.0, 0.0, 2.0, 0.0, 1.0]);
        assert_eq!(exact_small_lift_enumerator(&p, 1).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn size_guard_trips() {
        let p = build_uncoupled(3, 6).unwrap();
        assert!(matches!(exact_small_lift_enumerator(&p, 4), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn regular_three_six_growth_rate() {
        let p = build_uncoupled(3, 6).unwrap();
        let md = min_distance_growth(&p, &GrowthConfig::default()).unwrap();
        assert!(md.asymptotically_good);
        assert!(close(md.delta_min, 0.0227, 0.0005), "{}", md.delta_min);
    }
}
