//! Quantized density evolution over the binary-input AWGN channel.
//!
//! Densities of log-likelihood ratios live on a uniform grid `i * step`,
//! `|i| <= H`, where the two end bins absorb everything beyond the range. Under
//! the all-zero codeword the channel LLR is Gaussian with mean `2/s2` and
//! variance `4/s2`, `s2 = 1 / (2 R 10^(EbN0/10))`.
//!
//! Variable nodes convolve densities with an FFT and clamp the sum to the
//! grid once. Check nodes apply the two-input rule
//! `2 atanh(tanh(a/2) tanh(b/2))` pairwise through a table that, for each
//! smaller magnitude, stores the runs of larger magnitudes sharing one
//! quantized output; with prefix sums a pair costs about `H ln2 / step`
//! operations. The top bin acts as an infinitely reliable message at check
//! nodes, which makes the erasure channel an exact special case.
//!
//! Density evolution runs on the equitable quotient of the protograph (see
//! [`Quotient`]), so symmetric edges are computed once.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::FftPlan;
use crate::graph::Quotient;
use crate::{Error, Protograph, Result};

/// Uniform LLR grid with `2 * half_bins + 1` bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub half_bins: usize,
}

impl Grid {
    /// Grid with spacing `step` covering `[-range, range]`.
    pub fn new(step: f64, range: f64) -> Result<Self> {
        if !(step > 0.0) || !(range >= step) || !step.is_finite() || !range.is_finite() {
            return Err(Error::GridMismatch);
        }
        Ok(Grid {
            step,
            half_bins: libm::round(range / step) as usize,
        })
    }

    pub fn bins(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn range(&self) -> f64 {
        self.half_bins as f64 * self.step
    }

    pub fn llr(&self, bin: usize) -> f64 {
        (bin as f64 - self.half_bins as f64) * self.step
    }

    /// Half the step and twice the range.
    pub fn refined(&self) -> Grid {
        Grid {
            step: self.step / 2.0,
            half_bins: self.half_bins * 4,
        }
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            step: 0.01,
            half_bins: 3000,
        }
    }
}

/// Probability masses on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDensity {
    grid: Grid,
    mass: Vec<f64>,
}

impl QuantizedDensity {
    pub fn from_masses(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.bins() {
            return Err(Error::GridMismatch);
        }
        Ok(QuantizedDensity { grid, mass })
    }

    /// Unit mass at the bin nearest to `llr` (clamped to the range).
    pub fn point(grid: Grid, llr: f64) -> Self {
        let mut mass = vec![0.0; grid.bins()];
        mass[bin_of(&grid, llr)] = 1.0;
        QuantizedDensity { grid, mass }
    }

    /// Unit mass in the top bin, the neutral element of the check rule.
    pub fn certain(grid: Grid) -> Self {
        let mut mass = vec![0.0; grid.bins()];
        mass[grid.bins() - 1] = 1.0;
        QuantizedDensity { grid, mass }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Probability of a wrong hard decision: mass below zero plus half the
    /// mass at zero.
    pub fn error_probability(&self) -> f64 {
        error_probability(&self.grid, &self.mass)
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.grid.llr(i))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let d = self.grid.llr(i) - mu;
                m * d * d
            })
            .sum()
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

fn error_probability(grid: &Grid, mass: &[f64]) -> f64 {
    let h = grid.half_bins;
    mass[..h].iter().sum::<f64>() + 0.5 * mass[h]
}

fn bin_of(grid: &Grid, llr: f64) -> usize {
    let i = libm::round(llr / grid.step) + grid.half_bins as f64;
    i.clamp(0.0, (grid.bins() - 1) as f64) as usize
}

/// Noise variance for a given `Eb/N0` in dB and code rate.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * libm::pow(10.0, ebn0_db / 10.0))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Discretized channel LLR density under all-zero transmission. Each bin
/// takes the Gaussian mass of its cell; the end bins take the tails.
pub fn channel_density(ebn0_db: f64, rate: f64, grid: Grid) -> Result<QuantizedDensity> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidRate(rate));
    }
    let s2 = noise_variance(ebn0_db, rate);
    let mean = 2.0 / s2;
    let sd = libm::sqrt(4.0 / s2);
    let n = grid.bins();
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    for i in 0..n - 1 {
        let edge = grid.llr(i) + 0.5 * grid.step;
        cdf.push(normal_cdf((edge - mean) / sd));
    }
    cdf.push(1.0);
    let mut mass: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    // the upper tail is computed from the complement to keep it accurate
    let top_edge = grid.llr(n - 1) - 0.5 * grid.step;
    mass[n - 1] = normal_cdf((mean - top_edge) / sd);
    normalize(&mut mass);
    Ok(QuantizedDensity { grid, mass })
}

/// Erasure channel embedded in the grid: mass `eps` at zero, the rest in the
/// top bin.
pub fn erasure_density(eps: f64, grid: Grid) -> Result<QuantizedDensity> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidProbability(eps));
    }
    let mut mass = vec![0.0; grid.bins()];
    mass[grid.half_bins] = eps;
    mass[grid.bins() - 1] += 1.0 - eps;
    Ok(QuantizedDensity { grid, mass })
}

fn normalize(mass: &mut [f64]) {
    for m in mass.iter_mut() {
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        for m in mass.iter_mut() {
            *m /= total;
        }
    }
}

/// Quantized two-input check rule for one grid.
#[derive(Debug, Clone)]
pub struct CheckTable {
    grid: Grid,
    /// Runs of the smaller magnitude `s` are `first[s]..first[s + 1]`.
    first: Vec<usize>,
    /// Per run: first larger magnitude, one past the last, quantized output.
    runs: Vec<(u32, u32, u32)>,
    /// Per run: first larger magnitude strictly above `s`.
    strict: Vec<u32>,
}

/// `2 atanh(tanh(a/2) tanh(b/2))` for `a, b >= 0` without cancellation.
pub fn check_rule(a: f64, b: f64) -> f64 {
    a.min(b) - libm::log1p(libm::exp(-(a - b).abs())) + libm::log1p(libm::exp(-(a + b)))
}

/// Magnitude-domain view of a density: per magnitude, the total and the
/// positive-minus-negative mass, with prefix sums of both.
struct Folded {
    zero: f64,
    total: f64,
    /// `[total, positive - negative]` per magnitude.
    at: Vec<[f64; 2]>,
    acc: Vec<[f64; 2]>,
}

impl Folded {
    fn new(grid: &Grid, x: &[f64]) -> Self {
        let h = grid.half_bins;
        let mut at = vec![[0.0; 2]; h + 1];
        let mut acc = vec![[0.0; 2]; h + 2];
        for m in 1..=h {
            at[m] = [x[h + m] + x[h - m], x[h + m] - x[h - m]];
        }
        for m in 0..=h {
            acc[m + 1] = [acc[m][0] + at[m][0], acc[m][1] + at[m][1]];
        }
        Folded {
            zero: x[h],
            total: x.iter().sum(),
            at,
            acc,
        }
    }
}

impl CheckTable {
    pub fn new(grid: Grid) -> Self {
        let h = grid.half_bins;
        let mut first = vec![0; h + 2];
        let mut runs: Vec<(u32, u32, u32)> = Vec::new();
        for s in 1..=h {
            first[s] = runs.len();
            let a = s as f64 * grid.step;
            for t in s..=h {
                let k = if t == h {
                    s as u32
                } else {
                    let out = check_rule(a, t as f64 * grid.step);
                    (libm::round(out / grid.step) as u32).min(s as u32)
                };
                let open = runs.len() > first[s];
                match runs.last_mut() {
                    Some(last) if open && last.2 == k => last.1 = t as u32 + 1,
                    _ => runs.push((t as u32, t as u32 + 1, k)),
                }
            }
        }
        first[h + 1] = runs.len();
        let mut strict = Vec::with_capacity(runs.len());
        for s in 1..=h {
            for r in &runs[first[s]..first[s + 1]] {
                strict.push(r.0.max(s as u32 + 1).min(r.1));
            }
        }
        CheckTable {
            grid,
            first,
            runs,
            strict,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Density of the check output for two independent inputs.
    pub fn combine(&self, a: &QuantizedDensity, b: &QuantizedDensity) -> Result<QuantizedDensity> {
        if a.grid != self.grid || b.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; self.grid.bins()];
        self.combine_folded(&Folded::new(&self.grid, &a.mass), &Folded::new(&self.grid, &b.mass), &mut out);
        Ok(QuantizedDensity {
            grid: self.grid,
            mass: out,
        })
    }

    fn combine_folded(&self, a: &Folded, b: &Folded, out: &mut [f64]) {
        let h = self.grid.half_bins;
        // per output magnitude: total mass and positive-minus-negative mass
        let mut tot = vec![0.0; h + 1];
        let mut dif = vec![0.0; h + 1];
        tot[0] = a.zero * b.total + b.zero * (a.total - a.zero);
        for s in 1..=h {
            let ([a_s, a_d], [b_s, b_d]) = (a.at[s], b.at[s]);
            if a_s == 0.0 && b_s == 0.0 {
                continue;
            }
            let range = self.first[s]..self.first[s + 1];
            for (&(t0, t1, k), &lo) in self.runs[range.clone()].iter().zip(&self.strict[range]) {
                let (t0, t1, lo, k) = (t0 as usize, t1 as usize, lo as usize, k as usize);
                let (ah, al, bh, bl) = (a.acc[t1], a.acc[lo], b.acc[t1], b.acc[t0]);
                tot[k] += a_s * (bh[0] - bl[0]) + b_s * (ah[0] - al[0]);
                dif[k] += a_d * (bh[1] - bl[1]) + b_d * (ah[1] - al[1]);
            }
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        out[h] = tot[0];
        for k in 1..=h {
            out[h + k] = (0.5 * (tot[k] + dif[k])).max(0.0);
            out[h - k] = (0.5 * (tot[k] - dif[k])).max(0.0);
        }
    }

    /// Outputs of a check node for the requested edges only. `None` stands
    /// for the neutral input on either side of the prefix/suffix scheme.
    fn outputs(&self, incoming: &[&[f64]], wanted: &[usize]) -> Vec<Vec<f64>> {
        let n = incoming.len();
        let bins = self.grid.bins();
        let lo = wanted.iter().copied().min().unwrap_or(0);
        let hi = wanted.iter().copied().max().unwrap_or(0);
        let folded: Vec<Folded> = incoming.iter().map(|x| Folded::new(&self.grid, x)).collect();
        // prefix[i] combines inputs 0..i, suffix[i] combines i..n
        let mut prefix: Vec<Option<Vec<f64>>> = vec![None];
        for i in 0..hi {
            let next = match &prefix[i] {
                None => incoming[i].to_vec(),
                Some(p) => {
                    let mut out = vec![0.0; bins];
                    self.combine_folded(&Folded::new(&self.grid, p), &folded[i], &mut out);
                    out
                }
            };
            prefix.push(Some(next));
        }
        let mut suffix: Vec<Option<Vec<f64>>> = vec![None; n + 1];
        for i in (lo + 1..n).rev() {
            suffix[i] = Some(match &suffix[i + 1] {
                None => incoming[i].to_vec(),
                Some(p) => {
                    let mut out = vec![0.0; bins];
                    self.combine_folded(&Folded::new(&self.grid, p), &folded[i], &mut out);
                    out
                }
            });
        }
        wanted
            .iter()
            .map(|&i| match (&prefix[i], &suffix[i + 1]) {
                (None, None) => {
                    let mut out = vec![0.0; bins];
                    out[bins - 1] = 1.0;
                    out
                }
                (Some(p), None) => p.clone(),
                (None, Some(q)) => q.clone(),
                (Some(p), Some(q)) => {
                    let mut out = vec![0.0; bins];
                    self.combine_folded(&Folded::new(&self.grid, p), &Folded::new(&self.grid, q), &mut out);
                    out
                }
            })
            .collect()
    }
}

/// Check node update: for every incoming edge, the density of the outgoing
/// message on that edge (all other inputs combined).
pub fn cn_update(table: &CheckTable, incoming: &[&QuantizedDensity]) -> Result<Vec<QuantizedDensity>> {
    for d in incoming {
        if d.grid != table.grid {
            return Err(Error::GridMismatch);
        }
    }
    let raw: Vec<&[f64]> = incoming.iter().map(|d| d.mass.as_slice()).collect();
    let wanted: Vec<usize> = (0..incoming.len()).collect();
    Ok(table
        .outputs(&raw, &wanted)
        .into_iter()
        .map(|mass| QuantizedDensity { grid: table.grid, mass })
        .collect())
}

/// Variable node update: for every incoming edge, the channel convolved with
/// all other incoming densities, clamped to the grid.
pub fn vn_update(channel: &QuantizedDensity, incoming: &[&QuantizedDensity]) -> Result<Vec<QuantizedDensity>> {
    for d in incoming {
        channel.same_grid(d)?;
    }
    let grid = channel.grid;
    let n = incoming.len();
    let mut ws = Workspace::default();
    (0..n)
        .map(|i| {
            let parts: Vec<&[f64]> = core::iter::once(channel.mass.as_slice())
                .chain(incoming.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, d)| d.mass.as_slice()))
                .collect();
            let mut mass = vec![0.0; grid.bins()];
            ws.convolve(&grid, &parts, &mut mass);
            Ok(QuantizedDensity { grid, mass })
        })
        .collect()
}

#[derive(Debug, Default)]
struct Workspace {
    plans: BTreeMap<usize, FftPlan>,
    /// Channel spectra of the current run keyed by `(size, channel id)`.
    channel_spectra: BTreeMap<(usize, usize), Vec<Complex64>>,
}

fn fft_size(grid: &Grid, parts: usize) -> usize {
    (parts * (grid.bins() - 1) + 1).next_power_of_two()
}

/// Folds a linear convolution of `parts` grid densities back onto the grid.
fn fold(grid: &Grid, parts: usize, full: &[f64], out: &mut [f64]) {
    let n = grid.bins();
    let shift = (parts - 1) * grid.half_bins;
    out.iter_mut().for_each(|x| *x = 0.0);
    for (k, &m) in full.iter().enumerate().take(parts * (n - 1) + 1) {
        let g = if k < shift { 0 } else { (k - shift).min(n - 1) };
        out[g] += m;
    }
    normalize(out);
}

impl Workspace {
    fn plan(&mut self, size: usize) -> &FftPlan {
        self.plans.entry(size).or_insert_with(|| FftPlan::new(size))
    }

    /// Outgoing densities of one variable node, one per distinct input, and
    /// its full posterior in `posterior`. `inputs` pairs each distinct
    /// incoming density with its number of edge instances.
    fn var_node(
        &mut self,
        grid: &Grid,
        channel: &QuantizedDensity,
        channel_id: usize,
        inputs: &[(&[f64], usize)],
        posterior: &mut [f64],
    ) -> Vec<Vec<f64>> {
        let degree: usize = inputs.iter().map(|x| x.1).sum();
        if degree == 0 {
            posterior.copy_from_slice(&channel.mass);
            return Vec::new();
        }
        let size = fft_size(grid, degree + 1);
        self.plan(size);
        let plan = &self.plans[&size];
        let ch = self
            .channel_spectra
            .entry((size, channel_id))
            .or_insert_with(|| {
                let mut f = vec![Complex64::default(); size];
                plan.forward_pair(&channel.mass, &[], &mut f, &mut vec![Complex64::default(); size]);
                f
            });
        let mut spectra = vec![vec![Complex64::default(); size]; inputs.len()];
        let mut spare = vec![Complex64::default(); size];
        for i in (0..inputs.len()).step_by(2) {
            let (head, tail) = spectra.split_at_mut(i + 1);
            let second = tail.first_mut().unwrap_or(&mut spare);
            let b: &[f64] = inputs.get(i + 1).map_or(&[], |x| x.0);
            plan.forward_pair(inputs[i].0, b, &mut head[i], second);
        }
        let power = |f: &[Complex64], k: usize, acc: &mut [Complex64]| {
            for _ in 0..k {
                for (a, x) in acc.iter_mut().zip(f) {
                    *a *= x;
                }
            }
        };
        let mut products: Vec<Vec<Complex64>> = Vec::with_capacity(inputs.len() + 1);
        for skip in 0..=inputs.len() {
            let mut acc = ch.clone();
            for (t, f) in spectra.iter().enumerate() {
                power(f, inputs[t].1 - usize::from(t == skip), &mut acc);
            }
            products.push(acc);
        }
        let mut outs = vec![vec![0.0; grid.bins()]; inputs.len()];
        let mut full_a = vec![0.0; size];
        let mut full_b = vec![0.0; size];
        for i in (0..products.len()).step_by(2) {
            let b = products.get(i + 1).unwrap_or(&spare);
            plan.inverse_pair(&products[i], b, &mut full_a, &mut full_b);
            for (j, full) in [(i, &full_a), (i + 1, &full_b)] {
                match j.cmp(&inputs.len()) {
                    core::cmp::Ordering::Less => fold(grid, degree, full, &mut outs[j]),
                    core::cmp::Ordering::Equal => fold(grid, degree + 1, full, posterior),
                    core::cmp::Ordering::Greater => {}
                }
            }
        }
        outs
    }

    fn convolve(&mut self, grid: &Grid, parts: &[&[f64]], out: &mut [f64]) {
        if parts.len() == 1 {
            out.copy_from_slice(parts[0]);
            return;
        }
        let size = fft_size(grid, parts.len());
        let plan = self.plan(size);
        let mut acc = vec![Complex64::new(1.0, 0.0); size];
        let mut fa = vec![Complex64::default(); size];
        let mut fb = vec![Complex64::default(); size];
        for pair in parts.chunks(2) {
            let second: &[f64] = if pair.len() == 2 { pair[1] } else { &[] };
            plan.forward_pair(pair[0], second, &mut fa, &mut fb);
            for k in 0..size {
                acc[k] *= if pair.len() == 2 { fa[k] * fb[k] } else { fa[k] };
            }
        }
        let mut full = vec![0.0; size];
        plan.inverse_pair(&acc, &fb, &mut full, &mut []);
        fold(grid, parts.len(), &full, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnDeConfig {
    pub grid: Grid,
    /// Convergence target for the largest bit error probability.
    pub target: f64,
    pub max_iters: usize,
    /// A run stops as stalled once no variable's error probability improves
    /// by this much in one iteration.
    pub stall: f64,
}

impl Default for AwgnDeConfig {
    fn default() -> Self {
        AwgnDeConfig {
            grid: Grid::default(),
            target: 1e-6,
            max_iters: 5000,
            stall: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwgnRunResult {
    pub converged: bool,
    pub iterations: usize,
    pub max_error: f64,
}

/// One directed message slot of the quotient graph.
#[derive(Debug, Clone, Copy)]
struct Slot {
    var_class: usize,
    /// Edge instances between a member variable and checks of the class.
    count: usize,
}

/// Quantized density evolution engine bound to one protograph and grid.
#[derive(Debug)]
pub struct AwgnDe {
    grid: Grid,
    table: CheckTable,
    quotient: Quotient,
    punctured: Vec<bool>,
    slots: Vec<Slot>,
    /// Slots touching each variable class.
    var_slots: Vec<Vec<usize>>,
    /// Per check class: `(slot, edge instances from a member check)`.
    check_slots: Vec<Vec<(usize, usize)>>,
    ws: Workspace,
}

impl AwgnDe {
    pub fn new(p: &Protograph, grid: Grid) -> Self {
        let quotient = Quotient::new(p);
        let mut slots = Vec::new();
        let mut lookup = BTreeMap::new();
        let mut var_slots = vec![Vec::new(); quotient.num_var_classes()];
        for (vc, nbrs) in quotient.var_nbrs.iter().enumerate() {
            for &(cc, count) in nbrs {
                lookup.insert((vc, cc), slots.len());
                var_slots[vc].push(slots.len());
                slots.push(Slot {
                    var_class: vc,
                    count,
                });
            }
        }
        let check_slots = quotient
            .check_nbrs
            .iter()
            .enumerate()
            .map(|(cc, nbrs)| nbrs.iter().map(|&(vc, n)| (lookup[&(vc, cc)], n)).collect())
            .collect();
        let punctured = quotient.var_reps.iter().map(|&v| p.is_punctured(v)).collect();
        AwgnDe {
            table: CheckTable::new(grid),
            grid,
            quotient,
            punctured,
            slots,
            var_slots,
            check_slots,
            ws: Workspace::default(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of distinct message densities tracked per direction.
    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    /// Runs density evolution with the given channel density for transmitted
    /// variables (punctured ones see a unit mass at zero).
    pub fn run(&mut self, channel: &QuantizedDensity, cfg: &AwgnDeConfig) -> Result<AwgnRunResult> {
        if channel.grid != self.grid || cfg.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let erased = QuantizedDensity::point(self.grid, 0.0);
        let chan = |vc: usize| if self.punctured[vc] { &erased } else { channel };
        let nvc = self.quotient.num_var_classes();
        let mut to_check: Vec<QuantizedDensity> = self.slots.iter().map(|s| chan(s.var_class).clone()).collect();
        let mut to_var = to_check.clone();
        let mut errors: Vec<f64> = (0..nvc).map(|vc| chan(vc).error_probability()).collect();
        let mut iterations = 0;
        let mut buf = vec![0.0; self.grid.bins()];
        self.ws.channel_spectra.clear();
        while iterations < cfg.max_iters {
            iterations += 1;
            for list in &self.check_slots {
                let mut inputs: Vec<&[f64]> = Vec::new();
                let mut first = Vec::with_capacity(list.len());
                for &(slot, n) in list {
                    first.push(inputs.len());
                    for _ in 0..n {
                        inputs.push(&to_check[slot].mass);
                    }
                }
                let outs = self.table.outputs(&inputs, &first);
                for (&(slot, _), out) in list.iter().zip(outs) {
                    to_var[slot].mass = out;
                }
            }
            let mut best_gain = f64::NEG_INFINITY;
            let mut max_error: f64 = 0.0;
            for vc in 0..nvc {
                let slots = &self.var_slots[vc];
                let inputs: Vec<(&[f64], usize)> = slots
                    .iter()
                    .map(|&s| (to_var[s].mass.as_slice(), self.slots[s].count))
                    .collect();
                let outs = self.ws.var_node(&self.grid, chan(vc), usize::from(self.punctured[vc]), &inputs, &mut buf);
                let err = error_probability(&self.grid, &buf);
                best_gain = best_gain.max(errors[vc] - err);
                errors[vc] = err;
                max_error = max_error.max(err);
                for (&s, out) in slots.iter().zip(outs) {
                    to_check[s].mass = out;
                }
            }
            if max_error <= cfg.target {
                return Ok(AwgnRunResult {
                    converged: true,
                    iterations,
                    max_error,
                });
            }
            if best_gain < cfg.stall {
                return Ok(AwgnRunResult {
                    converged: false,
                    iterations,
                    max_error,
                });
            }
        }
        Ok(AwgnRunResult {
            converged: false,
            iterations,
            max_error: errors.iter().cloned().fold(0.0, f64::max),
        })
    }

    pub fn run_ebn0(&mut self, ebn0_db: f64, rate: f64, cfg: &AwgnDeConfig) -> Result<AwgnRunResult> {
        let channel = channel_density(ebn0_db, rate, self.grid)?;
        self.run(&channel, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSearch {
    pub tol_db: f64,
    pub lower_db: f64,
    pub upper_db: f64,
}

impl Default for AwgnSearch {
    fn default() -> Self {
        AwgnSearch {
            tol_db: 0.01,
            lower_db: -1.0,
            upper_db: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwgnThreshold {
    pub ebn0_star_db: f64,
    /// Largest probed `Eb/N0` that did not converge.
    pub lower_db: f64,
    /// Smallest probed `Eb/N0` that converged.
    pub upper_db: f64,
    pub tol_db: f64,
    pub grid: Grid,
    /// Iterations used by the converging run at `upper_db`.
    pub iterations: usize,
    pub probes: usize,
}

/// Bisection over `Eb/N0` (dB) on the convergence predicate; the rate is the
/// protograph's design rate.
pub fn threshold_awgn(p: &Protograph, search: &AwgnSearch, cfg: &AwgnDeConfig) -> Result<AwgnThreshold> {
    let rate = p.design_rate()?.value();
    let mut de = AwgnDe::new(p, cfg.grid);
    let top = de.run_ebn0(search.upper_db, rate, cfg)?;
    if !top.converged {
        return Err(Error::BracketFailure {
            upper_db: search.upper_db,
        });
    }
    let (mut lo, mut hi) = (search.lower_db, search.upper_db);
    let mut iterations = top.iterations;
    let mut probes = 1;
    while hi - lo > search.tol_db {
        let mid = 0.5 * (lo + hi);
        probes += 1;
        let r = de.run_ebn0(mid, rate, cfg)?;
        if r.converged {
            hi = mid;
            iterations = r.iterations;
        } else {
            lo = mid;
        }
    }
    Ok(AwgnThreshold {
        ebn0_star_db: 0.5 * (lo + hi),
        lower_db: lo,
        upper_db: hi,
        tol_db: search.tol_db,
        grid: cfg.grid,
        iterations,
        probes,
    })
}
