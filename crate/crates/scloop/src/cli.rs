//! Command line front end.
//!
//! Machine-readable results go to `--out` (or stdout when no path is given);
//! progress and diagnostics go to stderr. Every file written next to `--out`
//! gets a `<file>.manifest.json` sibling describing the run.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use scloop_core::de_awgn::{threshold_awgn, AwgnDeConfig, AwgnSearch, Grid};
use scloop_core::de_bec::{de_trace, threshold_bec, BecDeConfig};
use scloop_core::lift::{lift, LiftConfig, Permutations};
use scloop_core::schedule::{complexity_row, ComplexitySweep, ScheduleConfig};
use scloop_core::sim::{Channel, StopRule};
use scloop_core::spec::EnsembleSpec;
use scloop_core::wenum::{growth_rate, log_grid, min_distance_growth, GrowthConfig};
use scloop_core::Protograph;
use serde::Serialize;
use serde_json::json;

use crate::format::{load_protograph, num, parity_check_to_text, protograph_to_json, Table};
use crate::manifest::{Outputs, RunManifest};
use crate::parallel::{par_map, resolve_workers, simulate};
use crate::reproduce::{reproduce, TableId};

#[derive(Debug, Parser, Serialize)]
#[command(name = "scloop", version, about = "Connected spatially coupled LDPC ensembles")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Output file (directory for `reproduce`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for lifting, simulation and random optimizer starts.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for sweeps and simulation (default: SCLOOP_WORKERS or
    /// all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Threshold tolerance (erasure probability for BEC, dB for AWGN).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Improvement parameter of the selective schedule.
    #[arg(long, global = true, default_value_t = 1e-2)]
    pub theta: f64,
    /// Target bit erasure probability of the selective schedule.
    #[arg(long, global = true, default_value_t = 1e-5)]
    pub pbmax: f64,
    /// AWGN density grid as `step,range` in LLR units.
    #[arg(long, global = true, default_value = "0.01,30", value_parser = parse_grid)]
    #[serde(serialize_with = "ser_grid")]
    pub grid: Grid,
}

fn ser_grid<S: serde::Serializer>(g: &Grid, s: S) -> std::result::Result<S::Ok, S::Error> {
    json!({"dq": g.step, "range": g.range()}).serialize(s)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let (a, b) = s.split_once(',').ok_or("expected `step,range`")?;
    let step: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let range: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Grid::new(step, range).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Build a protograph from an ensemble spec such as `loop:3,6,15,h=5`.
    Build { spec: String },
    /// Design rate of a protograph file or spec.
    Rate { input: String },
    /// BEC density evolution threshold.
    ThresholdBec { input: String },
    /// AWGN quantized density evolution threshold.
    ThresholdAwgn {
        input: String,
        /// Upper end of the Eb/N0 search bracket in dB.
        #[arg(long, default_value_t = 6.0)]
        upper_db: f64,
    },
    /// Per-position bit erasure probabilities at selected iterations.
    DeTrace {
        input: String,
        #[arg(long)]
        eps: f64,
        /// Comma-separated iteration numbers.
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,50,100")]
        iterations: Vec<usize>,
    },
    /// Selective-schedule complexity over a list of erasure probabilities.
    Complexity {
        input: String,
        /// Comma-separated erasure probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Update every node in every sweep (plain flooding).
        #[arg(long)]
        no_suppress: bool,
    },
    /// Asymptotic spectral shape and minimum distance growth rate.
    GrowthRate {
        input: String,
        /// Log-spaced grid points for the curve; 0 only locates the root.
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 1e-4)]
        delta_lo: f64,
        #[arg(long, default_value_t = 0.05)]
        delta_hi: f64,
        /// Random optimizer starts besides the uniform one.
        #[arg(long, default_value_t = 8)]
        starts: usize,
    },
    /// Lift to a sparse parity-check matrix (`n m` header, one row per line).
    Lift {
        input: String,
        #[arg(long)]
        lift: usize,
        /// Forbid 4-cycles.
        #[arg(long)]
        girth6: bool,
        /// Fully random permutations instead of circulants.
        #[arg(long)]
        random_perms: bool,
    },
    /// Monte Carlo BP simulation of a lifted code.
    Simulate {
        input: String,
        #[arg(long)]
        lift: usize,
        #[arg(long)]
        girth6: bool,
        #[arg(long)]
        random_perms: bool,
        /// Comma-separated Eb/N0 points in dB (AWGN).
        #[arg(long, value_delimiter = ',', conflicts_with = "eps")]
        ebn0: Option<Vec<f64>>,
        /// Comma-separated erasure probabilities (BEC).
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        min_frame_errors: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_frames: u64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
    /// Recompute one of the built-in threshold or growth-rate sweeps.
    Reproduce { table: TableId },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Build { .. } => "build",
            Command::Rate { .. } => "rate",
            Command::ThresholdBec { .. } => "threshold-bec",
            Command::ThresholdAwgn { .. } => "threshold-awgn",
            Command::DeTrace { .. } => "de-trace",
            Command::Complexity { .. } => "complexity",
            Command::GrowthRate { .. } => "growth-rate",
            Command::Lift { .. } => "lift",
            Command::Simulate { .. } => "simulate",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

/// A protograph file path, or an ensemble spec when no such file exists.
pub fn load_input(input: &str) -> Result<Protograph> {
    let path = Path::new(input);
    if path.exists() {
        return load_protograph(path);
    }
    let spec: EnsembleSpec = input
        .parse()
        .with_context(|| format!("`{input}` is neither a file nor an ensemble spec"))?;
    Ok(spec.build()?)
}

fn bec_tol(g: &GlobalOpts) -> f64 {
    g.tol.unwrap_or(1e-4)
}

fn awgn_tol(g: &GlobalOpts) -> f64 {
    g.tol.unwrap_or(0.01)
}

pub fn schedule_config(g: &GlobalOpts, suppress: bool) -> ScheduleConfig {
    ScheduleConfig {
        pb_max: g.pbmax,
        theta: g.theta,
        suppress,
        ..ScheduleConfig::default()
    }
}

fn permutations(random: bool) -> Permutations {
    if random {
        Permutations::Random
    } else {
        Permutations::Circulant
    }
}

/// Writes `text` to `--out` (tracked for cleanup) or stdout.
fn emit(outputs: &mut Outputs, out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => outputs.write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

fn manifest_name(out: &Path) -> String {
    let mut s = out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    s.push_str(".manifest.json");
    s
}

/// JSON result; names the run manifest when written to a file.
fn emit_json(
    outputs: &mut Outputs,
    out: Option<&Path>,
    manifest: Option<&str>,
    mut v: serde_json::Value,
) -> Result<()> {
    if let Some(m) = manifest {
        v["manifest"] = json!(m);
    }
    emit(outputs, out, &json_text(&v))
}

fn run(cli: &Cli, outputs: &mut Outputs) -> Result<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    let manifest = out.map(manifest_name);
    let manifest = manifest.as_deref();
    let workers = resolve_workers(g.workers);
    match &cli.command {
        Command::Build { spec } => {
            let spec: EnsembleSpec = spec.parse()?;
            let p = spec.build()?;
            emit(outputs, out, &(protograph_to_json(&p) + "\n"))?;
        }
        Command::Rate { input } => {
            let p = load_input(input)?;
            let r = p.design_rate()?;
            emit_json(
                outputs,
                out,
                manifest,
                json!({
                    "ensemble": p.name(),
                    "numerator": r.numerator,
                    "denominator": r.denominator,
                    "rate": r.value(),
                }),
            )?;
        }
        Command::ThresholdBec { input } => {
            let p = load_input(input)?;
            let t = threshold_bec(&p, bec_tol(g), &BecDeConfig::default());
            emit_json(
                outputs,
                out,
                manifest,
                json!({
                    "ensemble": p.name(),
                    "epsilon_star": t.epsilon_star,
                    "tol": t.tol,
                    "iterations": t.iterations,
                    "lower": t.lower,
                    "upper": t.upper,
                }),
            )?;
        }
        Command::ThresholdAwgn { input, upper_db } => {
            let p = load_input(input)?;
            let search = AwgnSearch {
                tol_db: awgn_tol(g),
                upper_db: *upper_db,
                ..AwgnSearch::default()
            };
            let cfg = AwgnDeConfig {
                grid: g.grid,
                ..AwgnDeConfig::default()
            };
            let t = threshold_awgn(&p, &search, &cfg)?;
            emit_json(
                outputs,
                out,
                manifest,
                json!({
                    "ensemble": p.name(),
                    "ebn0_star_db": t.ebn0_star_db,
                    "tol_db": t.tol_db,
                    "grid": {"dq": t.grid.step, "range": t.grid.range()},
                    "iterations": t.iterations,
                }),
            )?;
        }
        Command::DeTrace { input, eps, iterations } => {
            let p = load_input(input)?;
            let rows = de_trace(&p, *eps, iterations)?;
            let mut t = Table::new(&["iteration", "chain", "position", "mean_pb", "log10_mean_pb"]);
            for r in rows {
                t.push(vec![
                    r.iteration.to_string(),
                    r.chain.to_string(),
                    r.position.to_string(),
                    num(r.mean_pb),
                    num(r.mean_pb.log10()),
                ]);
            }
            emit(outputs, out, &t.to_csv())?;
        }
        Command::Complexity { input, eps, no_suppress } => {
            let p = load_input(input)?;
            let cfg = schedule_config(g, !no_suppress);
            let mut grid = eps.clone();
            grid.sort_by(f64::total_cmp);
            let rows = par_map(workers, &grid, |&e| complexity_row(&p, e, &cfg))?
                .into_iter()
                .collect::<scloop_core::Result<Vec<_>>>()?;
            let sweep = ComplexitySweep::from_rows(rows);
            let mut t = Table::new(&["epsilon", "i_eff", "converged", "sweeps"]);
            for r in &sweep.rows {
                t.push(vec![num(r.epsilon), num(r.i_eff), r.converged.to_string(), r.sweeps.to_string()]);
            }
            emit(outputs, out, &t.to_csv())?;
            match sweep.scheduled_threshold {
                Some(e) => eprintln!("largest converged epsilon on the grid: {e}"),
                None => eprintln!("no grid point converged"),
            }
        }
        Command::GrowthRate { input, points, delta_lo, delta_hi, starts } => {
            let p = load_input(input)?;
            let cfg = GrowthConfig {
                random_starts: *starts,
                seed: g.seed,
                ..GrowthConfig::default()
            };
            let (samples, delta_min, good) = if *points > 0 {
                let curve = growth_rate(&p, &log_grid(*delta_lo, *delta_hi, *points), &cfg)?;
                let good = curve.delta_min.is_some();
                (curve.samples, curve.delta_min.unwrap_or(0.0), good)
            } else {
                let m = min_distance_growth(&p, &cfg)?;
                (m.probes, m.delta_min, m.asymptotically_good)
            };
            let mut t = Table::new(&["delta", "r_delta_bits", "converged"]);
            for s in &samples {
                t.push(vec![num(s.delta), num(s.r_bits), s.converged.to_string()]);
            }
            emit(outputs, out, &t.to_csv())?;
            let summary = json!({
                "ensemble": p.name(),
                "delta_min": delta_min,
                "asymptotically_good": good,
                "curve": out.map(|o| o.file_name().unwrap().to_string_lossy().into_owned()),
            });
            match out {
                Some(o) => {
                    let path = o.with_extension("summary.json");
                    emit_json(outputs, Some(&path), manifest, summary)?;
                }
                None => eprintln!("{}", json_text(&summary).trim_end()),
            }
        }
        Command::Lift { input, lift: m, girth6, random_perms } => {
            let p = load_input(input)?;
            let cfg = LiftConfig {
                permutations: permutations(*random_perms),
                ..LiftConfig::new(*m, g.seed, *girth6)
            };
            let h = lift(&p, &cfg)?;
            emit(outputs, out, &parity_check_to_text(&h))?;
            eprintln!("lifted {}: n = {}, m = {}, 4-cycle pairs = {}", p.name(), h.n(), h.m(), h.four_cycle_pairs());
        }
        Command::Simulate {
            input,
            lift: m,
            girth6,
            random_perms,
            ebn0,
            eps,
            min_frame_errors,
            max_frames,
            max_iters,
        } => {
            let p = load_input(input)?;
            let cfg = LiftConfig {
                permutations: permutations(*random_perms),
                ..LiftConfig::new(*m, g.seed, *girth6)
            };
            let h = lift(&p, &cfg)?;
            let rate = p.design_rate()?.value();
            let channels: Vec<Channel> = match (ebn0, eps) {
                (Some(db), None) => db.iter().map(|&d| Channel::Awgn { ebn0_db: d, rate }).collect(),
                (None, Some(e)) => {
                    if let Some(bad) = e.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                        bail!("erasure probability {bad} outside [0, 1]");
                    }
                    e.iter().map(|&x| Channel::Bec(x)).collect()
                }
                _ => bail!("give exactly one of --ebn0 or --eps"),
            };
            let stop = StopRule {
                min_frame_errors: *min_frame_errors,
                max_frames: *max_frames,
            };
            let report = simulate(&h, &channels, stop, g.seed, *max_iters, workers)?;
            let mut t = Table::new(&["snr_or_eps", "frames", "bit_errors", "frame_errors", "ber", "fer", "avg_iters"]);
            for r in &report.rows {
                t.push(vec![
                    num(r.channel.parameter()),
                    r.frames.to_string(),
                    r.bit_errors.to_string(),
                    r.frame_errors.to_string(),
                    num(r.ber()),
                    num(r.fer()),
                    num(r.avg_iters()),
                ]);
            }
            emit(outputs, out, &t.to_csv())?;
        }
        Command::Reproduce { table } => {
            let dir = out.context("reproduce needs --out DIR")?;
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let t = reproduce(*table, g, workers)?;
            outputs.write(&dir.join(format!("{}.csv", table.name())), &t.to_csv())?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and writes
/// the manifest. On failure every file created by the run is removed.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let started = Instant::now();
    let mut outputs = Outputs::default();
    let result = run(&cli, &mut outputs).and_then(|()| {
        if outputs.is_empty() {
            return Ok(());
        }
        let manifest = RunManifest::new(
            cli.command.name(),
            serde_json::to_value(&cli)?,
            cli.global.seed,
            outputs.paths(),
            started.elapsed().as_secs_f64(),
        );
        let out = cli.global.out.as_ref().expect("files are only written under --out");
        let target = match &cli.command {
            Command::Reproduce { .. } => out.join("manifest.json"),
            _ => out.with_file_name(manifest_name(out)),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        outputs.write(&target, &text)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outputs.remove_all();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Used by tests that want the parsed structure without running anything.
pub fn parse<I, T>(args: I) -> Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Ok(Cli::try_parse_from(args)?)
}
