//! Thread-pool drivers. Results never depend on the worker count.

use anyhow::{Context, Result};
use rayon::prelude::*;
use rayon::ThreadPool;
use scloop_core::lift::SparseParityCheck;
use scloop_core::sim::{Channel, FrameOutcome, FrameRunner, SimReport, SimRow, StopRule};

/// Environment variable consulted when `--workers` is not given.
pub const WORKERS_ENV: &str = "SCLOOP_WORKERS";

/// Worker count from the flag, then the environment, then the machine.
pub fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(WORKERS_ENV).ok()?.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building thread pool")
}

/// Maps `f` over `items` on `workers` threads, keeping input order.
pub fn par_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    Ok(pool(workers)?.install(|| items.par_iter().map(f).collect()))
}

/// Frames decoded per parallel batch, per worker.
const BATCH_PER_WORKER: u64 = 16;

/// Parallel counterpart of [`scloop_core::sim::simulate`] with identical
/// output: frames are decoded in batches, then folded in frame order up to
/// the first frame that meets the stop rule.
pub fn simulate(
    h: &SparseParityCheck,
    channels: &[Channel],
    stop: StopRule,
    seed: u64,
    max_iters: usize,
    workers: usize,
) -> Result<SimReport> {
    let pool = pool(workers)?;
    let batch = BATCH_PER_WORKER * workers.max(1) as u64;
    let rows = channels
        .iter()
        .map(|&ch| {
            let mut row = SimRow::new(ch, h.transmitted() as u64);
            while !row.done(&stop) {
                let start = row.frames;
                let end = (start + batch).min(stop.max_frames);
                let outcomes: Vec<FrameOutcome> = pool.install(|| {
                    (start..end)
                        .into_par_iter()
                        .map_init(|| FrameRunner::new(h, max_iters), |r, i| r.run(ch, seed, i))
                        .collect()
                });
                for o in outcomes {
                    row.push(o);
                    if row.done(&stop) {
                        break;
                    }
                }
            }
            row
        })
        .collect();
    Ok(SimReport {
        rows,
        seed,
        max_iters,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use scloop_core::ensembles::build_chain;
    use scloop_core::lift::{lift, LiftConfig};
    use scloop_core::sim;

    #[test]
    fn matches_sequential_for_any_worker_count() {
        let h = lift(&build_chain(3, 6, 6).unwrap(), &LiftConfig::new(32, 5, true)).unwrap();
        let chans = [Channel::Bec(0.45), Channel::Awgn { ebn0_db: 1.5, rate: 1.0 / 3.0 }];
        let stop = StopRule { min_frame_errors: 7, max_frames: 400 };
        let seq = sim::simulate(&h, &chans, stop, 3, 50);
        for w in [1, 2, 3] {
            assert_eq!(simulate(&h, &chans, stop, 3, 50, w).unwrap(), seq);
        }
    }
}
