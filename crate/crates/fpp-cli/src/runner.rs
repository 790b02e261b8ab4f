//! Replica scheduling: a fixed-size worker pool dispatching replicas by
//! index.  Results come back in index order, so aggregation order — and
//! therefore every downstream byte — is independent of the worker count
//! and of completion timing.

use std::io::IsTerminal;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::errors::{CliError, CliResult};

pub const WORKERS_ENV: &str = "FPP_LAB_WORKERS";

/// Build the pool: `--workers` flag beats the `FPP_LAB_WORKERS` env var
/// beats the machine's logical CPU count.
pub fn build_pool(flag: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let from_env = || {
        std::env::var(WORKERS_ENV)
            .ok()
            .map(|v| {
                v.trim().parse::<usize>().map_err(|_| {
                    CliError::usage(format!("{WORKERS_ENV}='{v}' is not a worker count"))
                })
            })
            .transpose()
    };
    let workers = match flag {
        Some(w) => Some(w),
        None => from_env()?,
    };
    if workers == Some(0) {
        return Err(CliError::usage("worker count must be at least 1".to_string()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0)) // 0 = rayon default (logical CPUs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot build worker pool: {e}")))
}

/// Run `count` independent replicas on the pool and return their results
/// in replica order.  `label` drives a progress counter on stderr when
/// stderr is a terminal; plain runs (tests, pipes) stay silent.
pub fn run_replicas<T, F>(
    pool: &rayon::ThreadPool,
    label: &str,
    count: u64,
    f: F,
) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> fpp_core::Result<T> + Sync,
{
    let progress = std::io::stderr().is_terminal();
    let done = AtomicU64::new(0);
    let out: fpp_core::Result<Vec<T>> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|r| {
                let value = f(r)?;
                if progress {
                    let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                    eprint!("\r{label}: {k}/{count} replicas");
                    if k == count {
                        eprintln!();
                    }
                }
                Ok(value)
            })
            .collect()
    });
    Ok(out?)
}
