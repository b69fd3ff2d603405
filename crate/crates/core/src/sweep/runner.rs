use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::artifact::format_record;
use super::{plan_grid, run_cell, SweepArtifact, SweepConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Progress {
    /// Cells finished in this invocation.
    pub done: usize,
    /// Cells this invocation set out to run.
    pub total: usize,
    pub elapsed: Duration,
}

impl Progress {
    /// Linear extrapolation of the remaining time.
    pub fn eta(&self) -> Option<Duration> {
        (self.done > 0).then(|| {
            self.elapsed
                .mul_f64((self.total - self.done) as f64 / self.done as f64)
        })
    }
}

pub struct SweepOptions<'a> {
    /// Worker threads.
    pub jobs: usize,
    /// Stop after this many cells, leaving the artifact as an interrupted run
    /// would.
    pub stop_after: Option<usize>,
    pub progress: Option<&'a (dyn Fn(Progress) + Sync)>,
}

impl Default for SweepOptions<'_> {
    fn default() -> Self {
        SweepOptions {
            jobs: 1,
            stop_after: None,
            progress: None,
        }
    }
}

impl SweepOptions<'_> {
    pub fn with_jobs(jobs: usize) -> Self {
        SweepOptions {
            jobs,
            ..Default::default()
        }
    }
}

/// Runs every cell of `config`, checkpointing to `path` after each one. If
/// `path` already holds an artifact for the same configuration, only the
/// missing cells are run.
pub fn run_sweep(config: &SweepConfig, path: &Path, options: &SweepOptions) -> Result<SweepArtifact> {
    if path.exists() {
        return resume_checked(path, config, options);
    }
    config.validate()?;
    let artifact = SweepArtifact::new(*config);
    fs::write(path, artifact.header())
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    execute(artifact, path, 0, options)
}

/// Completes the artifact at `path` using the configuration in its header.
pub fn resume(path: &Path, options: &SweepOptions) -> Result<SweepArtifact> {
    let (artifact, intact) = SweepArtifact::load_with_length(path)?;
    execute(artifact, path, intact, options)
}

/// Like [`resume`], but first checks that the header matches `expected`.
pub fn resume_checked(
    path: &Path,
    expected: &SweepConfig,
    options: &SweepOptions,
) -> Result<SweepArtifact> {
    let (artifact, intact) = SweepArtifact::load_with_length(path)?;
    if artifact.config != *expected {
        return Err(Error::Mismatch(format!(
            "{} was produced with a different configuration\n  on disk:   {:?}\n  requested: {:?}",
            path.display(),
            artifact.config,
            expected
        )));
    }
    execute(artifact, path, intact, options)
}

fn execute(
    mut artifact: SweepArtifact,
    path: &Path,
    intact_len: u64,
    options: &SweepOptions,
) -> Result<SweepArtifact> {
    let config = artifact.config;
    let mut pending: Vec<_> = plan_grid(&config)?
        .into_iter()
        .filter(|t| artifact.cells[config.cell_index(t.i_k, t.i_gamma)].is_none())
        .collect();
    if pending.is_empty() {
        return Ok(artifact);
    }
    let interrupted = match options.stop_after {
        Some(n) if n < pending.len() => {
            pending.truncate(n);
            true
        }
        _ => false,
    };

    let mut file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    if intact_len > 0 {
        // Drop a partially written trailing record.
        file.set_len(intact_len)
            .map_err(|e| Error::io(format!("truncating {}", path.display()), e))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let total = pending.len();
    let start = Instant::now();
    let (tx, rx) = mpsc::channel();

    let write_result = thread::scope(|scope| {
        // Single writer: appends and flushes one record per finished cell.
        let artifact = &mut artifact;
        let writer = scope.spawn(move || -> Result<()> {
            let mut first_err = None;
            for (done, cell) in rx.into_iter().enumerate() {
                if first_err.is_none() {
                    if let Err(e) = file.write_all(format_record(&cell).as_bytes()).and_then(|_| file.flush()) {
                        first_err = Some(Error::io(format!("appending to {}", path.display()), e));
                    }
                }
                let idx = config.cell_index(cell.i_k, cell.i_gamma);
                artifact.cells[idx] = Some(cell);
                if let Some(report) = options.progress {
                    report(Progress {
                        done: done + 1,
                        total,
                        elapsed: start.elapsed(),
                    });
                }
            }
            first_err.map_or(Ok(()), Err)
        });
        pool.install(|| {
            pending.par_iter().for_each_with(tx, |tx, task| {
                let _ = tx.send(run_cell(task));
            });
        });
        writer.join().expect("artifact writer panicked")
    });
    write_result?;

    if !interrupted {
        // Rewrite in canonical row-major order so the file does not depend on
        // completion order.
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, artifact.render())
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|e| Error::io(format!("finalizing {}", path.display()), e))?;
    }
    Ok(artifact)
}
