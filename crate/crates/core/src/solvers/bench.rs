use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::direct::eliminate;
use super::exec::Executor;
use super::iterative::{gauss_seidel, jacobi_in};
use super::system::LinearSystem;
use super::SolverError;
use crate::Scalar;

pub const DEFAULT_TRIALS: usize = 100;
const BENCH_TOL: f64 = 1e-10;
const BENCH_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    Gauss,
    Jacobi,
    GaussSeidel,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 3] = [BenchMethod::Gauss, BenchMethod::Jacobi, BenchMethod::GaussSeidel];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Gauss => "gauss",
            BenchMethod::Jacobi => "jacobi",
            BenchMethod::GaussSeidel => "gauss-seidel",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchMethod {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gauss" => Ok(BenchMethod::Gauss),
            "jacobi" => Ok(BenchMethod::Jacobi),
            "gauss-seidel" => Ok(BenchMethod::GaussSeidel),
            other => Err(BenchError::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub method: BenchMethod,
    pub n: usize,
    pub workers: usize,
    pub trials: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n < 2 {
            return Err(BenchError::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.workers == 0 {
            return Err(BenchError::Config("workers must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// One timing row, keyed by `(method, n, workers)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub method: BenchMethod,
    pub n: usize,
    pub workers: usize,
    pub mean_s: f64,
    pub stddev_s: f64,
    pub mean_residual: f64,
}

impl TimingEntry {
    pub fn key(&self) -> (BenchMethod, usize, usize) {
        (self.method, self.n, self.workers)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    entries: Vec<TimingEntry>,
}

impl TimingReport {
    pub fn entries(&self) -> &[TimingEntry] {
        &self.entries
    }

    pub fn get(&self, method: BenchMethod, n: usize, workers: usize) -> Option<&TimingEntry> {
        self.entries.iter().find(|e| e.key() == (method, n, workers))
    }

    /// Adds an entry, replacing any existing one with the same key.
    pub fn insert(&mut self, entry: TimingEntry) {
        match self.entries.iter_mut().find(|e| e.key() == entry.key()) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn merge(&mut self, other: TimingReport) {
        for e in other.entries {
            self.insert(e);
        }
    }

    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("timing entries serialize") + "\n")
            .collect()
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<13} {:>6} {:>7} {:>14} {:>14} {:>14}\n",
            "method", "n", "workers", "mean_s", "stddev_s", "mean_residual"
        );
        for e in &self.entries {
            out += &format!(
                "{:<13} {:>6} {:>7} {:>14.7} {:>14.7} {:>14.3e}\n",
                e.method.as_str(),
                e.n,
                e.workers,
                e.mean_s,
                e.stddev_s,
                e.mean_residual
            );
        }
        out
    }
}

/// Seeded strictly dominant system: `a_ii = n`, off-diagonals uniform in
/// `[0, 1)`, right-hand side uniform in `[-1, 1)`.
pub fn dominant_system<T: Scalar>(n: usize, seed: u64) -> LinearSystem<T> {
    generate(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn generate<T: Scalar>(n: usize, rng: &mut impl Rng) -> LinearSystem<T> {
    let mut a = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            a.push(if i == j { n as f64 } else { rng.random::<f64>() });
        }
    }
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    LinearSystem::from_row_major(
        n,
        n,
        a.into_iter().map(T::of).collect(),
        y.into_iter().map(T::of).collect(),
    )
    .expect("generated system is well formed")
}

/// Times `trials` solves of freshly generated systems and reports the mean
/// and standard deviation of wall time plus the mean residual.
///
/// Gauss-Seidel sweeps are strictly ordered, so it always runs (and is
/// recorded) with one worker.
pub fn bench_solve<T: Scalar>(config: &BenchConfig) -> Result<TimingReport, BenchError> {
    config.validate()?;
    let workers = match config.method {
        BenchMethod::GaussSeidel => 1,
        _ => config.workers,
    };
    let exec = Executor::new(workers)?;
    let tol = T::of(BENCH_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut times = Vec::with_capacity(config.trials);
    let mut residual_sum = 0.0;
    for _ in 0..config.trials {
        let system = generate::<T>(config.n, &mut rng);
        let start = Instant::now();
        let result = match config.method {
            BenchMethod::Gauss => eliminate(&system, &exec)?,
            BenchMethod::Jacobi => jacobi_in(&system, tol, BENCH_MAX_ITER, &exec)?,
            BenchMethod::GaussSeidel => gauss_seidel(&system, tol, BENCH_MAX_ITER)?,
        };
        times.push(start.elapsed().as_secs_f64());
        residual_sum += result.residual_norm.to_f64_lossy();
    }

    let count = times.len() as f64;
    let mean = times.iter().sum::<f64>() / count;
    let stddev = if times.len() > 1 {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut report = TimingReport::default();
    report.insert(TimingEntry {
        method: config.method,
        n: config.n,
        workers: exec.workers(),
        mean_s: mean,
        stddev_s: stddev,
        mean_residual: residual_sum / count,
    });
    Ok(report)
}
