//! Exhaustive (SL, TP) grid search over data subsets.
//!
//! Every `(subset, heuristic)` pair is one independent job; jobs run on a
//! fixed-size worker pool over immutable inputs, so results are
//! bit-identical for any worker count. Within a job the grid is swept
//! sequentially (one cache-friendly pass per tuple) and the best record
//! is the maximal final balance, ties broken by smaller SL then smaller
//! TP.

use rayon::prelude::*;
use thiserror::Error;

use crate::heuristics::HeuristicId;
use crate::market_data::{CandleSeries, DataSubsetKey, Pips};
use crate::simulator::{self, SimulationResult, SimulatorError, TradeConfig};

/// Inclusive SL/TP ranges with steps, all in pips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub sl_min: Pips,
    pub sl_max: Pips,
    pub sl_step: Pips,
    pub tp_min: Pips,
    pub tp_max: Pips,
    pub tp_step: Pips,
}

impl Default for GridSpec {
    /// The full sweep: SL and TP in `[3, 50]`, step 1 (2,304 tuples).
    fn default() -> Self {
        GridSpec {
            sl_min: Pips::from_whole(3),
            sl_max: Pips::from_whole(50),
            sl_step: Pips::from_whole(1),
            tp_min: Pips::from_whole(3),
            tp_max: Pips::from_whole(50),
            tp_step: Pips::from_whole(1),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        for (name, min, max, step) in [
            ("sl", self.sl_min, self.sl_max, self.sl_step),
            ("tp", self.tp_min, self.tp_max, self.tp_step),
        ] {
            if !step.is_positive() {
                return Err(OptimizerError::InvalidSpec {
                    reason: format!("{name} step must be positive, got {step}"),
                });
            }
            if min > max {
                return Err(OptimizerError::InvalidSpec {
                    reason: format!("{name} range [{min}, {max}] has min > max"),
                });
            }
            if !min.is_positive() {
                return Err(OptimizerError::InvalidSpec {
                    reason: format!("{name} values must be positive, got {min}"),
                });
            }
        }
        Ok(())
    }

    fn axis_len(min: Pips, max: Pips, step: Pips) -> u64 {
        ((max.tenths() - min.tenths()) / step.tenths()) as u64 + 1
    }

    /// Closed-form tuple count.
    pub fn count(&self) -> u64 {
        GridSpec::axis_len(self.sl_min, self.sl_max, self.sl_step)
            * GridSpec::axis_len(self.tp_min, self.tp_max, self.tp_step)
    }
}

/// Row-major enumeration of the grid: SL outer ascending, TP inner
/// ascending.
pub fn enumerate_grid(spec: &GridSpec) -> Result<Vec<(Pips, Pips)>, OptimizerError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.count() as usize);
    let mut sl = spec.sl_min;
    while sl <= spec.sl_max {
        let mut tp = spec.tp_min;
        while tp <= spec.tp_max {
            out.push((sl, tp));
            tp += spec.tp_step;
        }
        sl += spec.sl_step;
    }
    Ok(out)
}

/// The recorded quantities for one simulated configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizationRecord {
    pub key: DataSubsetKey,
    pub heuristic: HeuristicId,
    pub sl_pips: Pips,
    pub tp_pips: Pips,
    pub total_profit_pips: Pips,
    pub total_loss_pips: Pips,
    pub final_balance_pips: Pips,
    pub n_long: u64,
    pub n_short: u64,
}

impl OptimizationRecord {
    fn from_result(
        key: &DataSubsetKey,
        heuristic: HeuristicId,
        sl: Pips,
        tp: Pips,
        result: &SimulationResult,
    ) -> OptimizationRecord {
        OptimizationRecord {
            key: key.clone(),
            heuristic,
            sl_pips: sl,
            tp_pips: tp,
            total_profit_pips: result.total_profit_pips,
            total_loss_pips: result.total_loss_pips,
            final_balance_pips: result.final_balance_pips,
            n_long: result.n_long,
            n_short: result.n_short,
        }
    }

    pub fn trade_count(&self) -> u64 {
        self.n_long + self.n_short
    }

    /// True when `self` beats `other` under the optimization order:
    /// higher balance, then smaller SL, then smaller TP.
    fn beats(&self, other: &OptimizationRecord) -> bool {
        if self.final_balance_pips != other.final_balance_pips {
            return self.final_balance_pips > other.final_balance_pips;
        }
        if self.sl_pips != other.sl_pips {
            return self.sl_pips < other.sl_pips;
        }
        self.tp_pips < other.tp_pips
    }
}

/// Result of one `(subset, heuristic)` job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobResult {
    pub key: DataSubsetKey,
    pub heuristic: HeuristicId,
    pub best: OptimizationRecord,
    /// Every grid record, retained only on request.
    pub all: Option<Vec<OptimizationRecord>>,
}

/// A job that could not produce a result.
#[derive(Debug, Clone)]
pub struct JobError {
    pub key: DataSubsetKey,
    pub heuristic: HeuristicId,
    pub error: String,
}

/// Aggregated outcome of a run: completed jobs plus per-job failures,
/// both in canonical `(instrument, granularity, heuristic)` order.
#[derive(Debug, Clone, Default)]
pub struct OptimizeOutcome {
    pub results: Vec<JobResult>,
    pub errors: Vec<JobError>,
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid grid spec: {reason}")]
    InvalidSpec { reason: String },
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

/// Sweep the whole grid for one `(subset, heuristic)` job.
pub fn optimize_job(
    series: &CandleSeries,
    heuristic: HeuristicId,
    spec: &GridSpec,
    config_base: &TradeConfig,
    keep_all: bool,
) -> Result<JobResult, OptimizerError> {
    let grid = enumerate_grid(spec)?;
    let key = series.key();
    let mut best: Option<OptimizationRecord> = None;
    let mut all = keep_all.then(|| Vec::with_capacity(grid.len()));
    for (sl, tp) in grid {
        let config = config_base.with_levels(sl, tp);
        let result = simulator::simulate(series, heuristic, &config, false)?;
        let record = OptimizationRecord::from_result(&key, heuristic, sl, tp, &result);
        match &best {
            Some(b) if !record.beats(b) => {}
            _ => best = Some(record.clone()),
        }
        if let Some(all) = all.as_mut() {
            all.push(record);
        }
    }
    Ok(JobResult {
        key,
        heuristic,
        best: best.expect("grid is never empty"),
        all,
    })
}

/// Run every `(subset, heuristic)` job on `workers` threads.
///
/// Per-job failures are collected without aborting sibling jobs. The
/// output never depends on the worker count.
pub fn optimize_all(
    subsets: &[CandleSeries],
    heuristics: &[HeuristicId],
    spec: &GridSpec,
    config_base: &TradeConfig,
    workers: usize,
    keep_all: bool,
) -> Result<OptimizeOutcome, OptimizerError> {
    spec.validate()?;
    let mut jobs: Vec<(&CandleSeries, HeuristicId)> = subsets
        .iter()
        .flat_map(|s| heuristics.iter().map(move |&h| (s, h)))
        .collect();
    jobs.sort_by_key(|(series, heuristic)| (series.key().ord_key(), *heuristic));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| OptimizerError::WorkerPool(e.to_string()))?;

    let outcomes: Vec<Result<JobResult, JobError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(series, heuristic)| {
                optimize_job(series, heuristic, spec, config_base, keep_all).map_err(|e| JobError {
                    key: series.key(),
                    heuristic,
                    error: e.to_string(),
                })
            })
            .collect()
    });

    let mut outcome = OptimizeOutcome::default();
    for r in outcomes {
        match r {
            Ok(job) => outcome.results.push(job),
            Err(err) => outcome.errors.push(err),
        }
    }
    Ok(outcome)
}
