//! Deterministic OHLC backtesting and trade-parameter optimization for
//! Forex price-action heuristics.
//!
//! The pipeline: load per-`(instrument, granularity)` candle subsets from
//! CSV ([`market_data`]), map closed candles to trade decisions
//! ([`heuristics`]), replay a subset under one TP/SL configuration
//! ([`simulator`]), sweep the whole TP/SL grid per subset in parallel
//! ([`optimizer`]), and aggregate the results into ranked summary tables
//! ([`reporting`]). [`indicators`] provides the MACD/RSI signal-rate
//! counters used to compare indicator trading against per-candle price
//! action, and [`synthetic`] generates seeded random-walk fixtures.

pub mod cli;
pub mod heuristics;
pub mod indicators;
pub mod market_data;
pub mod optimizer;
pub mod reporting;
pub mod simulator;
pub mod synthetic;

pub use heuristics::{HeuristicId, TradeSignal};
pub use market_data::{Candle, CandleSeries, DataSubsetKey, Granularity, Instrument, Pips, Price};
pub use optimizer::{GridSpec, JobResult, OptimizationRecord};
pub use simulator::{IntraCandlePolicy, SimulationResult, TradeConfig};
