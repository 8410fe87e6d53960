//! Seeded random-walk candle series for tests, benchmarks, and demo data.
//!
//! Generation is fully deterministic in the seed (ChaCha8), so fixtures
//! can be regenerated anywhere and byte-compared.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::market_data::{Candle, CandleSeries, Granularity, Instrument, Price};

/// Parameters for [`random_walk`].
#[derive(Debug, Clone, Copy)]
pub struct WalkParams {
    pub seed: u64,
    pub candles: usize,
    pub start: DateTime<Utc>,
    /// First candle's open, in pipettes.
    pub start_price: Price,
    /// Maximum body size per candle, pipettes.
    pub max_body: i64,
    /// Maximum wick beyond the body on each side, pipettes.
    pub max_wick: i64,
    /// When false, every candle closes away from its open.
    pub allow_doji: bool,
}

impl WalkParams {
    pub fn new(seed: u64, candles: usize) -> WalkParams {
        WalkParams {
            seed,
            candles,
            start: Utc.with_ymd_and_hms(2010, 1, 4, 0, 0, 0).unwrap(),
            start_price: Price(110_000),
            max_body: 30,
            max_wick: 15,
            allow_doji: true,
        }
    }

    pub fn no_doji(mut self) -> WalkParams {
        self.allow_doji = false;
        self
    }
}

/// Generate a gapless random-walk series: each candle opens at the
/// previous close, timestamps advance by exactly one granularity period.
pub fn random_walk(
    instrument: &Instrument,
    granularity: Granularity,
    params: &WalkParams,
) -> CandleSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let step = Duration::seconds(granularity.duration_secs() as i64);
    let mut candles = Vec::with_capacity(params.candles);
    let mut open = params.start_price.0;
    for i in 0..params.candles {
        let body = loop {
            let b = rng.gen_range(-params.max_body..=params.max_body);
            if params.allow_doji || b != 0 {
                break b;
            }
        };
        let close = (open + body).max(1);
        let wick_up = rng.gen_range(0..=params.max_wick);
        let wick_down = rng.gen_range(0..=params.max_wick);
        let high = open.max(close) + wick_up;
        let low = (open.min(close) - wick_down).max(1);
        candles.push(Candle {
            timestamp: params.start + step * i as i32,
            open: Price(open),
            high: Price(high),
            low: Price(low),
            close: Price(close),
            volume: Some(rng.gen_range(1..=1_000) as f64),
        });
        open = close;
    }
    CandleSeries::new(instrument.clone(), granularity, candles)
        .expect("generated candles satisfy the series invariants")
}
