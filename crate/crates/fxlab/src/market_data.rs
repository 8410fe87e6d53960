//! OHLC market data: instruments, granularities, candle series, and CSV ingestion.
//!
//! Prices are carried internally as integer multiples of one *pipette*
//! (a tenth of a pip), which keeps balance arithmetic exact and makes
//! parallel runs independent of evaluation order. One data subset is a
//! `(instrument, granularity)` pair stored in a single CSV file; a parsed
//! subset is a [`CandleSeries`] backed by both a serial list and a
//! timestamp-keyed index.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

/// An absolute quote expressed in pipettes (tenths of a pip).
///
/// The pipette scale depends on the instrument (`1e-5` price units for
/// 4-decimal pairs, `1e-3` for JPY pairs); a bare `Price` is only
/// meaningful next to its [`Instrument`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(pub i64);

impl Price {
    /// Offset this price by a pip amount (1 pipette = 0.1 pip of movement).
    pub fn offset(self, by: Pips) -> Price {
        Price(self.0 + by.tenths())
    }

    /// Signed distance `self - other` as pips.
    pub fn diff(self, other: Price) -> Pips {
        Pips::from_tenths(self.0 - other.0)
    }
}

/// A pip quantity stored as an integer number of tenths of a pip.
///
/// All trade parameters (TP, SL, spread) and balances use this type, so
/// every simulation sum is exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pips(i64);

impl Pips {
    pub const ZERO: Pips = Pips(0);

    pub const fn from_tenths(tenths: i64) -> Pips {
        Pips(tenths)
    }

    pub fn from_whole(pips: i64) -> Pips {
        Pips(pips * 10)
    }

    /// Exact conversion from a decimal pip value; `None` if the value is
    /// not a multiple of 0.1 pips.
    pub fn from_decimal(value: Decimal) -> Option<Pips> {
        let tenths = value * Decimal::from(10);
        if tenths.fract() != Decimal::ZERO {
            return None;
        }
        tenths.trunc().to_i64().map(Pips)
    }

    pub fn tenths(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }

    pub fn to_decimal(self) -> Decimal {
        Decimal::new(self.0, 1).normalize()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn abs(self) -> Pips {
        Pips(self.0.abs())
    }
}

impl std::ops::Add for Pips {
    type Output = Pips;
    fn add(self, rhs: Pips) -> Pips {
        Pips(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Pips {
    type Output = Pips;
    fn sub(self, rhs: Pips) -> Pips {
        Pips(self.0 - rhs.0)
    }
}

impl std::ops::Neg for Pips {
    type Output = Pips;
    fn neg(self) -> Pips {
        Pips(-self.0)
    }
}

impl std::ops::AddAssign for Pips {
    fn add_assign(&mut self, rhs: Pips) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for Pips {
    /// Whole pip counts print without a fraction (`14`), everything else
    /// with one decimal (`2.5`, `-3.5`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        if a % 10 == 0 {
            write!(f, "{}{}", sign, a / 10)
        } else {
            write!(f, "{}{}.{}", sign, a / 10, a % 10)
        }
    }
}

impl Serialize for Pips {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A tradable Forex pair with its pip size and quote precision.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instrument {
    code: String,
    /// pip_size = 10^-pip_exponent price units.
    pip_exponent: u32,
    display_name: String,
}

impl Instrument {
    /// `pip_size` must be a unit power of ten (1, 0.1, ..., 1e-8).
    pub fn new(
        code: impl Into<String>,
        pip_size: Decimal,
        display_name: impl Into<String>,
    ) -> Result<Instrument, MarketDataError> {
        let norm = pip_size.normalize();
        if norm.mantissa() != 1 || norm.scale() > 8 {
            return Err(MarketDataError::InvalidPipSize { pip_size });
        }
        Ok(Instrument {
            code: code.into(),
            pip_exponent: norm.scale(),
            display_name: display_name.into(),
        })
    }

    /// The three instruments of the 10-year data set.
    pub fn builtin(code: &str) -> Option<Instrument> {
        let (pip_exponent, display_name) = match code.to_ascii_uppercase().as_str() {
            "EURUSD" => (4, "Euro/U.S. Dollar"),
            "USDJPY" => (2, "U.S. Dollar/Japanese Yen"),
            "EURJPY" => (2, "Euro/Japanese Yen"),
            _ => return None,
        };
        Some(Instrument {
            code: code.to_ascii_uppercase(),
            pip_exponent,
            display_name: display_name.to_string(),
        })
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn display_name(&self) -> &str {
        &self.display_name
    }

    pub fn pip_size(&self) -> Decimal {
        Decimal::new(1, self.pip_exponent)
    }

    /// Number of fractional digits of one pipette (pip digits + 1).
    pub fn quote_decimals(&self) -> u32 {
        self.pip_exponent + 1
    }

    fn pipette_per_unit(&self) -> i64 {
        10i64.pow(self.quote_decimals())
    }

    /// One pipette expressed in price units.
    pub fn pipette_size_f64(&self) -> f64 {
        10f64.powi(-(self.quote_decimals() as i32))
    }

    /// Exact decimal-string to pipette conversion. Fails on values with
    /// sub-pipette precision (they are not representable).
    pub fn parse_price(&self, text: &str) -> Result<Price, String> {
        let value = Decimal::from_str(text.trim())
            .map_err(|e| format!("unparseable price {text:?}: {e}"))?;
        self.price_from_decimal(value)
    }

    pub fn price_from_decimal(&self, value: Decimal) -> Result<Price, String> {
        let scaled = value * Decimal::from(self.pipette_per_unit());
        if scaled.fract() != Decimal::ZERO {
            return Err(format!(
                "price {value} has sub-pipette precision (finer than {} decimals)",
                self.quote_decimals()
            ));
        }
        scaled
            .trunc()
            .to_i64()
            .map(Price)
            .ok_or_else(|| format!("price {value} out of range"))
    }

    /// Render a price with the instrument's full quote precision.
    pub fn format_price(&self, price: Price) -> String {
        let per_unit = self.pipette_per_unit();
        let sign = if price.0 < 0 { "-" } else { "" };
        let a = price.0.unsigned_abs();
        let unit = a / per_unit as u64;
        let frac = a % per_unit as u64;
        format!(
            "{}{}.{:0width$}",
            sign,
            unit,
            frac,
            width = self.quote_decimals() as usize
        )
    }

    pub fn price_to_decimal(&self, price: Price) -> Decimal {
        Decimal::new(price.0, self.quote_decimals())
    }

    /// Price units carried by one pip times `pips` (e.g. 14 pips on a JPY
    /// pair -> 0.14 price units).
    pub fn pips_to_price_units(&self, pips: Decimal) -> Decimal {
        pips * self.pip_size()
    }
}

/// Candle period. Ordering follows duration (H1 < H2 < ... < D1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Granularity {
    H1,
    H2,
    H4,
    H8,
    H12,
    D1,
}

impl Granularity {
    pub const ALL: [Granularity; 6] = [
        Granularity::H1,
        Granularity::H2,
        Granularity::H4,
        Granularity::H8,
        Granularity::H12,
        Granularity::D1,
    ];

    pub fn duration_secs(self) -> u32 {
        match self {
            Granularity::H1 => 3_600,
            Granularity::H2 => 7_200,
            Granularity::H4 => 14_400,
            Granularity::H8 => 28_800,
            Granularity::H12 => 43_200,
            Granularity::D1 => 86_400,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Granularity::H1 => "H1",
            Granularity::H2 => "H2",
            Granularity::H4 => "H4",
            Granularity::H8 => "H8",
            Granularity::H12 => "H12",
            Granularity::D1 => "D1",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Granularity {
    type Err = MarketDataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "H1" => Ok(Granularity::H1),
            "H2" => Ok(Granularity::H2),
            "H4" => Ok(Granularity::H4),
            "H8" => Ok(Granularity::H8),
            "H12" => Ok(Granularity::H12),
            "D1" => Ok(Granularity::D1),
            _ => Err(MarketDataError::UnknownGranularity {
                code: s.to_string(),
            }),
        }
    }
}

/// One OHLC candlestick. `timestamp` is the candle open time (UTC).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candle {
    pub timestamp: DateTime<Utc>,
    pub open: Price,
    pub high: Price,
    pub low: Price,
    pub close: Price,
    /// Parsed and retained, never used by any computation.
    pub volume: Option<f64>,
}

impl Candle {
    pub fn is_doji(&self) -> bool {
        self.open == self.close
    }

    fn check(&self) -> Option<ViolationKind> {
        for (name, p) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if p.0 <= 0 {
                return Some(ViolationKind::NonPositivePrice { field: name });
            }
        }
        if self.high < self.low {
            return Some(ViolationKind::HighBelowLow);
        }
        if self.high < self.open.max(self.close) {
            return Some(ViolationKind::HighBelowBody);
        }
        if self.low > self.open.min(self.close) {
            return Some(ViolationKind::LowAboveBody);
        }
        if let Some(v) = self.volume {
            if v < 0.0 || v.is_nan() {
                return Some(ViolationKind::BadVolume);
            }
        }
        None
    }
}

/// Key identifying one data subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataSubsetKey {
    pub instrument: Instrument,
    pub granularity: Granularity,
}

impl DataSubsetKey {
    pub fn new(instrument: Instrument, granularity: Granularity) -> DataSubsetKey {
        DataSubsetKey {
            instrument,
            granularity,
        }
    }

    /// Canonical file name for the subset, e.g. `EURJPY-H1.csv`.
    pub fn file_name(&self) -> String {
        format!("{}-{}.csv", self.instrument.code(), self.granularity)
    }

    /// Sort key: instrument code, then granularity.
    pub fn ord_key(&self) -> (String, Granularity) {
        (self.instrument.code().to_string(), self.granularity)
    }
}

impl fmt::Display for DataSubsetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.instrument.code(), self.granularity)
    }
}

/// A validated, immutable candle series for one data subset.
///
/// Candles are stored both as a serial list and under a timestamp-keyed
/// hash index; both views always reference the identical candle set.
#[derive(Debug, Clone)]
pub struct CandleSeries {
    instrument: Instrument,
    granularity: Granularity,
    candles: Vec<Candle>,
    index: HashMap<i64, usize>,
}

impl CandleSeries {
    pub fn new(
        instrument: Instrument,
        granularity: Granularity,
        candles: Vec<Candle>,
    ) -> Result<CandleSeries, MarketDataError> {
        let series = CandleSeries::new_unchecked(instrument, granularity, candles);
        if let Some(v) = validate_series(&series).into_iter().next() {
            return match v.kind {
                ViolationKind::NonMonotonicTimestamp => {
                    Err(MarketDataError::NonMonotonicTimestamps { line: v.line })
                }
                kind => Err(MarketDataError::InvariantViolation {
                    line: v.line,
                    detail: kind.to_string(),
                }),
            };
        }
        Ok(series)
    }

    /// Skips validation; callers must uphold the series invariants.
    pub(crate) fn new_unchecked(
        instrument: Instrument,
        granularity: Granularity,
        candles: Vec<Candle>,
    ) -> CandleSeries {
        let index = candles
            .iter()
            .enumerate()
            .map(|(i, c)| (c.timestamp.timestamp(), i))
            .collect();
        CandleSeries {
            instrument,
            granularity,
            candles,
            index,
        }
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn key(&self) -> DataSubsetKey {
        DataSubsetKey::new(self.instrument.clone(), self.granularity)
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    /// Keyed lookup by candle open time.
    pub fn get(&self, timestamp: DateTime<Utc>) -> Option<&Candle> {
        self.index
            .get(&timestamp.timestamp())
            .map(|&i| &self.candles[i])
    }

    /// Close prices in price units, for indicator arithmetic.
    pub fn closes_f64(&self) -> Vec<f64> {
        let pipette = self.instrument.pipette_size_f64();
        self.candles
            .iter()
            .map(|c| c.close.0 as f64 * pipette)
            .collect()
    }

    /// Sub-series restricted to candles with `from <= timestamp < to`.
    pub fn window(
        &self,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    ) -> Result<CandleSeries, MarketDataError> {
        let first = self.candles.first().map(|c| c.timestamp);
        let last = self.candles.last().map(|c| c.timestamp);
        let covered = match (first, last) {
            (Some(f), Some(l)) => from <= l && to > f && from < to,
            _ => false,
        };
        if !covered {
            return Err(MarketDataError::WindowOutOfRange);
        }
        let candles: Vec<Candle> = self
            .candles
            .iter()
            .filter(|c| c.timestamp >= from && c.timestamp < to)
            .copied()
            .collect();
        if candles.is_empty() {
            return Err(MarketDataError::WindowOutOfRange);
        }
        Ok(CandleSeries::new_unchecked(
            self.instrument.clone(),
            self.granularity,
            candles,
        ))
    }
}

/// Errors raised while loading or validating market data.
#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("no data rows")]
    EmptyData,
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: {detail}")]
    InvariantViolation { line: usize, detail: String },
    #[error("line {line}: timestamps not strictly increasing")]
    NonMonotonicTimestamps { line: usize },
    #[error("granularity {granularity} spans more than one day")]
    UnsupportedGranularity { granularity: Granularity },
    #[error("unknown granularity code {code:?}")]
    UnknownGranularity { code: String },
    #[error("pip size {pip_size} is not a unit power of ten")]
    InvalidPipSize { pip_size: Decimal },
    #[error("requested window not covered by the series")]
    WindowOutOfRange,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single series invariant violation; `line` is the 1-based candle
/// position (or file line when produced by the parser).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LINE {}: {}", self.line, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NonPositivePrice { field: &'static str },
    HighBelowLow,
    HighBelowBody,
    LowAboveBody,
    BadVolume,
    NonMonotonicTimestamp,
    IndexMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NonPositivePrice { field } => {
                write!(f, "{field} price is not positive")
            }
            ViolationKind::HighBelowLow => write!(f, "high below low"),
            ViolationKind::HighBelowBody => write!(f, "high below max(open, close)"),
            ViolationKind::LowAboveBody => write!(f, "low above min(open, close)"),
            ViolationKind::BadVolume => write!(f, "volume is negative or not a number"),
            ViolationKind::NonMonotonicTimestamp => {
                write!(f, "timestamps not strictly increasing")
            }
            ViolationKind::IndexMismatch => {
                write!(f, "keyed index disagrees with the serial list")
            }
        }
    }
}

/// Check every series invariant; returns all violations, never mutates.
pub fn validate_series(series: &CandleSeries) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut prev: Option<DateTime<Utc>> = None;
    for (i, candle) in series.candles.iter().enumerate() {
        let line = i + 1;
        if let Some(kind) = candle.check() {
            out.push(Violation { line, kind });
        }
        if let Some(p) = prev {
            if candle.timestamp <= p {
                out.push(Violation {
                    line,
                    kind: ViolationKind::NonMonotonicTimestamp,
                });
            }
        }
        prev = Some(candle.timestamp);
        match series.index.get(&candle.timestamp.timestamp()) {
            Some(&at)
                if std::ptr::eq(&series.candles[at], candle) || series.candles[at] == *candle => {}
            _ => out.push(Violation {
                line,
                kind: ViolationKind::IndexMismatch,
            }),
        }
    }
    if series.index.len() != series.candles.len() {
        out.push(Violation {
            line: series.candles.len(),
            kind: ViolationKind::IndexMismatch,
        });
    }
    out
}

/// Count UTC days fully populated with candles (exactly `86400/duration`
/// candles dated on that day).
pub fn complete_day_count(series: &CandleSeries) -> Result<usize, MarketDataError> {
    let dur = series.granularity.duration_secs();
    if dur > 86_400 {
        return Err(MarketDataError::UnsupportedGranularity {
            granularity: series.granularity,
        });
    }
    let per_day = (86_400 / dur) as usize;
    let mut by_day: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for candle in &series.candles {
        *by_day.entry(candle.timestamp.date_naive()).or_insert(0) += 1;
    }
    Ok(by_day.values().filter(|&&n| n == per_day).count())
}

const CANONICAL_HEADER: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];
const CANONICAL_TS: &str = "%Y-%m-%dT%H:%M:%SZ";
/// Broker-export dialect: `Gmt time` header, `DD.MM.YYYY HH:MM:SS.mmm`.
const BROKER_TS: &str = "%d.%m.%Y %H:%M:%S%.3f";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Canonical,
    Broker,
}

/// Parse one subset CSV file into a validated series.
pub fn parse_csv(
    path: impl AsRef<Path>,
    instrument: Instrument,
    granularity: Granularity,
) -> Result<CandleSeries, MarketDataError> {
    let file = File::open(path.as_ref())?;
    parse_csv_reader(BufReader::new(file), instrument, granularity)
}

pub fn parse_csv_reader<R: Read>(
    reader: R,
    instrument: Instrument,
    granularity: Granularity,
) -> Result<CandleSeries, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| MarketDataError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?,
        None => return Err(MarketDataError::EmptyData),
    };
    let dialect = detect_dialect(&header)?;

    let mut candles: Vec<Candle> = Vec::new();
    let mut prev_ts: Option<DateTime<Utc>> = None;
    for rec in records {
        let rec = rec.map_err(|e| MarketDataError::MalformedRow {
            line: 0,
            reason: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let candle = parse_row(&rec, line, dialect, &instrument)?;
        if let Some(kind) = candle.check() {
            return Err(MarketDataError::InvariantViolation {
                line,
                detail: kind.to_string(),
            });
        }
        if let Some(p) = prev_ts {
            if candle.timestamp <= p {
                return Err(MarketDataError::NonMonotonicTimestamps { line });
            }
        }
        prev_ts = Some(candle.timestamp);
        candles.push(candle);
    }
    if candles.is_empty() {
        return Err(MarketDataError::EmptyData);
    }
    CandleSeries::new(instrument, granularity, candles)
}

fn detect_dialect(header: &csv::StringRecord) -> Result<Dialect, MarketDataError> {
    let first = header.get(0).unwrap_or("").trim();
    if first.eq_ignore_ascii_case("Gmt time") {
        return Ok(Dialect::Broker);
    }
    let fields: Vec<String> = header
        .iter()
        .map(|f| f.trim().to_ascii_lowercase())
        .collect();
    if fields.len() >= 5
        && fields.len() <= 6
        && fields
            .iter()
            .zip(CANONICAL_HEADER.iter())
            .all(|(a, b)| a == b)
    {
        return Ok(Dialect::Canonical);
    }
    Err(MarketDataError::MalformedRow {
        line: 1,
        reason: format!(
            "unrecognized header {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        ),
    })
}

fn parse_row(
    rec: &csv::StringRecord,
    line: usize,
    dialect: Dialect,
    instrument: &Instrument,
) -> Result<Candle, MarketDataError> {
    if rec.len() < 5 || rec.len() > 6 {
        return Err(MarketDataError::MalformedRow {
            line,
            reason: format!("expected 5 or 6 fields, found {}", rec.len()),
        });
    }
    let ts_text = rec[0].trim();
    let format = match dialect {
        Dialect::Canonical => CANONICAL_TS,
        Dialect::Broker => BROKER_TS,
    };
    let timestamp = NaiveDateTime::parse_from_str(ts_text, format)
        .map_err(|e| MarketDataError::MalformedRow {
            line,
            reason: format!("bad timestamp {ts_text:?}: {e}"),
        })?
        .and_utc();

    let mut prices = [Price(0); 4];
    for (slot, idx) in prices.iter_mut().zip(1..=4) {
        *slot = instrument
            .parse_price(&rec[idx])
            .map_err(|reason| MarketDataError::MalformedRow { line, reason })?;
    }
    let volume = match rec.get(5).map(str::trim) {
        None | Some("") => None,
        Some(text) => Some(
            text.parse::<f64>()
                .map_err(|e| MarketDataError::MalformedRow {
                    line,
                    reason: format!("bad volume {text:?}: {e}"),
                })?,
        ),
    };

    Ok(Candle {
        timestamp,
        open: prices[0],
        high: prices[1],
        low: prices[2],
        close: prices[3],
        volume,
    })
}

/// Write a series in the canonical CSV format. Files produced here parse
/// back bit-identically.
pub fn write_canonical_csv<W: Write>(series: &CandleSeries, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CANONICAL_HEADER.join(","))?;
    let instrument = series.instrument();
    for c in series.candles() {
        let volume = c.volume.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.timestamp.format(CANONICAL_TS),
            instrument.format_price(c.open),
            instrument.format_price(c.high),
            instrument.format_price(c.low),
            instrument.format_price(c.close),
            volume
        )?;
    }
    Ok(())
}

pub fn write_canonical_csv_file(
    series: &CandleSeries,
    path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let mut file = File::create(path)?;
    write_canonical_csv(series, &mut file)
}
