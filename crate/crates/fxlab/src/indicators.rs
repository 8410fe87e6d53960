//! MACD and RSI with signal-signature counting, plus the signal-rate
//! arithmetic used to compare indicator trading against per-candle price
//! action.
//!
//! Conventions (indicator values are famously tool-dependent, so ours are
//! fixed here): EMAs are seeded with the simple average of the first `n`
//! values and use `alpha = 2/(n+1)`; RSI uses Wilder smoothing (`1/n`)
//! seeded the same way, with an all-zero-change window defining RSI = 50.
//! A "signal signature" is a MACD histogram sign change or an RSI
//! crossing of the 30/70 thresholds.

use serde::Serialize;
use thiserror::Error;

use crate::market_data::CandleSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MacdParams {
    pub fast_len: usize,
    pub slow_len: usize,
    pub signal_len: usize,
}

impl MacdParams {
    pub fn new(
        fast_len: usize,
        slow_len: usize,
        signal_len: usize,
    ) -> Result<Self, IndicatorError> {
        let p = MacdParams {
            fast_len,
            slow_len,
            signal_len,
        };
        if fast_len == 0 || signal_len == 0 || fast_len >= slow_len {
            return Err(IndicatorError::InvalidParams {
                reason: format!(
                    "need 0 < fast ({fast_len}) < slow ({slow_len}) and signal ({signal_len}) > 0"
                ),
            });
        }
        Ok(p)
    }
}

impl Default for MacdParams {
    /// The classic 12/26/9 parameterization.
    fn default() -> Self {
        MacdParams {
            fast_len: 12,
            slow_len: 26,
            signal_len: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RsiParams {
    pub length: usize,
}

impl RsiParams {
    pub fn new(length: usize) -> Result<Self, IndicatorError> {
        if length < 2 {
            return Err(IndicatorError::InvalidParams {
                reason: format!("RSI length must be >= 2, got {length}"),
            });
        }
        Ok(RsiParams { length })
    }
}

impl Default for RsiParams {
    fn default() -> Self {
        RsiParams { length: 14 }
    }
}

/// Default RSI signal thresholds.
pub const RSI_LOW: f64 = 30.0;
pub const RSI_HIGH: f64 = 70.0;

/// A candle-aligned indicator: one optional value per candle, undefined
/// (`None`) during warm-up only.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries(Vec<Option<f64>>);

impl IndicatorSeries {
    pub fn values(&self) -> &[Option<f64>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the first defined value, if any.
    pub fn defined_from(&self) -> Option<usize> {
        self.0.iter().position(Option::is_some)
    }

    /// The defined suffix as plain values.
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().filter_map(|v| *v)
    }
}

/// MACD output: the MACD line, its signal line, and their difference.
#[derive(Debug, Clone)]
pub struct MacdSeries {
    pub macd_line: IndicatorSeries,
    pub signal_line: IndicatorSeries,
    pub histogram: IndicatorSeries,
}

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("not enough candles: have {have}, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("invalid indicator parameters: {reason}")]
    InvalidParams { reason: String },
}

/// EMA over an optional-valued input whose defined region is a contiguous
/// suffix. Seeded with the simple average of the first `n` defined values.
fn ema(values: &[Option<f64>], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    let start = match values.iter().position(Option::is_some) {
        Some(s) => s,
        None => return out,
    };
    if values.len() - start < n {
        return out;
    }
    let alpha = 2.0 / (n as f64 + 1.0);
    let seed_end = start + n; // exclusive
    let seed: f64 = values[start..seed_end]
        .iter()
        .map(|v| v.unwrap())
        .sum::<f64>()
        / n as f64;
    out[seed_end - 1] = Some(seed);
    let mut prev = seed;
    for i in seed_end..values.len() {
        let x = values[i].expect("defined suffix is contiguous");
        let next = alpha * x + (1.0 - alpha) * prev;
        out[i] = Some(next);
        prev = next;
    }
    out
}

/// MACD line, signal line, and histogram over the series closes.
pub fn macd(series: &CandleSeries, params: &MacdParams) -> Result<MacdSeries, IndicatorError> {
    let need = params.slow_len + params.signal_len;
    if series.len() < need {
        return Err(IndicatorError::InsufficientData {
            have: series.len(),
            need,
        });
    }
    let closes: Vec<Option<f64>> = series.closes_f64().into_iter().map(Some).collect();
    let fast = ema(&closes, params.fast_len);
    let slow = ema(&closes, params.slow_len);
    let macd_line: Vec<Option<f64>> = fast
        .iter()
        .zip(&slow)
        .map(|(f, s)| match (f, s) {
            (Some(f), Some(s)) => Some(f - s),
            _ => None,
        })
        .collect();
    let signal_line = ema(&macd_line, params.signal_len);
    let histogram: Vec<Option<f64>> = macd_line
        .iter()
        .zip(&signal_line)
        .map(|(m, s)| match (m, s) {
            (Some(m), Some(s)) => Some(m - s),
            _ => None,
        })
        .collect();
    Ok(MacdSeries {
        macd_line: IndicatorSeries(macd_line),
        signal_line: IndicatorSeries(signal_line),
        histogram: IndicatorSeries(histogram),
    })
}

/// Wilder-smoothed RSI in `[0, 100]`.
pub fn rsi(series: &CandleSeries, params: &RsiParams) -> Result<IndicatorSeries, IndicatorError> {
    let n = params.length;
    if series.len() <= n {
        return Err(IndicatorError::InsufficientData {
            have: series.len(),
            need: n + 1,
        });
    }
    let closes = series.closes_f64();
    let mut out = vec![None; closes.len()];

    let mut avg_gain = 0.0;
    let mut avg_loss = 0.0;
    for i in 1..=n {
        let d = closes[i] - closes[i - 1];
        avg_gain += d.max(0.0);
        avg_loss += (-d).max(0.0);
    }
    avg_gain /= n as f64;
    avg_loss /= n as f64;
    out[n] = Some(rsi_value(avg_gain, avg_loss));

    for i in (n + 1)..closes.len() {
        let d = closes[i] - closes[i - 1];
        avg_gain = (avg_gain * (n as f64 - 1.0) + d.max(0.0)) / n as f64;
        avg_loss = (avg_loss * (n as f64 - 1.0) + (-d).max(0.0)) / n as f64;
        out[i] = Some(rsi_value(avg_gain, avg_loss));
    }
    Ok(IndicatorSeries(out))
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_loss == 0.0 && avg_gain == 0.0 {
        // no movement at all in the window
        50.0
    } else if avg_loss == 0.0 {
        100.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// Count MACD signal signatures: consecutive-candle pairs where the
/// histogram changes sign. A zero value inherits the previous sign.
pub fn count_macd_signals(
    series: &CandleSeries,
    params: &MacdParams,
) -> Result<usize, IndicatorError> {
    let m = macd(series, params)?;
    let mut count = 0usize;
    let mut prev_sign = 0i8;
    for h in m.histogram.defined() {
        let sign = if h > 0.0 {
            1
        } else if h < 0.0 {
            -1
        } else {
            prev_sign
        };
        if prev_sign != 0 && sign != 0 && sign != prev_sign {
            count += 1;
        }
        if sign != 0 {
            prev_sign = sign;
        }
    }
    Ok(count)
}

/// Count RSI signal signatures: strict crossings of the `low` or `high`
/// threshold between consecutive defined values, counted per threshold
/// (a jump across both thresholds contributes two).
pub fn count_rsi_signals(
    series: &CandleSeries,
    params: &RsiParams,
    low: f64,
    high: f64,
) -> Result<usize, IndicatorError> {
    let r = rsi(series, params)?;
    let values: Vec<f64> = r.defined().collect();
    let mut count = 0usize;
    for pair in values.windows(2) {
        for threshold in [low, high] {
            let (a, b) = (pair[0], pair[1]);
            if (a < threshold && b > threshold) || (a > threshold && b < threshold) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Count price-action signals: every candle that closes away from its
/// open delivers one (dojis deliver none).
pub fn count_priceaction_signals(series: &CandleSeries) -> usize {
    series.candles().iter().filter(|c| !c.is_doji()).count()
}

/// Expected number of successful trades for a signal count at a given
/// success rate in `[0, 1]`.
pub fn expected_successful_trades(signal_count: u64, success_rate: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&success_rate));
    signal_count as f64 * success_rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Candle, CandleSeries, Granularity, Instrument, Price};
    use chrono::{Duration, TimeZone, Utc};

    fn series_from_closes(closes: &[i64]) -> CandleSeries {
        let start = Utc.with_ymd_and_hms(2019, 11, 1, 0, 0, 0).unwrap();
        let candles: Vec<Candle> = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let open = if i == 0 { c } else { closes[i - 1] };
                Candle {
                    timestamp: start + Duration::hours(i as i64),
                    open: Price(open),
                    high: Price(open.max(c) + 5),
                    low: Price((open.min(c) - 5).max(1)),
                    close: Price(c),
                    volume: None,
                }
            })
            .collect();
        CandleSeries::new(
            Instrument::builtin("EURUSD").unwrap(),
            Granularity::H1,
            candles,
        )
        .unwrap()
    }

    /// Literal per-definition recurrence: plain loops, seeded SMA.
    fn ema_oracle(xs: &[f64], n: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; xs.len()];
        if xs.len() < n {
            return out;
        }
        let mut acc = 0.0;
        for x in &xs[..n] {
            acc += x;
        }
        let mut e = acc / n as f64;
        out[n - 1] = Some(e);
        let a = 2.0 / (n as f64 + 1.0);
        for i in n..xs.len() {
            e = a * xs[i] + (1.0 - a) * e;
            out[i] = Some(e);
        }
        out
    }

    fn macd_oracle(
        xs: &[f64],
        p: &MacdParams,
    ) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
        let fast = ema_oracle(xs, p.fast_len);
        let slow = ema_oracle(xs, p.slow_len);
        let mut macd_line = vec![None; xs.len()];
        for i in 0..xs.len() {
            if let (Some(f), Some(s)) = (fast[i], slow[i]) {
                macd_line[i] = Some(f - s);
            }
        }
        // signal: EMA over the defined part of the MACD line
        let first = macd_line
            .iter()
            .position(Option::is_some)
            .unwrap_or(xs.len());
        let defined: Vec<f64> = macd_line[first..].iter().map(|v| v.unwrap()).collect();
        let sig_defined = ema_oracle(&defined, p.signal_len);
        let mut signal = vec![None; xs.len()];
        for (j, v) in sig_defined.into_iter().enumerate() {
            signal[first + j] = v;
        }
        let mut hist = vec![None; xs.len()];
        for i in 0..xs.len() {
            if let (Some(m), Some(s)) = (macd_line[i], signal[i]) {
                hist[i] = Some(m - s);
            }
        }
        (macd_line, signal, hist)
    }

    fn rsi_oracle(xs: &[f64], n: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; xs.len()];
        if xs.len() <= n {
            return out;
        }
        let mut g = 0.0;
        let mut l = 0.0;
        for i in 1..=n {
            let d = xs[i] - xs[i - 1];
            if d > 0.0 {
                g += d;
            } else {
                l -= d;
            }
        }
        g /= n as f64;
        l /= n as f64;
        let rs = |g: f64, l: f64| {
            if g == 0.0 && l == 0.0 {
                50.0
            } else if l == 0.0 {
                100.0
            } else {
                100.0 - 100.0 / (1.0 + g / l)
            }
        };
        out[n] = Some(rs(g, l));
        for i in (n + 1)..xs.len() {
            let d = xs[i] - xs[i - 1];
            g = (g * (n - 1) as f64 + d.max(0.0)) / n as f64;
            l = (l * (n - 1) as f64 + (-d).max(0.0)) / n as f64;
            out[i] = Some(rs(g, l));
        }
        out
    }

    fn assert_close(actual: &[Option<f64>], expected: &[Option<f64>], rel: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            match (a, e) {
                (None, None) => {}
                (Some(a), Some(e)) => {
                    let scale = e.abs().max(1e-12);
                    assert!(
                        (a - e).abs() <= rel * scale.max(1.0),
                        "index {i}: {a} vs {e}"
                    );
                }
                _ => panic!("definedness mismatch at {i}: {a:?} vs {e:?}"),
            }
        }
    }

    #[test]
    fn constant_closes_give_zero_macd() {
        let s = series_from_closes(&[110_000; 60]);
        let m = macd(&s, &MacdParams::default()).unwrap();
        for v in m.macd_line.defined() {
            assert!(v.abs() < 1e-12);
        }
        for v in m.histogram.defined() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_macd_converges() {
        // closes rise by 10 pipettes per candle
        let closes: Vec<i64> = (0..400).map(|i| 110_000 + 10 * i).collect();
        let s = series_from_closes(&closes);
        let p = MacdParams::default();
        let m = macd(&s, &p).unwrap();
        // steady state: macd -> step * (slow - fast) / 2 in price units
        let step = 10.0 * 1e-5;
        let expected = step * (p.slow_len as f64 - p.fast_len as f64) / 2.0;
        let last_macd = m.macd_line.defined().last().unwrap();
        assert!(
            (last_macd - expected).abs() < 1e-6,
            "{last_macd} vs {expected}"
        );
        let last_hist = m.histogram.defined().last().unwrap();
        assert!(last_hist.abs() < 1e-7);
        // and the whole thing matches the literal recurrence
        let (ml, sl, hl) = macd_oracle(&s.closes_f64(), &p);
        assert_close(m.macd_line.values(), &ml, 1e-9);
        assert_close(m.signal_line.values(), &sl, 1e-9);
        assert_close(m.histogram.values(), &hl, 1e-9);
    }

    #[test]
    fn sine_wave_matches_recurrence_oracle() {
        let closes: Vec<i64> = (0..100)
            .map(|i| 110_000 + (500.0 * (i as f64 / 7.0).sin()) as i64)
            .collect();
        let s = series_from_closes(&closes);
        let p = MacdParams::default();
        let m = macd(&s, &p).unwrap();
        let (ml, sl, hl) = macd_oracle(&s.closes_f64(), &p);
        assert_close(m.macd_line.values(), &ml, 1e-9);
        assert_close(m.signal_line.values(), &sl, 1e-9);
        assert_close(m.histogram.values(), &hl, 1e-9);
        // histogram equals macd - signal pointwise
        for i in 0..s.len() {
            if let (Some(h), Some(mv), Some(sv)) = (
                m.histogram.values()[i],
                m.macd_line.values()[i],
                m.signal_line.values()[i],
            ) {
                assert!((h - (mv - sv)).abs() <= 1e-12 * (mv - sv).abs().max(1.0));
            }
        }
    }

    #[test]
    fn insufficient_data_is_an_error() {
        let s = series_from_closes(&[110_000; 10]);
        assert!(matches!(
            macd(&s, &MacdParams::default()),
            Err(IndicatorError::InsufficientData { .. })
        ));
        assert!(matches!(
            rsi(&s, &RsiParams::default()),
            Err(IndicatorError::InsufficientData { .. })
        ));
    }

    #[test]
    fn rsi_extremes() {
        let rising: Vec<i64> = (0..40).map(|i| 110_000 + 10 * i).collect();
        let r = rsi(&series_from_closes(&rising), &RsiParams::default()).unwrap();
        for v in r.defined() {
            assert!((v - 100.0).abs() < 1e-9);
        }
        let falling: Vec<i64> = (0..40).map(|i| 110_000 - 10 * i).collect();
        let r = rsi(&series_from_closes(&falling), &RsiParams::default()).unwrap();
        for v in r.defined() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn rsi_alternating_hovers_at_fifty() {
        let closes: Vec<i64> = (0..200)
            .map(|i| if i % 2 == 0 { 110_000 } else { 110_020 })
            .collect();
        let s = series_from_closes(&closes);
        let r = rsi(&s, &RsiParams::default()).unwrap();
        let oracle = rsi_oracle(&s.closes_f64(), 14);
        assert_close(r.values(), &oracle, 1e-9);
        let tail: Vec<f64> = r.defined().collect();
        let last = tail[tail.len() - 20..].iter().sum::<f64>() / 20.0;
        assert!((last - 50.0).abs() < 3.0, "tail mean {last}");
    }

    #[test]
    fn rsi_stays_in_bounds() {
        let closes: Vec<i64> = (0..300)
            .map(|i| 110_000 + ((i as f64).sin() * 900.0) as i64 + 7 * (i % 13) as i64)
            .collect();
        let r = rsi(&series_from_closes(&closes), &RsiParams::default()).unwrap();
        for v in r.defined() {
            assert!((0.0..=100.0).contains(&v));
        }
    }

    /// Brute-force histogram sign-change scan, independent of the
    /// counting loop in the implementation.
    fn macd_signal_scan_oracle(s: &CandleSeries, p: &MacdParams) -> usize {
        let (_, _, hist) = macd_oracle(&s.closes_f64(), p);
        let signs: Vec<i8> = hist
            .iter()
            .filter_map(|v| *v)
            .scan(0i8, |prev, h| {
                let s = if h > 0.0 {
                    1
                } else if h < 0.0 {
                    -1
                } else {
                    *prev
                };
                *prev = s;
                Some(s)
            })
            .collect();
        signs
            .windows(2)
            .filter(|w| w[0] != 0 && w[1] != 0 && w[0] != w[1])
            .count()
    }

    fn rsi_signal_scan_oracle(s: &CandleSeries, n: usize, low: f64, high: f64) -> usize {
        let vals: Vec<f64> = rsi_oracle(&s.closes_f64(), n)
            .into_iter()
            .flatten()
            .collect();
        let mut count = 0;
        for i in 1..vals.len() {
            for t in [low, high] {
                if (vals[i - 1] < t && vals[i] > t) || (vals[i - 1] > t && vals[i] < t) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn constant_prices_produce_no_signals() {
        let s = series_from_closes(&[110_000; 80]);
        assert_eq!(count_macd_signals(&s, &MacdParams::default()).unwrap(), 0);
        assert_eq!(
            count_rsi_signals(&s, &RsiParams::default(), RSI_LOW, RSI_HIGH).unwrap(),
            0
        );
    }

    #[test]
    fn square_wave_macd_signals_match_scan() {
        // period 80 square wave, much longer than the slow EMA
        let closes: Vec<i64> = (0..400)
            .map(|i| if (i / 40) % 2 == 0 { 110_000 } else { 111_000 })
            .collect();
        let s = series_from_closes(&closes);
        let p = MacdParams::default();
        let counted = count_macd_signals(&s, &p).unwrap();
        assert_eq!(counted, macd_signal_scan_oracle(&s, &p));
        assert!(counted >= 7, "one crossing per half-period, got {counted}");
    }

    #[test]
    fn monotone_ramp_macd_has_no_sign_changes() {
        // an accelerating monotone ramp keeps the histogram strictly
        // positive well above rounding noise; a constant-step ramp would
        // cancel MACD to an exact constant whose f64 histogram sign is
        // meaningless
        let closes: Vec<i64> = (0..150i64).map(|i| 110_000 + i * (i + 1) / 2).collect();
        let s = series_from_closes(&closes);
        let p = MacdParams::default();
        assert_eq!(
            count_macd_signals(&s, &p).unwrap(),
            macd_signal_scan_oracle(&s, &p)
        );
        assert_eq!(count_macd_signals(&s, &p).unwrap(), 0);
    }

    #[test]
    fn rsi_crossings_match_scan() {
        // deep decline then a long monotone rise: RSI sweeps up through
        // both thresholds exactly once each
        let mut closes: Vec<i64> = (0..60).map(|i| 120_000 - 100 * i).collect();
        closes.extend((0..120).map(|i| 114_100 + 100 * i));
        let s = series_from_closes(&closes);
        let p = RsiParams::default();
        let counted = count_rsi_signals(&s, &p, RSI_LOW, RSI_HIGH).unwrap();
        assert_eq!(counted, rsi_signal_scan_oracle(&s, 14, RSI_LOW, RSI_HIGH));
        assert_eq!(counted, 2);
    }

    #[test]
    fn rsi_hovering_between_thresholds_counts_nothing() {
        // gentle alternation keeps RSI near 50
        let closes: Vec<i64> = (0..100)
            .map(|i| if i % 2 == 0 { 110_000 } else { 110_010 })
            .collect();
        let s = series_from_closes(&closes);
        assert_eq!(
            count_rsi_signals(&s, &RsiParams::default(), RSI_LOW, RSI_HIGH).unwrap(),
            0
        );
    }

    #[test]
    fn priceaction_counts_non_doji_candles() {
        let s = series_from_closes(&(0..10).map(|i| 110_000 + i).collect::<Vec<_>>());
        assert_eq!(count_priceaction_signals(&s), 9); // first candle is a doji (open == close)

        let all_doji = series_from_closes(&[110_000; 10]);
        assert_eq!(count_priceaction_signals(&all_doji), 0);

        // 10 candles, 3 of them dojis (the first candle opens at its own
        // close, plus the two repeated values)
        let closes = [1, 2, 2, 3, 4, 5, 6, 6, 7, 8].map(|v| 110_000 + v);
        let s = series_from_closes(&closes);
        assert_eq!(count_priceaction_signals(&s), 10 - 3);
    }

    #[test]
    fn expected_successful_trades_examples() {
        assert_eq!(expected_successful_trades(480, 0.5), 240.0);
        assert_eq!(expected_successful_trades(0, 0.9), 0.0);
        // an indicator producing 2x the signals of a 64-signal baseline,
        // with 2x the success rate, still trails 480 per-candle signals
        let n = 0.4;
        let indicator = 2.0 * expected_successful_trades(2 * 64, n);
        assert_eq!(indicator, 256.0 * n);
        assert!(expected_successful_trades(480, n) > indicator);
    }
}
