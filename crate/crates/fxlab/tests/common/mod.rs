//! Shared test support: an independently written straight-line reference
//! simulator and a naive nested-loop grid optimizer, used as oracles for
//! the production engine. Everything here works on plain integer arrays
//! and recomputes the trade model from its written definition rather
//! than reusing any engine internals.

// each integration test target compiles this module separately and uses
// a different subset of it
#![allow(dead_code)]

use fxlab::market_data::{CandleSeries, Pips};
use fxlab::simulator::IntraCandlePolicy;
use fxlab::HeuristicId;

/// Field-for-field mirror of the engine's per-run outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOutcome {
    pub profit: i64,
    pub loss: i64,
    pub n_long: u64,
    pub n_short: u64,
    pub balance: i64,
    pub ruined: bool,
}

/// Straight-line replay. All quantities in tenths of a pip (= pipettes).
///
/// Model, from its definition: prices are bid quotes; a signal on candle
/// `i` (h1 trades with the body, h2 against it, dojis and open positions
/// signal nothing) fills at candle `i+1`'s open; a long pays the ask
/// (bid + spread) and exits at bid, a short sells the bid and exits at
/// the ask; TP/SL levels sit where the exit realizes exactly +tp / -sl
/// net of spread; the fill candle's full range counts; both-levels-hit
/// candles resolve per policy; gap-throughs exit at the level; end of
/// data force-closes at the last close with pnl equal to direction *
/// (exit_bid - entry_bid) - spread; the run aborts ruined when the
/// balance falls to -max_total_loss or below.
#[allow(clippy::too_many_arguments)]
pub fn reference_simulate(
    opens: &[i64],
    highs: &[i64],
    lows: &[i64],
    closes: &[i64],
    reverse: bool,
    tp: i64,
    sl: i64,
    spread: i64,
    max_total_loss: Option<i64>,
    policy: IntraCandlePolicy,
) -> RefOutcome {
    let n = opens.len();
    let mut profit = 0i64;
    let mut loss = 0i64;
    let mut n_long = 0u64;
    let mut n_short = 0u64;
    let mut balance = 0i64;
    let mut ruined = false;

    // open position state: direction (+1 long / -1 short), entry bid,
    // and the two bid trigger levels
    let mut dir = 0i64;
    let mut entry_bid = 0i64;
    let mut tp_level = 0i64;
    let mut sl_level = 0i64;
    let mut fill_next = 0i64; // +1 / -1 when a fill is scheduled

    let mut i = 0usize;
    while i < n {
        if fill_next != 0 {
            dir = fill_next;
            fill_next = 0;
            entry_bid = opens[i];
            if dir > 0 {
                tp_level = entry_bid + spread + tp;
                sl_level = entry_bid + spread - sl;
            } else {
                tp_level = entry_bid - tp - spread;
                sl_level = entry_bid + sl - spread;
            }
        }

        if dir != 0 {
            let (hit_tp, hit_sl) = if dir > 0 {
                (highs[i] >= tp_level, lows[i] <= sl_level)
            } else {
                (lows[i] <= tp_level, highs[i] >= sl_level)
            };
            let take = if hit_tp && hit_sl {
                match policy {
                    IntraCandlePolicy::Pessimistic => false,
                    IntraCandlePolicy::Optimistic => true,
                    IntraCandlePolicy::OpenProximity => {
                        (tp_level - opens[i]).abs() < (sl_level - opens[i]).abs()
                    }
                }
            } else {
                hit_tp
            };
            if hit_tp || hit_sl {
                let pnl = if take { tp } else { -sl };
                balance += pnl;
                if pnl >= 0 {
                    profit += pnl;
                } else {
                    loss += -pnl;
                }
                if dir > 0 {
                    n_long += 1;
                } else {
                    n_short += 1;
                }
                dir = 0;
                if let Some(mtl) = max_total_loss {
                    if balance <= -mtl {
                        ruined = true;
                        break;
                    }
                }
            }
        }

        if dir == 0 && i + 1 < n && closes[i] != opens[i] {
            let body_up = closes[i] > opens[i];
            let long = if reverse { !body_up } else { body_up };
            fill_next = if long { 1 } else { -1 };
        }
        i += 1;
    }

    if dir != 0 {
        let pnl = dir * (closes[n - 1] - entry_bid) - spread;
        balance += pnl;
        if pnl >= 0 {
            profit += pnl;
        } else {
            loss += -pnl;
        }
        if dir > 0 {
            n_long += 1;
        } else {
            n_short += 1;
        }
        if let Some(mtl) = max_total_loss {
            if balance <= -mtl {
                ruined = true;
            }
        }
    }

    RefOutcome {
        profit,
        loss,
        n_long,
        n_short,
        balance,
        ruined,
    }
}

pub fn series_arrays(series: &CandleSeries) -> (Vec<i64>, Vec<i64>, Vec<i64>, Vec<i64>) {
    let c = series.candles();
    (
        c.iter().map(|c| c.open.0).collect(),
        c.iter().map(|c| c.high.0).collect(),
        c.iter().map(|c| c.low.0).collect(),
        c.iter().map(|c| c.close.0).collect(),
    )
}

pub fn reference_simulate_series(
    series: &CandleSeries,
    heuristic: HeuristicId,
    tp: Pips,
    sl: Pips,
    spread: Pips,
    max_total_loss: Option<Pips>,
    policy: IntraCandlePolicy,
) -> RefOutcome {
    let (o, h, l, c) = series_arrays(series);
    reference_simulate(
        &o,
        &h,
        &l,
        &c,
        heuristic.is_reverse(),
        tp.tenths(),
        sl.tenths(),
        spread.tenths(),
        max_total_loss.map(|p| p.tenths()),
        policy,
    )
}

/// Naive nested-loop argmax over an inclusive (SL, TP) grid, using the
/// reference simulator. Ties go to the smaller SL, then the smaller TP.
#[allow(clippy::too_many_arguments)]
pub fn reference_best_tuple(
    series: &CandleSeries,
    heuristic: HeuristicId,
    sl_range: (i64, i64, i64),
    tp_range: (i64, i64, i64),
    spread: i64,
    max_total_loss: Option<i64>,
    policy: IntraCandlePolicy,
) -> (i64, i64, RefOutcome) {
    let (o, h, l, c) = series_arrays(series);
    let mut best: Option<(i64, i64, RefOutcome)> = None;
    let mut sl = sl_range.0;
    while sl <= sl_range.1 {
        let mut tp = tp_range.0;
        while tp <= tp_range.1 {
            let out = reference_simulate(
                &o,
                &h,
                &l,
                &c,
                heuristic.is_reverse(),
                tp,
                sl,
                spread,
                max_total_loss,
                policy,
            );
            let better = match &best {
                None => true,
                Some((bsl, btp, bout)) => {
                    out.balance > bout.balance
                        || (out.balance == bout.balance && sl < *bsl)
                        || (out.balance == bout.balance && sl == *bsl && tp < *btp)
                }
            };
            if better {
                best = Some((sl, tp, out));
            }
            tp += tp_range.2;
        }
        sl += sl_range.2;
    }
    best.expect("non-empty grid")
}
