//! Generate a seeded synthetic data set (all 18 subsets) for trying the
//! CLI without real market data:
//!
//! ```sh
//! cargo run --release --example gen_data -- data 10000 42
//! ```

use fxlab::market_data::write_canonical_csv_file;
use fxlab::synthetic::{random_walk, WalkParams};
use fxlab::{Granularity, Instrument};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let candles: usize = args
        .next()
        .map(|a| a.parse().expect("candle count"))
        .unwrap_or(10_000);
    let base_seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(42);

    std::fs::create_dir_all(&dir).expect("create data dir");
    let mut seed = base_seed;
    for code in ["EURUSD", "USDJPY", "EURJPY"] {
        let instrument = Instrument::builtin(code).unwrap();
        for granularity in Granularity::ALL {
            seed += 1;
            let series = random_walk(&instrument, granularity, &WalkParams::new(seed, candles));
            let path = dir.join(series.key().file_name());
            write_canonical_csv_file(&series, &path).expect("write subset");
            println!("wrote {} ({} candles)", path.display(), candles);
        }
    }
}
