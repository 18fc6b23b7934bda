//! Per-symbol operation counts of MLM, min-sum and pOSD for the shipped
//! formats, with input-dependent comparison counts shown as ranges.
//!
//! cargo run --release --example complexity [FRAMES]

use posd::beq::FormatSpec;
use posd::harness::{render_complexity_table, run_complexity_report, table_demappers};

fn main() {
    let frames: u64 = std::env::args()
        .nth(1)
        .map_or(100_000, |s| s.parse().expect("frame count"));
    let pairs: Vec<_> = FormatSpec::builtin_all()
        .into_iter()
        .flat_map(|s| table_demappers(&s).into_iter().map(move |d| (s.clone(), d)))
        .collect();
    let rows = run_complexity_report(&pairs, frames, 5.0, 1).unwrap();
    for chunk in rows.chunks(3) {
        println!("{}", render_complexity_table(chunk));
    }
}
