//! GMI of PB-6B8D for the 1D, pOSD and MLM demappers, and where each curve
//! crosses the 5.0-bit operating point of a rate-5/6 code.
//!
//! cargo run --release --example gmi_sweep [FRAMES]

use posd::beq::FormatSpec;
use posd::demap::DemapperKind;
use posd::harness::{gmi_crossing, run_gmi_sweep, SimConfig};

fn main() {
    let frames: u64 = std::env::args()
        .nth(1)
        .map_or(20_000, |s| s.parse().expect("frame count"));
    let spec = FormatSpec::builtin("PB-6B8D").unwrap();
    let kinds = [
        DemapperKind::OneD,
        DemapperKind::Posd { p: 1 },
        DemapperKind::Posd { p: 2 },
        DemapperKind::Posd { p: 3 },
        DemapperKind::Posd { p: 4 },
        DemapperKind::Mlm,
    ];
    let mut crossings = Vec::new();
    for kind in kinds {
        let mut cfg = SimConfig::new(spec.clone(), kind, "2.5:5.5:0.25".parse().unwrap());
        cfg.max_frames = frames;
        let rows = run_gmi_sweep(&cfg).unwrap();
        let curve: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.snr_db, r.gmi_bits.unwrap()))
            .collect();
        let cells: Vec<String> = curve.iter().map(|(_, g)| format!("{g:.3}")).collect();
        println!("{:<10} {}", kind.to_string(), cells.join(" "));
        crossings.push((kind, gmi_crossing(&curve, 5.0)));
    }
    println!();
    let mlm = crossings
        .last()
        .and_then(|c| c.1)
        .expect("MLM reaches 5 bits");
    for (kind, x) in crossings {
        match x {
            Some(x) => println!(
                "{:<10} 5.0 bits at {x:.2} dB ({:+.2} dB from MLM)",
                kind.to_string(),
                x - mlm
            ),
            None => println!(
                "{:<10} does not reach 5.0 bits on this grid",
                kind.to_string()
            ),
        }
    }
}
