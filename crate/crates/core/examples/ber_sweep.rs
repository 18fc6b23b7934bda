//! Post-FEC BER through the LDPC chain (n=1800, rate 5/6) for PB-6B8D,
//! written as CSV to stdout.
//!
//! cargo run --release --example ber_sweep [DEMAPPER] [P]

use posd::beq::FormatSpec;
use posd::demap::DemapperKind;
use posd::harness::{run_ber_sweep, write_csv, SimConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "posd".into());
    let p = args.next().map(|s| s.parse().expect("depth"));
    let spec = FormatSpec::builtin("PB-6B8D").unwrap();
    let kind = DemapperKind::parse(&name, p.or(Some(4))).expect("demapper name");
    let mut cfg = SimConfig::new(spec, kind, "4.0:5.0:0.25".parse().unwrap());
    cfg.target_errors = 100;
    cfg.max_frames = 2_000;
    eprintln!("{kind}, LDPC {}", cfg.ldpc);
    let rows = run_ber_sweep(&cfg).unwrap();
    write_csv(&rows, std::io::stdout()).unwrap();
}
