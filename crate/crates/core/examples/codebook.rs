//! Enumerate the symbols of every shipped format and print distance spectra.
//!
//! cargo run --example codebook [FORMAT]

use posd::beq::{bit_string, FormatSpec};
use posd::harness::codebook_summary;
use posd::modem::{build_codebook, map_8d};

fn main() {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let specs = if names.is_empty() {
        FormatSpec::builtin_all()
    } else {
        names
            .iter()
            .map(|n| FormatSpec::load(n).expect("known format"))
            .collect()
    };
    for spec in specs {
        let cb = build_codebook(&spec);
        println!("{}", codebook_summary(&cb).unwrap());
        for e in cb.entries.iter().take(3) {
            println!(
                "  info {} -> codeword {} -> {:+.3?}",
                bit_string(e.info, spec.m),
                bit_string(e.codeword, spec.n),
                e.symbol.0
            );
        }
    }

    let pb6 = FormatSpec::builtin("PB-6B8D").unwrap();
    let s = map_8d(&pb6, &[1, 0, 0, 0, 0, 0]).unwrap();
    println!(
        "PB-6B8D (1,0,0,0,0,0) -> {:+.4?}, energy {}",
        s.0,
        s.energy()
    );
}
