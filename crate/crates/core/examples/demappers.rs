//! Demap one noisy symbol with every demapper and compare LLRs and cost.
//!
//! cargo run --example demappers [SNR_DB]

use posd::beq::{bit_string, FormatSpec};
use posd::channel::{add_awgn, frame_rng, observations, snr_to_sigma};
use posd::demap::{posd_candidates, select_lrp, Demapper, DemapperKind, OpCount, PosdParams};
use posd::modem::map_8d;

fn main() {
    let snr: f64 = std::env::args()
        .nth(1)
        .map_or(4.0, |s| s.parse().expect("SNR in dB"));
    let sigma = snr_to_sigma(snr);
    for spec in FormatSpec::builtin_all() {
        let info = [1, 0, 1, 1, 0, 0, 1];
        let sent = map_8d(&spec, &info[..spec.m]).unwrap();
        let y = add_awgn(&sent, spec.n, sigma, &mut frame_rng(3, 0));
        let obs = observations(&y, sigma).unwrap();
        println!("{} at {snr} dB, info {:?}", spec.name, &info[..spec.m]);
        println!("  observations {:+.2?}", &obs.0[..spec.n]);

        let p = if spec.m == 7 { 3 } else { 4 };
        for kind in [
            DemapperKind::OneD,
            DemapperKind::Ms,
            DemapperKind::Posd { p: 2 },
            DemapperKind::Posd { p },
            DemapperKind::Mlm,
        ] {
            match Demapper::new(kind, &spec) {
                Ok(d) => {
                    let mut ops = OpCount::default();
                    let llr = d.demap_counted(&obs, &mut ops);
                    println!(
                        "  {:<10} {:+7.2?}  logical {:>5} add {:>5} cmp {:>4}",
                        kind.to_string(),
                        llr.as_slice(),
                        ops.logical,
                        ops.additions,
                        ops.comparisons
                    );
                }
                Err(e) => println!("  {:<10} {e}", kind.to_string()),
            }
        }
        let (lrp, _) = select_lrp(&obs, spec.m, p).unwrap();
        let mut cands = posd_candidates(&obs, &spec, PosdParams { p }).unwrap();
        cands.sort_by(|a, b| a.weight.total_cmp(&b.weight));
        println!("  least reliable positions {lrp:?}, best candidates:");
        for c in cands.iter().take(3) {
            println!(
                "    {} weight {:.3}",
                bit_string(c.codeword, spec.n),
                c.weight
            );
        }
        println!();
    }
}
