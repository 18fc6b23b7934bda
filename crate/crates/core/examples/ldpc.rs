//! Build the desk-scale LDPC code, save and reload it as alist, then
//! encode and decode a noisy frame.
//!
//! cargo run --release --example ldpc

use posd::channel::frame_rng;
use posd::fec::{
    ldpc_decode_ms, ldpc_encode, load_alist, make_regular_code, write_alist, DEFAULT_MAX_ITER,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let code = make_regular_code(1800, 5.0 / 6.0, 1).unwrap();
    println!(
        "n={} k={} checks={} rate={:.4} 4-cycles={}",
        code.n(),
        code.k(),
        code.num_checks(),
        code.rate(),
        code.parity_check().four_cycles()
    );

    let path = std::env::temp_dir().join("posd-example.alist");
    std::fs::write(&path, write_alist(&code)).unwrap();
    let reloaded = load_alist(&std::fs::read_to_string(&path).unwrap()).unwrap();
    println!(
        "alist round trip through {}: {}",
        path.display(),
        reloaded.parity_check() == code.parity_check()
    );

    let mut rng = frame_rng(9, 0);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let cw = ldpc_encode(&code, &info).unwrap();
    // consistent Gaussian LLRs (variance twice the mean) at three channel qualities
    let noise = Normal::new(0.0, 1.0).unwrap();
    for mean in [5.0f64, 7.0, 9.0] {
        let llrs: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let l = mean + (2.0 * mean).sqrt() * noise.sample(&mut rng);
                if b == 0 {
                    l
                } else {
                    -l
                }
            })
            .collect();
        let raw = llrs
            .iter()
            .zip(&cw)
            .filter(|&(&l, &b)| u8::from(l < 0.0) != b)
            .count();
        let r = ldpc_decode_ms(&code, &llrs, DEFAULT_MAX_ITER);
        let left = code
            .extract_info(&r.bits)
            .iter()
            .zip(&info)
            .filter(|(a, b)| a != b)
            .count();
        println!(
            "LLR mean {mean}: {raw} channel errors -> {left} after {} iterations (checks satisfied: {})",
            r.iterations, r.satisfied
        );
    }
}
