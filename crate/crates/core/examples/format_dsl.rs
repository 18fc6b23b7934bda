//! Parse a parity-equation format, inspect it, and see what the parser rejects.
//!
//! cargo run --example format_dsl

use posd::beq::{
    affine_form, bit_string, compute_parity, expr_op_count, parse_format, unpack_bits, FormatSpec,
};

const HYBRID: &str = "\
# six information bits, one linear and one nonlinear parity
format HY-6B8D
bits 8
info 6
provenance reconstructed
parity b7 = b1 ^ b2 ^ b3
parity b8 = !b4 ^ b5 & b6
";

fn main() {
    let spec = parse_format(HYBRID).expect("valid format");
    println!("{spec}");
    for def in &spec.parity {
        match affine_form(&def.expr, spec.m) {
            Some(form) => println!(
                "b{}: affine, constant {}, support {}, {} ops",
                def.target,
                u8::from(form.constant),
                bit_string(form.support, spec.m),
                expr_op_count(&def.expr)
            ),
            None => println!(
                "b{}: nonlinear, {} ops",
                def.target,
                expr_op_count(&def.expr)
            ),
        }
    }
    let info = unpack_bits(0b101101, 6);
    println!(
        "codeword of {info:?}: {:?}",
        compute_parity(&spec, &info).unwrap()
    );

    for bad in [
        "format X\nbits 8\ninfo 6\nparity b7 = b1\nparity b8 = b8\n",
        "format X\nbits 8\ninfo 6\nparity b7 = b1 ^ (b2\nparity b8 = b1\n",
        "format X\nbits 8\ninfo 6\nparity b7 = b1\n",
    ] {
        println!("rejected: {}", parse_format(bad).unwrap_err());
    }

    println!();
    for spec in FormatSpec::builtin_all() {
        println!(
            "{:<8} m={} linear={:<5} provenance={}",
            spec.name,
            spec.m,
            spec.is_linear(),
            spec.provenance
        );
    }
}
