use proptest::prelude::*;

use posd::beq::{
    compute_parity, is_affine, parse_format, unpack_bits, BoolExpr, FormatSpec, ParityDef,
    Provenance,
};
use posd::channel::observations;
use posd::demap::{
    analog_weight, demap_mlm, demap_posd, hard_decide, merge_sort_bounds, posd_candidates,
    select_lrp, ObservationFrame, PosdParams,
};
use posd::fec::{ldpc_decode_ms, ldpc_encode, make_regular_code, DEFAULT_MAX_ITER};
use posd::modem::build_codebook;

fn expr(m: usize, with_and: bool) -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(BoolExpr::Const),
        (1..=m).prop_map(BoolExpr::Var),
    ];
    leaf.prop_recursive(5, 32, 2, move |inner| {
        let xor = (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::xor(a, b));
        let not = inner.clone().prop_map(BoolExpr::not);
        if with_and {
            let and = (inner.clone(), inner).prop_map(|(a, b)| BoolExpr::and(a, b));
            prop_oneof![xor, not, and].boxed()
        } else {
            prop_oneof![xor, not].boxed()
        }
    })
}

fn format_spec() -> impl Strategy<Value = FormatSpec> {
    (1usize..=4)
        .prop_flat_map(|half| {
            let n = 2 * half;
            (Just(n), 1..n)
        })
        .prop_flat_map(|(n, m)| {
            let exprs = proptest::collection::vec(expr(m, true), n - m);
            (Just(n), Just(m), exprs, any::<bool>())
        })
        .prop_map(|(n, m, exprs, verbatim)| FormatSpec {
            name: format!("T{n}x{m}"),
            n,
            m,
            parity: exprs
                .into_iter()
                .enumerate()
                .map(|(i, expr)| ParityDef {
                    target: m + 1 + i,
                    expr,
                })
                .collect(),
            provenance: if verbatim {
                Provenance::Verbatim
            } else {
                Provenance::Reconstructed
            },
        })
}

/// Affinity by the definition: f(x) ^ f(y) ^ f(z) ^ f(x ^ y ^ z) = 0 for all triples.
fn affine_by_triples(e: &BoolExpr, m: usize) -> bool {
    let size = 1u16 << m;
    (0..size).all(|x| {
        (0..size).all(|y| {
            (0..size).all(|z| {
                let f = |w: u16| e.eval(w as u8);
                !(f(x) ^ f(y) ^ f(z) ^ f(x ^ y ^ z))
            })
        })
    })
}

fn shipped() -> impl Strategy<Value = FormatSpec> {
    (0usize..4).prop_map(|i| FormatSpec::builtin_all().swap_remove(i))
}

fn observation(n: usize) -> impl Strategy<Value = ObservationFrame> {
    proptest::collection::vec(-12.0f64..12.0, n).prop_map(|v| {
        let mut o = [0.0; 8];
        o[..v.len()].copy_from_slice(&v);
        ObservationFrame(o)
    })
}

fn spec_and_obs() -> impl Strategy<Value = (FormatSpec, ObservationFrame)> {
    shipped().prop_flat_map(|s| {
        let n = s.n;
        (Just(s), observation(n))
    })
}

proptest! {
    #[test]
    fn format_text_round_trips(spec in format_spec()) {
        let reparsed = parse_format(&spec.to_string()).unwrap();
        prop_assert_eq!(reparsed, spec);
    }

    #[test]
    fn xor_not_trees_are_affine(e in expr(6, false)) {
        prop_assert!(is_affine(&e, 6));
    }

    #[test]
    fn affinity_matches_triple_test(e in expr(4, true)) {
        prop_assert_eq!(is_affine(&e, 4), affine_by_triples(&e, 4));
    }

    #[test]
    fn parity_copies_info_and_is_deterministic(spec in format_spec(), w in any::<u8>()) {
        let info = unpack_bits(w & ((1 << spec.m) - 1), spec.m);
        let a = compute_parity(&spec, &info).unwrap();
        prop_assert_eq!(&a[..spec.m], &info[..]);
        prop_assert_eq!(a, compute_parity(&spec, &info).unwrap());
    }

    #[test]
    fn full_depth_posd_is_mlm((spec, obs) in spec_and_obs()) {
        let cb = build_codebook(&spec);
        let a = demap_mlm(&obs, &spec, &cb).unwrap();
        let b = demap_posd(&obs, &spec, PosdParams { p: spec.m }).unwrap();
        let scale: f64 = obs.0.iter().map(|v| v.abs()).sum();
        for k in 0..spec.m {
            prop_assert!((a[k] - b[k]).abs() <= 1e-9 * a[k].abs().max(b[k].abs()) + 1e-12 * scale);
        }
    }

    /// When the best codeword is among the candidates, pOSD and MLM agree on
    /// every hard decision.
    #[test]
    fn candidate_list_holding_the_best_word_agrees_in_sign(
        (spec, obs) in spec_and_obs(),
        p in 0usize..=7,
    ) {
        let p = p.min(spec.m);
        let cb = build_codebook(&spec);
        let best = cb
            .entries
            .iter()
            .min_by(|a, b| analog_weight(a.codeword, &obs).total_cmp(&analog_weight(b.codeword, &obs)))
            .unwrap();
        let cands = posd_candidates(&obs, &spec, PosdParams { p }).unwrap();
        prop_assume!(cands.iter().any(|c| c.codeword == best.codeword));
        let a = demap_mlm(&obs, &spec, &cb).unwrap();
        let b = demap_posd(&obs, &spec, PosdParams { p }).unwrap();
        for k in 0..spec.m {
            prop_assume!(a[k] != 0.0 && b[k] != 0.0);
            prop_assert_eq!(a[k] > 0.0, b[k] > 0.0, "bit {}", k + 1);
        }
    }

    #[test]
    fn candidates_obey_the_equations((spec, obs) in spec_and_obs(), p in 0usize..=7) {
        let p = p.min(spec.m);
        let cands = posd_candidates(&obs, &spec, PosdParams { p }).unwrap();
        prop_assert_eq!(cands.len(), 1 << p);
        let h = hard_decide(&obs);
        for c in &cands {
            prop_assert_eq!(c.codeword, spec.encode(c.codeword & spec.info_mask()));
            prop_assert!((c.weight - analog_weight(c.codeword, &obs)).abs() < 1e-9);
            // only least reliable information bits are flipped
            let (lrp, _) = select_lrp(&obs, spec.m, p).unwrap();
            let mask: u8 = lrp.iter().map(|&j| 1u8 << (j - 1)).sum();
            prop_assert_eq!((c.codeword ^ h) & spec.info_mask() & !mask, 0);
        }
    }

    #[test]
    fn lrp_selection_within_merge_sort_bounds(obs in observation(8), m in 1usize..=7, p in 0usize..=7) {
        let p = p.min(m);
        let (set, comparisons) = select_lrp(&obs, m, p).unwrap();
        prop_assert_eq!(set.len(), p);
        if p > 0 {
            let (lo, hi) = merge_sort_bounds(m);
            prop_assert!((lo..=hi).contains(&comparisons));
        }
        // the chosen positions are no more reliable than the others
        let worst_chosen = set.iter().map(|&j| obs.0[j - 1].abs()).fold(0.0, f64::max);
        for j in 1..=m {
            if !set.contains(&j) {
                prop_assert!(obs.0[j - 1].abs() >= worst_chosen);
            }
        }
    }

    #[test]
    fn observations_are_linear(
        y1 in proptest::array::uniform8(-3.0f64..3.0),
        y2 in proptest::array::uniform8(-3.0f64..3.0),
        sigma in 0.1f64..2.0,
    ) {
        let sum: [f64; 8] = std::array::from_fn(|i| y1[i] + y2[i]);
        let a = observations(&y1, sigma).unwrap();
        let b = observations(&y2, sigma).unwrap();
        let s = observations(&sum, sigma).unwrap();
        for i in 0..8 {
            prop_assert!((s.0[i] - a.0[i] - b.0[i]).abs() <= 1e-9 * (1.0 + s.0[i].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Flipping the LLR signs on the support of a codeword flips exactly
    /// those bits of the decision.
    #[test]
    fn min_sum_sign_symmetry(
        seed in any::<u64>(),
        noise in proptest::collection::vec(-1.5f64..3.0, 96),
    ) {
        let code = make_regular_code(96, 0.5, 7).unwrap();
        let mut rng = posd::channel::frame_rng(seed, 0);
        let info: Vec<u8> = (0..code.k()).map(|_| (rand::RngCore::next_u32(&mut rng) & 1) as u8).collect();
        let c = ldpc_encode(&code, &info).unwrap();
        prop_assume!(noise.iter().all(|v| v.abs() > 1e-6));
        let flipped: Vec<f64> = noise
            .iter()
            .zip(&c)
            .map(|(&l, &b)| if b == 1 { -l } else { l })
            .collect();
        let plain = ldpc_decode_ms(&code, &noise, DEFAULT_MAX_ITER);
        let mirrored = ldpc_decode_ms(&code, &flipped, DEFAULT_MAX_ITER);
        prop_assert_eq!(plain.iterations, mirrored.iterations);
        prop_assert_eq!(plain.satisfied, mirrored.satisfied);
        let expected: Vec<u8> = plain.bits.iter().zip(&c).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(mirrored.bits, expected);
    }

    #[test]
    fn encoder_output_has_zero_syndrome(seed in any::<u64>()) {
        let code = make_regular_code(192, 0.75, 3).unwrap();
        let mut rng = posd::channel::frame_rng(seed, 0);
        let info: Vec<u8> = (0..code.k()).map(|_| (rand::RngCore::next_u32(&mut rng) & 1) as u8).collect();
        let c = ldpc_encode(&code, &info).unwrap();
        prop_assert!(code.parity_check().is_codeword(&c));
        prop_assert_eq!(code.extract_info(&c), info);
    }
}
