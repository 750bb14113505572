//! End-to-end: data → shaping → encoding → (noise) → decoding → data.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use signal_codes::channel::{awgn_add, snr_to_sigma2, box_power};
use signal_codes::decoder::{bidirectional_decode, stack_decode, BlockInput, FanoConfig, PathMemory};
use signal_codes::lattice::table1_pattern;
use signal_codes::shaping::{decompress_tail, inverse_shape, shape_block, terminate_block, Scheme, ShaperState};
use signal_codes::spectrum::{search_spectrum, union_bound_eer, SearchOptions, SpectrumReport};
use signal_codes::{encode_convolve, FilterPattern, GaussInt, Qam, QamSymbol};

fn data(m: u32, n: usize, seed: u64) -> Vec<QamSymbol> {
    Qam::new(m).unwrap().random_block(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn scheme_of(k: u8) -> Scheme {
    match k {
        0 => Scheme::Tomlinson,
        1 => Scheme::Flexible,
        _ => Scheme::Nested { m_alg: 4, radius: 2 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shaped_symbols_encode_to_transmitted_samples(row in 1usize..=4, k in 0u8..3, seed in any::<u64>(), n in 8usize..60) {
        let f = table1_pattern(row).unwrap();
        let a = data(8, n, seed);
        let mut st = ShaperState::new(&f, 8).unwrap();
        let blk = shape_block(&a, scheme_of(k), &mut st, &f).unwrap();
        let cw = encode_convolve(&blk.b, &f);
        for (x, s) in blk.x.iter().zip(&cw.samples) {
            prop_assert!((x - s).norm() < 1e-6 * (1.0 + s.norm()));
        }
        prop_assert!(blk.b.iter().all(|v| v.is_odd()));
        let head = vec![GaussInt::ZERO; f.order()];
        prop_assert_eq!(inverse_shape(&blk.b, scheme_of(k), &f, 8, &head).unwrap(), a);
    }

    #[test]
    fn noiseless_blocks_decode_exactly(row in 1usize..=4, k in 0u8..3, seed in any::<u64>(), truncated in any::<bool>()) {
        let f = table1_pattern(row).unwrap();
        let n = 40;
        let scheme = scheme_of(k);
        let a = data(8, n, seed);
        let mut st = ShaperState::new(&f, 8).unwrap();
        let blk = shape_block(&a, scheme, &mut st, &f).unwrap();
        let rec = terminate_block(&st, &f).unwrap();
        let tail = decompress_tail(&rec.packed, &f).unwrap();
        let head = vec![GaussInt::ZERO; f.order()];
        let input = BlockInput { y: &blk.x, n, head: &head, tail: &tail, m: 8, truth: Some(&blk.b) };
        let mut cfg = FanoConfig::new(0.1);
        cfg.x_range_test = scheme.has_box();
        if truncated {
            cfg.path_memory = PathMemory::Truncated { depth: 16 };
        }
        for r in [stack_decode(&f, &input, &cfg).unwrap(), bidirectional_decode(&f, &input, &cfg).unwrap()] {
            let b = r.b.unwrap();
            prop_assert_eq!(&b, &blk.b);
            prop_assert_eq!(inverse_shape(&b, scheme, &f, 8, &head).unwrap(), a.clone());
        }
    }
}

#[test]
fn consecutive_blocks_continue_the_shaper() {
    let f = table1_pattern(4).unwrap();
    let a = data(8, 300, 9);
    let mut one = ShaperState::new(&f, 8).unwrap();
    let whole = shape_block(&a, Scheme::Tomlinson, &mut one, &f).unwrap();
    let mut two = ShaperState::new(&f, 8).unwrap();
    let first = shape_block(&a[..120], Scheme::Tomlinson, &mut two, &f).unwrap();
    let head = two.last_b().to_vec();
    let second = shape_block(&a[120..], Scheme::Tomlinson, &mut two, &f).unwrap();
    assert_eq!([first.b.clone(), second.b.clone()].concat(), whole.b);
    assert_eq!(one, two);

    // The second block decodes with the first block's tail as its head.
    let input = BlockInput {
        y: &second.x,
        n: second.b.len(),
        head: &head,
        tail: &second.b[second.b.len() - 3..],
        m: 8,
        truth: None,
    };
    let r = stack_decode(&f, &input, &FanoConfig::new(0.1)).unwrap();
    assert_eq!(r.b.unwrap(), second.b);
}

#[test]
fn noisy_block_at_high_snr() {
    let f = table1_pattern(4).unwrap();
    let n = 300;
    let a = data(8, n, 4);
    let mut st = ShaperState::new(&f, 8).unwrap();
    let blk = shape_block(&a, Scheme::Tomlinson, &mut st, &f).unwrap();
    let sigma2 = snr_to_sigma2(24.0, box_power(8)).unwrap();
    let y: Vec<Complex64> = awgn_add(&blk.x, sigma2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let head = vec![GaussInt::ZERO; 3];
    let input = BlockInput { y: &y, n, head: &head, tail: &blk.b[n - 3..], m: 8, truth: Some(&blk.b) };
    let cfg = FanoConfig::new(sigma2);
    for r in [stack_decode(&f, &input, &cfg).unwrap(), bidirectional_decode(&f, &input, &cfg).unwrap()] {
        assert_eq!(r.b.as_deref(), Some(&blk.b[..]));
        assert!(!r.stats.cpl);
        assert!(r.stats.entries_processed < 20 * n as u64);
    }
}

#[test]
fn spectrum_report_round_trips_and_bounds() {
    let f = table1_pattern(2).unwrap();
    let rep = search_spectrum(&f, 22.0, 8, &SearchOptions::default()).unwrap();
    assert!(rep.complete);
    let back: SpectrumReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    assert_eq!(back, rep);
    assert!((rep.d2_min.unwrap() - 17.33).abs() < 0.01);
    // The union bound falls with the noise and is dominated by the
    // nearest events at low noise.
    let hi = union_bound_eer(&rep, 1.0);
    let lo = union_bound_eer(&rep, 0.2);
    assert!(lo < hi);
    let identity = search_spectrum(&FilterPattern::identity(), 22.0, 8, &SearchOptions::default()).unwrap();
    assert!(union_bound_eer(&rep, 0.2) < union_bound_eer(&identity, 0.2));
}
