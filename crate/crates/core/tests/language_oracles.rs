use std::collections::BTreeSet;

use proptest::prelude::*;
use stadium_core::coding::CodeLetter;
use stadium_core::language::{
    cassaigne_residual, complexity, entropy_estimate, full_shift, golden_mean_shift, pack,
    sample_language, special_counts, unpack, LanguageSample, SampleConfig, SampleMeta, Symbol,
};
use stadium_core::StadiumTable;

fn fib(n: usize) -> usize {
    let (mut a, mut b) = (1usize, 2usize);
    for _ in 1..n {
        (a, b) = (b, a + b);
    }
    b
}

fn meta() -> SampleMeta {
    SampleMeta {
        sampler: "test".into(),
        l: None,
        samples: 0,
        seed: 0,
        skipped: 0,
    }
}

#[test]
fn full_shift_complexity_is_power() {
    for k in [2usize, 3, 6] {
        let ls = full_shift(k, 7).unwrap();
        for n in 1..=7 {
            assert_eq!(complexity(&ls, n).unwrap(), k.pow(n as u32));
        }
    }
}

#[test]
fn golden_mean_complexity_is_fibonacci() {
    let ls = golden_mean_shift(16).unwrap();
    for n in 1..=16 {
        assert_eq!(complexity(&ls, n).unwrap(), fib(n), "n={n}");
    }
    let est = entropy_estimate(&ls, None).unwrap();
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((est.slope - golden).abs() < 1e-3, "{}", est.slope);
}

#[test]
fn cassaigne_vanishes_on_oracles() {
    let shifts = [full_shift(2, 12).unwrap(), golden_mean_shift(12).unwrap()];
    for ls in &shifts {
        for k in 1..=10 {
            let r = cassaigne_residual(ls, k).unwrap();
            assert_eq!(r.residual, 0, "{} k={k}", ls.meta.sampler);
            assert!(r.saturated);
        }
    }
}

#[test]
fn golden_mean_special_words() {
    let ls = golden_mean_shift(6).unwrap();
    // 000, 001, 100 and 101 are all allowed; 01 is preceded by 0 or 1 and followed only by 0
    let c = special_counts(&ls, &[0]).unwrap().counts;
    assert_eq!((c.m_left, c.m_right, c.m_bi), (2, 2, 4));
    let c = special_counts(&ls, &[0, 1]).unwrap().counts;
    assert_eq!((c.m_left, c.m_right), (2, 1));
}

#[test]
fn insert_word_is_factorial() {
    let mut ls = LanguageSample::empty(3, 5, meta()).unwrap();
    ls.insert_word(&[0, 1, 2, 2, 1, 0, 1]);
    assert!(ls.is_factorial());
    assert!(ls.contains(&[2, 2, 1]));
    assert!(ls.contains(&[1, 0, 1]));
    assert!(!ls.contains(&[0, 0]));
    assert_eq!(complexity(&ls, 1).unwrap(), 3);
    assert_eq!(complexity(&ls, 5).unwrap(), 3);
}

fn billiard_sample(l: f64, samples: usize, n_max: usize) -> LanguageSample {
    let t = StadiumTable::new(l).unwrap();
    sample_language(&t, &SampleConfig::new(n_max, samples, 7)).unwrap()
}

#[test]
fn billiard_pairs() {
    let ls = billiard_sample(2.0, 200_000, 6);
    assert!(ls.is_factorial());
    assert_eq!(complexity(&ls, 1).unwrap(), 6);
    assert_eq!(complexity(&ls, 2).unwrap(), 30);
    let seen: BTreeSet<Vec<Symbol>> = ls.words(2).unwrap().into_iter().collect();
    use CodeLetter::*;
    let missing: BTreeSet<Vec<Symbol>> = [
        [T, T],
        [B, B],
        [LPlus, LMinus],
        [LMinus, LPlus],
        [RPlus, RMinus],
        [RMinus, RPlus],
    ]
    .iter()
    .map(|p| p.iter().map(|a| a.index()).collect())
    .collect();
    for a in 0..6u8 {
        for b in 0..6u8 {
            let w = vec![a, b];
            assert_eq!(seen.contains(&w), !missing.contains(&w), "{w:?}");
        }
    }
}

#[test]
fn sampling_is_deterministic_and_nested() {
    let t = StadiumTable::new(1.0).unwrap();
    let small = sample_language(&t, &SampleConfig::new(8, 20_000, 3)).unwrap();
    let again = sample_language(&t, &SampleConfig::new(8, 20_000, 3)).unwrap();
    let big = sample_language(&t, &SampleConfig::new(8, 60_000, 3)).unwrap();
    for n in 1..=8 {
        let a = small.words(n).unwrap();
        assert_eq!(a, again.words(n).unwrap());
        let b: BTreeSet<_> = big.words(n).unwrap().into_iter().collect();
        assert!(a.iter().all(|w| b.contains(w)), "level {n}");
    }
}

#[test]
fn billiard_language_is_symmetric_under_reversal() {
    // time reversal maps a word to its mirror with arc signs flipped
    let ls = billiard_sample(2.0, 200_000, 5);
    for n in 1..=4 {
        assert!(ls.is_saturated(n));
        for w in ls.words(n).unwrap() {
            let r: Vec<Symbol> = w
                .iter()
                .rev()
                .map(|&s| CodeLetter::from_index(s).unwrap().reversed().index())
                .collect();
            assert!(ls.contains(&r), "{w:?}");
        }
    }
}

proptest! {
    #[test]
    fn pack_roundtrip(word in prop::collection::vec(0u8..8, 1..=21)) {
        prop_assert_eq!(unpack(pack(&word), word.len()), word);
    }

    #[test]
    fn pack_orders_lexicographically(
        a in prop::collection::vec(0u8..8, 6),
        b in prop::collection::vec(0u8..8, 6),
    ) {
        prop_assert_eq!(pack(&a).cmp(&pack(&b)), a.cmp(&b));
    }
}
