use lat_core::align::{lcs, lcs_len};
use lat_core::lenadjust::{adjust_length, compute_gaps, AdjustConfig};
use lat_core::merge::{merge_all, merge_two, MergeConfig};
use lat_core::metrics::{corpus_bleu, levenshtein, ngram_repeat_rate, NrrConfig};
use lat_core::vocab::{build_vocab, MASK, UNK};
use lat_core::{Piece, ScoredToken, TokenId};
use proptest::prelude::*;

/// Longest common subsequence length by enumerating every subsequence of `a`.
fn brute_lcs(a: &[TokenId], b: &[TokenId]) -> usize {
    let is_subseq = |sub: &[TokenId]| {
        let mut it = b.iter();
        sub.iter().all(|x| it.any(|y| y == x))
    };
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<TokenId> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
        if sub.len() > best && is_subseq(&sub) {
            best = sub.len();
        }
    }
    best
}

fn scored(ids: &[TokenId], scores: &[f64], start: i64) -> Vec<ScoredToken> {
    ids.iter().zip(scores).enumerate().map(|(i, (&t, &s))| ScoredToken::new(t, s, start + i as i64)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lcs_is_a_maximum_common_subsequence(
        a in prop::collection::vec(10u32..13, 0..=8),
        b in prop::collection::vec(10u32..13, 0..=8),
    ) {
        let pairs = lcs(&a, &b);
        prop_assert_eq!(pairs.len(), brute_lcs(&a, &b));
        prop_assert_eq!(lcs_len(&a, &b), pairs.len());
        for w in pairs.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
        }
        for &(i, j) in &pairs {
            prop_assert_eq!(a[i], b[j]);
        }
    }

    #[test]
    fn merge_two_keeps_every_aligned_token(
        a in prop::collection::vec(10u32..14, 0..=4),
        b in prop::collection::vec(10u32..14, 0..=4),
        sa in prop::collection::vec(-3.0f64..0.0, 4),
        sb in prop::collection::vec(-3.0f64..0.0, 4),
    ) {
        let s1 = scored(&a, &sa, 0);
        let s2 = scored(&b, &sb, 1);
        let out = merge_two(&s1, &s2, &MergeConfig::default());
        let ids: Vec<TokenId> = out.iter().map(|t| t.token).collect();
        // The common subsequence survives and the output never exceeds a plain concatenation.
        prop_assert!(lcs_len(&ids, &a) >= lcs_len(&a, &b));
        prop_assert!(out.len() <= a.len() + b.len());
        prop_assert!(out.len() >= a.len().max(b.len()).min(lcs_len(&a, &b)));
        for t in &out {
            prop_assert!(t.score.is_finite() && t.position.to_f64().is_finite());
        }
    }

    #[test]
    fn merge_two_with_itself_is_identity(
        a in prop::collection::vec(10u32..20, 0..=6),
        s in prop::collection::vec(-3.0f64..0.0, 6),
    ) {
        let s1 = scored(&a, &s, 0);
        let out = merge_two(&s1, &s1, &MergeConfig::with_k(6));
        prop_assert_eq!(out.len(), s1.len());
        for (x, y) in out.iter().zip(&s1) {
            prop_assert_eq!((x.token, x.score, x.position.value()), (y.token, y.score, y.position.value()));
            prop_assert_eq!(x.position.count, 2);
        }
    }

    #[test]
    fn windows_without_long_runs_reconstruct(reference in prop::collection::vec(10u32..26, 5..=30)) {
        prop_assume!(reference.windows(4).all(|w| !(w[0] == w[1] && w[1] == w[2] && w[2] == w[3])));
        prop_assume!(reference.windows(2).any(|w| w[0] != w[1]));
        let pieces: Vec<Piece> = (0..reference.len())
            .map(|i| {
                let toks: Vec<(TokenId, f64)> = reference[i..(i + 3).min(reference.len())].iter().map(|&t| (t, -0.5)).collect();
                Piece::from_scored(i, &toks)
            })
            .collect();
        let merged = merge_all(&pieces, &MergeConfig::default()).unwrap();
        // Windows of periodic text can fold; whenever they do not, the result is exact.
        if merged.len() == reference.len() {
            prop_assert_eq!(merged.ids(), reference);
        } else {
            prop_assert!(merged.len() < reference.len());
        }
    }

    #[test]
    fn insertion_reaches_target(
        ids in prop::collection::vec(prop_oneof![3 => 10u32..20, 1 => Just(MASK)], 2..=20),
        extra in 1usize..10,
    ) {
        let seq = scored(&ids, &vec![-0.5; ids.len()], 0);
        prop_assume!(seq.iter().filter(|t| t.token != MASK).count() >= 2);
        let target = ids.len() + extra;
        let cfg = AdjustConfig::default();
        let out = adjust_length(&seq, target, &cfg);
        let kept = |s: &[ScoredToken]| s.iter().filter(|t| t.token != MASK).copied().collect::<Vec<_>>();
        if (extra as f64) / (target as f64) <= cfg.rel_tolerance {
            prop_assert_eq!(&out, &seq);
        } else {
            prop_assert_eq!(out.len(), target);
            prop_assert_eq!(kept(&out), kept(&seq));
            // Nothing lands before the first or after the last unmasked token.
            let first = out.iter().position(|t| t.token != MASK).unwrap();
            let first_in = seq.iter().position(|t| t.token != MASK).unwrap();
            prop_assert_eq!(first, first_in);
        }
    }

    #[test]
    fn deletion_only_removes_masks(
        ids in prop::collection::vec(prop_oneof![1 => 10u32..20, 1 => Just(MASK)], 2..=24),
        fewer in 1usize..10,
    ) {
        prop_assume!(fewer < ids.len());
        let seq = scored(&ids, &vec![-0.5; ids.len()], 0);
        let target = ids.len() - fewer;
        let out = adjust_length(&seq, target, &AdjustConfig::default());
        let kept = |s: &[ScoredToken]| s.iter().filter(|t| t.token != MASK).copied().collect::<Vec<_>>();
        prop_assert_eq!(kept(&out), kept(&seq));
        prop_assert!(out.len() <= seq.len());
        if out.len() != seq.len() {
            prop_assert!(out.len() >= target);
            let between: usize = compute_gaps(&seq).iter().map(|g| g.masks()).sum();
            prop_assert_eq!(out.len(), target.max(seq.len() - between));
        }
    }

    #[test]
    fn levenshtein_is_a_metric(
        a in prop::collection::vec(0u8..4, 0..10),
        b in prop::collection::vec(0u8..4, 0..10),
        c in prop::collection::vec(0u8..4, 0..10),
    ) {
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert!(levenshtein(&a, &b) <= a.len().max(b.len()));
    }

    #[test]
    fn nrr_is_bounded_and_monotone_in_window(
        corpus in prop::collection::vec(prop::collection::vec(0u8..4, 0..12), 1..6),
        n in 1usize..4,
    ) {
        let mut prev = 0.0;
        for w in 1..8 {
            let r = ngram_repeat_rate(corpus.iter().map(Vec::as_slice), &NrrConfig { n, window: w });
            prop_assert!((0.0..=100.0).contains(&r));
            prop_assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn bleu_self_and_order_invariance(
        corpus in prop::collection::vec(prop::collection::vec(0u8..6, 1..10), 1..8),
        other in prop::collection::vec(prop::collection::vec(0u8..6, 1..10), 8),
    ) {
        prop_assert!((corpus_bleu(&corpus, &corpus, 4).unwrap() - 100.0).abs() < 1e-9);
        let hyps: Vec<Vec<u8>> = other[..corpus.len()].to_vec();
        let forward = corpus_bleu(&hyps, &corpus, 4).unwrap();
        let (mut rh, mut rr) = (hyps.clone(), corpus.clone());
        rh.reverse();
        rr.reverse();
        prop_assert!((corpus_bleu(&rh, &rr, 4).unwrap() - forward).abs() < 1e-9);
    }
}

#[test]
fn vocab_round_trips_random_lines() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let words: Vec<String> = (0..50).map(|i| format!("t{i}")).collect();
    let lines: Vec<String> = (0..1000)
        .map(|_| {
            let n = rng.gen_range(0..12);
            (0..n).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let vocab = build_vocab(lines.iter().map(String::as_str), 1).unwrap();
    for line in &lines {
        let ids = vocab.encode_line(line);
        assert!(!ids.contains(&UNK));
        assert_eq!(&vocab.decode_line(&ids).unwrap(), line);
        assert_eq!(vocab.encode_line(&vocab.decode_line(&ids).unwrap()), ids);
    }
}

#[test]
fn merge_error_shrinks_with_noise() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let cfg = MergeConfig::default();
    let trials = 300;
    let mut means = Vec::new();
    for noise in [0.3, 0.2, 0.1, 0.0] {
        let mut total = 0;
        for _ in 0..trials {
            let len = rng.gen_range(5..=30);
            let reference: Vec<TokenId> = (0..len).map(|_| rng.gen_range(10..40)).collect();
            let pieces: Vec<Piece> = (0..len)
                .map(|i| {
                    let toks: Vec<(TokenId, f64)> = reference[i..(i + 3).min(len)]
                        .iter()
                        .map(|&t| if rng.gen_bool(noise) { (rng.gen_range(10..40), -1.0) } else { (t, -0.2) })
                        .collect();
                    Piece::from_scored(i, &toks)
                })
                .collect();
            total += levenshtein(&merge_all(&pieces, &cfg).unwrap().ids(), &reference);
        }
        means.push(total as f64 / trials as f64);
    }
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "mean edit distance by noise: {means:?}");
}
