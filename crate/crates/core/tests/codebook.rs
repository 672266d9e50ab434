use std::time::Instant;

use nr_cba_core::codebook::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn width(n: u64) -> u64 {
    let mut b = 0;
    while (1u64 << b) < n {
        b += 1;
    }
    b
}

/// Subset count from Pascal's rule.
fn count_subsets(n: usize, k: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(0)
}

/// Independent bit counter built from alphabet sizes instead of the closed forms.
/// `beta_quarters` is beta in units of 1/4.
fn oracle_bits(cfg: &CodebookConfig, beta_quarters: usize, rank: usize) -> (u64, u64) {
    let cophase_values = if rank == 1 { 4 } else { 2 };
    let t1 = width((cfg.n1 * cfg.o1) as u64)
        + width((cfg.n2 * cfg.o2) as u64)
        + width(4)
        + cfg.n_subbands as u64 * width(cophase_values);
    let m = if rank <= 2 { cfg.m_bases_low_rank } else { cfg.m_bases_high_rank };
    let positions = 2 * cfg.l_beams * m;
    let mut k = 0;
    while 4 * k < beta_quarters * positions {
        k += 1;
    }
    let per_layer = 5 + positions as u64 + k as u64 * (cfg.amp_bits + cfg.phase_bits) as u64;
    let e2 = width(count_subsets(cfg.n1 * cfg.n2, cfg.l_beams))
        + width((cfg.o1 * cfg.o2) as u64)
        + width(count_subsets(cfg.n_subbands, m))
        + rank as u64 * per_layer;
    (t1, e2)
}

#[test]
fn reference_overheads() {
    let cfg = CodebookConfig::reference();
    let start = Instant::now();
    let tax = overhead_tax(&cfg, 2, 2).unwrap();
    assert!(start.elapsed().as_millis() < 1);
    assert_eq!(tax, 713);
    assert!((630..=770).contains(&tax));
    assert_eq!(etype2_overhead_bits(&cfg, 2).unwrap().total_bits, 737);
    assert_eq!(type1_overhead_bits(&cfg, 2).unwrap().total_bits, 24);
    assert_eq!(etype2_overhead_bits(&cfg, 1).unwrap().total_bits, 382);
    assert_eq!(type1_overhead_bits(&cfg, 1).unwrap().total_bits, 38);
}

#[test]
fn overhead_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = Instant::now();
    for _ in 0..200 {
        let n1 = [1, 2, 4][rng.random_range(0..3)];
        let n2 = [1, 2, 4, 8][rng.random_range(0..4)];
        let n_subbands = rng.random_range(1..=16);
        let beta_quarters = rng.random_range(1..=4);
        let cfg = CodebookConfig {
            n1,
            n2,
            o1: [1, 2, 4][rng.random_range(0..3)],
            o2: [1, 2, 4][rng.random_range(0..3)],
            l_beams: rng.random_range(1..=(n1 * n2).min(6)),
            m_bases_low_rank: rng.random_range(1..=n_subbands),
            m_bases_high_rank: rng.random_range(1..=n_subbands),
            n_subbands,
            max_rank: 4,
            beta: beta_quarters as f64 / 4.0,
            amp_bits: 3,
            phase_bits: 4,
        };
        cfg.validate_etype2().unwrap();
        for rank in 1..=4 {
            let (t1, e2) = oracle_bits(&cfg, beta_quarters, rank);
            assert_eq!(type1_overhead_bits(&cfg, rank).unwrap().total_bits, t1, "{cfg:?}");
            assert_eq!(etype2_overhead_bits(&cfg, rank).unwrap().total_bits, e2, "{cfg:?}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn rank_out_of_range_is_rejected() {
    let cfg = CodebookConfig::reference();
    assert!(type1_overhead_bits(&cfg, 0).is_err());
    assert!(etype2_overhead_bits(&cfg, 5).is_err());
}

#[test]
fn non_power_of_two_grid_is_rejected() {
    let cfg = CodebookConfig { n1: 3, ..CodebookConfig::reference() };
    assert!(type1_overhead_bits(&cfg, 1).is_err());
}

#[test]
fn combination_rank_is_a_bijection() {
    for (n, k) in [(16, 4), (14, 7), (5, 0), (6, 6)] {
        let total = binomial(n, k).unwrap();
        for idx in 0..total.min(5000) {
            let subset = unrank_combination(idx, n, k).unwrap();
            assert_eq!(subset.len(), k);
            assert_eq!(rank_combination(&subset).unwrap(), idx);
        }
        assert!(unrank_combination(total, n, k).is_err());
    }
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    let mut out = all[..k].to_vec();
    out.sort_unstable();
    out
}

fn random_etype2(cfg: &CodebookConfig, rank: usize, seed: u64) -> ETypeIIPmi {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = cfg.m_bases(rank);
    let rows = 2 * cfg.l_beams;
    let k = k_nz_per_layer(cfg, rank);
    let layers = (0..rank)
        .map(|_| ETypeIILayer {
            strongest_row: rng.random_range(0..rows),
            coeffs: random_subset(&mut rng, rows * m, k)
                .into_iter()
                .map(|flat| Coefficient {
                    row: flat / m,
                    col: flat % m,
                    amp: rng.random_range(0..8),
                    phase: rng.random_range(0..16),
                })
                .collect(),
        })
        .collect();
    ETypeIIPmi {
        beam_set: random_subset(&mut rng, cfg.n_elements(), cfg.l_beams),
        rotation: (rng.random_range(0..cfg.o1), rng.random_range(0..cfg.o2)),
        basis_set: random_subset(&mut rng, cfg.n_subbands, m),
        layers,
        rank,
    }
}

proptest! {
    #[test]
    fn type1_codec_round_trip(
        rank in 1usize..=4,
        i11 in 0usize..8,
        i12 in 0usize..32,
        offset_sel in 0u8..4,
        raw in prop::collection::vec(0u8..4, 14),
    ) {
        let cfg = CodebookConfig::reference();
        let cophase = if rank == 1 { raw } else { raw.iter().map(|c| 2 * (c % 2)).collect() };
        let pmi = TypeIPmi { i11, i12, offset_sel, cophase, rank };
        let bits = encode_type1(&pmi, &cfg).unwrap();
        prop_assert_eq!(bits.len() as u64, type1_overhead_bits(&cfg, rank).unwrap().total_bits);
        prop_assert_eq!(decode_type1(&bits, &cfg, rank).unwrap(), pmi);
    }

    #[test]
    fn etype2_codec_round_trip(rank in 1usize..=4, seed in any::<u64>()) {
        let cfg = CodebookConfig::reference();
        let pmi = random_etype2(&cfg, rank, seed);
        let bits = encode_etype2(&pmi, &cfg).unwrap();
        prop_assert_eq!(bits.len() as u64, etype2_overhead_bits(&cfg, rank).unwrap().total_bits);
        let text = bits.to_string();
        let parsed: BitString = text.parse().unwrap();
        prop_assert_eq!(decode_etype2(&parsed, &cfg, rank).unwrap(), pmi);
    }

    #[test]
    fn etype2_bits_monotone_in_beta_and_bases(
        rank in 1usize..=4,
        q in 1usize..4,
        l in 1usize..4,
        m in 1usize..13,
    ) {
        let base = CodebookConfig {
            l_beams: l,
            m_bases_low_rank: m,
            m_bases_high_rank: m,
            beta: q as f64 / 4.0,
            ..CodebookConfig::reference()
        };
        let bits = |c: &CodebookConfig| etype2_overhead_bits(c, rank).unwrap().total_bits;
        let more_beta = CodebookConfig { beta: (q + 1) as f64 / 4.0, ..base.clone() };
        let more_l = CodebookConfig { l_beams: l + 1, ..base.clone() };
        prop_assert!(bits(&more_beta) >= bits(&base));
        prop_assert!(bits(&more_l) >= bits(&base));
        let more_m = CodebookConfig { m_bases_low_rank: m + 1, m_bases_high_rank: m + 1, ..base.clone() };
        // per-layer payload grows with M; the basis index width may shrink past N/2
        let payload = |c: &CodebookConfig| {
            let r = etype2_overhead_bits(c, rank).unwrap();
            r.per_layer_bits.iter().sum::<u64>()
        };
        prop_assert!(payload(&more_m) > payload(&base));
    }

    #[test]
    fn tax_is_positive_for_reference_grid(r1 in 1usize..=4, r2 in 1usize..=4) {
        let cfg = CodebookConfig::reference();
        prop_assert!(overhead_tax(&cfg, r1, r2).unwrap() > 0);
    }
}

#[test]
fn corrupted_bitmap_fails_to_decode() {
    let cfg = CodebookConfig::reference();
    let pmi = random_etype2(&cfg, 1, 5);
    let bits = encode_etype2(&pmi, &cfg).unwrap();
    let mut text: Vec<char> = bits.to_string().chars().collect();
    // first bitmap bit follows beam (11), rotation (4), basis (12) and strongest row (5)
    let at = 11 + 4 + 12 + 5;
    text[at] = if text[at] == '0' { '1' } else { '0' };
    let flipped: BitString = text.into_iter().collect::<String>().parse().unwrap();
    assert!(decode_etype2(&flipped, &cfg, 1).is_err());
}

#[test]
fn type1_rank2_hand_encoded_report() {
    // i11 = 5 on 3 bits, i12 = 17 on 5 bits, offset 2 on 2 bits, then one bit per subband
    let cfg = CodebookConfig::reference();
    let cophase = vec![0, 2, 2, 0, 0, 0, 2, 0, 2, 2, 2, 0, 0, 2];
    let pmi = TypeIPmi { i11: 5, i12: 17, offset_sel: 2, cophase, rank: 2 };
    let bits = encode_type1(&pmi, &cfg).unwrap();
    assert_eq!(bits.to_string(), "101100011001100010111001");
    assert_eq!(decode_type1(&bits, &cfg, 2).unwrap(), pmi);
}
