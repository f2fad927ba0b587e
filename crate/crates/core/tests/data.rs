mod common;

use common::golden::{self, checksum_f32};
use pacer::data::*;
use pacer::nn::Tensor;
use pacer::world::{generate_world, LabelGrid, Pose, Rect, TerrainWorld, TextureLibrary, SENTINEL};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::HashSet;

fn golden_world() -> TerrainWorld {
    let lib = TextureLibrary::standard();
    generate_world(1, 256, 256, 5, lib.base().into_iter().cloned().collect()).unwrap()
}

fn single_label_world() -> TerrainWorld {
    let t = TextureLibrary::standard().base()[0].clone();
    TerrainWorld::from_grid(5, 64, 64, 1, vec![0; 64 * 64], vec![t]).unwrap()
}

fn small_config() -> DataConfig {
    DataConfig {
        world_seeds: vec![11, 12],
        bank: BankConfig { size: 64, patch_size: 16 },
        ..DataConfig::default()
    }
}

#[test]
fn cost_of_examples() {
    let o = TotalOrdering::canonical(5);
    assert_eq!(cost_of(&o, 0).unwrap(), 0.0);
    assert_eq!(cost_of(&o, 4).unwrap(), 1.0);
    assert_eq!(cost_of(&o, 2).unwrap(), 0.5);
    assert!(matches!(cost_of(&o, 9), Err(DataError::UnknownLabel(9))));
    let r = TotalOrdering::new(vec![3, 1, 4, 0, 2]).unwrap();
    assert_eq!(cost_of(&r, 3).unwrap(), 0.0);
    assert_eq!(cost_of(&r, 2).unwrap(), 1.0);
}

#[test]
fn ordering_rejects_non_permutations() {
    assert!(TotalOrdering::new(vec![0, 0, 1]).is_err());
    assert!(TotalOrdering::new(vec![0, 3]).is_err());
    assert!(serde_json::from_str::<TotalOrdering>("[1,1]").is_err());
}

#[test]
fn bank_patches_are_single_label() {
    let w = golden_world();
    let bank = build_patch_bank(&w, 2, 50, 16, 9).unwrap();
    assert_eq!(bank.patches.len(), 50);
    for p in &bank.patches {
        assert_eq!(p.source_label, Some(2));
        let [x, y] = p.origin.unwrap();
        let grid = w.label_region(Rect::new(x, y, 16, 16)).unwrap();
        assert!(grid.labels.iter().all(|&l| l == 2));
        assert!(p.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    let origins: HashSet<_> = bank.patches.iter().map(|p| p.origin).collect();
    assert_eq!(origins.len(), 50, "sampled without replacement");
}

#[test]
fn bank_on_single_label_world_and_determinism() {
    let w = single_label_world();
    let label = 0;
    let a = build_patch_bank(&w, label, 10, 16, 3).unwrap();
    assert_eq!(a.patches.len(), 10);
    assert!(a.patches.iter().all(|p| p.source_label == Some(label)));
    assert_eq!(a, build_patch_bank(&w, label, 10, 16, 3).unwrap());
}

#[test]
fn bank_without_candidates_errors() {
    let w = golden_world();
    assert!(matches!(
        build_patch_bank(&w, 1, 10, 200, 0),
        Err(DataError::NoCandidates { .. })
    ));
}

#[test]
fn golden_first_patch() {
    let bank = build_patch_bank(&golden_world(), 2, 800, 16, 1).unwrap();
    golden::check(
        "data_bank_label2_first_patch",
        json!({"len": bank.patches.len(), "origin": bank.patches[0].origin, "pixels": checksum_f32(&bank.patches[0].pixels)}),
    );
}

#[test]
fn context_shape_and_consistency() {
    let w = golden_world();
    let banks = build_banks(&w, &BankConfig { size: 20, patch_size: 16 }, 4).unwrap();
    let o = TotalOrdering::new(vec![4, 2, 0, 1, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ctx = sample_context(&mut rng, &o, &banks, 3).unwrap();
    assert_eq!(ctx.pack().shape(), &[9, 32, 16]);
    let pairs: HashSet<_> = ctx.label_pairs().into_iter().collect();
    assert_eq!(pairs.len(), 3);
    for (a, b) in ctx.label_pairs() {
        assert!(o.prefers(a.unwrap(), b.unwrap()));
    }
    let mut rng2 = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(ctx, sample_context(&mut rng2, &o, &banks, 3).unwrap());
    assert!(sample_context(&mut rng2, &o, &banks, 11).is_err());
}

#[test]
fn two_label_context_is_forced() {
    let lib = TextureLibrary::standard();
    let w = generate_world(2, 128, 128, 2, lib.base()[..2].iter().map(|t| (*t).clone()).collect()).unwrap();
    let banks = build_banks(&w, &BankConfig { size: 5, patch_size: 16 }, 0).unwrap();
    let o = TotalOrdering::new(vec![1, 0]).unwrap();
    let ctx = sample_context(&mut ChaCha8Rng::seed_from_u64(0), &o, &banks, 1).unwrap();
    assert_eq!(ctx.label_pairs(), vec![(Some(1), Some(0))]);
}

#[test]
fn packing_layout() {
    let mk = |v: f32| Patch { size: 2, pixels: (0..12).map(|i| v + i as f32).collect(), source_label: None, origin: None };
    let ctx = PreferenceContext::new(vec![(mk(0.0), mk(100.0))]).unwrap();
    let t = ctx.pack();
    assert_eq!(t.shape(), &[3, 4, 2]);
    // Channel 1 of the preferred patch: pixels (0,0),(0,1),(1,0),(1,1) → 1,4,7,10.
    assert_eq!(&t.data()[8..12], &[1.0, 4.0, 7.0, 10.0]);
    assert_eq!(&t.data()[12..16], &[101.0, 104.0, 107.0, 110.0]);
}

#[test]
fn count_contexts_examples() {
    assert_eq!(count_contexts(5, 3).unwrap(), 720);
    assert_eq!(count_contexts(2, 1).unwrap(), 1);
    assert_eq!(count_contexts(5, 1).unwrap(), 10);
    assert!(count_contexts(3, 4).is_err());
    assert!(matches!(count_contexts(200, 19000), Err(DataError::Overflow)));
}

fn brute_force_contexts(l: usize, n: usize) -> u128 {
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|a| (a + 1..l).map(move |b| (a, b))).collect();
    fn rec(pairs: &[(usize, usize)], used: &mut Vec<bool>, left: usize) -> u128 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for i in 0..pairs.len() {
            if !used[i] {
                used[i] = true;
                total += rec(pairs, used, left - 1);
                used[i] = false;
            }
        }
        total
    }
    if n > pairs.len() {
        return 0;
    }
    rec(&pairs, &mut vec![false; pairs.len()], n)
}

#[test]
fn count_contexts_matches_enumeration() {
    for l in 1..=4usize {
        for n in 0..=3usize {
            let m = l * l.saturating_sub(1) / 2;
            match count_contexts(l as u64, n as u64) {
                Ok(c) => assert_eq!(c, brute_force_contexts(l, n), "L={l} n={n}"),
                Err(_) => assert!(n > m),
            }
        }
    }
}

#[test]
fn pairs_for_total_order_examples() {
    assert_eq!(pairs_for_total_order(2), 2);
    assert_eq!(pairs_for_total_order(1), 0);
    assert_eq!(pairs_for_total_order(5), 12);
    assert_eq!(pairs_for_total_order(4), 8);
}

#[test]
fn target_examples() {
    let one = LabelGrid { height: 2, width: 2, labels: vec![3; 4] };
    let o = TotalOrdering::new(vec![3, 0, 1, 2, 4]).unwrap();
    let t = build_target(&one, &o).unwrap();
    assert_eq!(t.values, vec![0.0; 4]);
    assert!(t.mask.iter().all(|&m| m));
    let checker = LabelGrid { height: 2, width: 2, labels: vec![3, 4, 4, 3] };
    assert_eq!(build_target(&checker, &o).unwrap().values, vec![0.0, 1.0, 1.0, 0.0]);
    let with_sentinel = LabelGrid { height: 1, width: 2, labels: vec![SENTINEL, 4] };
    let t = build_target(&with_sentinel, &o).unwrap();
    assert_eq!((t.values.clone(), t.mask.clone()), (vec![0.0, 1.0], vec![false, true]));
}

#[test]
fn golden_target() {
    let w = golden_world();
    let grid = w.label_window(&Pose::new(140.0, 90.0, 0.7), 64, 64);
    let t = build_target(&grid, &TotalOrdering::new(vec![2, 0, 4, 1, 3]).unwrap()).unwrap();
    golden::check("data_target_seed1", json!({"values": checksum_f32(&t.values), "valid": t.valid_count()}));
}

#[test]
fn make_example_composes() {
    let w = golden_world();
    let banks = build_banks(&w, &BankConfig { size: 30, patch_size: 16 }, 2).unwrap();
    let pose = Pose::new(120.0, 130.0, 2.0);
    let o = TotalOrdering::new(vec![1, 3, 0, 2, 4]).unwrap();
    let ex = make_example(&w, &pose, 64, &o, &banks, 3, 77).unwrap();
    assert_eq!(ex, make_example(&w, &pose, 64, &o, &banks, 3, 77).unwrap());
    assert_eq!(ex.image, w.observe(&pose, 64, 64));
    assert_eq!(ex.target, build_target(&w.label_window(&pose, 64, 64), &o).unwrap());
    let ctx = sample_context(&mut seeded_rng(77, 0), &o, &banks, 3).unwrap();
    assert_eq!(ex.context, ctx);
    golden::check("data_make_example_seed1", json!({
        "image": checksum_f32(&ex.image.pixels),
        "context": checksum_f32(ex.context.pack().data()),
        "target": checksum_f32(&ex.target.values),
    }));
}

#[test]
fn single_label_window_gives_constant_target() {
    let w = golden_world();
    let banks = build_banks(&w, &BankConfig { size: 10, patch_size: 16 }, 2).unwrap();
    let [x, y] = single_label_windows(&w, 3, 20)[0];
    let pose = Pose::new(x as f64 + 10.0, y as f64 + 10.0, 0.0);
    let o = TotalOrdering::canonical(5);
    let ex = make_example(&w, &pose, 20, &o, &banks, 3, 1).unwrap();
    assert!(ex.target.values.iter().all(|&v| v == 0.75));
    assert!(ex.target.mask.iter().all(|&m| m));
}

fn check_context_consistency(ex: &TrainingExample) {
    for &(a, b) in &ex.provenance.pair_labels {
        let o = &ex.provenance.ordering;
        assert!(o.cost(a).unwrap() < o.cost(b).unwrap());
    }
}

#[test]
fn base_phase_uses_canonical_ordering() {
    let src = DataSource::standard(small_config()).unwrap();
    for ex in src.stream(Phase::Base, 5, 40) {
        let ex = ex.unwrap();
        assert_eq!(ex.provenance.ordering, TotalOrdering::canonical(5));
        assert!(ex.provenance.replaced.is_empty());
        check_context_consistency(&ex);
    }
}

#[test]
fn synthetic_phase_windows_contain_replaced_terrain() {
    let src = DataSource::standard(small_config()).unwrap();
    let base_ids: HashSet<_> = TextureLibrary::standard().base().iter().map(|t| t.id.clone()).collect();
    for ex in src.stream(Phase::Synthetic, 6, 60) {
        let ex = ex.unwrap();
        let p = &ex.provenance;
        assert!((1..=3).contains(&p.replaced.len()));
        let world = src.worlds.iter().find(|(w, _)| w.seed() == p.world_seed).unwrap().0.clone();
        let grid = world.label_window(&p.pose, 64, 64);
        assert!(p.replaced.iter().any(|r| grid.contains_label(r.label)));
        assert!(p.replaced.iter().all(|r| !base_ids.contains(&r.texture)));
        check_context_consistency(&ex);
        // Replaced context patches come from the re-textured world.
        for (slot, &(a, b)) in ex.context.pairs.iter().zip(&p.pair_labels) {
            for (patch, label) in [(&slot.0, a), (&slot.1, b)] {
                let [x, y] = patch.origin.unwrap();
                let base_patch = Patch::cut(&world, x, y, 16).unwrap();
                let replaced = p.replaced.iter().any(|r| r.label == label);
                assert_eq!(base_patch.pixels == patch.pixels, !replaced);
            }
        }
    }
}

#[test]
fn synthetic_phase_without_textures_errors() {
    let mut src = DataSource::standard(small_config()).unwrap();
    src.synthetic.clear();
    assert!(matches!(src.example(Phase::Synthetic, 0, 0), Err(DataError::NoSyntheticTextures)));
}

/// P(all `k` equally likely outcomes appear in `draws` draws), by
/// inclusion-exclusion.
fn coupon_probability(k: usize, draws: i32) -> f64 {
    let mut p = 0.0;
    let mut binom = 1.0f64;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        let term = binom * (1.0 - j as f64 / k as f64).powi(draws);
        p += if j % 2 == 0 { term } else { -term };
    }
    p
}

#[test]
fn shuffled_phase_covers_all_orderings() {
    let p = coupon_probability(120, 1000);
    assert!((0.97..0.975).contains(&p), "exact coverage probability {p}");
    let src = DataSource::standard(small_config()).unwrap();
    let seen: HashSet<Vec<u8>> = src
        .stream(Phase::Shuffled, 2024, 1000)
        .map(|e| e.unwrap().provenance.ordering.order().to_vec())
        .collect();
    assert_eq!(seen.len(), 120);
}

#[test]
fn generation_is_index_addressable() {
    let src = DataSource::standard(small_config()).unwrap();
    let all: Vec<_> = src.stream(Phase::Synthetic, 3, 5).map(|e| e.unwrap()).collect();
    assert_eq!(all[3], src.example(Phase::Synthetic, 3, 3).unwrap());
}

#[test]
fn dataset_round_trips_through_disk() {
    let cfg = small_config();
    let src = DataSource::standard(cfg.clone()).unwrap();
    let exs: Vec<_> = src.stream(Phase::Synthetic, 8, 4).map(|e| e.unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(dir.path(), Phase::Synthetic, 8, &cfg, &exs).unwrap();
    let (manifest, back) = load_dataset(dir.path()).unwrap();
    assert_eq!(manifest.examples.len(), 4);
    for (a, b) in exs.iter().zip(&back) {
        assert_eq!(a.image, b.image);
        assert_eq!(a.target, b.target);
        assert_eq!(a.provenance, b.provenance);
        assert_eq!(a.context.pack(), b.context.pack());
        assert_eq!(a.context.label_pairs(), b.context.label_pairs());
    }
    let first = dir.path().join(&manifest.examples[0].file);
    let bytes = std::fs::read(&first).unwrap();
    assert_eq!(&bytes[..4], b"PACX");
    std::fs::write(&first, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_dataset(dir.path()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pack_unpack_is_bit_exact(n in 1usize..4, h in 1usize..6, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..n * 3 * 2 * h * h).map(|_| rand::Rng::gen::<f32>(&mut rng)).collect();
        let packed = Tensor::new(vec![n * 3, 2 * h, h], data).unwrap();
        let ctx = PreferenceContext::unpack(&packed).unwrap();
        prop_assert_eq!(ctx.pack(), packed);
    }

    #[test]
    fn targets_satisfy_nc1_and_nc2(labels in proptest::collection::vec(-1i16..5, 1..64), perm_seed: u64) {
        let ordering = TotalOrdering::random(&mut ChaCha8Rng::seed_from_u64(perm_seed), 5);
        let n = labels.len();
        let grid = LabelGrid { height: 1, width: n, labels: labels.clone() };
        let t = build_target(&grid, &ordering).unwrap();
        for i in 0..n {
            prop_assert_eq!(t.mask[i], labels[i] != SENTINEL);
            for j in 0..n {
                if !t.mask[i] || !t.mask[j] { continue; }
                let (a, b) = (labels[i] as u8, labels[j] as u8);
                if a == b {
                    prop_assert_eq!(t.values[i].to_bits(), t.values[j].to_bits());
                } else if ordering.prefers(a, b) {
                    prop_assert!(t.values[i] < t.values[j]);
                }
            }
        }
    }
}
