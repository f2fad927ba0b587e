mod common;

use common::golden;
use pacer::data::{build_target, BankConfig, DataConfig, DataSource, TargetCostmap, TotalOrdering};
use pacer::eval::suite::{
    corridor_world, diagonal_endpoints, exhaustive_nc, plan_tiers, target_nc, theorem_suite, tier_suite, unseen_world,
    FieldSource, Models, PlanningSuiteConfig, TierSuiteReport,
};
use pacer::eval::theorem::{affine, affine_lambda, all_pairs, rank_field, swap_label_costs, verify_theorem, TheoremConfig, Q};
use pacer::eval::*;
use pacer::model::{Costmap, ModelParams, NetworkSpec};
use pacer::plan::{astar, CostField, PlannerConfig};
use pacer::world::{generate_world, LabelGrid, Pose, TerrainWorld, TextureFamily, TextureLibrary};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn grid_world(width: usize, height: usize, num_labels: usize, labels: Vec<u8>) -> TerrainWorld {
    let lib = TextureLibrary::standard();
    TerrainWorld::from_grid(0, width, height, num_labels, labels, lib.base()[..num_labels].iter().map(|t| (*t).clone()).collect())
        .unwrap()
}

fn golden_world() -> TerrainWorld {
    let lib = TextureLibrary::standard();
    generate_world(1, 256, 256, 5, lib.base().into_iter().cloned().collect()).unwrap()
}

#[test]
fn tiers_split_rank_costs_at_thirds() {
    let map = TierMap::new(&TotalOrdering::canonical(5)).unwrap();
    assert_eq!(map.tiers, vec![Tier::Low, Tier::Low, Tier::Medium, Tier::High, Tier::High]);
    // costs 0, 1/3, 2/3, 1
    let map = TierMap::new(&TotalOrdering::new(vec![3, 2, 1, 0]).unwrap()).unwrap();
    assert_eq!(map.tiers, vec![Tier::High, Tier::High, Tier::Medium, Tier::Low]);
    assert!(map.tier(4).is_err());
}

#[test]
fn path_on_one_low_label_is_all_low() {
    let world = grid_world(4, 1, 5, vec![0, 0, 0, 0]);
    let map = TierMap::new(&TotalOrdering::canonical(5)).unwrap();
    let r = tier_proportions(&[[0, 0], [1, 0], [2, 0], [3, 0]], &world, &map).unwrap();
    assert_eq!(r, TierReport { low: 1.0, medium: 0.0, high: 0.0 });
}

#[test]
fn alternating_low_high_path_splits_in_half() {
    let world = grid_world(6, 1, 5, vec![0, 4, 1, 3, 0, 4]);
    let map = TierMap::new(&TotalOrdering::canonical(5)).unwrap();
    let cells: Vec<_> = (0..6).map(|x| [x, 0]).collect();
    let r = tier_proportions(&cells, &world, &map).unwrap();
    assert_eq!(r, TierReport { low: 0.5, medium: 0.0, high: 0.5 });
    assert!(tier_proportions(&[], &world, &map).is_err());
    assert!(tier_proportions(&[[6, 0]], &world, &map).is_err());
}

#[test]
fn field_tiers_match_label_tiers_on_rank_fields() {
    let world = grid_world(5, 1, 5, vec![0, 1, 2, 3, 4]);
    let ordering = TotalOrdering::new(vec![2, 0, 4, 1, 3]).unwrap();
    let field = CostField::from_ordering(&world, &ordering).unwrap();
    let cells: Vec<_> = (0..5).map(|x| [x, 0]).collect();
    let by_field = field_tier_proportions(&cells, &field).unwrap();
    assert_eq!(by_field, tier_proportions(&cells, &world, &TierMap::new(&ordering).unwrap()).unwrap());
    assert_eq!(by_field, TierReport { low: 0.4, medium: 0.2, high: 0.4 });
    assert!(field_tier_proportions(&[[0, 1]], &field).is_err());
}

#[test]
fn golden_oracle_plan_tiers() {
    let world = golden_world();
    let ordering = TotalOrdering::canonical(5);
    let field = CostField::from_ordering(&world, &ordering).unwrap();
    let path = astar(&field, [8, 8], [247, 247], &PlannerConfig::default()).unwrap();
    let r = tier_proportions(&path.cells, &world, &TierMap::new(&ordering).unwrap()).unwrap();
    assert!((r.low + r.medium + r.high - 1.0).abs() < 1e-12);
    golden::check(
        "eval_oracle_tiers_seed1",
        json!({ "cells": path.cells.len(), "total_cost": path.total_cost, "tiers": r }),
    );
}

fn costmap(height: usize, width: usize, values: Vec<f32>) -> Costmap {
    Costmap { height, width, values }
}

fn target(height: usize, width: usize, values: Vec<f32>, mask: Vec<bool>) -> TargetCostmap {
    TargetCostmap { height, width, values, mask }
}

#[test]
fn perfect_prediction_has_zero_ranking_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values: Vec<f32> = (0..64 * 64).map(|_| rng.gen_range(0..5) as f32 / 4.0).collect();
    let t = target(64, 64, values.clone(), vec![true; 64 * 64]);
    for seed in 0..5 {
        assert_eq!(margin_ranking_error(&costmap(64, 64, values.clone()), &t, 500, seed).unwrap(), 0.0);
    }
}

#[test]
fn inverted_binary_prediction_costs_the_fraction_of_unequal_pairs() {
    let values: Vec<f32> = (0..64).map(|i| ((i / 8 + i % 8) % 2) as f32).collect();
    let t = target(8, 8, values.clone(), vec![true; 64]);
    let pred = costmap(8, 8, values.iter().map(|v| 1.0 - v).collect());
    // all 64 points sampled; 32·32 of the C(64, 2) pairs straddle the labels
    let expected = 1024.0 / 2016.0;
    for margin in [Margin::Predicted, Margin::Target] {
        let e = margin_ranking_error_with(&pred, &t, 500, 3, margin).unwrap();
        assert!((e - expected).abs() < 1e-12, "{margin:?}: {e}");
    }
}

#[test]
fn ranking_error_matches_a_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let pred: Vec<f32> = (0..256).map(|_| rng.gen()).collect();
        let tv: Vec<f32> = (0..256).map(|_| rng.gen_range(0..4) as f32 / 3.0).collect();
        let mut mask = vec![false; 256];
        for i in rand::seq::index::sample(&mut rng, 256, 20) {
            mask[i] = true;
        }
        let points: Vec<usize> = (0..256).filter(|&i| mask[i]).collect();
        let mut sum = 0.0;
        for &i in &points {
            for &j in &points {
                if i == j {
                    continue;
                }
                let (dp, dt) = (pred[i] as f64 - pred[j] as f64, tv[i] as f64 - tv[j] as f64);
                if dt.abs() > 1e-6 && dp * dt <= 0.0 {
                    sum += dp.abs();
                }
            }
        }
        let oracle = sum / (20.0 * 19.0);
        let got = margin_ranking_error(&costmap(16, 16, pred), &target(16, 16, tv, mask), 500, trial).unwrap();
        assert!((got - oracle).abs() < 1e-9, "trial {trial}: {got} vs {oracle}");
    }
}

#[test]
fn ranking_error_needs_two_points() {
    let mut mask = vec![false; 16];
    mask[3] = true;
    let r = margin_ranking_error(&costmap(4, 4, vec![0.5; 16]), &target(4, 4, vec![0.0; 16], mask), 500, 0);
    assert!(matches!(r, Err(EvalError::TooFewPoints(1))));
    let r = margin_ranking_error(&costmap(4, 4, vec![0.5; 16]), &target(2, 8, vec![0.0; 16], vec![true; 16]), 500, 0);
    assert!(matches!(r, Err(EvalError::Input(_))));
}

#[test]
fn tied_targets_cost_nothing() {
    assert_eq!(pair_error(0.7, 0.0, Margin::Predicted), 0.0);
    assert_eq!(pair_error(-0.2, 5e-7, Margin::Target), 0.0);
    assert_eq!(pair_error(-0.2, 0.5, Margin::Predicted), 0.2);
    assert_eq!(pair_error(0.0, 0.5, Margin::Target), 0.5);
    assert_eq!(pair_error(0.3, 0.5, Margin::Target), 0.0);
}

fn labels(height: usize, width: usize, labels: Vec<i16>) -> LabelGrid {
    LabelGrid { height, width, labels }
}

#[test]
fn constant_costmap_violates_every_ordered_pair() {
    let grid = labels(4, 4, (0..16).map(|i| (i % 3) as i16).collect());
    let ordering = TotalOrdering::canonical(3);
    let r = check_nc(&[0.4; 16], &grid, &ordering, &NcConfig::exact(1)).unwrap();
    assert_eq!(r.nc1_violation_rate, 0.0);
    assert_eq!(r.nc2_violation_rate, 1.0);
    assert!(!r.medians_sorted);
}

#[test]
fn nc_checks_skip_sentinels_and_detect_noise() {
    let mut grid = labels(2, 4, vec![0, 0, 1, 1, 0, 0, 1, -1]);
    let values = [0.0, 0.3, 0.9, 1.0, 0.05, 0.3, 0.95, 0.0];
    let ordering = TotalOrdering::canonical(2);
    let (r1, n1) = check_nc1(&values, &grid, 2, 0.1, 500, 3).unwrap();
    assert!(r1 > 0.0 && n1 == 500);
    assert_eq!(check_nc1(&values, &grid, 2, 0.5, 500, 3).unwrap().0, 0.0);
    assert_eq!(check_nc2(&values, &grid, &ordering, 0.02, 500, 3).unwrap().0, 0.0);
    // the sentinel pixel costs 0 but is ignored
    assert_eq!(check_nc2(&values, &grid, &ordering.reversed(), 0.0, 500, 3).unwrap().0, 1.0);
    let m = label_medians(&values, &grid, 2).unwrap();
    assert!((m[0].unwrap() - 0.175).abs() < 1e-6 && m[1] == Some(0.95));
    grid.labels[0] = 5;
    assert!(check_nc1(&values, &grid, 2, 0.1, 10, 0).is_err());
}

#[test]
fn single_label_grids_have_no_cross_pairs() {
    let grid = labels(2, 2, vec![1; 4]);
    let ordering = TotalOrdering::canonical(3);
    assert_eq!(check_nc2(&[0.1; 4], &grid, &ordering, 0.0, 100, 0).unwrap(), (0.0, 0));
    assert!(medians_sorted(&label_medians(&[0.1; 4], &grid, 3).unwrap(), &ordering));
}

#[test]
fn exhaustive_check_catches_overlapping_ranges() {
    let grid = labels(1, 4, vec![0, 0, 1, 1]);
    let ordering = TotalOrdering::canonical(2);
    assert_eq!(exhaustive_nc(&[0.0, 0.0, 1.0, 1.0], &grid, &ordering), (0, 0));
    assert_eq!(exhaustive_nc(&[0.0, 0.6, 0.5, 1.0], &grid, &ordering), (2, 1));
}

fn small_source() -> DataSource {
    DataSource::standard(DataConfig {
        world_seeds: vec![1, 2],
        world_size: 128,
        bank: BankConfig { size: 10, patch_size: 16 },
        ..DataConfig::default()
    })
    .unwrap()
}

#[test]
fn targets_satisfy_both_conditions_exactly() {
    let r = target_nc(&small_source(), 25, 9).unwrap();
    assert_eq!(r.sampled_nc1_violations, 0.0);
    assert_eq!(r.sampled_nc2_violations, 0.0);
    assert_eq!((r.exhaustive_nc1_violations, r.exhaustive_nc2_violations, r.unsorted_medians), (0, 0, 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn any_target_passes_the_sampled_checks(
        perm in Just((0u8..5).collect::<Vec<_>>()).prop_shuffle(),
        x in 40.0f64..216.0,
        y in 40.0f64..216.0,
        theta in 0.0f64..6.28,
        seed in 0u64..1000,
    ) {
        let world = golden_world();
        let ordering = TotalOrdering::new(perm).unwrap();
        let grid = world.label_window(&Pose::new(x, y, theta), 64, 64);
        let t = build_target(&grid, &ordering).unwrap();
        let r = check_nc(&t.values, &grid, &ordering, &NcConfig::exact(seed)).unwrap();
        prop_assert_eq!(r.nc1_violation_rate, 0.0);
        prop_assert_eq!(r.nc2_violation_rate, 0.0);
        prop_assert!(r.medians_sorted);
    }
}

/// Every simple 4-connected path from `s` to `g` with at most `max` moves.
fn enumerate_paths(w: usize, h: usize, s: usize, g: usize, max: usize) -> Vec<Vec<usize>> {
    fn go(w: usize, h: usize, g: usize, max: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == g {
            out.push(path.clone());
        }
        if path.len() > max {
            return;
        }
        let (x, y) = ((u % w) as i64, (u / w) as i64);
        for (dx, dy) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let v = ny as usize * w + nx as usize;
            if !path.contains(&v) {
                path.push(v);
                go(w, h, g, max, path, out);
                path.pop();
            }
        }
    }
    let mut out = vec![];
    go(w, h, g, max, &mut vec![s], &mut out);
    out
}

fn path_cost(path: &[usize], field: &[Q], lambda: Q) -> Q {
    path[1..].iter().map(|&v| Q::from_integer(1) + lambda * field[v]).sum()
}

/// Pairs whose optimal path sets differ, found by direct enumeration.
fn oracle_mismatches(w: usize, h: usize, hf: &[Q], rf: &[Q], lh: Q, lr: Q) -> usize {
    let mut bad = 0;
    for s in 0..w * h {
        for g in 0..w * h {
            let paths = enumerate_paths(w, h, s, g, 14);
            let jh: Vec<Q> = paths.iter().map(|p| path_cost(p, hf, lh)).collect();
            let jr: Vec<Q> = paths.iter().map(|p| path_cost(p, rf, lr)).collect();
            let (mh, mr) = (*jh.iter().min().unwrap(), *jr.iter().min().unwrap());
            bad += (0..paths.len()).any(|i| (jh[i] == mh) != (jr[i] == mr)) as usize;
        }
    }
    bad
}

fn hand_built() -> (Vec<u8>, TotalOrdering) {
    #[rustfmt::skip]
    let labels = vec![
        0, 1, 2, 2,
        1, 0, 2, 1,
        2, 2, 1, 0,
        0, 1, 0, 2,
    ];
    (labels, TotalOrdering::canonical(3))
}

#[test]
fn identity_field_has_no_discrepancies() {
    let (labels, ordering) = hand_built();
    let hf = rank_field(&labels, &ordering).unwrap();
    let r = verify_theorem(4, 4, &hf, &hf, &all_pairs(4, 4), &TheoremConfig::uniform(Q::new(1, 2))).unwrap();
    assert_eq!((r.argmin_mismatches, r.cost_mismatches, r.nc1_violations, r.nc2_violations), (0, 0, 0, 0));
    assert_eq!(r.pairs, 256);
    assert!(r.witness.is_none());
}

#[test]
fn affine_field_keeps_the_optimal_path_sets() {
    let (labels, ordering) = hand_built();
    let hf = rank_field(&labels, &ordering).unwrap();
    let (a, b) = (Q::from_integer(2), Q::new(1, 10));
    let lh = Q::from_integer(3);
    let lr = affine_lambda(lh, a, b).unwrap();
    assert_eq!(lr, Q::new(30, 17));
    let rf = affine(&hf, a, b);
    let cfg = TheoremConfig { lambda_h: lh, lambda_r: lr, max_moves: 14 };
    let r = verify_theorem(4, 4, &hf, &rf, &all_pairs(4, 4), &cfg).unwrap();
    assert_eq!((r.argmin_mismatches, r.cost_mismatches, r.nc1_violations, r.nc2_violations), (0, 0, 0, 0));
    assert_eq!(oracle_mismatches(4, 4, &hf, &rf, lh, lr), 0);
    assert_eq!(affine_lambda(lh, Q::from_integer(1), Q::new(1, 2)), None);
}

#[test]
fn inconsistent_step_weight_breaks_affine_invariance() {
    // one expensive cell: at λ = 3 the four-move detour around it beats the
    // two-move route through it, until a constant offset charged at the
    // same λ makes every extra move dearer
    let mut labels = vec![0u8; 16];
    labels[1] = 1;
    let hf = rank_field(&labels, &TotalOrdering::canonical(2)).unwrap();
    let rf = affine(&hf, Q::from_integer(1), Q::from_integer(1));
    let cfg = TheoremConfig::uniform(Q::from_integer(3));
    let r = verify_theorem(4, 4, &hf, &rf, &all_pairs(4, 4), &cfg).unwrap();
    let oracle = oracle_mismatches(4, 4, &hf, &rf, cfg.lambda_h, cfg.lambda_r);
    assert!(oracle > 0);
    assert_eq!(r.argmin_mismatches, oracle);
}

#[test]
fn swapped_terrain_costs_yield_a_checked_witness() {
    let (labels, ordering) = hand_built();
    let hf = rank_field(&labels, &ordering).unwrap();
    let rf = swap_label_costs(&labels, &hf, 0, 2).unwrap();
    let lambda = Q::new(1, 2);
    let r = verify_theorem(4, 4, &hf, &rf, &all_pairs(4, 4), &TheoremConfig::uniform(lambda)).unwrap();
    assert!(r.nc2_violations > 0);
    let w = r.witness.expect("a witness exists");
    let idx = |c: [usize; 2]| c[1] * 4 + c[0];
    let paths = enumerate_paths(4, 4, idx(w.start), idx(w.goal), 14);
    let min_h = paths.iter().map(|p| path_cost(p, &hf, lambda)).min().unwrap();
    let min_r = paths.iter().map(|p| path_cost(p, &rf, lambda)).min().unwrap();
    let rp: Vec<usize> = w.r_path.iter().map(|&c| idx(c)).collect();
    assert!(paths.contains(&rp));
    assert_eq!(path_cost(&rp, &rf, lambda), min_r);
    assert_eq!(path_cost(&rp, &hf, lambda), w.h_cost_of_r_path);
    assert_eq!(min_h, w.h_optimum);
    assert!(w.h_cost_of_r_path > w.h_optimum);
    assert_eq!(r.argmin_mismatches, oracle_mismatches(4, 4, &hf, &rf, lambda, lambda));
}

#[test]
fn verifier_rejects_bad_inputs() {
    let q = vec![Q::from_integer(0); 49];
    let cfg = TheoremConfig::uniform(Q::new(1, 2));
    assert!(verify_theorem(7, 7, &q, &q, &[], &cfg).is_err());
    assert!(verify_theorem(4, 4, &q[..15], &q[..16], &[], &cfg).is_err());
    assert!(verify_theorem(4, 4, &q[..16], &q[..16], &[([4, 0], [0, 0])], &cfg).is_err());
    let mut neg = q[..16].to_vec();
    neg[3] = Q::new(-1, 4);
    assert!(verify_theorem(4, 4, &neg, &q[..16], &[], &cfg).is_err());
    assert!(swap_label_costs(&[0, 0, 1], &q[..3], 0, 2).is_err());
}

#[test]
fn theorem_suite_finds_every_witness() {
    let r = theorem_suite(4, 11).unwrap();
    assert_eq!(r.instances.len(), 4);
    assert_eq!(r.affine_failures, 0);
    assert_eq!(r.witnesses_found, 4);
    assert!(r.instances.iter().all(|i| (4..=6).contains(&i.side) && i.swap_nc2_violations > 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn positive_affine_maps_preserve_optimal_paths(
        cells in proptest::collection::vec(0u8..4, 16),
        a_num in 1i64..6,
        b_num in 0i64..4,
        lambda_den in 1i64..4,
    ) {
        let hf = rank_field(&cells, &TotalOrdering::canonical(4)).unwrap();
        let (a, b) = (Q::new(a_num, 2), Q::new(b_num, 3));
        let lh = Q::new(1, lambda_den);
        prop_assume!(affine_lambda(lh, a, b).is_some());
        let cfg = TheoremConfig { lambda_h: lh, lambda_r: affine_lambda(lh, a, b).unwrap(), max_moves: 14 };
        let r = verify_theorem(4, 4, &hf, &affine(&hf, a, b), &all_pairs(4, 4), &cfg).unwrap();
        prop_assert_eq!(r.argmin_mismatches, 0);
        prop_assert_eq!(r.cost_mismatches, 0);
    }
}

fn planning_config() -> PlanningSuiteConfig {
    PlanningSuiteConfig {
        worlds: 1,
        ..PlanningSuiteConfig::default()
    }
}

#[test]
fn ground_truth_planning_follows_the_corridor() {
    let cfg = planning_config();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..3 {
        let ordering = TotalOrdering::random(&mut rng, 5);
        let (world, banks, (s, g)) = corridor_world(&cfg, i, &ordering).unwrap();
        assert_eq!((world.label_at(s[0], s[1]), world.label_at(g[0], g[1])), (ordering.order()[0], ordering.order()[0]));
        assert_eq!(banks.len(), 5);
        let t = plan_tiers(&world, FieldSource::GroundTruth, &ordering, s, g, &cfg).unwrap();
        assert!(t.low >= 0.95, "world {i}: {t:?}");
    }
}

#[test]
fn unseen_worlds_use_only_unused_synthetic_textures_for_decoys() {
    let cfg = planning_config();
    let (world, banks, decoys) = unseen_world(&cfg, 0).unwrap();
    assert!(world.textures().iter().all(|t| t.family == TextureFamily::Synthetic));
    for (b, d) in banks.iter().zip(&decoys) {
        assert_eq!(b.label, d.label);
        assert_ne!(b.patches[0].pixels, d.patches[0].pixels);
    }
    let ends = diagonal_endpoints(&world, cfg.margin);
    assert_eq!(ends[0], ([6, 6], [121, 121]));
}

#[test]
fn tier_suite_runs_every_condition() {
    let spec = NetworkSpec::default();
    let m = ModelParams::init(&spec, 1).unwrap();
    let models = Models {
        base: m.clone(),
        shuffled: m.clone(),
        synthetic: m,
    };
    let r = tier_suite(&models, &planning_config()).unwrap();
    assert_eq!(r.trials.0.len(), 16);
    assert_eq!(r.summaries.len(), 9);
    assert!(r.summaries.iter().all(|s| s.trials >= 1 && (s.mean_low + s.mean_medium + s.mean_high - 1.0).abs() < 1e-9));
    let back: TierSuiteReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn golden_learned_nc_on_trained_checkpoint() {
    let src = DataSource::standard(DataConfig::default().with_worlds(vec![1, 2])).unwrap();
    let r = pacer::eval::suite::learned_nc(&common::fixture_params(), &src, 20, 9).unwrap();
    assert!((0.0..=1.0).contains(&r.mean_nc1_violation_rate) && (0.0..=1.0).contains(&r.mean_nc2_violation_rate));
    golden::check("eval_learned_nc_fixture", serde_json::to_value(&r).unwrap());
}
