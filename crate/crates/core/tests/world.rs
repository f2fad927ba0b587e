mod common;

use common::golden::{self, checksum_f32};
use pacer::world::{generate_world, Pose, Rect, TerrainWorld, TextureLibrary};
use proptest::prelude::*;
use serde_json::json;
use std::f64::consts::PI;

fn golden_world() -> TerrainWorld {
    let lib = TextureLibrary::standard();
    generate_world(1, 256, 256, 5, lib.base().into_iter().cloned().collect()).unwrap()
}

#[test]
fn golden_histogram() {
    let w = golden_world();
    assert!(w.histogram().iter().all(|&c| c >= 655));
    golden::check("world_histogram_seed1", json!(w.histogram()));
}

#[test]
fn golden_full_render() {
    let w = golden_world();
    let img = w.render(Rect::new(0, 0, 256, 256)).unwrap();
    golden::check("world_render_seed1", json!(checksum_f32(&img.pixels)));
}

#[test]
fn golden_rotated_observation() {
    let w = golden_world();
    let img = w.observe(&Pose::new(128.0, 128.0, PI / 4.0), 64, 64);
    golden::check("world_observe_seed1_quarter_pi", json!(checksum_f32(&img.pixels)));
}

#[test]
fn golden_label_window() {
    let w = golden_world();
    let grid = w.label_window(&Pose::new(100.0, 60.0, 1.0), 16, 16);
    let rows: Vec<Vec<i16>> = grid.labels.chunks(16).map(|r| r.to_vec()).collect();
    golden::check("world_label_window_seed1", json!(rows));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn observe_is_bounded_and_labels_in_range(x in 0.0f64..256.0, y in 0.0f64..256.0, theta in 0.0f64..6.3) {
        let w = golden_world();
        let pose = Pose::new(x, y, theta);
        let img = w.observe(&pose, 32, 32);
        let lab = w.label_window(&pose, 32, 32);
        prop_assert!(img.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(lab.labels.iter().all(|&l| (-1..5).contains(&l)));
        for k in 0..32 * 32 {
            prop_assert_eq!(img.valid[k], lab.labels[k] != -1);
        }
    }

    #[test]
    fn same_label_same_coordinates_render_identically(x in 0usize..250, y in 0usize..250) {
        let w = golden_world();
        let a = w.render(Rect::new(x, y, 4, 4)).unwrap();
        let b = w.render(Rect::new(x, y, 4, 4)).unwrap();
        prop_assert_eq!(a, b);
    }
}
