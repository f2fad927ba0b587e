use super::*;
use std::f64::consts::PI;

fn base_world(seed: u64) -> TerrainWorld {
    let lib = TextureLibrary::standard();
    let textures = lib.base().into_iter().cloned().collect();
    generate_world(seed, 256, 256, 5, textures).unwrap()
}

fn single_label_world() -> TerrainWorld {
    let t = TextureLibrary::standard().base()[0].clone();
    TerrainWorld::from_grid(3, 64, 64, 1, vec![0; 64 * 64], vec![t]).unwrap()
}

#[test]
fn coverage_and_label_range() {
    let w = base_world(1);
    assert!(w.labels().iter().all(|&l| l < 5));
    assert!(w.histogram().iter().all(|&c| c >= 655), "{:?}", w.histogram());
}

#[test]
fn generation_is_deterministic() {
    assert_eq!(base_world(1), base_world(1));
    assert_ne!(base_world(1).labels(), base_world(2).labels());
}

#[test]
fn bad_parameters_are_rejected() {
    let lib = TextureLibrary::standard();
    let t: Vec<_> = lib.base().into_iter().cloned().collect();
    assert!(generate_world(1, 256, 256, 1, t[..1].to_vec()).is_err());
    assert!(generate_world(1, 32, 256, 5, t.clone()).is_err());
    assert!(generate_world(1, 256, 256, 4, t).is_err());
}

#[test]
fn degenerate_coverage_errors() {
    let lib = TextureLibrary::standard();
    let mut t: Vec<_> = lib.all().to_vec();
    t.truncate(19);
    let many = (0..200).map(|i| t[i % t.len()].clone()).collect();
    match generate_world(1, 64, 64, 200, many) {
        Err(WorldError::Coverage { attempts: 100, .. }) => {}
        other => panic!("expected coverage error, got {other:?}"),
    }
}

#[test]
fn render_locality_and_bounds() {
    let w = base_world(1);
    let big = w.render(Rect::new(10, 20, 30, 30)).unwrap();
    let one = w.render(Rect::new(17, 33, 1, 1)).unwrap();
    assert_eq!(one.get(0, 0), big.get(13, 7));
    assert!(w.render(Rect::new(250, 0, 10, 10)).is_err());
    assert!(big.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn observe_identity_matches_render() {
    let w = base_world(1);
    let obs = w.observe(&Pose::new(100.0, 120.0, 0.0), 64, 64);
    let crop = w.render(Rect::new(68, 88, 64, 64)).unwrap();
    assert_eq!(obs.pixels, crop.pixels);
    assert!(obs.valid.iter().all(|&v| v));
    assert_eq!(obs.anchor, [68, 88]);
}

#[test]
fn observe_half_turn_is_rotated_crop() {
    let w = base_world(1);
    let p = Pose::new(100.0, 120.0, 0.0);
    let a = w.observe(&p, 64, 64);
    let b = w.observe(&Pose { theta: PI, ..p }, 64, 64);
    for i in 0..64 {
        for j in 0..64 {
            let (x, y) = (a.get(i, j), b.get(63 - i, 63 - j));
            for c in 0..3 {
                assert!((x[c] - y[c]).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn observe_marks_outside_pixels() {
    let w = base_world(1);
    let obs = w.observe(&Pose::new(2.0, 2.0, 0.3), 64, 64);
    let lab = w.label_window(&Pose::new(2.0, 2.0, 0.3), 64, 64);
    let mut outside = 0;
    for k in 0..64 * 64 {
        if lab.labels[k] == SENTINEL {
            outside += 1;
            assert!(!obs.valid[k]);
            assert_eq!(&obs.pixels[k * 3..k * 3 + 3], &[0.0, 0.0, 0.0]);
        }
    }
    assert!(outside > 1000);
}

#[test]
fn single_label_world_labels_constant() {
    let w = single_label_world();
    let lab = w.label_window(&Pose::new(32.0, 32.0, 1.0), 32, 32);
    assert!(lab.labels.iter().all(|&l| l == 0));
}

#[test]
fn labels_render_to_observed_pixels_at_right_angles() {
    let w = base_world(4);
    for k in 0..4 {
        let pose = Pose::new(128.0, 128.0, k as f64 * PI / 2.0);
        let obs = w.observe(&pose, 64, 64);
        let lab = w.label_window(&pose, 64, 64);
        for i in 0..64 {
            for j in 0..64 {
                let (px, py) = TerrainWorld::sample_point(&pose, 64, 64, i, j);
                let (cx, cy) = (px as usize, py as usize);
                assert_eq!(lab.get(i, j), w.label_at(cx, cy) as i16);
                let want = w.texture(lab.get(i, j) as u8).sample(cx as i64, cy as i64);
                let got = obs.get(i, j);
                for c in 0..3 {
                    assert!((want[c] - got[c]).abs() <= 2.0 / 255.0, "k={k} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn world_file_round_trip() {
    let w = base_world(9);
    let json = serde_json::to_string(&w.to_file()).unwrap();
    let file: WorldFile = serde_json::from_str(&json).unwrap();
    assert_eq!(TerrainWorld::from_file(&file).unwrap(), w);
    assert!(json.contains("\"L\":5"));
}

#[test]
fn corridor_world_has_connected_band() {
    let lib = TextureLibrary::standard();
    let t: Vec<_> = lib.base()[..3].iter().map(|t| (*t).clone()).collect();
    let layout = Layout::Corridor {
        start: [8, 8],
        goal: [119, 119],
        half_width: 3.0,
        bends: 2,
        corridor_label: 0,
    };
    let w = TerrainWorld::generate(5, 128, 128, 3, t, layout).unwrap();
    assert_eq!(w.label_at(8, 8), 0);
    assert_eq!(w.label_at(119, 119), 0);
    let mut seen = vec![false; 128 * 128];
    let mut stack = vec![(8usize, 8usize)];
    seen[8 * 128 + 8] = true;
    while let Some((x, y)) = stack.pop() {
        for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= 128 || ny >= 128 {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !seen[ny * 128 + nx] && w.label_at(nx, ny) == 0 {
                seen[ny * 128 + nx] = true;
                stack.push((nx, ny));
            }
        }
    }
    assert!(seen[119 * 128 + 119]);
}

#[test]
fn chw_layout() {
    let w = base_world(1);
    let img = w.render(Rect::new(0, 0, 4, 2)).unwrap();
    let chw = img.to_chw();
    assert_eq!(chw[8 + 5], img.get(1, 1)[1]);
}

#[test]
fn explicit_grid_round_trips_and_validates() {
    let lib = TextureLibrary::standard();
    let t: Vec<_> = lib.base()[..2].iter().map(|t| (*t).clone()).collect();
    let labels: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
    let w = TerrainWorld::from_grid(0, 4, 4, 2, labels.clone(), t.clone()).unwrap();
    assert_eq!(w.labels(), &labels[..]);
    let back = TerrainWorld::from_file(&w.to_file()).unwrap();
    assert_eq!(back, w);
    assert!(TerrainWorld::from_grid(0, 4, 4, 2, vec![2; 16], t.clone()).is_err());
    assert!(TerrainWorld::from_grid(0, 4, 3, 2, labels, t).is_err());
}
