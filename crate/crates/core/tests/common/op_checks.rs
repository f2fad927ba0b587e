//! One randomized finite-difference trial per differentiable op.

use super::gradcheck::{away_from_zero, check, random_tensor, Check};
use pacer::nn::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Trial = fn(&mut ChaCha8Rng) -> Check;

pub fn suite() -> Vec<(&'static str, Trial)> {
    vec![
        ("conv2d", conv2d),
        ("relu", relu),
        ("sigmoid", sigmoid),
        ("upsample_nearest2x", upsample),
        ("concat_channels", concat),
        ("global_avg_pool", gap),
        ("broadcast_spatial", broadcast),
        ("linear", linear),
        ("add", add),
        ("mul", mul),
        ("sum", sum),
        ("bce_per_pixel", bce),
    ]
}

fn small_nchw(rng: &mut ChaCha8Rng) -> Vec<usize> {
    vec![rng.gen_range(1..3), rng.gen_range(1..4), rng.gen_range(2..6), rng.gen_range(2..6)]
}

fn conv2d(rng: &mut ChaCha8Rng) -> Check {
    let stride = rng.gen_range(1..3);
    let padding = rng.gen_range(0..2);
    let x = random_tensor(rng, vec![2, 3, 8, 8], 1.0);
    let w = random_tensor(rng, vec![4, 3, 3, 3], 0.5);
    let b = random_tensor(rng, vec![4], 0.5);
    check(rng, &[x, w, b], 64, move |g, v| g.conv2d(v[0], v[1], v[2], stride, padding).unwrap())
}

fn relu(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let x = away_from_zero(rng, shape, 0.01);
    check(rng, &[x], 64, |g, v| g.relu(v[0]))
}

fn sigmoid(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let x = random_tensor(rng, shape, 3.0);
    check(rng, &[x], 64, |g, v| g.sigmoid(v[0]))
}

fn upsample(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let x = random_tensor(rng, shape, 1.0);
    check(rng, &[x], 64, |g, v| g.upsample_nearest2x(v[0]).unwrap())
}

fn concat(rng: &mut ChaCha8Rng) -> Check {
    let (n, h, w) = (rng.gen_range(1..3), rng.gen_range(2..5), rng.gen_range(2..5));
    let (ca, cb) = (rng.gen_range(1..4), rng.gen_range(1..4));
    let a = random_tensor(rng, vec![n, ca, h, w], 1.0);
    let b = random_tensor(rng, vec![n, cb, h, w], 1.0);
    check(rng, &[a, b], 64, |g, v| g.concat_channels(v[0], v[1]).unwrap())
}

fn gap(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let x = random_tensor(rng, shape, 1.0);
    check(rng, &[x], 64, |g, v| g.global_avg_pool(v[0]).unwrap())
}

fn broadcast(rng: &mut ChaCha8Rng) -> Check {
    let (n, c) = (rng.gen_range(1..3), rng.gen_range(1..5));
    let x = random_tensor(rng, vec![n, c], 1.0);
    let (h, w) = (rng.gen_range(1..5), rng.gen_range(1..5));
    check(rng, &[x], 64, move |g, v| g.broadcast_spatial(v[0], h, w).unwrap())
}

fn linear(rng: &mut ChaCha8Rng) -> Check {
    let (n, fin, fout) = (rng.gen_range(1..4), rng.gen_range(1..9), rng.gen_range(1..9));
    let x = random_tensor(rng, vec![n, fin], 1.0);
    let w = random_tensor(rng, vec![fout, fin], 1.0);
    let b = random_tensor(rng, vec![fout], 1.0);
    check(rng, &[x, w, b], 64, |g, v| g.linear(v[0], v[1], v[2]).unwrap())
}

fn add(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let a = random_tensor(rng, shape.clone(), 1.0);
    let b = random_tensor(rng, shape, 1.0);
    check(rng, &[a, b], 64, |g, v| g.add(v[0], v[1]).unwrap())
}

fn mul(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let a = random_tensor(rng, shape.clone(), 1.0);
    let b = random_tensor(rng, shape, 1.0);
    check(rng, &[a, b], 64, |g, v| g.mul(v[0], v[1]).unwrap())
}

fn sum(rng: &mut ChaCha8Rng) -> Check {
    let shape = small_nchw(rng);
    let x = random_tensor(rng, shape, 1.0);
    check(rng, &[x], 64, |g, v| g.sum(v[0]))
}

fn bce(rng: &mut ChaCha8Rng) -> Check {
    let n = rng.gen_range(4..33);
    let pred = Tensor::new(vec![n], (0..n).map(|_| rng.gen_range(0.05..0.95)).collect()).unwrap();
    let target: Vec<f32> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    mask[0] = true;
    check(rng, &[pred], 64, move |g, v| g.bce_per_pixel(v[0], &target, &mask).unwrap())
}
