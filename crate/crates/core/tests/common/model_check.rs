//! Finite-difference check of the full network's loss gradient.

use super::gradcheck::{Accumulator, Check, H};
use pacer::model::{forward_graph, GraphParams, ModelParams, NetworkSpec};
use pacer::nn::{bce_per_pixel_value, Graph, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub params: ModelParams,
    pub images: Tensor,
    pub contexts: Tensor,
    pub target: Vec<f32>,
    pub mask: Vec<bool>,
}

/// Random 16×16 network, inputs and masked soft targets for a batch of 2.
pub fn random_case(seed: u64) -> Case {
    let b = 2;
    let spec = NetworkSpec::with_image_size(16);
    let mut params = ModelParams::init(&spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    // Zero biases behind dead units put pre-activations exactly on the
    // ReLU kink, where finite differences are meaningless.
    for (_, t) in params.tensors.iter_mut().filter(|(n, _)| n.ends_with(".bias")) {
        t.data_mut().iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    let mut rand_vec = |n: usize| -> Vec<f32> { (0..n).map(|_| rng.gen_range(0.0..1.0)).collect() };
    let images = Tensor::new(vec![b, 3, 16, 16], rand_vec(b * 3 * 256)).unwrap();
    let contexts = Tensor::new(vec![b, 9, 32, 16], rand_vec(b * 9 * 512)).unwrap();
    let target = rand_vec(b * 256);
    let mask: Vec<bool> = rand_vec(b * 256).into_iter().map(|u| u < 0.9).collect();
    Case {
        params,
        images,
        contexts,
        target,
        mask,
    }
}

fn loss_value(case: &Case, params: &ModelParams) -> (f64, Vec<bool>) {
    let mut g = Graph::new();
    let p = GraphParams::enter(&mut g, params, false);
    let x = g.constant(case.images.clone());
    let c = g.constant(case.contexts.clone());
    let out = forward_graph(&mut g, &params.spec, &p, x, c).unwrap();
    let loss = bce_per_pixel_value(g.value(out).data(), &case.target, &case.mask).unwrap();
    (loss, g.relu_pattern())
}

/// Gradient of the masked BCE with respect to every parameter.
pub fn analytic(case: &Case) -> Vec<Tensor> {
    let mut g = Graph::new();
    let p = GraphParams::enter(&mut g, &case.params, true);
    let x = g.constant(case.images.clone());
    let c = g.constant(case.contexts.clone());
    let out = forward_graph(&mut g, &case.params.spec, &p, x, c).unwrap();
    let loss = g.bce_per_pixel(out, &case.target, &case.mask).unwrap();
    g.backward(loss).unwrap();
    p.0.iter().map(|&v| g.grad(v)).collect()
}

/// Probes `count` parameter coordinates drawn at random across all
/// tensors, redrawing any that straddle a ReLU kink.
pub fn check(seed: u64, count: usize) -> Check {
    check_case(&random_case(seed), seed, count)
}

pub fn check_case(case: &Case, seed: u64, count: usize) -> Check {
    let grads = analytic(case);
    let (_, pattern) = loss_value(case, &case.params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31) + 1);
    let total: usize = case.params.tensors.iter().map(|(_, t)| t.numel()).sum();
    let mut acc = Accumulator::default();
    for _ in 0..count * 50 {
        if acc.probes() == count {
            break;
        }
        let mut flat = rng.gen_range(0..total);
        let mut k = 0;
        while flat >= case.params.tensors[k].1.numel() {
            flat -= case.params.tensors[k].1.numel();
            k += 1;
        }
        let mut work = case.params.clone();
        let x0 = work.tensors[k].1.data()[flat];
        work.tensors[k].1.data_mut()[flat] = x0 + H;
        let (plus, pp) = loss_value(case, &work);
        work.tensors[k].1.data_mut()[flat] = x0 - H;
        let (minus, pm) = loss_value(case, &work);
        if pp != pattern || pm != pattern {
            acc.skip();
            continue;
        }
        let numeric = (plus - minus) / ((x0 + H) as f64 - (x0 - H) as f64);
        acc.add(grads[k].data()[flat] as f64, numeric);
    }
    acc.finish()
}
