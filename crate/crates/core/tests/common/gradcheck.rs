//! Central finite-difference oracle for graph gradients.

use pacer::nn::{Graph, Tensor, Var};
use rand::Rng;

pub const H: f32 = 1e-3;
pub const TOL: f64 = 1e-3;

/// Outcome of one check: norm-wise relative error between analytic and
/// numeric gradients over the probed coordinates. Probes whose ±h
/// perturbation changes the ReLU activation pattern straddle a kink and
/// are skipped.
#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub rel_err: f64,
    pub probes: usize,
    pub skipped: usize,
}

#[derive(Default)]
pub struct Accumulator {
    diff2: f64,
    a2: f64,
    n2: f64,
    probes: usize,
    skipped: usize,
}

impl Accumulator {
    pub fn add(&mut self, analytic: f64, numeric: f64) {
        self.diff2 += (analytic - numeric).powi(2);
        self.a2 += analytic * analytic;
        self.n2 += numeric * numeric;
        self.probes += 1;
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn probes(&self) -> usize {
        self.probes
    }

    pub fn finish(&self) -> Check {
        Check {
            rel_err: self.diff2.sqrt() / self.a2.sqrt().max(self.n2.sqrt()).max(1e-12),
            probes: self.probes,
            skipped: self.skipped,
        }
    }
}

fn projection(out: &Tensor, weights: &[f32]) -> f64 {
    out.data()
        .iter()
        .zip(weights)
        .map(|(&y, &r)| y as f64 * r as f64)
        .sum()
}

/// Checks `build` with respect to every input tensor. The scalar probed is
/// `Σ r ⊙ build(inputs)` for fixed random `r`. At most `max_probes`
/// coordinates per input are perturbed.
pub fn check<R: Rng>(
    rng: &mut R,
    inputs: &[Tensor],
    max_probes: usize,
    build: impl Fn(&mut Graph, &[Var]) -> Var,
) -> Check {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = build(&mut g, &vars);
    let out_shape = g.value(out).shape().to_vec();
    let n_out = g.value(out).numel();
    let weights: Vec<f32> = if n_out == 1 {
        vec![1.0]
    } else {
        (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let r = g.constant(Tensor::new(out_shape, weights.clone()).unwrap());
    let prod = g.mul(out, r).unwrap();
    let loss = g.sum(prod);
    g.backward(loss).unwrap();
    let analytic: Vec<Tensor> = vars.iter().map(|&v| g.grad(v)).collect();
    let pattern = g.relu_pattern();

    let eval = |perturbed: &[Tensor]| -> (f64, Vec<bool>) {
        let mut g = Graph::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&mut g, &vars);
        (projection(g.value(out), &weights), g.relu_pattern())
    };

    let mut acc = Accumulator::default();
    for (k, input) in inputs.iter().enumerate() {
        let count = input.numel();
        let coords: Vec<usize> = if count <= max_probes {
            (0..count).collect()
        } else {
            rand::seq::index::sample(rng, count, max_probes).into_vec()
        };
        for idx in coords {
            let mut work = inputs.to_vec();
            let x0 = work[k].data()[idx];
            work[k].data_mut()[idx] = x0 + H;
            let (plus, pp) = eval(&work);
            work[k].data_mut()[idx] = x0 - H;
            let (minus, pm) = eval(&work);
            if pp != pattern || pm != pattern {
                acc.skip();
                continue;
            }
            let dx = (x0 + H) as f64 - (x0 - H) as f64;
            acc.add(analytic[k].data()[idx] as f64, (plus - minus) / dx);
        }
    }
    acc.finish()
}

pub fn random_tensor<R: Rng>(rng: &mut R, shape: Vec<usize>, scale: f32) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Random tensor whose entries stay at least `gap` away from zero, so that
/// kinked ops are differentiable at every probe.
pub fn away_from_zero<R: Rng>(rng: &mut R, shape: Vec<usize>, gap: f32) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.gen_range(gap..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}
