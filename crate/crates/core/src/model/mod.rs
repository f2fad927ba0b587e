//! The costmap network: a BEV encoder and a preference encoder whose
//! embeddings are fused at the bottleneck and decoded to a per-pixel cost.

mod checkpoint;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use crate::data::{PreferenceContext, CHANNELS};
use crate::nn::{Graph, NnError, Tensor, Var};
use crate::world::BevImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::hash::Hasher;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("input: {0}")]
    Input(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Architecture description. Every stride-2 stage halves the resolution,
/// so `image_size` must be divisible by `2^bev_channels.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub image_size: usize,
    pub patch_size: usize,
    pub n: usize,
    pub channels: usize,
    pub bev_channels: Vec<usize>,
    pub pref_channels: Vec<usize>,
    pub embed: usize,
    pub decoder_channels: Vec<usize>,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            image_size: 64,
            patch_size: 16,
            n: 3,
            channels: CHANNELS,
            bev_channels: vec![16, 32, 64],
            pref_channels: vec![16, 32],
            embed: 64,
            decoder_channels: vec![64, 32, 16, 8],
        }
    }
}

impl NetworkSpec {
    pub fn with_image_size(image_size: usize) -> Self {
        Self {
            image_size,
            ..Self::default()
        }
    }

    pub fn bottleneck(&self) -> usize {
        self.image_size >> self.bev_channels.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let stages = self.bev_channels.len();
        if stages == 0 || self.pref_channels.is_empty() || self.decoder_channels.is_empty() {
            return Err(ModelError::Input("empty channel plan".into()));
        }
        if self.image_size == 0 || self.image_size % (1 << stages) != 0 {
            return Err(ModelError::Input(format!(
                "image size {} not divisible by {}",
                self.image_size,
                1 << stages
            )));
        }
        if self.decoder_channels.len() != stages + 1 {
            return Err(ModelError::Input(format!(
                "decoder needs {} stages to undo {stages} downsamplings",
                stages + 1
            )));
        }
        Ok(())
    }

    /// Ordered parameter names and shapes.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let conv = |out: &mut Vec<(String, Vec<usize>)>, name: String, cin: usize, cout: usize| {
            out.push((format!("{name}.weight"), vec![cout, cin, 3, 3]));
            out.push((format!("{name}.bias"), vec![cout]));
        };
        let mut cin = self.channels;
        for (i, &c) in self.bev_channels.iter().enumerate() {
            conv(&mut out, format!("bev.conv{i}"), cin, c);
            cin = c;
        }
        let bev_out = cin;
        let mut cin = self.n * self.channels;
        for (i, &c) in self.pref_channels.iter().enumerate() {
            conv(&mut out, format!("pref.conv{i}"), cin, c);
            cin = c;
        }
        out.push(("pref.fc.weight".into(), vec![self.embed, cin]));
        out.push(("pref.fc.bias".into(), vec![self.embed]));
        let mut cin = bev_out + self.embed;
        for (i, &c) in self.decoder_channels.iter().enumerate() {
            let name = if i == 0 { "dec.fuse".to_string() } else { format!("dec.up{i}") };
            conv(&mut out, name, cin, c);
            cin = c;
        }
        conv(&mut out, "dec.out".into(), cin, 1);
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }

    /// FNV-1a of the canonical JSON form.
    pub fn hash(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(serde_json::to_string(self).expect("spec serializes").as_bytes());
        h.finish()
    }
}

/// Named parameters for a [`NetworkSpec`], in `param_shapes` order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub spec: NetworkSpec,
    pub tensors: Vec<(String, Tensor)>,
}

impl ModelParams {
    /// Kaiming-uniform weights (bound `√(6/fan_in)`), zero biases.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self, ModelError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = spec
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let t = if shape.len() == 1 {
                    Tensor::zeros(shape)
                } else {
                    let fan_in: usize = shape[1..].iter().product();
                    let bound = (6.0 / fan_in as f64).sqrt() as f32;
                    let n = shape.iter().product();
                    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-bound..bound)).collect()).expect("shape")
                };
                (name, t)
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            tensors,
        })
    }

    /// Checks names and shapes against the spec and that every value is finite.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.spec.validate()?;
        let want = self.spec.param_shapes();
        if want.len() != self.tensors.len() {
            return Err(ModelError::Checkpoint(format!(
                "{} tensors, spec has {}",
                self.tensors.len(),
                want.len()
            )));
        }
        for ((wn, ws), (n, t)) in want.iter().zip(&self.tensors) {
            if wn != n || ws.as_slice() != t.shape() {
                return Err(ModelError::Checkpoint(format!(
                    "tensor {n} {:?}, spec expects {wn} {ws:?}",
                    t.shape()
                )));
            }
            if !t.is_finite() {
                return Err(ModelError::Checkpoint(format!("tensor {n} has non-finite values")));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter().map(|(_, t)| t)
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.numel()).sum()
    }
}

/// Inference outputs are kept this far from 0 and 1, where `f32` sigmoid
/// would otherwise saturate.
pub const OUTPUT_FLOOR: f32 = 1e-7;

/// Per-pixel predicted cost in (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Costmap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

/// Parameters entered into a graph, in spec order.
pub struct GraphParams(pub Vec<Var>);

impl GraphParams {
    /// `trainable` selects `param` (gradient tracked) or `constant` leaves.
    pub fn enter(g: &mut Graph, params: &ModelParams, trainable: bool) -> Self {
        Self(
            params
                .tensors
                .iter()
                .map(|(_, t)| if trainable { g.param(t.clone()) } else { g.constant(t.clone()) })
                .collect(),
        )
    }
}

/// Builds the forward pass on batched inputs: `images` N×c×H×W and
/// `contexts` N×(n·c)×2h×w. Returns N×1×H×W costs.
pub fn forward_graph(
    g: &mut Graph,
    spec: &NetworkSpec,
    p: &GraphParams,
    images: Var,
    contexts: Var,
) -> Result<Var, ModelError> {
    let mut k = 0;
    let mut next = || {
        let (w, b) = (p.0[k], p.0[k + 1]);
        k += 2;
        (w, b)
    };
    let mut x = images;
    for _ in &spec.bev_channels {
        let (w, b) = next();
        let y = g.conv2d(x, w, b, 2, 1)?;
        x = g.relu(y);
    }
    let mut c = contexts;
    for _ in &spec.pref_channels {
        let (w, b) = next();
        let y = g.conv2d(c, w, b, 2, 1)?;
        c = g.relu(y);
    }
    let pooled = g.global_avg_pool(c)?;
    let (fw, fb) = next();
    let embed = g.linear(pooled, fw, fb)?;
    let side = g.value(x).shape()[2];
    let tiled = g.broadcast_spatial(embed, side, g.value(x).shape()[3])?;
    let mut d = g.concat_channels(x, tiled)?;
    for i in 0..spec.decoder_channels.len() {
        if i > 0 {
            d = g.upsample_nearest2x(d)?;
        }
        let (w, b) = next();
        let y = g.conv2d(d, w, b, 1, 1)?;
        d = g.relu(y);
    }
    let (w, b) = next();
    let logits = g.conv2d(d, w, b, 1, 1)?;
    Ok(g.sigmoid(logits))
}

/// Stacks images into an N×c×H×W tensor.
pub fn batch_images(spec: &NetworkSpec, images: &[&BevImage]) -> Result<Tensor, ModelError> {
    let s = spec.image_size;
    let mut data = Vec::with_capacity(images.len() * spec.channels * s * s);
    for img in images {
        if img.height != s || img.width != s {
            return Err(ModelError::Input(format!(
                "image {}×{}, network expects {s}×{s}",
                img.height, img.width
            )));
        }
        data.extend(img.to_chw());
    }
    Ok(Tensor::new(vec![images.len(), spec.channels, s, s], data)?)
}

/// Stacks packed contexts into an N×(n·c)×2h×w tensor.
pub fn batch_contexts(spec: &NetworkSpec, contexts: &[&PreferenceContext]) -> Result<Tensor, ModelError> {
    let (n, h) = (spec.n, spec.patch_size);
    let mut data = Vec::with_capacity(contexts.len() * n * spec.channels * 2 * h * h);
    for ctx in contexts {
        if ctx.n() != n || ctx.patch_size() != h {
            return Err(ModelError::Input(format!(
                "context of {} pairs of {}×{} patches, network expects {n} of {h}×{h}",
                ctx.n(),
                ctx.patch_size(),
                ctx.patch_size()
            )));
        }
        data.extend_from_slice(ctx.pack().data());
    }
    Ok(Tensor::new(vec![contexts.len(), n * spec.channels, 2 * h, h], data)?)
}

/// Inference on a batch; no gradients are recorded.
pub fn forward_batch(
    params: &ModelParams,
    images: &[&BevImage],
    contexts: &[&PreferenceContext],
) -> Result<Vec<Costmap>, ModelError> {
    if images.len() != contexts.len() {
        return Err(ModelError::Input(format!(
            "{} images but {} contexts",
            images.len(),
            contexts.len()
        )));
    }
    if images.is_empty() {
        return Ok(vec![]);
    }
    let spec = &params.spec;
    let mut g = Graph::new();
    let p = GraphParams::enter(&mut g, params, false);
    let x = g.constant(batch_images(spec, images)?);
    let c = g.constant(batch_contexts(spec, contexts)?);
    let out = forward_graph(&mut g, spec, &p, x, c)?;
    let s = spec.image_size;
    Ok(g.value(out)
        .data()
        .chunks(s * s)
        .map(|v| Costmap {
            height: s,
            width: s,
            values: v.iter().map(|&c| c.clamp(OUTPUT_FLOOR, 1.0 - OUTPUT_FLOOR)).collect(),
        })
        .collect())
}

pub fn forward(params: &ModelParams, image: &BevImage, context: &PreferenceContext) -> Result<Costmap, ModelError> {
    Ok(forward_batch(params, &[image], &[context])?.remove(0))
}
