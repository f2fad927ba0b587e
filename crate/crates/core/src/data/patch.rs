use super::DataError;
use crate::world::{Rect, TerrainWorld};
use serde::{Deserialize, Serialize};

/// Square `size × size × 3` image patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub size: usize,
    /// Row-major HWC.
    pub pixels: Vec<f32>,
    pub source_label: Option<u8>,
    /// World cell of the top-left pixel, when cut from a world.
    pub origin: Option<[usize; 2]>,
}

impl Patch {
    pub fn cut(world: &TerrainWorld, x: usize, y: usize, size: usize) -> Result<Self, DataError> {
        let img = world.render(Rect::new(x, y, size, size))?;
        Ok(Self {
            size,
            pixels: img.pixels,
            source_label: Some(world.label_at(x, y)),
            origin: Some([x, y]),
        })
    }

    /// Same window re-rendered from another world with identical geometry.
    pub fn rerender(&self, world: &TerrainWorld) -> Result<Self, DataError> {
        let [x, y] = self
            .origin
            .ok_or_else(|| DataError::Patch("patch has no world origin".into()))?;
        Self::cut(world, x, y, self.size)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f32 {
        self.pixels[(i * self.size + j) * 3 + c]
    }
}

/// Patches drawn from single-label windows of one label.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBank {
    pub label: u8,
    pub patches: Vec<Patch>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct BankConfig {
    pub size: usize,
    pub patch_size: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            size: 800,
            patch_size: 16,
        }
    }
}

/// Top-left corners of every `size × size` window covered by `label` only.
pub fn single_label_windows(world: &TerrainWorld, label: u8, size: usize) -> Vec<[usize; 2]> {
    let (w, h) = (world.width(), world.height());
    if size == 0 || size > w || size > h {
        return vec![];
    }
    let stride = w + 1;
    let mut integral = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += (world.label_at(x, y) == label) as u32;
            integral[(y + 1) * stride + x + 1] = integral[y * stride + x + 1] + row;
        }
    }
    let full = (size * size) as u32;
    let mut out = Vec::new();
    for y in 0..=h - size {
        for x in 0..=w - size {
            let s = integral[(y + size) * stride + x + size] + integral[y * stride + x]
                - integral[y * stride + x + size]
                - integral[(y + size) * stride + x];
            if s == full {
                out.push([x, y]);
            }
        }
    }
    out
}

/// Up to `count` patches sampled without replacement from the single-label
/// windows of `label`.
pub fn build_patch_bank(
    world: &TerrainWorld,
    label: u8,
    count: usize,
    patch_size: usize,
    seed: u64,
) -> Result<PatchBank, DataError> {
    let candidates = single_label_windows(world, label, patch_size);
    if candidates.is_empty() {
        return Err(DataError::NoCandidates { label, patch_size });
    }
    let mut rng = super::seeded_rng(seed, label as u64);
    let take = count.min(candidates.len()).max(1);
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), take);
    let patches = picks
        .iter()
        .map(|i| {
            let [x, y] = candidates[i];
            Patch::cut(world, x, y, patch_size)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PatchBank { label, patches })
}

/// One bank per label `0..L`.
pub fn build_banks(world: &TerrainWorld, cfg: &BankConfig, seed: u64) -> Result<Vec<PatchBank>, DataError> {
    (0..world.num_labels() as u8)
        .map(|l| build_patch_bank(world, l, cfg.size, cfg.patch_size, seed))
        .collect()
}
