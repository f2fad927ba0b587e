use super::{DataError, Patch, PatchBank, TotalOrdering};
use crate::nn::Tensor;
use rand::Rng;

pub const CHANNELS: usize = 3;

/// `n` ordered patch pairs, preferred first.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceContext {
    pub pairs: Vec<(Patch, Patch)>,
}

impl PreferenceContext {
    pub fn new(pairs: Vec<(Patch, Patch)>) -> Result<Self, DataError> {
        let size = pairs
            .first()
            .map(|p| p.0.size)
            .ok_or_else(|| DataError::Context("context needs at least one pair".into()))?;
        for (a, b) in &pairs {
            for p in [a, b] {
                if p.size != size || p.pixels.len() != size * size * CHANNELS {
                    return Err(DataError::Context(format!(
                        "patch of size {} ({} values) in a context of {size}×{size} patches",
                        p.size,
                        p.pixels.len()
                    )));
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn patch_size(&self) -> usize {
        self.pairs[0].0.size
    }

    /// `(n·c) × 2h × w`: channel block `k` holds pair `k` with the
    /// preferred patch in rows `0..h` and the dispreferred one below.
    pub fn pack(&self) -> Tensor {
        let h = self.patch_size();
        let plane = 2 * h * h;
        let mut data = vec![0.0f32; self.n() * CHANNELS * plane];
        for (k, (top, bottom)) in self.pairs.iter().enumerate() {
            for c in 0..CHANNELS {
                let dst = &mut data[(k * CHANNELS + c) * plane..(k * CHANNELS + c + 1) * plane];
                for (half, patch) in [top, bottom].into_iter().enumerate() {
                    for i in 0..h {
                        for j in 0..h {
                            dst[(half * h + i) * h + j] = patch.get(i, j, c);
                        }
                    }
                }
            }
        }
        Tensor::new(vec![self.n() * CHANNELS, 2 * h, h], data).expect("packed shape")
    }

    /// Inverse of [`pack`](Self::pack); labels and origins are not stored.
    pub fn unpack(packed: &Tensor) -> Result<Self, DataError> {
        let (nc, h2, w) = match packed.shape() {
            &[nc, h2, w] if nc % CHANNELS == 0 && nc > 0 && h2 == 2 * w => (nc, h2, w),
            s => return Err(DataError::Context(format!("cannot unpack tensor of shape {s:?}"))),
        };
        let plane = h2 * w;
        let data = packed.data();
        let pairs = (0..nc / CHANNELS)
            .map(|k| {
                let mut halves = [vec![0.0f32; w * w * CHANNELS], vec![0.0f32; w * w * CHANNELS]];
                for c in 0..CHANNELS {
                    let src = &data[(k * CHANNELS + c) * plane..(k * CHANNELS + c + 1) * plane];
                    for (half, dst) in halves.iter_mut().enumerate() {
                        for i in 0..w {
                            for j in 0..w {
                                dst[(i * w + j) * CHANNELS + c] = src[(half * w + i) * w + j];
                            }
                        }
                    }
                }
                let [a, b] = halves;
                let mk = |pixels| Patch {
                    size: w,
                    pixels,
                    source_label: None,
                    origin: None,
                };
                (mk(a), mk(b))
            })
            .collect();
        Ok(Self { pairs })
    }

    /// Source labels of each pair, when known.
    pub fn label_pairs(&self) -> Vec<(Option<u8>, Option<u8>)> {
        self.pairs.iter().map(|(a, b)| (a.source_label, b.source_label)).collect()
    }
}

/// Every unordered label pair of `ordering`, oriented preferred-first.
pub fn ordered_pairs(ordering: &TotalOrdering) -> Vec<(u8, u8)> {
    let o = ordering.order();
    let mut out = Vec::with_capacity(o.len() * o.len().saturating_sub(1) / 2);
    for i in 0..o.len() {
        for j in i + 1..o.len() {
            out.push((o[i], o[j]));
        }
    }
    out
}

/// Draws `n` distinct label pairs consistent with `ordering` and one patch
/// per slot from the matching bank.
pub fn sample_context<R: Rng>(
    rng: &mut R,
    ordering: &TotalOrdering,
    banks: &[PatchBank],
    n: usize,
) -> Result<PreferenceContext, DataError> {
    sample_context_with(rng, ordering, banks, n, |p| Ok(p.clone()))
}

/// As [`sample_context`], passing each drawn patch through `render`.
pub fn sample_context_with<R: Rng>(
    rng: &mut R,
    ordering: &TotalOrdering,
    banks: &[PatchBank],
    n: usize,
    render: impl Fn(&Patch) -> Result<Patch, DataError>,
) -> Result<PreferenceContext, DataError> {
    let pairs = ordered_pairs(ordering);
    if n == 0 || n > pairs.len() {
        return Err(DataError::Context(format!(
            "n = {n} pairs requested, {} available",
            pairs.len()
        )));
    }
    let bank = |label: u8| {
        banks
            .iter()
            .find(|b| b.label == label && !b.patches.is_empty())
            .ok_or(DataError::MissingBank(label))
    };
    let picks = rand::seq::index::sample(rng, pairs.len(), n).into_vec();
    let mut out = Vec::with_capacity(n);
    for p in picks {
        let (good, bad) = pairs[p];
        let (bg, bb) = (bank(good)?, bank(bad)?);
        let pg = &bg.patches[rng.gen_range(0..bg.patches.len())];
        let pb = &bb.patches[rng.gen_range(0..bb.patches.len())];
        out.push((render(pg)?, render(pb)?));
    }
    PreferenceContext::new(out)
}

/// `C(m, n) · n!` with `m = C(L, 2)`: the number of ordered selections of
/// `n` distinct label pairs.
pub fn count_contexts(num_labels: u64, n: u64) -> Result<u128, DataError> {
    let l = num_labels as u128;
    let m = l * l.saturating_sub(1) / 2;
    if n as u128 > m {
        return Err(DataError::Context(format!("n = {n} exceeds C({num_labels}, 2) = {m}")));
    }
    (0..n as u128).try_fold(1u128, |acc, i| acc.checked_mul(m - i)).ok_or(DataError::Overflow)
}

/// `⌈L · log₂ L⌉`.
pub fn pairs_for_total_order(num_labels: u64) -> u64 {
    if num_labels <= 1 {
        return 0;
    }
    let l = num_labels as f64;
    (l * l.log2()).ceil() as u64
}
