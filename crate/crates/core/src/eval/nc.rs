use super::EvalError;
use crate::data::{seeded_rng, TotalOrdering};
use crate::world::{LabelGrid, SENTINEL};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Same-label tolerance for learned costmaps.
pub const LEARNED_EPSILON: f32 = 0.1;
/// Cross-label margin for learned costmaps.
pub const LEARNED_MARGIN: f32 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcConfig {
    /// Pixel pairs sampled per check.
    pub pairs: usize,
    pub epsilon: f32,
    pub margin: f32,
    pub seed: u64,
}

impl NcConfig {
    /// Exact checks, for ground-truth targets.
    pub fn exact(seed: u64) -> Self {
        Self {
            pairs: 2000,
            epsilon: 0.0,
            margin: 0.0,
            seed,
        }
    }

    pub fn learned(seed: u64) -> Self {
        Self {
            epsilon: LEARNED_EPSILON,
            margin: LEARNED_MARGIN,
            ..Self::exact(seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcReport {
    pub nc1_violation_rate: f64,
    pub nc2_violation_rate: f64,
    pub nc1_pairs: usize,
    pub nc2_pairs: usize,
    pub epsilon: f32,
    pub margin: f32,
    /// Per-label median cost, indexed by label; `None` when absent.
    pub medians: Vec<Option<f32>>,
    /// Whether the medians of present labels rise strictly along the ordering.
    pub medians_sorted: bool,
}

/// Valid pixel indices grouped by label.
struct Groups {
    by_label: Vec<Vec<usize>>,
    label_of: Vec<i16>,
    valid: Vec<usize>,
}

impl Groups {
    fn new(values: &[f32], labels: &LabelGrid, num_labels: usize) -> Result<Self, EvalError> {
        if values.len() != labels.labels.len() {
            return Err(EvalError::Input(format!(
                "{} costs for {} labels",
                values.len(),
                labels.labels.len()
            )));
        }
        let mut by_label = vec![Vec::new(); num_labels];
        let mut valid = Vec::new();
        for (i, &l) in labels.labels.iter().enumerate() {
            if l == SENTINEL {
                continue;
            }
            by_label
                .get_mut(l as usize)
                .ok_or_else(|| EvalError::Input(format!("label {l} is not in the ordering")))?
                .push(i);
            valid.push(i);
        }
        Ok(Self {
            by_label,
            label_of: labels.labels.clone(),
            valid,
        })
    }
}

/// Fraction of sampled same-label pixel pairs whose costs differ by more
/// than `epsilon`. Returns the rate and the number of pairs drawn.
pub fn check_nc1(
    values: &[f32],
    labels: &LabelGrid,
    num_labels: usize,
    epsilon: f32,
    pairs: usize,
    seed: u64,
) -> Result<(f64, usize), EvalError> {
    let g = Groups::new(values, labels, num_labels)?;
    let eligible: Vec<usize> = g.valid.iter().copied().filter(|&i| g.by_label[g.label_of[i] as usize].len() > 1).collect();
    if eligible.is_empty() || pairs == 0 {
        return Ok((0.0, 0));
    }
    let mut rng = seeded_rng(seed, 1);
    let mut bad = 0;
    for _ in 0..pairs {
        let i = eligible[rng.gen_range(0..eligible.len())];
        let group = &g.by_label[g.label_of[i] as usize];
        let mut j = group[rng.gen_range(0..group.len() - 1)];
        if j == i {
            j = *group.last().expect("group has two members");
        }
        if (values[i] - values[j]).abs() > epsilon {
            bad += 1;
        }
    }
    Ok((bad as f64 / pairs as f64, pairs))
}

/// Fraction of sampled cross-label pixel pairs where the preferred pixel
/// fails to cost at least `margin` less than the other.
pub fn check_nc2(
    values: &[f32],
    labels: &LabelGrid,
    ordering: &TotalOrdering,
    margin: f32,
    pairs: usize,
    seed: u64,
) -> Result<(f64, usize), EvalError> {
    let g = Groups::new(values, labels, ordering.len())?;
    let n = g.valid.len();
    if pairs == 0 || g.by_label.iter().filter(|v| !v.is_empty()).count() < 2 {
        return Ok((0.0, 0));
    }
    let mut rng = seeded_rng(seed, 2);
    let mut bad = 0;
    for _ in 0..pairs {
        let i = g.valid[rng.gen_range(0..n)];
        let li = g.label_of[i] as usize;
        // uniform over the pixels of every other label
        let mut r = rng.gen_range(0..n - g.by_label[li].len());
        let mut j = usize::MAX;
        for (l, group) in g.by_label.iter().enumerate() {
            if l == li {
                continue;
            }
            if r < group.len() {
                j = group[r];
                break;
            }
            r -= group.len();
        }
        let lj = g.label_of[j] as u8;
        let (pref, dis) = if ordering.prefers(li as u8, lj) { (i, j) } else { (j, i) };
        if values[pref] >= values[dis] - margin {
            bad += 1;
        }
    }
    Ok((bad as f64 / pairs as f64, pairs))
}

/// Median cost of each label's valid pixels.
pub fn label_medians(values: &[f32], labels: &LabelGrid, num_labels: usize) -> Result<Vec<Option<f32>>, EvalError> {
    let g = Groups::new(values, labels, num_labels)?;
    Ok(g.by_label
        .iter()
        .map(|idx| {
            if idx.is_empty() {
                return None;
            }
            let mut v: Vec<f32> = idx.iter().map(|&i| values[i]).collect();
            v.sort_by(f32::total_cmp);
            let m = v.len() / 2;
            Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
        })
        .collect())
}

pub fn medians_sorted(medians: &[Option<f32>], ordering: &TotalOrdering) -> bool {
    let present: Vec<f32> = ordering
        .order()
        .iter()
        .filter_map(|&l| medians.get(l as usize).copied().flatten())
        .collect();
    present.windows(2).all(|w| w[0] < w[1])
}

pub fn check_nc(
    values: &[f32],
    labels: &LabelGrid,
    ordering: &TotalOrdering,
    config: &NcConfig,
) -> Result<NcReport, EvalError> {
    let (r1, n1) = check_nc1(values, labels, ordering.len(), config.epsilon, config.pairs, config.seed)?;
    let (r2, n2) = check_nc2(values, labels, ordering, config.margin, config.pairs, config.seed)?;
    let medians = label_medians(values, labels, ordering.len())?;
    Ok(NcReport {
        nc1_violation_rate: r1,
        nc2_violation_rate: r2,
        nc1_pairs: n1,
        nc2_pairs: n2,
        epsilon: config.epsilon,
        margin: config.margin,
        medians_sorted: medians_sorted(&medians, ordering),
        medians,
    })
}
