use super::EvalError;
use crate::data::{seeded_rng, TargetCostmap};
use crate::model::Costmap;
use serde::{Deserialize, Serialize};

/// Points sampled per costmap.
pub const RANKING_POINTS: usize = 500;

/// Target differences at or below this count as ties.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Which difference a misordered pair is charged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    /// `|pred_i − pred_j|`.
    #[default]
    Predicted,
    /// `|target_i − target_j|`.
    Target,
}

/// Mean over all pairs of sampled valid points of the charge for
/// misordered pairs; tied and correctly ordered pairs cost 0.
pub fn margin_ranking_error(
    pred: &Costmap,
    target: &TargetCostmap,
    num_points: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    margin_ranking_error_with(pred, target, num_points, seed, Margin::Predicted)
}

pub fn margin_ranking_error_with(
    pred: &Costmap,
    target: &TargetCostmap,
    num_points: usize,
    seed: u64,
    margin: Margin,
) -> Result<f64, EvalError> {
    if (pred.height, pred.width) != (target.height, target.width) {
        return Err(EvalError::Input(format!(
            "prediction {}×{} vs target {}×{}",
            pred.height, pred.width, target.height, target.width
        )));
    }
    let valid: Vec<usize> = (0..target.values.len()).filter(|&i| target.mask[i]).collect();
    let k = num_points.min(valid.len());
    if k < 2 {
        return Err(EvalError::TooFewPoints(valid.len().min(num_points)));
    }
    let mut rng = seeded_rng(seed, 0);
    let points: Vec<(f64, f64)> = rand::seq::index::sample(&mut rng, valid.len(), k)
        .iter()
        .map(|i| (pred.values[valid[i]] as f64, target.values[valid[i]] as f64))
        .collect();
    let mut total = 0.0;
    for (a, &(pa, ta)) in points.iter().enumerate() {
        for &(pb, tb) in &points[a + 1..] {
            total += pair_error(pa - pb, ta - tb, margin);
        }
    }
    Ok(total / (k * (k - 1) / 2) as f64)
}

/// Charge for one pair given its predicted and target differences.
pub fn pair_error(dp: f64, dt: f64, margin: Margin) -> f64 {
    if dt.abs() <= TIE_TOLERANCE || dp.signum() == dt.signum() && dp != 0.0 {
        return 0.0;
    }
    match margin {
        Margin::Predicted => dp.abs(),
        Margin::Target => dt.abs(),
    }
}
