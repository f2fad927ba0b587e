use super::EvalError;
use crate::data::{cost_of, TotalOrdering};
use crate::plan::{Cell, CostField};
use crate::world::TerrainWorld;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    /// Thresholds at costs 1/3 and 2/3.
    pub fn of_cost(cost: f64) -> Self {
        if cost < 1.0 / 3.0 {
            Tier::Low
        } else if cost < 2.0 / 3.0 {
            Tier::Medium
        } else {
            Tier::High
        }
    }
}

/// Tier of every label under a hidden ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierMap {
    pub ordering: TotalOrdering,
    pub tiers: Vec<Tier>,
}

impl TierMap {
    pub fn new(ordering: &TotalOrdering) -> Result<Self, EvalError> {
        let tiers = (0..ordering.len() as u8)
            .map(|l| cost_of(ordering, l).map(|c| Tier::of_cost(c as f64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            ordering: ordering.clone(),
            tiers,
        })
    }

    pub fn tier(&self, label: u8) -> Result<Tier, EvalError> {
        self.tiers
            .get(label as usize)
            .copied()
            .ok_or_else(|| EvalError::Input(format!("label {label} is not in the ordering")))
    }
}

/// Fractions of path cells per tier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl TierReport {
    pub fn get(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Low => self.low,
            Tier::Medium => self.medium,
            Tier::High => self.high,
        }
    }
}

pub fn tier_proportions(cells: &[Cell], world: &TerrainWorld, map: &TierMap) -> Result<TierReport, EvalError> {
    proportions(cells, world.width(), world.height(), |x, y| map.tier(world.label_at(x, y)))
}

/// Tiers read off the cost field itself, for when no ordering is known.
pub fn field_tier_proportions(cells: &[Cell], field: &CostField) -> Result<TierReport, EvalError> {
    proportions(cells, field.width, field.height, |x, y| Ok(Tier::of_cost(field.get([x, y]) as f64)))
}

fn proportions(
    cells: &[Cell],
    width: usize,
    height: usize,
    tier: impl Fn(usize, usize) -> Result<Tier, EvalError>,
) -> Result<TierReport, EvalError> {
    if cells.is_empty() {
        return Err(EvalError::Input("empty path".into()));
    }
    let mut counts = [0usize; 3];
    for &[x, y] in cells {
        if x >= width || y >= height {
            return Err(EvalError::Input(format!("cell ({x}, {y}) is outside the world")));
        }
        counts[tier(x, y)? as usize] += 1;
    }
    let n = cells.len() as f64;
    Ok(TierReport {
        low: counts[0] as f64 / n,
        medium: counts[1] as f64 / n,
        high: counts[2] as f64 / n,
    })
}
