//! Planning shared by the HTTP API and the CLI, so a plan made through
//! either reproduces byte for byte through the other.

use pacer::data::{PreferenceContext, TotalOrdering};
use pacer::eval::{field_tier_proportions, tier_proportions, EvalError, TierMap, TierReport};
use pacer::model::ModelParams;
use pacer::plan::{astar, build_cost_field, Cell, CostField, PlanError, PlannerConfig};
use pacer::world::TerrainWorld;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TILE_STRIDE: usize = 16;

fn default_lambda() -> f64 {
    PlannerConfig::default().lambda
}

fn default_stride() -> usize {
    DEFAULT_TILE_STRIDE
}

/// Everything besides the world, the model and the context that fixes a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    pub start: Cell,
    pub goal: Cell,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_stride")]
    pub tile_stride: usize,
    /// Hidden ordering to score tiers by label; without it tiers come from
    /// the learned field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<TotalOrdering>,
}

/// Contents of the CLI's `path.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub cells: Vec<Cell>,
    pub total_cost: f64,
    pub tier_breakdown: TierReport,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{which} ({x}, {y}) is outside the {width}×{height} world")]
    OutOfBounds { which: &'static str, x: usize, y: usize, width: usize, height: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PlanSettings {
    /// Bounds of the endpoints and planner settings, before any inference.
    pub fn validate(&self, world: &TerrainWorld) -> Result<(), ScenarioError> {
        for (which, [x, y]) in [("start", self.start), ("goal", self.goal)] {
            if x >= world.width() || y >= world.height() {
                return Err(ScenarioError::OutOfBounds {
                    which,
                    x,
                    y,
                    width: world.width(),
                    height: world.height(),
                });
            }
        }
        PlannerConfig::with_lambda(self.lambda).validate()?;
        if let Some(o) = &self.ordering {
            TierMap::new(o)?;
        }
        Ok(())
    }
}

/// Learned field over the whole world, the A* path on it and its tiers.
pub fn plan_scenario(
    world: &TerrainWorld,
    params: &ModelParams,
    context: &PreferenceContext,
    settings: &PlanSettings,
) -> Result<(PlanOutcome, CostField), ScenarioError> {
    settings.validate(world)?;
    let field = build_cost_field(world, params, context, settings.tile_stride)?;
    let path = astar(&field, settings.start, settings.goal, &PlannerConfig::with_lambda(settings.lambda))?;
    let tier_breakdown = match &settings.ordering {
        Some(o) => tier_proportions(&path.cells, world, &TierMap::new(o)?)?,
        None => field_tier_proportions(&path.cells, &field)?,
    };
    Ok((
        PlanOutcome {
            cells: path.cells,
            total_cost: path.total_cost,
            tier_breakdown,
        },
        field,
    ))
}
