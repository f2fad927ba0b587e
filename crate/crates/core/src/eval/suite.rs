//! End-to-end evaluation runs over trained models: the ranking matrix,
//! condition checks on targets and on learned costmaps, the theorem suite,
//! and path-tier experiments on generated worlds.

use super::nc::{check_nc, NcConfig};
use super::ranking::{margin_ranking_error, RANKING_POINTS};
use super::theorem::{affine, affine_lambda, all_pairs, swap_label_costs, verify_theorem, TheoremConfig, TheoremInstance, Witness, Q};
use super::tiers::{tier_proportions, TierMap, TierReport};
use super::EvalError;
use crate::data::{
    build_patch_bank, build_target, random_pose, sample_context, seeded_rng, BankConfig, DataConfig, DataSource, PatchBank,
    Phase, PreferenceContext, TotalOrdering, TrainingExample,
};
use crate::model::{forward_batch, load_checkpoint, ModelParams, NetworkSpec};
use crate::plan::{astar, build_cost_field, Cell, CostField, PlannerConfig};
use crate::train::checkpoint_name;
use crate::world::{generate_world, Layout, TerrainWorld, TextureLibrary, TextureSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The three staged checkpoints.
#[derive(Clone, Debug)]
pub struct Models {
    pub base: ModelParams,
    pub shuffled: ModelParams,
    pub synthetic: ModelParams,
}

impl Models {
    /// Reads `m_{phase}.pacr` for every phase from a training run directory.
    pub fn load(dir: &Path, spec: &NetworkSpec) -> Result<Self, EvalError> {
        let load = |p: Phase| load_checkpoint(&dir.join(checkpoint_name(p)), spec);
        Ok(Self {
            base: load(Phase::Base)?,
            shuffled: load(Phase::Shuffled)?,
            synthetic: load(Phase::Synthetic)?,
        })
    }

    pub fn get(&self, phase: Phase) -> &ModelParams {
        match phase {
            Phase::Base => &self.base,
            Phase::Shuffled => &self.shuffled,
            Phase::Synthetic => &self.synthetic,
        }
    }
}

fn predict(params: &ModelParams, examples: &[TrainingExample]) -> Result<Vec<crate::model::Costmap>, EvalError> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(16) {
        let images: Vec<_> = chunk.iter().map(|e| &e.image).collect();
        let contexts: Vec<_> = chunk.iter().map(|e| &e.context).collect();
        out.extend(forward_batch(params, &images, &contexts)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingConfig {
    /// Data settings of the test sets; their worlds are not trained on.
    pub data: DataConfig,
    pub examples_per_set: usize,
    pub num_points: usize,
    pub seed: u64,
}

impl RankingConfig {
    /// Test sets over held-out worlds with otherwise the training settings.
    pub fn held_out(train: &DataConfig) -> Self {
        Self {
            data: train.with_worlds((101..=104).collect()),
            examples_per_set: 100,
            num_points: RANKING_POINTS,
            seed: 5000,
        }
    }
}

/// Mean margin ranking error of each model (rows) on each test set (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMatrix {
    pub config: RankingConfig,
    pub phases: Vec<Phase>,
    pub errors: Vec<Vec<f64>>,
}

impl RankingMatrix {
    pub fn diagonal_is_column_min(&self) -> bool {
        (0..self.phases.len()).all(|c| (0..self.phases.len()).all(|r| self.errors[c][c] <= self.errors[r][c]))
    }

    pub fn row_means(&self) -> Vec<f64> {
        self.errors.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
    }

    /// Phase of the model with the smallest row mean.
    pub fn best_row(&self) -> Phase {
        let means = self.row_means();
        let best = (0..means.len()).min_by(|&a, &b| means[a].total_cmp(&means[b])).expect("three rows");
        self.phases[best]
    }
}

pub fn ranking_matrix(models: &Models, config: &RankingConfig) -> Result<RankingMatrix, EvalError> {
    let source = DataSource::standard(config.data.clone())?;
    let sets: Vec<Vec<TrainingExample>> = Phase::ALL
        .iter()
        .map(|&p| source.stream(p, config.seed + p as u64, config.examples_per_set).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut errors = Vec::with_capacity(3);
    for &m in &Phase::ALL {
        let mut row = Vec::with_capacity(3);
        for set in &sets {
            let preds = predict(models.get(m), set)?;
            let mut sum = 0.0;
            for (i, (pred, ex)) in preds.iter().zip(set).enumerate() {
                sum += margin_ranking_error(pred, &ex.target, config.num_points, config.seed + i as u64)?;
            }
            row.push(sum / set.len().max(1) as f64);
        }
        tracing::info!(model = m.name(), ?row, "ranking errors");
        errors.push(row);
    }
    Ok(RankingMatrix {
        config: config.clone(),
        phases: Phase::ALL.to_vec(),
        errors,
    })
}

/// Per-label minima and maxima: labels whose costs are not all equal, and
/// ordered label pairs whose cost ranges fail to separate strictly.
pub fn exhaustive_nc(values: &[f32], labels: &crate::world::LabelGrid, ordering: &TotalOrdering) -> (usize, usize) {
    let l = ordering.len();
    let mut lo = vec![f32::INFINITY; l];
    let mut hi = vec![f32::NEG_INFINITY; l];
    for (&v, &lab) in values.iter().zip(&labels.labels) {
        if lab >= 0 && (lab as usize) < l {
            lo[lab as usize] = lo[lab as usize].min(v);
            hi[lab as usize] = hi[lab as usize].max(v);
        }
    }
    let present: Vec<u8> = ordering.order().iter().copied().filter(|&a| lo[a as usize].is_finite()).collect();
    let nc1 = present.iter().filter(|&&a| lo[a as usize] != hi[a as usize]).count();
    let mut nc2 = 0;
    for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            if hi[a as usize] >= lo[b as usize] {
                nc2 += 1;
            }
        }
    }
    (nc1, nc2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetNcReport {
    pub instances: usize,
    pub seed: u64,
    pub sampled_nc1_violations: f64,
    pub sampled_nc2_violations: f64,
    pub exhaustive_nc1_violations: usize,
    pub exhaustive_nc2_violations: usize,
    pub unsorted_medians: usize,
}

/// Condition checks on `build_target` over random (world, ordering, pose)
/// instances.
pub fn target_nc(source: &DataSource, instances: usize, seed: u64) -> Result<TargetNcReport, EvalError> {
    let mut report = TargetNcReport {
        instances,
        seed,
        sampled_nc1_violations: 0.0,
        sampled_nc2_violations: 0.0,
        exhaustive_nc1_violations: 0,
        exhaustive_nc2_violations: 0,
        unsorted_medians: 0,
    };
    let size = source.config.image_size;
    for i in 0..instances {
        let mut rng = seeded_rng(seed, i as u64);
        let (world, _) = &source.worlds[rng.gen_range(0..source.worlds.len())];
        let ordering = TotalOrdering::random(&mut rng, world.num_labels());
        let pose = random_pose(&mut rng, world, size);
        let labels = world.label_window(&pose, size, size);
        let target = build_target(&labels, &ordering)?;
        let nc = check_nc(&target.values, &labels, &ordering, &NcConfig::exact(seed + i as u64))?;
        report.sampled_nc1_violations += nc.nc1_violation_rate * nc.nc1_pairs as f64;
        report.sampled_nc2_violations += nc.nc2_violation_rate * nc.nc2_pairs as f64;
        report.unsorted_medians += !nc.medians_sorted as usize;
        let (a, b) = exhaustive_nc(&target.values, &labels, &ordering);
        report.exhaustive_nc1_violations += a;
        report.exhaustive_nc2_violations += b;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedNcReport {
    pub examples: usize,
    pub seed: u64,
    pub config: NcConfig,
    pub mean_nc1_violation_rate: f64,
    pub mean_nc2_violation_rate: f64,
    pub sorted_median_fraction: f64,
}

/// Condition checks with learned-map tolerances on a model's costmaps for
/// seen-texture examples under random orderings.
pub fn learned_nc(params: &ModelParams, source: &DataSource, examples: usize, seed: u64) -> Result<LearnedNcReport, EvalError> {
    let set: Vec<TrainingExample> = source.stream(Phase::Shuffled, seed, examples).collect::<Result<_, _>>()?;
    let preds = predict(params, &set)?;
    let config = NcConfig::learned(seed);
    let (mut r1, mut r2, mut sorted) = (0.0, 0.0, 0);
    for (pred, ex) in preds.iter().zip(&set) {
        let world = source
            .worlds
            .iter()
            .map(|(w, _)| w)
            .find(|w| w.seed() == ex.provenance.world_seed)
            .ok_or_else(|| EvalError::Input(format!("world {} is not loaded", ex.provenance.world_seed)))?;
        let labels = world.label_window(&ex.provenance.pose, pred.height, pred.width);
        let nc = check_nc(&pred.values, &labels, &ex.provenance.ordering, &config)?;
        r1 += nc.nc1_violation_rate;
        r2 += nc.nc2_violation_rate;
        sorted += nc.medians_sorted as usize;
    }
    let k = set.len().max(1) as f64;
    Ok(LearnedNcReport {
        examples,
        seed,
        config,
        mean_nc1_violation_rate: r1 / k,
        mean_nc2_violation_rate: r2 / k,
        sorted_median_fraction: sorted as f64 / k,
    })
}

/// Step weight of the theorem suite. Below 1, a two-move path always beats
/// any longer one between diagonal neighbours, since costs are at most 1.
pub fn theorem_lambda() -> Q {
    Q::new(1, 2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremInstanceResult {
    pub seed: u64,
    pub side: usize,
    pub num_labels: usize,
    pub swapped: (u8, u8),
    pub pairs: usize,
    pub identity_mismatches: usize,
    /// Argmin and cost mismatches for `R = 2H + 1/10`.
    pub affine_argmin_mismatches: usize,
    pub affine_cost_mismatches: usize,
    pub swap_nc2_violations: usize,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremSuiteReport {
    pub seed: u64,
    pub lambda_h: Q,
    pub instances: Vec<TheoremInstanceResult>,
    pub affine_failures: usize,
    pub witnesses_found: usize,
}

pub fn theorem_suite(count: usize, seed: u64) -> Result<TheoremSuiteReport, EvalError> {
    let lambda = theorem_lambda();
    let (a, b) = (Q::from_integer(2), Q::new(1, 10));
    let lambda_r = affine_lambda(lambda, a, b).ok_or_else(|| EvalError::Input("affine map is not λ-consistent".into()))?;
    let mut instances = Vec::with_capacity(count);
    for i in 0..count {
        let inst = TheoremInstance::random(seed + i as u64);
        let (w, h) = (inst.width, inst.height);
        let hf = inst.h_field()?;
        let pairs = all_pairs(w, h);
        let same = TheoremConfig::uniform(lambda);
        let identity = verify_theorem(w, h, &hf, &hf, &pairs, &same)?;
        let scaled = TheoremConfig {
            lambda_r,
            ..same.clone()
        };
        let aff = verify_theorem(w, h, &hf, &affine(&hf, a, b), &pairs, &scaled)?;
        let swapped = swap_label_costs(&inst.labels, &hf, inst.swapped.0, inst.swapped.1)?;
        let swap = verify_theorem(w, h, &hf, &swapped, &pairs, &same)?;
        instances.push(TheoremInstanceResult {
            seed: inst.seed,
            side: w,
            num_labels: inst.ordering.len(),
            swapped: inst.swapped,
            pairs: pairs.len(),
            identity_mismatches: identity.argmin_mismatches + identity.cost_mismatches,
            affine_argmin_mismatches: aff.argmin_mismatches,
            affine_cost_mismatches: aff.cost_mismatches,
            swap_nc2_violations: swap.nc2_violations,
            witness: swap.witness,
        });
    }
    Ok(TheoremSuiteReport {
        seed,
        lambda_h: lambda,
        affine_failures: instances
            .iter()
            .filter(|r| r.identity_mismatches + r.affine_argmin_mismatches + r.affine_cost_mismatches > 0)
            .count(),
        witnesses_found: instances.iter().filter(|r| r.witness.is_some()).count(),
        instances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanningSuiteConfig {
    pub worlds: usize,
    pub world_size: usize,
    pub num_labels: usize,
    pub seed: u64,
    pub planner: PlannerConfig,
    pub tile_stride: usize,
    pub bank: BankConfig,
    pub n: usize,
    /// Distance of the endpoints from the world edge.
    pub margin: usize,
    pub corridor_half_width: f64,
    pub corridor_bends: usize,
}

impl Default for PlanningSuiteConfig {
    fn default() -> Self {
        Self {
            worlds: 20,
            world_size: 128,
            num_labels: 5,
            seed: 7000,
            planner: PlannerConfig::default(),
            tile_stride: 16,
            bank: BankConfig { size: 40, patch_size: 16 },
            n: 3,
            margin: 6,
            corridor_half_width: 3.0,
            corridor_bends: 2,
        }
    }
}

/// Where a planning trial takes its cost field from.
pub enum FieldSource<'a> {
    GroundTruth,
    Model(&'a ModelParams, &'a PreferenceContext),
}

/// Plans on the chosen field and measures the path's tiers under `ordering`.
pub fn plan_tiers(
    world: &TerrainWorld,
    source: FieldSource,
    ordering: &TotalOrdering,
    start: Cell,
    goal: Cell,
    config: &PlanningSuiteConfig,
) -> Result<TierReport, EvalError> {
    let field = match source {
        FieldSource::GroundTruth => CostField::from_ordering(world, ordering)?,
        FieldSource::Model(params, ctx) => build_cost_field(world, params, ctx, config.tile_stride)?,
    };
    let path = astar(&field, start, goal, &config.planner)?;
    tier_proportions(&path.cells, world, &TierMap::new(ordering)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub condition: String,
    pub world_seed: u64,
    pub ordering: TotalOrdering,
    pub start: Cell,
    pub goal: Cell,
    pub tiers: TierReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub trials: usize,
    pub mean_low: f64,
    pub mean_medium: f64,
    pub mean_high: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trials(pub Vec<TrialRecord>);

impl Trials {
    pub fn push(&mut self, condition: &str, world: &TerrainWorld, ordering: &TotalOrdering, (start, goal): (Cell, Cell), tiers: TierReport) {
        self.0.push(TrialRecord {
            condition: condition.to_string(),
            world_seed: world.seed(),
            ordering: ordering.clone(),
            start,
            goal,
            tiers,
        });
    }

    pub fn summary(&self, condition: &str) -> ConditionSummary {
        let rows: Vec<&TierReport> = self.0.iter().filter(|t| t.condition == condition).map(|t| &t.tiers).collect();
        let k = rows.len().max(1) as f64;
        ConditionSummary {
            condition: condition.to_string(),
            trials: rows.len(),
            mean_low: rows.iter().map(|t| t.low).sum::<f64>() / k,
            mean_medium: rows.iter().map(|t| t.medium).sum::<f64>() / k,
            mean_high: rows.iter().map(|t| t.high).sum::<f64>() / k,
        }
    }
}

/// Conditions measured by [`tier_suite`].
pub const BASE_CANONICAL: &str = "seen/m_base/canonical";
pub const BASE_INVERTED: &str = "seen/m_base/inverted";
pub const SYNTHETIC_CANONICAL: &str = "seen/m_synthetic/canonical";
pub const SYNTHETIC_INVERTED: &str = "seen/m_synthetic/inverted";
pub const UNSEEN_BASE: &str = "unseen/m_base/informative";
pub const UNSEEN_SYNTHETIC: &str = "unseen/m_synthetic/informative";
pub const UNSEEN_UNINFORMATIVE: &str = "unseen/m_synthetic/uninformative";
pub const CORRIDOR_TRUTH: &str = "corridor/ground_truth";
pub const CORRIDOR_SYNTHETIC: &str = "corridor/m_synthetic/informative";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierSuiteReport {
    pub config: PlanningSuiteConfig,
    pub summaries: Vec<ConditionSummary>,
    pub trials: Trials,
}

impl TierSuiteReport {
    /// Mean low-tier proportion of a condition.
    pub fn low(&self, condition: &str) -> f64 {
        self.summaries
            .iter()
            .find(|s| s.condition == condition)
            .map_or(f64::NAN, |s| s.mean_low)
    }
}

/// Two endpoint pairs along the world's diagonals.
pub fn diagonal_endpoints(world: &TerrainWorld, margin: usize) -> [(Cell, Cell); 2] {
    let (w, h) = (world.width() - 1 - margin, world.height() - 1 - margin);
    [([margin, margin], [w, h]), ([w, margin], [margin, h])]
}

fn world_textures(library: &TextureLibrary, num_labels: usize) -> Vec<TextureSpec> {
    library.base()[..num_labels].iter().map(|t| (*t).clone()).collect()
}

/// One bank per texture, cut from a 64×64 world covered by that texture
/// alone, so every bank fills regardless of the evaluated world's layout.
pub fn texture_banks(textures: &[TextureSpec], bank: &BankConfig, seed: u64) -> Result<Vec<PatchBank>, EvalError> {
    let l = textures.len();
    (0..l as u8)
        .map(|label| {
            let world = TerrainWorld::from_grid(seed, 64, 64, l, vec![label; 64 * 64], textures.to_vec())?;
            Ok(build_patch_bank(&world, label, bank.size, bank.patch_size, seed)?)
        })
        .collect()
}

/// Voronoi world with base textures.
pub fn seen_world(config: &PlanningSuiteConfig, index: usize) -> Result<(TerrainWorld, Vec<PatchBank>), EvalError> {
    let seed = config.seed + index as u64;
    let s = config.world_size;
    let textures = world_textures(&TextureLibrary::standard(), config.num_labels);
    let world = generate_world(seed, s, s, config.num_labels, textures.clone())?;
    let banks = texture_banks(&textures, &config.bank, seed)?;
    Ok((world, banks))
}

/// Voronoi world drawn in synthetic textures, its banks, and banks of the
/// same geometry drawn in synthetic textures the world does not use.
pub fn unseen_world(
    config: &PlanningSuiteConfig,
    index: usize,
) -> Result<(TerrainWorld, Vec<PatchBank>, Vec<PatchBank>), EvalError> {
    let seed = config.seed + 1000 + index as u64;
    let l = config.num_labels;
    let library = TextureLibrary::standard();
    let pool = library.synthetic();
    if pool.len() < 2 * l {
        return Err(EvalError::Input(format!("{} synthetic textures cannot dress two disjoint sets of {l}", pool.len())));
    }
    let mut rng = seeded_rng(seed, 0);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), 2 * l).into_vec();
    let textures: Vec<TextureSpec> = picks[..l].iter().map(|&i| pool[i].clone()).collect();
    let decoys: Vec<TextureSpec> = picks[l..].iter().map(|&i| pool[i].clone()).collect();
    let s = config.world_size;
    let world = generate_world(seed, s, s, l, textures.clone())?;
    let banks = texture_banks(&textures, &config.bank, seed)?;
    let decoy_banks = texture_banks(&decoys, &config.bank, seed)?;
    Ok((world, banks, decoy_banks))
}

/// Base-texture world with a corridor of `ordering`'s most preferred label
/// joining opposite corners.
pub fn corridor_world(
    config: &PlanningSuiteConfig,
    index: usize,
    ordering: &TotalOrdering,
) -> Result<(TerrainWorld, Vec<PatchBank>, (Cell, Cell)), EvalError> {
    let seed = config.seed + 2000 + index as u64;
    let s = config.world_size;
    let m = config.margin;
    let (start, goal) = ([m, m], [s - 1 - m, s - 1 - m]);
    let textures = world_textures(&TextureLibrary::standard(), config.num_labels);
    let layout = Layout::Corridor {
        start,
        goal,
        half_width: config.corridor_half_width,
        bends: config.corridor_bends,
        corridor_label: ordering.order()[0],
    };
    let world = TerrainWorld::generate(seed, s, s, config.num_labels, textures.clone(), layout)?;
    let banks = texture_banks(&textures, &config.bank, seed)?;
    Ok((world, banks, (start, goal)))
}

/// Path-tier experiments:
/// seen-texture worlds under canonical and inverted orderings for M_base
/// and M_synthetic; synthetic-texture worlds under random orderings with
/// informative and uninformative contexts; corridor worlds planned on the
/// ground truth and on M_synthetic.
pub fn tier_suite(models: &Models, config: &PlanningSuiteConfig) -> Result<TierSuiteReport, EvalError> {
    let mut trials = Trials::default();
    let canonical = TotalOrdering::canonical(config.num_labels);
    let inverted = canonical.reversed();
    for i in 0..config.worlds {
        let (world, banks) = seen_world(config, i)?;
        for (k, &pair) in diagonal_endpoints(&world, config.margin).iter().enumerate() {
            for (ordering, label_b, label_s) in [
                (&canonical, BASE_CANONICAL, SYNTHETIC_CANONICAL),
                (&inverted, BASE_INVERTED, SYNTHETIC_INVERTED),
            ] {
                let mut rng = seeded_rng(world.seed(), k as u64);
                let ctx = sample_context(&mut rng, ordering, &banks, config.n)?;
                for (params, label) in [(&models.base, label_b), (&models.synthetic, label_s)] {
                    let t = plan_tiers(&world, FieldSource::Model(params, &ctx), ordering, pair.0, pair.1, config)?;
                    trials.push(label, &world, ordering, pair, t);
                }
            }
        }

        let (world, banks, decoys) = unseen_world(config, i)?;
        for (k, &pair) in diagonal_endpoints(&world, config.margin).iter().enumerate() {
            let mut rng = seeded_rng(world.seed(), 100 + k as u64);
            let ordering = TotalOrdering::random(&mut rng, config.num_labels);
            let informative = sample_context(&mut rng, &ordering, &banks, config.n)?;
            let uninformative = sample_context(&mut rng, &ordering, &decoys, config.n)?;
            for (params, ctx, label) in [
                (&models.base, &informative, UNSEEN_BASE),
                (&models.synthetic, &informative, UNSEEN_SYNTHETIC),
                (&models.synthetic, &uninformative, UNSEEN_UNINFORMATIVE),
            ] {
                let t = plan_tiers(&world, FieldSource::Model(params, ctx), &ordering, pair.0, pair.1, config)?;
                trials.push(label, &world, &ordering, pair, t);
            }
        }

        let mut rng = seeded_rng(config.seed + 2000 + i as u64, 1);
        let ordering = TotalOrdering::random(&mut rng, config.num_labels);
        let (world, banks, pair) = corridor_world(config, i, &ordering)?;
        let ctx = sample_context(&mut rng, &ordering, &banks, config.n)?;
        let t = plan_tiers(&world, FieldSource::GroundTruth, &ordering, pair.0, pair.1, config)?;
        trials.push(CORRIDOR_TRUTH, &world, &ordering, pair, t);
        let t = plan_tiers(&world, FieldSource::Model(&models.synthetic, &ctx), &ordering, pair.0, pair.1, config)?;
        trials.push(CORRIDOR_SYNTHETIC, &world, &ordering, pair, t);
        tracing::info!(world = i, "tier trials done");
    }
    let summaries = [
        BASE_CANONICAL,
        BASE_INVERTED,
        SYNTHETIC_CANONICAL,
        SYNTHETIC_INVERTED,
        UNSEEN_BASE,
        UNSEEN_SYNTHETIC,
        UNSEEN_UNINFORMATIVE,
        CORRIDOR_TRUTH,
        CORRIDOR_SYNTHETIC,
    ]
    .iter()
    .map(|c| trials.summary(c))
    .collect();
    Ok(TierSuiteReport {
        config: config.clone(),
        summaries,
        trials,
    })
}
