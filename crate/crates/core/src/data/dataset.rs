use super::{
    build_banks, build_target, sample_context_with, seeded_rng, BankConfig, DataError, Patch, PatchBank,
    PreferenceContext, TargetCostmap, TotalOrdering,
};
use crate::world::{generate_world, BevImage, Pose, TerrainWorld, TextureId, TextureLibrary, TextureSpec};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Attempts at finding a window that shows a replaced label.
const POSE_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// One canonical ordering, base textures.
    Base,
    /// A fresh random ordering per example, base textures.
    Shuffled,
    /// Random ordering with some labels re-textured synthetically.
    Synthetic,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Base, Phase::Shuffled, Phase::Synthetic];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Base => "base",
            Phase::Shuffled => "shuffled",
            Phase::Synthetic => "synthetic",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "base" => Ok(Phase::Base),
            "shuffled" => Ok(Phase::Shuffled),
            "synthetic" => Ok(Phase::Synthetic),
            other => Err(DataError::Config(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub world_seeds: Vec<u64>,
    pub world_size: usize,
    pub num_labels: usize,
    pub image_size: usize,
    pub n: usize,
    pub bank: BankConfig,
    /// Upper bound on labels re-textured per synthetic example.
    pub max_replaced: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            world_seeds: (1..=8).collect(),
            world_size: 256,
            num_labels: 5,
            image_size: 64,
            n: 3,
            bank: BankConfig::default(),
            max_replaced: 3,
        }
    }
}

impl DataConfig {
    /// Same settings over a different set of worlds.
    pub fn with_worlds(&self, world_seeds: Vec<u64>) -> Self {
        Self {
            world_seeds,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub label: u8,
    pub texture: TextureId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub phase: Phase,
    pub ordering: TotalOrdering,
    pub seed: u64,
    pub index: u64,
    pub world_seed: u64,
    pub pose: Pose,
    pub pair_labels: Vec<(u8, u8)>,
    #[serde(default)]
    pub replaced: Vec<Replacement>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub context: PreferenceContext,
    pub image: BevImage,
    pub target: TargetCostmap,
    pub provenance: Provenance,
}

/// Worlds rendered with base textures, their patch banks, and the texture
/// pool used for synthetic replacement.
#[derive(Clone, Debug)]
pub struct DataSource {
    pub config: DataConfig,
    pub worlds: Vec<(TerrainWorld, Vec<PatchBank>)>,
    pub synthetic: Vec<TextureSpec>,
}

impl DataSource {
    pub fn new(config: DataConfig, library: &TextureLibrary) -> Result<Self, DataError> {
        let base = library.base();
        if config.num_labels > base.len() {
            return Err(DataError::Config(format!(
                "{} labels but only {} base textures",
                config.num_labels,
                base.len()
            )));
        }
        if config.world_seeds.is_empty() {
            return Err(DataError::Config("no worlds configured".into()));
        }
        let textures: Vec<TextureSpec> = base[..config.num_labels].iter().map(|t| (*t).clone()).collect();
        let worlds = config
            .world_seeds
            .iter()
            .map(|&s| {
                let w = generate_world(s, config.world_size, config.world_size, config.num_labels, textures.clone())?;
                let banks = build_banks(&w, &config.bank, s)?;
                Ok((w, banks))
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Ok(Self {
            config,
            worlds,
            synthetic: library.synthetic().into_iter().cloned().collect(),
        })
    }

    pub fn standard(config: DataConfig) -> Result<Self, DataError> {
        Self::new(config, &TextureLibrary::standard())
    }

    /// Example `index` of the stream `(phase, seed)`. Each index has its
    /// own random stream.
    pub fn example(&self, phase: Phase, seed: u64, index: u64) -> Result<TrainingExample, DataError> {
        let mut rng = seeded_rng(seed, index);
        let cfg = &self.config;
        let (world, banks) = &self.worlds[rng.gen_range(0..self.worlds.len())];
        let l = cfg.num_labels;
        let ordering = match phase {
            Phase::Base => TotalOrdering::canonical(l),
            _ => TotalOrdering::random(&mut rng, l),
        };
        let prov = |ordering: TotalOrdering, pose: Pose, replaced: Vec<Replacement>| Provenance {
            phase,
            ordering,
            seed,
            index,
            world_seed: world.seed(),
            pose,
            pair_labels: vec![],
            replaced,
        };
        if phase != Phase::Synthetic {
            let pose = random_pose(&mut rng, world, cfg.image_size);
            let ex_seed = rng.gen();
            return make_example(world, &pose, cfg.image_size, &ordering, banks, cfg.n, ex_seed)
                .map(|ex| with_provenance(ex, prov(ordering.clone(), pose, vec![])));
        }
        if self.synthetic.is_empty() {
            return Err(DataError::NoSyntheticTextures);
        }
        let k = rng.gen_range(1..=cfg.max_replaced.min(l).max(1)).min(self.synthetic.len());
        let labels: Vec<u8> = sample(&mut rng, l, k).iter().map(|i| i as u8).collect();
        let tex: Vec<usize> = sample(&mut rng, self.synthetic.len(), k).into_vec();
        let mut textures = world.textures().to_vec();
        let mut replaced = Vec::with_capacity(k);
        for (&label, &t) in labels.iter().zip(&tex) {
            textures[label as usize] = self.synthetic[t].clone();
            replaced.push(Replacement {
                label,
                texture: self.synthetic[t].id.clone(),
            });
        }
        let replaced_world = world.with_textures(textures)?;
        let pose = (0..POSE_ATTEMPTS)
            .map(|_| random_pose(&mut rng, world, cfg.image_size))
            .find(|p| {
                let grid = world.label_window(p, cfg.image_size, cfg.image_size);
                labels.iter().any(|&l| grid.contains_label(l))
            })
            .ok_or(DataError::NoReplacedTerrain)?;
        let ex_seed = rng.gen();
        let ex = make_example_with(&replaced_world, &pose, cfg.image_size, &ordering, banks, cfg.n, ex_seed, |p| {
            match p.source_label {
                Some(l) if labels.contains(&l) => p.rerender(&replaced_world),
                _ => Ok(p.clone()),
            }
        })?;
        Ok(with_provenance(ex, prov(ordering, pose, replaced)))
    }

    pub fn stream(&self, phase: Phase, seed: u64, count: usize) -> impl Iterator<Item = Result<TrainingExample, DataError>> + '_ {
        (0..count as u64).map(move |i| self.example(phase, seed, i))
    }
}

fn with_provenance(mut ex: TrainingExample, mut prov: Provenance) -> TrainingExample {
    prov.pair_labels = std::mem::take(&mut ex.provenance.pair_labels);
    ex.provenance = prov;
    ex
}

/// Centre uniform over the region where an axis-aligned window fits,
/// heading uniform in [0, 2π).
pub fn random_pose<R: Rng>(rng: &mut R, world: &TerrainWorld, image_size: usize) -> Pose {
    let half = image_size as f64 / 2.0;
    let x = rng.gen_range(half..=world.width() as f64 - half);
    let y = rng.gen_range(half..=world.height() as f64 - half);
    Pose::new(x, y, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Observation, context and target for one pose.
pub fn make_example(
    world: &TerrainWorld,
    pose: &Pose,
    image_size: usize,
    ordering: &TotalOrdering,
    banks: &[PatchBank],
    n: usize,
    seed: u64,
) -> Result<TrainingExample, DataError> {
    make_example_with(world, pose, image_size, ordering, banks, n, seed, |p| Ok(p.clone()))
}

#[allow(clippy::too_many_arguments)]
fn make_example_with(
    world: &TerrainWorld,
    pose: &Pose,
    image_size: usize,
    ordering: &TotalOrdering,
    banks: &[PatchBank],
    n: usize,
    seed: u64,
    render: impl Fn(&Patch) -> Result<Patch, DataError>,
) -> Result<TrainingExample, DataError> {
    let mut rng = seeded_rng(seed, 0);
    let context = sample_context_with(&mut rng, ordering, banks, n, render)?;
    let image = world.observe(pose, image_size, image_size);
    let labels = world.label_window(pose, image_size, image_size);
    let target = build_target(&labels, ordering)?;
    let pair_labels = context
        .label_pairs()
        .into_iter()
        .map(|(a, b)| (a.unwrap_or(u8::MAX), b.unwrap_or(u8::MAX)))
        .collect();
    Ok(TrainingExample {
        context,
        image,
        target,
        provenance: Provenance {
            phase: Phase::Base,
            ordering: ordering.clone(),
            seed,
            index: 0,
            world_seed: world.seed(),
            pose: *pose,
            pair_labels,
            replaced: vec![],
        },
    })
}
