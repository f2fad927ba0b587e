//! Staged training: base ordering, then shuffled orderings, then synthetic
//! textures, each phase warm-started from the previous one.

use crate::data::{seeded_rng, DataConfig, DataError, DataSource, Phase, TrainingExample};
use crate::model::{
    batch_contexts, batch_images, forward_graph, save_checkpoint, GraphParams, ModelError, ModelParams, NetworkSpec,
};
use crate::nn::{adam_step, bce_per_pixel_value, AdamConfig, AdamState, Graph, NnError};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("non-finite loss {loss} in phase {phase} epoch {epoch} step {step}; lower the learning rate or check the data")]
    NonFinite {
        phase: String,
        epoch: usize,
        step: usize,
        loss: f64,
    },
    #[error("no training data for phase {0}")]
    NoData(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Examples per dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSizes {
    pub base: usize,
    pub shuffled: usize,
    pub synthetic: usize,
}

impl DatasetSizes {
    pub fn get(&self, phase: Phase) -> usize {
        match phase {
            Phase::Base => self.base,
            Phase::Shuffled => self.shuffled,
            Phase::Synthetic => self.synthetic,
        }
    }
}

/// Epochs of the three phases, in schedule order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseEpochs {
    pub base: usize,
    pub shuffled: usize,
    pub synthetic: usize,
}

impl PhaseEpochs {
    pub fn get(&self, phase: Phase) -> usize {
        match phase {
            Phase::Base => self.base,
            Phase::Shuffled => self.shuffled,
            Phase::Synthetic => self.synthetic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub data: DataConfig,
    pub network: NetworkSpec,
    pub sizes: DatasetSizes,
    pub epochs: PhaseEpochs,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub init_seed: u64,
    /// Dataset streams use `data_seed + phase index`.
    pub data_seed: u64,
    pub shuffle_seed: u64,
    /// Size of the held-out base split scored after every phase.
    pub validation: usize,
    pub validation_seed: u64,
}

impl Default for TrainConfig {
    /// Desk scale: 2000/1000/2000 examples, 15/3/15 epochs.
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            network: NetworkSpec::default(),
            sizes: DatasetSizes {
                base: 2000,
                shuffled: 1000,
                synthetic: 2000,
            },
            epochs: PhaseEpochs {
                base: 15,
                shuffled: 3,
                synthetic: 15,
            },
            batch_size: 16,
            adam: AdamConfig::default(),
            init_seed: 1,
            data_seed: 1000,
            shuffle_seed: 2000,
            validation: 200,
            validation_seed: 3000,
        }
    }
}

impl TrainConfig {
    /// The 100/5/100 epoch schedule over the same datasets.
    pub fn full_scale() -> Self {
        Self {
            epochs: PhaseEpochs {
                base: 100,
                shuffled: 5,
                synthetic: 100,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        if self.network.image_size != self.data.image_size || self.network.n != self.data.n {
            return Err(TrainError::Config(format!(
                "network expects {}px images and n={}, data produces {}px and n={}",
                self.network.image_size, self.network.n, self.data.image_size, self.data.n
            )));
        }
        if self.network.patch_size != self.data.bank.patch_size {
            return Err(TrainError::Config("network and bank patch sizes differ".into()));
        }
        self.network.validate()?;
        Ok(())
    }

    /// Datasets mixed in each phase.
    pub fn mixture(phase: Phase) -> &'static [Phase] {
        match phase {
            Phase::Base => &[Phase::Base],
            Phase::Shuffled => &[Phase::Base, Phase::Shuffled],
            Phase::Synthetic => &[Phase::Base, Phase::Shuffled, Phase::Synthetic],
        }
    }

    pub fn dataset_seed(&self, phase: Phase) -> u64 {
        self.data_seed + phase_index(phase) as u64
    }
}

fn phase_index(phase: Phase) -> usize {
    Phase::ALL.iter().position(|&p| p == phase).unwrap_or(0)
}

/// An in-memory dataset of one phase.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub phase: Phase,
    pub seed: u64,
    pub examples: Vec<TrainingExample>,
}

impl Dataset {
    pub fn generate(source: &DataSource, phase: Phase, seed: u64, count: usize) -> Result<Self, DataError> {
        Ok(Self {
            phase,
            seed,
            examples: source.stream(phase, seed, count).collect::<Result<_, _>>()?,
        })
    }

    pub fn from_examples(phase: Phase, examples: Vec<TrainingExample>) -> Self {
        Self { phase, seed: 0, examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Visiting order of one epoch as (dataset, example) pairs. Every slot goes
/// to the datasets in turn, each dataset walks a fresh permutation of its
/// examples (restarting when exhausted), and the whole epoch is shuffled.
pub fn epoch_order(sizes: &[usize], seed: u64, epoch: u64) -> Vec<(usize, usize)> {
    let mut rng = seeded_rng(seed, epoch);
    let total: usize = sizes.iter().sum();
    let live: Vec<usize> = (0..sizes.len()).filter(|&d| sizes[d] > 0).collect();
    if live.is_empty() {
        return vec![];
    }
    let mut perms: Vec<Vec<usize>> = sizes.iter().map(|_| Vec::new()).collect();
    let mut order = Vec::with_capacity(total);
    for slot in 0..total {
        let d = live[slot % live.len()];
        if perms[d].is_empty() {
            let mut p: Vec<usize> = (0..sizes[d]).collect();
            p.shuffle(&mut rng);
            perms[d] = p;
        }
        order.push((d, perms[d].pop().expect("refilled above")));
    }
    order.shuffle(&mut rng);
    order
}

/// Masked mean BCE of the model on a batch and its gradient.
pub fn batch_loss(
    params: &ModelParams,
    batch: &[&TrainingExample],
    with_grad: bool,
) -> Result<(f64, Option<Vec<crate::nn::Tensor>>), TrainError> {
    let spec = &params.spec;
    let images: Vec<_> = batch.iter().map(|e| &e.image).collect();
    let contexts: Vec<_> = batch.iter().map(|e| &e.context).collect();
    let target: Vec<f32> = batch.iter().flat_map(|e| e.target.values.iter().copied()).collect();
    let mask: Vec<bool> = batch.iter().flat_map(|e| e.target.mask.iter().copied()).collect();
    let mut g = Graph::new();
    let p = GraphParams::enter(&mut g, params, with_grad);
    let x = g.constant(batch_images(spec, &images)?);
    let c = g.constant(batch_contexts(spec, &contexts)?);
    let out = forward_graph(&mut g, spec, &p, x, c)?;
    if !with_grad {
        return Ok((bce_per_pixel_value(g.value(out).data(), &target, &mask)?, None));
    }
    let loss = g.bce_per_pixel(out, &target, &mask)?;
    let value = bce_per_pixel_value(g.value(out).data(), &target, &mask)?;
    g.backward(loss)?;
    Ok((value, Some(p.0.iter().map(|&v| g.grad(v)).collect())))
}

/// Mean BCE over a dataset, scored in batches without gradients.
pub fn evaluate_bce(params: &ModelParams, examples: &[TrainingExample], batch_size: usize) -> Result<f64, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::NoData("evaluation".into()));
    }
    let mut sum = 0.0;
    for chunk in examples.chunks(batch_size.max(1)) {
        let refs: Vec<_> = chunk.iter().collect();
        sum += batch_loss(params, &refs, false)?.0 * chunk.len() as f64;
    }
    Ok(sum / examples.len() as f64)
}

/// Runs `epochs` epochs of Adam on a uniform mixture of `datasets`,
/// starting from a fresh optimizer state. Returns the trained parameters
/// and the mean training loss of every epoch.
pub fn train_phase(
    mut params: ModelParams,
    datasets: &[&Dataset],
    epochs: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ModelParams, Vec<f64>), TrainError> {
    let name = datasets.iter().map(|d| d.phase.name()).collect::<Vec<_>>().join("+");
    if datasets.is_empty() || datasets.iter().all(|d| d.is_empty()) {
        return Err(TrainError::NoData(name));
    }
    if config.batch_size == 0 {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    let sizes: Vec<usize> = datasets.iter().map(|d| d.len()).collect();
    let mut state = AdamState::new();
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let order = epoch_order(&sizes, seed, epoch as u64);
        let mut sum = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&(d, i)| &datasets[d].examples[i]).collect();
            let (loss, grads) = batch_loss(&params, &batch, true)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    phase: name,
                    epoch,
                    step,
                    loss,
                });
            }
            let grads = grads.expect("requested");
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFinite {
                    phase: name,
                    epoch,
                    step,
                    loss: f64::NAN,
                });
            }
            let mut tensors: Vec<_> = params.tensors.iter().map(|(_, t)| t.clone()).collect();
            adam_step(&mut tensors, &grads, &mut state, &config.adam);
            for ((_, t), new) in params.tensors.iter_mut().zip(tensors) {
                *t = new;
            }
            sum += loss * chunk.len() as f64;
        }
        let mean = sum / order.len() as f64;
        tracing::info!(phase = %name, epoch, loss = mean, "epoch done");
        losses.push(mean);
    }
    Ok((params, losses))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub datasets: Vec<Phase>,
    pub epochs: usize,
    pub epoch_losses: Vec<f64>,
    /// Base validation BCE at the end of the phase.
    pub validation_bce: f64,
    pub checkpoint: PathBuf,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    /// Base validation BCE of the initial parameters.
    pub initial_validation_bce: f64,
    pub phases: Vec<PhaseReport>,
    pub data_seconds: f64,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn phase(&self, phase: Phase) -> Option<&PhaseReport> {
        self.phases.iter().find(|p| p.phase == phase)
    }
}

pub fn checkpoint_name(phase: Phase) -> String {
    format!("m_{}.pacr", phase.name())
}

/// Runs the three phases in order and writes `config.json`, one checkpoint
/// per phase and `report.json` into `out`.
pub fn staged_train(config: &TrainConfig, out: &Path) -> Result<TrainReport, TrainError> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), serde_json::to_vec_pretty(config)?)?;
    let source = DataSource::standard(config.data.clone())?;
    let datasets: Vec<Dataset> = Phase::ALL
        .iter()
        .map(|&p| Dataset::generate(&source, p, config.dataset_seed(p), config.sizes.get(p)))
        .collect::<Result<_, _>>()?;
    let validation = Dataset::generate(&source, Phase::Base, config.validation_seed, config.validation)?;
    let data_seconds = start.elapsed().as_secs_f64();
    tracing::info!(seconds = data_seconds, "datasets generated");

    let mut params = ModelParams::init(&config.network, config.init_seed)?;
    let score = |p: &ModelParams| -> Result<f64, TrainError> {
        if validation.is_empty() {
            Ok(f64::NAN)
        } else {
            evaluate_bce(p, &validation.examples, config.batch_size)
        }
    };
    let initial_validation_bce = score(&params)?;
    let mut phases = Vec::new();
    for &phase in &Phase::ALL {
        let t = Instant::now();
        let mix: Vec<&Dataset> = TrainConfig::mixture(phase)
            .iter()
            .map(|&p| &datasets[phase_index(p)])
            .collect();
        let epochs = config.epochs.get(phase);
        let (trained, losses) = train_phase(params, &mix, epochs, config, config.shuffle_seed + phase_index(phase) as u64)?;
        params = trained;
        let path = out.join(checkpoint_name(phase));
        save_checkpoint(&params, &path)?;
        phases.push(PhaseReport {
            phase,
            datasets: TrainConfig::mixture(phase).to_vec(),
            epochs,
            epoch_losses: losses,
            validation_bce: score(&params)?,
            checkpoint: path,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    let report = TrainReport {
        config: config.clone(),
        initial_validation_bce,
        phases,
        data_seconds,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    std::fs::write(out.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}
