//! Preference contexts, patch banks, target costmaps and the three
//! training datasets.

mod context;
mod dataset;
mod io;
mod ordering;
mod patch;
mod target;

pub use context::{
    count_contexts, ordered_pairs, pairs_for_total_order, sample_context, sample_context_with, PreferenceContext,
    CHANNELS,
};
pub use dataset::{
    make_example, random_pose, DataConfig, DataSource, Phase, Provenance, Replacement, TrainingExample,
};
pub use io::{decode_example, encode_example, load_dataset, save_dataset, Manifest, ManifestEntry, MANIFEST};
pub use ordering::{cost_of, TotalOrdering};
pub use patch::{build_banks, build_patch_bank, single_label_windows, BankConfig, Patch, PatchBank};
pub use target::{build_target, TargetCostmap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid ordering: {0}")]
    Ordering(String),
    #[error("label {0} is not in the ordering")]
    UnknownLabel(u8),
    #[error("label {label} has no single-label {patch_size}×{patch_size} window")]
    NoCandidates { label: u8, patch_size: usize },
    #[error("no patch bank for label {0}")]
    MissingBank(u8),
    #[error("patch: {0}")]
    Patch(String),
    #[error("context: {0}")]
    Context(String),
    #[error("context count overflows u128")]
    Overflow,
    #[error("synthetic phase needs at least one synthetic texture")]
    NoSyntheticTextures,
    #[error("no window containing a replaced label was found")]
    NoReplacedTerrain,
    #[error("config: {0}")]
    Config(String),
    #[error("dataset format: {0}")]
    Format(String),
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
