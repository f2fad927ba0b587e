use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use pacer::world::{encode_rgb_png, TerrainWorld, WorldError, WorldFile};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Longest side of a world thumbnail.
pub const THUMBNAIL_SIZE: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    World { path: String, source: WorldError },
}

#[derive(Clone, Debug, Serialize)]
pub struct WorldSummary {
    pub id: String,
    pub seed: u64,
    pub size: [usize; 2],
    #[serde(rename = "L")]
    pub num_labels: usize,
    /// Base64 RGB PNG.
    pub thumbnail: String,
}

/// Worlds by id; an id is the file stem of the world's JSON file.
#[derive(Clone, Debug, Default)]
pub struct WorldRegistry {
    worlds: BTreeMap<String, TerrainWorld>,
}

impl WorldRegistry {
    /// Every `*.json` world file directly under `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, RegistryError> {
        let io = |e| RegistryError::Io {
            path: dir.display().to_string(),
            source: e,
        };
        let mut reg = Self::default();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let name = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|source| RegistryError::Io {
                path: name.clone(),
                source,
            })?;
            let file: WorldFile = serde_json::from_str(&text).map_err(|source| RegistryError::Json {
                path: name.clone(),
                source,
            })?;
            let world = TerrainWorld::from_file(&file).map_err(|source| RegistryError::World { path: name, source })?;
            let id = path.file_stem().expect("json file has a stem").to_string_lossy().into_owned();
            reg.insert(id, world);
        }
        Ok(reg)
    }

    pub fn insert(&mut self, id: impl Into<String>, world: TerrainWorld) {
        self.worlds.insert(id.into(), world);
    }

    pub fn get(&self, id: &str) -> Option<&TerrainWorld> {
        self.worlds.get(id)
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// Sorted by id.
    pub fn summaries(&self) -> Vec<WorldSummary> {
        self.worlds
            .iter()
            .map(|(id, w)| WorldSummary {
                id: id.clone(),
                seed: w.seed(),
                size: [w.width(), w.height()],
                num_labels: w.num_labels(),
                thumbnail: STANDARD.encode(thumbnail(w)),
            })
            .collect()
    }
}

/// Nearest-cell downsample to at most `THUMBNAIL_SIZE` per side.
pub fn thumbnail(world: &TerrainWorld) -> Vec<u8> {
    let (w, h) = (world.width(), world.height());
    let scale = w.max(h).div_ceil(THUMBNAIL_SIZE).max(1);
    let (tw, th) = (w.div_ceil(scale), h.div_ceil(scale));
    let mut px = Vec::with_capacity(tw * th * 3);
    for i in 0..th {
        for j in 0..tw {
            px.extend(world.cell_rgb(j * scale, i * scale));
        }
    }
    encode_rgb_png(tw, th, &px)
}
