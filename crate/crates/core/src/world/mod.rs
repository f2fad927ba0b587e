//! Procedural terrain worlds: label grids, per-label textures, rendering,
//! and bird's-eye-view observation from a pose.

mod image;
mod texture;

pub use image::{decode_rgb_png, encode_gray_png, encode_rgb_png, ImageError};
pub use texture::{
    TextureFamily, TextureId, TextureKind, TextureLibrary, TextureParams, TextureSpec, MIN_SEPARATION,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label of cells that fall outside the world.
pub const SENTINEL: i16 = -1;

/// Voronoi sites generated per label.
pub const SITES_PER_LABEL: usize = 8;

const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world parameters: {0}")]
    Params(String),
    #[error("coverage unattainable: after {attempts} attempts some label covers fewer than {min_cells} cells")]
    Coverage { attempts: u64, min_cells: usize },
    #[error("region {0:?} is outside the world")]
    OutOfBounds(Rect),
    #[error("texture library: {0}")]
    Texture(String),
    #[error("world file: {0}")]
    File(String),
}

/// Axis-aligned cell rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }
}

/// Robot pose in continuous cell coordinates. `theta = 0` faces the −y
/// edge of the grid; positive angles turn clockwise on screen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

/// How the label grid of a world is laid out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    /// Nearest-site partition of `SITES_PER_LABEL · L` random sites.
    Voronoi,
    /// Voronoi background with a band of `corridor_label` painted along a
    /// bent polyline from `start` to `goal`.
    Corridor {
        start: [usize; 2],
        goal: [usize; 2],
        half_width: f64,
        bends: usize,
        corridor_label: u8,
    },
    /// Labels given cell by cell, row-major. Taken as is: no coverage
    /// requirement applies.
    Explicit { labels: Vec<u8> },
}

impl Default for Layout {
    fn default() -> Self {
        Layout::Voronoi
    }
}

/// Ground-truth terrain grid plus the texture drawn for each label.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainWorld {
    seed: u64,
    width: usize,
    height: usize,
    num_labels: usize,
    labels: Vec<u8>,
    textures: Vec<TextureSpec>,
    layout: Layout,
}

/// JSON form of a world; the label grid is regenerated from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "L")]
    pub num_labels: usize,
    pub texture_assignment: Vec<TextureAssignment>,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureAssignment {
    pub label: u8,
    pub texture: TextureSpec,
}

/// Generates a Voronoi world. `textures[l]` renders label `l`.
pub fn generate_world(
    seed: u64,
    width: usize,
    height: usize,
    num_labels: usize,
    textures: Vec<TextureSpec>,
) -> Result<TerrainWorld, WorldError> {
    TerrainWorld::generate(seed, width, height, num_labels, textures, Layout::Voronoi)
}

impl TerrainWorld {
    pub fn generate(
        seed: u64,
        width: usize,
        height: usize,
        num_labels: usize,
        textures: Vec<TextureSpec>,
        layout: Layout,
    ) -> Result<Self, WorldError> {
        if let Layout::Explicit { labels } = &layout {
            return Self::from_grid(seed, width, height, num_labels, labels.clone(), textures);
        }
        if num_labels < 2 || num_labels > u8::MAX as usize {
            return Err(WorldError::Params(format!("L = {num_labels}, need 2 ≤ L ≤ 255")));
        }
        if width < 64 || height < 64 {
            return Err(WorldError::Params(format!("{width}×{height} world, need ≥ 64×64")));
        }
        if textures.len() != num_labels {
            return Err(WorldError::Params(format!(
                "{} textures for {num_labels} labels",
                textures.len()
            )));
        }
        if let Layout::Corridor { start, goal, corridor_label, .. } = &layout {
            if *corridor_label as usize >= num_labels {
                return Err(WorldError::Params(format!("corridor label {corridor_label} ≥ L")));
            }
            if start[0] >= width || start[1] >= height || goal[0] >= width || goal[1] >= height {
                return Err(WorldError::Params("corridor endpoints outside the world".into()));
            }
        }
        let min_cells = width * height / 100;
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(attempt);
            let labels = match &layout {
                Layout::Voronoi => voronoi(&mut rng, width, height, &(0..num_labels as u8).collect::<Vec<_>>()),
                Layout::Corridor {
                    start,
                    goal,
                    half_width,
                    bends,
                    corridor_label,
                } => corridor(&mut rng, width, height, num_labels, *start, *goal, *half_width, *bends, *corridor_label),
                Layout::Explicit { .. } => unreachable!("handled above"),
            };
            let mut hist = vec![0usize; num_labels];
            for &l in &labels {
                hist[l as usize] += 1;
            }
            if hist.iter().all(|&c| c >= min_cells) {
                return Ok(Self {
                    seed,
                    width,
                    height,
                    num_labels,
                    labels,
                    textures,
                    layout,
                });
            }
        }
        Err(WorldError::Coverage {
            attempts: MAX_ATTEMPTS,
            min_cells,
        })
    }

    /// World over a given label grid.
    pub fn from_grid(
        seed: u64,
        width: usize,
        height: usize,
        num_labels: usize,
        labels: Vec<u8>,
        textures: Vec<TextureSpec>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(WorldError::Params(format!(
                "{} labels for a {width}×{height} grid",
                labels.len()
            )));
        }
        if num_labels == 0 || textures.len() != num_labels {
            return Err(WorldError::Params(format!(
                "{} textures for {num_labels} labels",
                textures.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_labels) {
            return Err(WorldError::Params(format!("label {bad} ≥ L = {num_labels}")));
        }
        Ok(Self {
            seed,
            width,
            height,
            num_labels,
            labels: labels.clone(),
            textures,
            layout: Layout::Explicit { labels },
        })
    }

    pub fn from_file(file: &WorldFile) -> Result<Self, WorldError> {
        let mut textures: Vec<Option<TextureSpec>> = vec![None; file.num_labels];
        for a in &file.texture_assignment {
            let slot = textures
                .get_mut(a.label as usize)
                .ok_or_else(|| WorldError::File(format!("label {} ≥ L = {}", a.label, file.num_labels)))?;
            if slot.replace(a.texture.clone()).is_some() {
                return Err(WorldError::File(format!("label {} assigned twice", a.label)));
            }
        }
        let textures = textures
            .into_iter()
            .enumerate()
            .map(|(l, t)| t.ok_or_else(|| WorldError::File(format!("label {l} has no texture"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::generate(file.seed, file.width, file.height, file.num_labels, textures, file.layout.clone())
    }

    pub fn to_file(&self) -> WorldFile {
        WorldFile {
            seed: self.seed,
            width: self.width,
            height: self.height,
            num_labels: self.num_labels,
            texture_assignment: self
                .textures
                .iter()
                .enumerate()
                .map(|(l, t)| TextureAssignment {
                    label: l as u8,
                    texture: t.clone(),
                })
                .collect(),
            layout: self.layout.clone(),
        }
    }

    /// Same geometry, different textures for some labels.
    pub fn with_textures(&self, textures: Vec<TextureSpec>) -> Result<Self, WorldError> {
        if textures.len() != self.num_labels {
            return Err(WorldError::Params(format!(
                "{} textures for {} labels",
                textures.len(),
                self.num_labels
            )));
        }
        Ok(Self {
            textures,
            ..self.clone()
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn textures(&self) -> &[TextureSpec] {
        &self.textures
    }

    pub fn texture(&self, label: u8) -> &TextureSpec {
        &self.textures[label as usize]
    }

    pub fn label_at(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.num_labels];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Colour of an in-bounds cell.
    #[inline]
    pub fn cell_rgb(&self, x: usize, y: usize) -> [f32; 3] {
        self.texture(self.label_at(x, y)).sample(x as i64, y as i64)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }

    /// Axis-aligned render of a region.
    pub fn render(&self, region: Rect) -> Result<BevImage, WorldError> {
        if region.x + region.width > self.width || region.y + region.height > self.height {
            return Err(WorldError::OutOfBounds(region));
        }
        let mut img = BevImage::blank(region.height, region.width);
        img.anchor = [region.x as i64, region.y as i64];
        for i in 0..region.height {
            for j in 0..region.width {
                img.set(i, j, self.cell_rgb(region.x + j, region.y + i));
            }
        }
        Ok(img)
    }

    /// Continuous world point sampled by window pixel `(i, j)`.
    fn sample_point(pose: &Pose, rows: usize, cols: usize, i: usize, j: usize) -> (f64, f64) {
        let u = j as f64 + 0.5 - cols as f64 / 2.0;
        let v = i as f64 + 0.5 - rows as f64 / 2.0;
        let (s, c) = pose.theta.sin_cos();
        (pose.x + c * u - s * v, pose.y + s * u + c * v)
    }

    /// Bird's-eye crop centred on `pose`, rotated so the heading points up.
    /// Samples are bilinear; pixels whose nearest cell is outside the world
    /// are zero and flagged invalid.
    pub fn observe(&self, pose: &Pose, rows: usize, cols: usize) -> BevImage {
        let mut img = BevImage::blank(rows, cols);
        let (ax, ay) = Self::sample_point(pose, rows, cols, 0, 0);
        img.anchor = [ax.floor() as i64, ay.floor() as i64];
        for i in 0..rows {
            for j in 0..cols {
                let (px, py) = Self::sample_point(pose, rows, cols, i, j);
                if !self.contains(px, py) {
                    img.valid[i * cols + j] = false;
                    continue;
                }
                img.set(i, j, self.bilinear(px, py));
            }
        }
        img
    }

    fn bilinear(&self, px: f64, py: f64) -> [f32; 3] {
        let fx = px - 0.5;
        let fy = py - 0.5;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let (tx, ty) = ((fx - x0) as f32, (fy - y0) as f32);
        let clamp_x = |v: f64| (v.max(0.0) as usize).min(self.width - 1);
        let clamp_y = |v: f64| (v.max(0.0) as usize).min(self.height - 1);
        let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
        let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
        let c00 = self.cell_rgb(xa, ya);
        let c10 = self.cell_rgb(xb, ya);
        let c01 = self.cell_rgb(xa, yb);
        let c11 = self.cell_rgb(xb, yb);
        let mut out = [0.0f32; 3];
        for ch in 0..3 {
            let top = c00[ch] + (c10[ch] - c00[ch]) * tx;
            let bottom = c01[ch] + (c11[ch] - c01[ch]) * tx;
            out[ch] = (top + (bottom - top) * ty).clamp(0.0, 1.0);
        }
        out
    }

    /// Nearest-cell labels with the same geometry as [`observe`](Self::observe).
    pub fn label_window(&self, pose: &Pose, rows: usize, cols: usize) -> LabelGrid {
        let mut labels = vec![SENTINEL; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                let (px, py) = Self::sample_point(pose, rows, cols, i, j);
                if self.contains(px, py) {
                    labels[i * cols + j] = self.label_at(px as usize, py as usize) as i16;
                }
            }
        }
        LabelGrid {
            height: rows,
            width: cols,
            labels,
        }
    }

    /// Labels of an axis-aligned region.
    pub fn label_region(&self, region: Rect) -> Result<LabelGrid, WorldError> {
        if region.x + region.width > self.width || region.y + region.height > self.height {
            return Err(WorldError::OutOfBounds(region));
        }
        let mut labels = Vec::with_capacity(region.width * region.height);
        for y in region.y..region.y + region.height {
            for x in region.x..region.x + region.width {
                labels.push(self.label_at(x, y) as i16);
            }
        }
        Ok(LabelGrid {
            height: region.height,
            width: region.width,
            labels,
        })
    }
}

fn voronoi(rng: &mut ChaCha8Rng, width: usize, height: usize, palette: &[u8]) -> Vec<u8> {
    let sites: Vec<(f64, f64, u8)> = (0..palette.len() * SITES_PER_LABEL)
        .map(|_| {
            (
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                palette[rng.gen_range(0..palette.len())],
            )
        })
        .collect();
    let mut labels = vec![0u8; width * height];
    for y in 0..height {
        for x in 0..width {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut best = (f64::INFINITY, 0u8);
            for &(sx, sy, l) in &sites {
                let d = (sx - cx) * (sx - cx) + (sy - cy) * (sy - cy);
                if d < best.0 {
                    best = (d, l);
                }
            }
            labels[y * width + x] = best.1;
        }
    }
    labels
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn corridor(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    num_labels: usize,
    start: [usize; 2],
    goal: [usize; 2],
    half_width: f64,
    bends: usize,
    corridor_label: u8,
) -> Vec<u8> {
    let others: Vec<u8> = (0..num_labels as u8).filter(|&l| l != corridor_label).collect();
    let mut labels = voronoi(rng, width, height, &others);
    let margin = half_width + 2.0;
    let mut points = vec![(start[0] as f64 + 0.5, start[1] as f64 + 0.5)];
    for k in 1..=bends {
        let t = k as f64 / (bends + 1) as f64;
        let bx = start[0] as f64 + t * (goal[0] as f64 - start[0] as f64);
        let by = start[1] as f64 + t * (goal[1] as f64 - start[1] as f64);
        let jitter = 0.35 * width.min(height) as f64;
        let x = (bx + rng.gen_range(-jitter..jitter)).clamp(margin, width as f64 - margin);
        let y = (by + rng.gen_range(-jitter..jitter)).clamp(margin, height as f64 - margin);
        points.push((x, y));
    }
    points.push((goal[0] as f64 + 0.5, goal[1] as f64 + 0.5));
    for y in 0..height {
        for x in 0..width {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            if points.windows(2).any(|s| dist_to_segment(p, s[0], s[1]) <= half_width) {
                labels[y * width + x] = corridor_label;
            }
        }
    }
    labels
}

/// Grid of label ids; [`SENTINEL`] marks cells outside the world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGrid {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<i16>,
}

impl LabelGrid {
    pub fn get(&self, i: usize, j: usize) -> i16 {
        self.labels[i * self.width + j]
    }

    pub fn contains_label(&self, label: u8) -> bool {
        self.labels.contains(&(label as i16))
    }
}

/// H×W×3 image with values in [0, 1] and a per-pixel validity flag.
#[derive(Clone, Debug, PartialEq)]
pub struct BevImage {
    pub height: usize,
    pub width: usize,
    /// Row-major H×W×C.
    pub pixels: Vec<f32>,
    pub valid: Vec<bool>,
    /// World cell under pixel (0, 0).
    pub anchor: [i64; 2],
}

impl BevImage {
    pub const CHANNELS: usize = 3;

    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![0.0; height * width * 3],
            valid: vec![true; height * width],
            anchor: [0, 0],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f32; 3] {
        let o = (i * self.width + j) * 3;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, rgb: [f32; 3]) {
        let o = (i * self.width + j) * 3;
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Channel-major copy (C×H×W) for the network.
    pub fn to_chw(&self) -> Vec<f32> {
        let plane = self.height * self.width;
        let mut out = vec![0.0; 3 * plane];
        for p in 0..plane {
            for c in 0..3 {
                out[c * plane + p] = self.pixels[p * 3 + c];
            }
        }
        out
    }

    pub fn sub_image(&self, top: usize, left: usize, rows: usize, cols: usize) -> BevImage {
        let mut out = BevImage::blank(rows, cols);
        out.anchor = [self.anchor[0] + left as i64, self.anchor[1] + top as i64];
        for i in 0..rows {
            for j in 0..cols {
                out.set(i, j, self.get(top + i, left + j));
                out.valid[i * cols + j] = self.valid[(top + i) * self.width + left + j];
            }
        }
        out
    }

    pub fn to_png(&self) -> Vec<u8> {
        encode_rgb_png(self.width, self.height, &self.pixels)
    }
}

#[cfg(test)]
mod tests;
