//! Cost fields over whole worlds and A* planning on them.

use crate::data::{cost_of, DataError, PreferenceContext, TotalOrdering};
use crate::model::{forward_batch, ModelError, ModelParams};
use crate::world::{Pose, TerrainWorld};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("cell ({x}, {y}) is outside the {width}×{height} field")]
    OutOfBounds { x: usize, y: usize, width: usize, height: usize },
    #[error("no path between the endpoints")]
    NoPath,
    #[error("field: {0}")]
    Field(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Grid cell as `[x, y]`.
pub type Cell = [usize; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Weight of the terrain term against path length.
    pub lambda: f64,
    /// Cost per unit distance travelled.
    pub step_cost: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            step_cost: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(PlanError::Config(format!("lambda must be finite and ≥ 0, got {}", self.lambda)));
        }
        if !(self.step_cost > 0.0 && self.step_cost.is_finite()) {
            return Err(PlanError::Config(format!("step cost must be positive, got {}", self.step_cost)));
        }
        Ok(())
    }
}

/// Per-cell traversal cost over a whole world, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl CostField {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self, PlanError> {
        if values.len() != width * height {
            return Err(PlanError::Field(format!(
                "{} values for a {width}×{height} field",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(PlanError::Field(format!("cost {v} is not a finite non-negative number")));
        }
        Ok(Self { width, height, values })
    }

    pub fn uniform(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    /// Ground-truth field: every cell costs its label's rank cost.
    pub fn from_ordering(world: &TerrainWorld, ordering: &TotalOrdering) -> Result<Self, PlanError> {
        let table = (0..world.num_labels() as u8)
            .map(|l| cost_of(ordering, l).map(|c| c as f32))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            width: world.width(),
            height: world.height(),
            values: world.labels().iter().map(|&l| table[l as usize]).collect(),
        })
    }

    pub fn get(&self, [x, y]: Cell) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, [x, y]: Cell, v: f32) {
        self.values[y * self.width + x] = v;
    }

    pub fn contains(&self, [x, y]: Cell) -> bool {
        x < self.width && y < self.height
    }

    /// Adds `weight · other` cell by cell, for extra per-cell objective
    /// terms planned jointly with the terrain.
    pub fn with_additive(&self, other: &CostField, weight: f32) -> Result<Self, PlanError> {
        if (other.width, other.height) != (self.width, self.height) {
            return Err(PlanError::Field("fields differ in shape".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + weight * b).collect();
        Self::new(self.width, self.height, values)
    }

    fn check(&self, cell: Cell) -> Result<(), PlanError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(PlanError::OutOfBounds {
                x: cell[0],
                y: cell[1],
                width: self.width,
                height: self.height,
            })
        }
    }
}

/// Top-left offsets of tiles of `size` along an axis of `len` cells with
/// the given stride; the last tile is flush with the far edge.
pub fn tile_offsets(len: usize, size: usize, stride: usize) -> Vec<usize> {
    if len <= size {
        return vec![0];
    }
    let last = len - size;
    let mut offs: Vec<usize> = (0..=last).step_by(stride.max(1)).collect();
    if *offs.last().expect("starts at 0") != last {
        offs.push(last);
    }
    offs
}

/// Averages square tiles produced by `tile` over a `width`×`height` grid.
/// `tile` receives the top-left corners of a group of tiles and returns
/// their values, row-major, `size`×`size` each.
pub fn stitch<E>(
    width: usize,
    height: usize,
    size: usize,
    stride: usize,
    mut tile: impl FnMut(&[Cell]) -> Result<Vec<Vec<f32>>, E>,
) -> Result<Vec<f32>, E> {
    let mut sum = vec![0.0f64; width * height];
    let mut hits = vec![0u32; width * height];
    let corners: Vec<Cell> = tile_offsets(height, size, stride)
        .into_iter()
        .flat_map(|y| tile_offsets(width, size, stride).into_iter().map(move |x| [x, y]))
        .collect();
    for group in corners.chunks(16) {
        for (&[x0, y0], values) in group.iter().zip(tile(group)?) {
            for i in 0..size.min(height - y0) {
                for j in 0..size.min(width - x0) {
                    let k = (y0 + i) * width + x0 + j;
                    sum[k] += values[i * size + j] as f64;
                    hits[k] += 1;
                }
            }
        }
    }
    Ok(sum
        .iter()
        .zip(&hits)
        .map(|(&s, &h)| if h == 0 { 0.0 } else { (s / h as f64) as f32 })
        .collect())
}

/// Learned cost field: the model's costmap at axis-aligned poses on a
/// stride grid, overlapping tiles averaged.
pub fn build_cost_field(
    world: &TerrainWorld,
    params: &ModelParams,
    context: &PreferenceContext,
    tile_stride: usize,
) -> Result<CostField, PlanError> {
    let size = params.spec.image_size;
    if tile_stride == 0 || tile_stride > size {
        return Err(PlanError::Config(format!("tile stride {tile_stride} must be in 1..={size}")));
    }
    let half = size as f64 / 2.0;
    let values = stitch(world.width(), world.height(), size, tile_stride, |corners| {
        let images: Vec<_> = corners
            .iter()
            .map(|&[x, y]| world.observe(&Pose::new(x as f64 + half, y as f64 + half, 0.0), size, size))
            .collect();
        let refs: Vec<_> = images.iter().collect();
        let contexts = vec![context; corners.len()];
        Ok::<_, PlanError>(forward_batch(params, &refs, &contexts)?.into_iter().map(|c| c.values).collect())
    })?;
    CostField::new(world.width(), world.height(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub total_cost: f64,
    /// Σ step length.
    pub length: f64,
    /// Σ step length · cost of the entered cell.
    pub terrain: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // BinaryHeap is a max-heap; reverse so the smallest (f, h, idx) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const MOVES: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 8-connected neighbours of `idx` with their step lengths.
pub fn neighbours(width: usize, height: usize, idx: usize) -> impl Iterator<Item = (usize, f64)> {
    let (x, y) = ((idx % width) as isize, (idx / width) as isize);
    MOVES.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x + dx, y + dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height).then(|| {
            let len = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            (ny as usize * width + nx as usize, len)
        })
    })
}

/// Cost of one move into a cell.
#[inline]
pub fn step_cost(len: f64, cell_cost: f32, config: &PlannerConfig) -> f64 {
    len * config.step_cost * (1.0 + config.lambda * cell_cost as f64)
}

/// Least-cost 8-connected path from `start` to `goal`. A move of length
/// `ℓ ∈ {1, √2}` into cell `c` costs `ℓ·(1 + λ·cost(c))`.
pub fn astar(field: &CostField, start: Cell, goal: Cell, config: &PlannerConfig) -> Result<Path, PlanError> {
    config.validate()?;
    field.check(start)?;
    field.check(goal)?;
    let (w, h) = (field.width, field.height);
    let idx = |[x, y]: Cell| y * w + x;
    let (s, t) = (idx(start), idx(goal));
    let heur = |i: usize| {
        let dx = (i % w) as f64 - goal[0] as f64;
        let dy = (i / w) as f64 - goal[1] as f64;
        (dx * dx + dy * dy).sqrt() * config.step_cost
    };
    let mut g = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut closed = vec![false; w * h];
    let mut open = BinaryHeap::new();
    g[s] = 0.0;
    open.push(Entry { f: heur(s), h: heur(s), idx: s });
    while let Some(Entry { idx: u, .. }) = open.pop() {
        if closed[u] {
            continue;
        }
        if u == t {
            break;
        }
        closed[u] = true;
        for (v, len) in neighbours(w, h, u) {
            let cand = g[u] + step_cost(len, field.values[v], config);
            if cand < g[v] {
                g[v] = cand;
                parent[v] = u;
                closed[v] = false;
                let hv = heur(v);
                open.push(Entry { f: cand + hv, h: hv, idx: v });
            }
        }
    }
    if !g[t].is_finite() {
        return Err(PlanError::NoPath);
    }
    let mut rev = vec![t];
    while *rev.last().expect("non-empty") != s {
        rev.push(parent[*rev.last().expect("non-empty")]);
    }
    rev.reverse();
    let cells: Vec<Cell> = rev.iter().map(|&i| [i % w, i / w]).collect();
    let mut moves = Vec::with_capacity(rev.len());
    let (mut length, mut terrain) = (0.0, 0.0);
    for pair in rev.windows(2) {
        let diag = pair[0] % w != pair[1] % w && pair[0] / w != pair[1] / w;
        let len = if diag { std::f64::consts::SQRT_2 } else { 1.0 };
        length += len;
        terrain += len * field.values[pair[1]] as f64;
        moves.push(step_cost(len, field.values[pair[1]], config));
    }
    Ok(Path {
        cells,
        total_cost: canonical_sum(moves),
        length,
        terrain,
    })
}

/// Sum in ascending order, so paths made of the same moves in a different
/// order report bit-identical costs.
pub fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Unit-weighted sum of cell costs along a path, start and goal included.
pub fn path_cost_under(field: &CostField, cells: &[Cell]) -> Result<f64, PlanError> {
    cells.iter().try_fold(0.0, |acc, &c| {
        field.check(c)?;
        Ok(acc + field.get(c) as f64)
    })
}

/// Octile distance: the length of the shortest 8-connected path.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a[0].abs_diff(b[0]) as f64;
    let dy = a[1].abs_diff(b[1]) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}
