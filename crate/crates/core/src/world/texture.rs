//! Procedural terrain textures.
//!
//! Every texture is a pure function of its [`TextureSpec`] and integer cell
//! coordinates, built from a counter-based hash so rendering needs no state.

use serde::{Deserialize, Serialize};

use super::WorldError;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TextureId(pub String);

impl TextureId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for TextureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureFamily {
    Base,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    Speckle,
    Stripes,
    Checker,
    Blotch,
    GradientNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    pub primary: [f32; 3],
    pub secondary: [f32; 3],
    /// Feature size in cells (stripe period, checker square, noise lattice).
    pub scale: f32,
    /// Stripe direction in radians.
    #[serde(default)]
    pub angle: f32,
    /// Fraction of cells showing the secondary colour.
    #[serde(default = "half")]
    pub density: f32,
    /// Per-cell luminance jitter amplitude.
    #[serde(default)]
    pub jitter: f32,
}

fn half() -> f32 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub id: TextureId,
    pub family: TextureFamily,
    pub kind: TextureKind,
    pub params: TextureParams,
    pub seed: u64,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform value in [0, 1) for a lattice point.
#[inline]
fn hash01(seed: u64, x: i64, y: i64, salt: u64) -> f32 {
    let h = mix64(
        seed.wrapping_add(0x9e37_79b9_7f4a_7c15)
            ^ mix64((x as u64).wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
            ^ mix64((y as u64).wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(salt)),
    );
    (h >> 40) as f32 / (1u64 << 24) as f32
}

/// Smooth value noise on a lattice of `scale` cells.
fn value_noise(seed: u64, x: i64, y: i64, scale: f32) -> f32 {
    let fx = (x as f32 + 0.5) / scale;
    let fy = (y as f32 + 0.5) / scale;
    let (x0, y0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - x0, fy - y0);
    let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let v00 = hash01(seed, ix, iy, 1);
    let v10 = hash01(seed, ix + 1, iy, 1);
    let v01 = hash01(seed, ix, iy + 1, 1);
    let v11 = hash01(seed, ix + 1, iy + 1, 1);
    let top = v00 + (v10 - v00) * sx;
    let bottom = v01 + (v11 - v01) * sx;
    top + (bottom - top) * sy
}

fn lerp3(a: [f32; 3], b: [f32; 3], t: f32) -> [f32; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

impl TextureSpec {
    /// RGB value in [0, 1] at integer cell `(x, y)`.
    pub fn sample(&self, x: i64, y: i64) -> [f32; 3] {
        let p = &self.params;
        let scale = p.scale.max(1.0);
        let base = match self.kind {
            TextureKind::Speckle => {
                if hash01(self.seed, x, y, 7) < p.density {
                    p.secondary
                } else {
                    p.primary
                }
            }
            TextureKind::Stripes => {
                let (s, c) = p.angle.sin_cos();
                let phase = (x as f32 * c + y as f32 * s) / scale;
                if phase - phase.floor() < p.density {
                    p.secondary
                } else {
                    p.primary
                }
            }
            TextureKind::Checker => {
                let cx = (x as f32 / scale).floor() as i64;
                let cy = (y as f32 / scale).floor() as i64;
                if (cx + cy).rem_euclid(2) == 1 {
                    p.secondary
                } else {
                    p.primary
                }
            }
            TextureKind::Blotch => {
                if value_noise(self.seed, x, y, scale) < p.density {
                    p.secondary
                } else {
                    p.primary
                }
            }
            TextureKind::GradientNoise => lerp3(p.primary, p.secondary, value_noise(self.seed, x, y, scale)),
        };
        let j = (hash01(self.seed, x, y, 13) - 0.5) * 2.0 * p.jitter;
        base.map(|v| (v + j).clamp(0.0, 1.0))
    }

    /// Mean absolute per-channel difference over a `size`×`size` patch
    /// rendered at the same cell coordinates.
    pub fn patch_distance(&self, other: &TextureSpec, size: usize) -> f32 {
        let mut acc = 0.0f64;
        for y in 0..size as i64 {
            for x in 0..size as i64 {
                let (a, b) = (self.sample(x, y), other.sample(x, y));
                acc += (0..3).map(|c| (a[c] - b[c]).abs() as f64).sum::<f64>();
            }
        }
        (acc / (size * size * 3) as f64) as f32
    }
}

/// Minimum separability between any two textures of a library.
pub const MIN_SEPARATION: f32 = 0.05;

/// A validated, separable set of textures split into base and synthetic
/// families.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureLibrary {
    textures: Vec<TextureSpec>,
}

impl TextureLibrary {
    pub fn new(textures: Vec<TextureSpec>) -> Result<Self, WorldError> {
        for (i, a) in textures.iter().enumerate() {
            for b in &textures[i + 1..] {
                if a.id == b.id {
                    return Err(WorldError::Texture(format!("duplicate texture id {}", a.id)));
                }
                let d = a.patch_distance(b, 16);
                if d < MIN_SEPARATION {
                    return Err(WorldError::Texture(format!(
                        "textures {} and {} differ by only {d:.4}",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(Self { textures })
    }

    /// Five base terrains and fourteen synthetic replacements.
    pub fn standard() -> Self {
        use TextureFamily::*;
        use TextureKind::*;
        let spec = |id: &str, family, kind, primary, secondary, scale, angle, density, jitter, seed| TextureSpec {
            id: TextureId(id.to_string()),
            family,
            kind,
            params: TextureParams {
                primary,
                secondary,
                scale,
                angle,
                density,
                jitter,
            },
            seed,
        };
        let textures = vec![
            // Base terrains, most to least preferred under the canonical ordering.
            spec("base-0", Base, Speckle, [0.62, 0.62, 0.60], [0.50, 0.50, 0.52], 1.0, 0.0, 0.3, 0.03, 101),
            spec("base-1", Base, Speckle, [0.72, 0.60, 0.44], [0.52, 0.42, 0.32], 1.0, 0.0, 0.5, 0.04, 102),
            spec("base-2", Base, Blotch, [0.26, 0.56, 0.20], [0.36, 0.68, 0.26], 4.0, 0.0, 0.5, 0.03, 103),
            spec("base-3", Base, GradientNoise, [0.90, 0.90, 0.92], [0.68, 0.68, 0.74], 6.0, 0.0, 0.5, 0.02, 104),
            spec("base-4", Base, Blotch, [0.10, 0.30, 0.10], [0.20, 0.42, 0.14], 3.0, 0.0, 0.5, 0.03, 105),
            spec("syn-0", Synthetic, Stripes, [0.82, 0.22, 0.20], [0.58, 0.10, 0.10], 6.0, 0.3, 0.5, 0.02, 201),
            spec("syn-1", Synthetic, Checker, [0.22, 0.32, 0.82], [0.10, 0.16, 0.52], 4.0, 0.0, 0.5, 0.02, 202),
            spec("syn-2", Synthetic, Speckle, [0.56, 0.26, 0.66], [0.34, 0.14, 0.44], 1.0, 0.0, 0.4, 0.03, 203),
            spec("syn-3", Synthetic, Blotch, [0.96, 0.56, 0.16], [0.80, 0.40, 0.08], 4.0, 0.0, 0.5, 0.02, 204),
            spec("syn-4", Synthetic, GradientNoise, [0.20, 0.76, 0.82], [0.08, 0.48, 0.58], 5.0, 0.0, 0.5, 0.02, 205),
            spec("syn-5", Synthetic, Stripes, [0.92, 0.86, 0.20], [0.70, 0.64, 0.10], 5.0, 1.2, 0.5, 0.02, 206),
            spec("syn-6", Synthetic, Checker, [0.46, 0.30, 0.16], [0.30, 0.20, 0.10], 3.0, 0.0, 0.5, 0.02, 207),
            spec("syn-7", Synthetic, Speckle, [0.96, 0.62, 0.76], [0.80, 0.44, 0.60], 1.0, 0.0, 0.4, 0.03, 208),
            spec("syn-8", Synthetic, Blotch, [0.10, 0.46, 0.44], [0.22, 0.62, 0.56], 3.0, 0.0, 0.5, 0.02, 209),
            spec("syn-9", Synthetic, GradientNoise, [0.08, 0.10, 0.36], [0.22, 0.22, 0.52], 6.0, 0.0, 0.5, 0.02, 210),
            spec("syn-10", Synthetic, Stripes, [0.62, 0.92, 0.30], [0.40, 0.70, 0.20], 4.0, 2.0, 0.5, 0.02, 211),
            spec("syn-11", Synthetic, Checker, [0.86, 0.20, 0.70], [0.60, 0.10, 0.50], 5.0, 0.0, 0.5, 0.02, 212),
            spec("syn-12", Synthetic, Speckle, [0.12, 0.12, 0.12], [0.28, 0.28, 0.28], 1.0, 0.0, 0.4, 0.03, 213),
            spec("syn-13", Synthetic, Blotch, [0.96, 0.92, 0.86], [0.82, 0.30, 0.30], 3.0, 0.0, 0.4, 0.02, 214),
        ];
        Self::new(textures).expect("standard library is separable")
    }

    pub fn all(&self) -> &[TextureSpec] {
        &self.textures
    }

    pub fn family(&self, family: TextureFamily) -> Vec<&TextureSpec> {
        self.textures.iter().filter(|t| t.family == family).collect()
    }

    pub fn base(&self) -> Vec<&TextureSpec> {
        self.family(TextureFamily::Base)
    }

    pub fn synthetic(&self) -> Vec<&TextureSpec> {
        self.family(TextureFamily::Synthetic)
    }

    pub fn get(&self, id: &str) -> Option<&TextureSpec> {
        self.textures.iter().find(|t| t.id.0 == id)
    }
}
