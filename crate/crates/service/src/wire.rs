use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use pacer::data::{Patch, PreferenceContext};
use pacer::world::{decode_rgb_png, encode_rgb_png};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("expected {expected} pairs, got {got}")]
    PairCount { expected: usize, got: usize },
    #[error("pair {pair} {side}: {reason}")]
    Patch { pair: usize, side: &'static str, reason: String },
}

/// One preference pair as base64 PNGs, preferred first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairWire {
    pub preferred: String,
    pub dispreferred: String,
}

/// JSON form of a preference context. Also the `ctx.json` format of the CLI.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWire {
    pub pairs: Vec<PairWire>,
}

pub fn encode_patch(p: &Patch) -> String {
    STANDARD.encode(encode_rgb_png(p.size, p.size, &p.pixels))
}

fn decode_patch(text: &str, size: usize, pair: usize, side: &'static str) -> Result<Patch, WireError> {
    let err = |reason: String| WireError::Patch { pair, side, reason };
    let bytes = STANDARD.decode(text.trim()).map_err(|e| err(format!("base64: {e}")))?;
    let (w, h, pixels) = decode_rgb_png(&bytes).map_err(|e| err(e.to_string()))?;
    if (w, h) != (size, size) {
        return Err(err(format!("{w}×{h} image, expected {size}×{size}")));
    }
    Ok(Patch {
        size,
        pixels,
        source_label: None,
        origin: None,
    })
}

impl ContextWire {
    pub fn encode(ctx: &PreferenceContext) -> Self {
        Self {
            pairs: ctx
                .pairs
                .iter()
                .map(|(a, b)| PairWire {
                    preferred: encode_patch(a),
                    dispreferred: encode_patch(b),
                })
                .collect(),
        }
    }

    /// Exactly `n` pairs of `patch_size`² RGB PNGs.
    pub fn decode(&self, n: usize, patch_size: usize) -> Result<PreferenceContext, WireError> {
        if self.pairs.len() != n {
            return Err(WireError::PairCount {
                expected: n,
                got: self.pairs.len(),
            });
        }
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                Ok((
                    decode_patch(&p.preferred, patch_size, k, "preferred")?,
                    decode_patch(&p.dispreferred, patch_size, k, "dispreferred")?,
                ))
            })
            .collect::<Result<Vec<_>, WireError>>()?;
        Ok(PreferenceContext::new(pairs).expect("patches checked above"))
    }
}
