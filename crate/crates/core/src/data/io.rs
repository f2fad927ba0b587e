use super::{DataConfig, DataError, Phase, PreferenceContext, Provenance, TargetCostmap, TrainingExample};
use crate::nn::records::{read_records, read_u32, write_records};
use crate::nn::Tensor;
use crate::world::BevImage;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const RECORD_MAGIC: &[u8; 4] = b"PACX";
pub const RECORD_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub anchor: [i64; 2],
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub phase: Phase,
    pub seed: u64,
    pub config: DataConfig,
    pub examples: Vec<ManifestEntry>,
}

pub fn encode_example<W: Write>(w: &mut W, ex: &TrainingExample) -> Result<(), DataError> {
    let (h, wd) = (ex.image.height, ex.image.width);
    let context = ex.context.pack();
    let image = Tensor::new(vec![3, h, wd], ex.image.to_chw())?;
    let valid = Tensor::new(vec![h, wd], ex.image.valid.iter().map(|&v| v as u8 as f32).collect())?;
    let target = Tensor::new(vec![ex.target.height, ex.target.width], ex.target.values.clone())?;
    let mask = Tensor::new(
        vec![ex.target.height, ex.target.width],
        ex.target.mask.iter().map(|&m| m as u8 as f32).collect(),
    )?;
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&RECORD_VERSION.to_le_bytes())?;
    w.write_all(&5u32.to_le_bytes())?;
    write_records(
        w,
        &[
            ("context", &context),
            ("image", &image),
            ("valid", &valid),
            ("target", &target),
            ("mask", &mask),
        ],
    )?;
    Ok(())
}

pub fn decode_example<R: Read>(r: &mut R, entry: &ManifestEntry) -> Result<TrainingExample, DataError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RECORD_MAGIC {
        return Err(DataError::Format("bad record magic".into()));
    }
    let version = read_u32(r)?;
    if version != RECORD_VERSION {
        return Err(DataError::Format(format!("record version {version}")));
    }
    let count = read_u32(r)? as usize;
    let mut named = read_records(r, count)?;
    let mut take = |name: &str| {
        named
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| named.swap_remove(i).1)
            .ok_or_else(|| DataError::Format(format!("record lacks tensor {name:?}")))
    };
    let (context, image, valid, target, mask) =
        (take("context")?, take("image")?, take("valid")?, take("target")?, take("mask")?);
    let mut context = PreferenceContext::unpack(&context)?;
    for ((a, b), &(la, lb)) in context.pairs.iter_mut().zip(&entry.provenance.pair_labels) {
        a.source_label = (la != u8::MAX).then_some(la);
        b.source_label = (lb != u8::MAX).then_some(lb);
    }
    let (h, w) = match image.shape() {
        &[3, h, w] => (h, w),
        s => return Err(DataError::Format(format!("image shape {s:?}"))),
    };
    if valid.shape() != [h, w] || target.shape() != [h, w] || mask.shape() != [h, w] {
        return Err(DataError::Format("image, valid, target and mask disagree in shape".into()));
    }
    let plane = h * w;
    let mut bev = BevImage::blank(h, w);
    bev.anchor = entry.anchor;
    for p in 0..plane {
        for c in 0..3 {
            bev.pixels[p * 3 + c] = image.data()[c * plane + p];
        }
        bev.valid[p] = valid.data()[p] != 0.0;
    }
    Ok(TrainingExample {
        context,
        image: bev,
        target: TargetCostmap {
            height: h,
            width: w,
            values: target.into_data(),
            mask: mask.data().iter().map(|&m| m != 0.0).collect(),
        },
        provenance: entry.provenance.clone(),
    })
}

/// Writes `manifest.json` and one `.pacx` record per example.
pub fn save_dataset(
    dir: &Path,
    phase: Phase,
    seed: u64,
    config: &DataConfig,
    examples: &[TrainingExample],
) -> Result<Manifest, DataError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let file = format!("ex_{i:06}.pacx");
        let mut w = BufWriter::new(fs::File::create(dir.join(&file))?);
        encode_example(&mut w, ex)?;
        w.flush()?;
        entries.push(ManifestEntry {
            file,
            anchor: ex.image.anchor,
            provenance: ex.provenance.clone(),
        });
    }
    let manifest = Manifest {
        version: RECORD_VERSION,
        phase,
        seed,
        config: config.clone(),
        examples: entries,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<(Manifest, Vec<TrainingExample>), DataError> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
    let examples = manifest
        .examples
        .iter()
        .map(|e| decode_example(&mut BufReader::new(fs::File::open(dir.join(&e.file))?), e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, examples))
}
