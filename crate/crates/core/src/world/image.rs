use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout: {0}")]
    Layout(String),
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode(width: usize, height: usize, color: png::ColorType, bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(bytes).expect("in-memory png data");
    }
    out
}

/// 8-bit RGB PNG from HWC floats in [0, 1].
pub fn encode_rgb_png(width: usize, height: usize, hwc: &[f32]) -> Vec<u8> {
    assert_eq!(hwc.len(), width * height * 3);
    let bytes: Vec<u8> = hwc.iter().map(|&v| to_u8(v)).collect();
    encode(width, height, png::ColorType::Rgb, &bytes)
}

/// 8-bit grayscale PNG; each pixel is `round(255 · v)`.
pub fn encode_gray_png(width: usize, height: usize, values: &[f32]) -> Vec<u8> {
    assert_eq!(values.len(), width * height);
    let bytes: Vec<u8> = values.iter().map(|&v| to_u8(v)).collect();
    encode(width, height, png::ColorType::Grayscale, &bytes)
}

/// Decodes an 8-bit RGB or RGBA PNG to `(width, height, hwc)` in [0, 1].
pub fn decode_rgb_png(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>), ImageError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::Layout("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::Layout(format!("bit depth {:?}", info.bit_depth)));
    }
    let stride = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => return Err(ImageError::Layout(format!("color type {other:?}"))),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut out = Vec::with_capacity(w * h * 3);
    for row in 0..h {
        let line = &buf[row * info.line_size..row * info.line_size + w * stride];
        for px in line.chunks_exact(stride) {
            out.extend(px[..3].iter().map(|&b| b as f32 / 255.0));
        }
    }
    Ok((w, h, out))
}
