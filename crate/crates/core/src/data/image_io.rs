use std::io::BufReader;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::volume::Image;

/// Reads an 8-bit PNG as a `[channels, n, n]` image with values in `[0, 1]`.
///
/// `channels` is 1 or 3. For 1, the alpha channel is the image when
/// present (a coverage mask), otherwise the gray value or the luma of RGB.
/// For 3, colors are composited onto white using alpha; gray is replicated.
/// When `resolution` is given, the image is resized to it by area averaging.
/// The first PNG row becomes the top image row (largest `y`).
pub fn load_image(path: &Path, channels: usize, resolution: Option<usize>) -> Result<Image<f32>> {
    if channels != 1 && channels != 3 {
        return Err(Error::Value(format!("images have 1 or 3 channels, not {channels}")));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| decode_error(path, e))?;
    let (color, depth) = reader.output_color_type();
    if depth != BitDepth::Eight {
        return Err(Error::format(path, format!("unsupported bit depth {depth:?}; expected 8")));
    }
    let stride = match color {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => return Err(Error::format(path, "palette images are not supported")),
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| decode_error(path, e))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let line = info.line_size;

    let mut planes = vec![vec![0f32; w * h]; channels];
    for row in 0..h {
        for col in 0..w {
            let px = &buf[row * line + col * stride..][..stride];
            let f = |i: usize| px[i] as f32 / 255.0;
            let (rgb, alpha) = match stride {
                1 => ([f(0); 3], None),
                2 => ([f(0); 3], Some(f(1))),
                3 => ([f(0), f(1), f(2)], None),
                _ => ([f(0), f(1), f(2)], Some(f(3))),
            };
            let y = h - 1 - row;
            if channels == 1 {
                planes[0][y * w + col] = match alpha {
                    Some(a) => a,
                    None if stride == 1 => rgb[0],
                    None => 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2],
                };
            } else {
                let a = alpha.unwrap_or(1.0);
                for c in 0..3 {
                    planes[c][y * w + col] = a * rgb[c] + (1.0 - a);
                }
            }
        }
    }
    let (tw, th) = match resolution {
        Some(n) => (n, n),
        None if w == h => (w, h),
        None => return Err(Error::format(path, format!("image is {w}x{h}; give a resolution to resize"))),
    };
    if tw == 0 {
        return Err(Error::Value("resolution must be positive".into()));
    }
    let mut data = Vec::with_capacity(channels * tw * th);
    for plane in &planes {
        data.extend(resize_area(plane, w, h, tw, th));
    }
    Image::new(channels, tw, data)
}

fn decode_error(path: &Path, e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    }
}

/// Box-filter resize of a row-major `w x h` plane: every output pixel is
/// the area-weighted mean of the input pixels it covers.
pub fn resize_area(src: &[f32], w: usize, h: usize, tw: usize, th: usize) -> Vec<f32> {
    assert_eq!(src.len(), w * h);
    if (w, h) == (tw, th) {
        return src.to_vec();
    }
    let rows = area_weights(h, th);
    let cols = area_weights(w, tw);
    let mut tmp = vec![0f64; h * tw];
    for y in 0..h {
        for (x, taps) in cols.iter().enumerate() {
            tmp[y * tw + x] = taps.iter().map(|&(i, wt)| wt * src[y * w + i] as f64).sum();
        }
    }
    let mut out = vec![0f32; th * tw];
    for (y, taps) in rows.iter().enumerate() {
        for x in 0..tw {
            out[y * tw + x] = taps.iter().map(|&(i, wt)| wt * tmp[i * tw + x]).sum::<f64>() as f32;
        }
    }
    out
}

/// For each of `m` output cells, the overlapping input cells of an
/// `n`-cell axis with weights summing to one.
fn area_weights(n: usize, m: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n as f64 / m as f64;
    (0..m)
        .map(|j| {
            let (lo, hi) = (j as f64 * scale, (j + 1) as f64 * scale);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Writes a 1-channel image as 8-bit gray or a 3-channel image as 8-bit
/// RGB, clamping to `[0, 1]`.
pub fn save_image(image: &Image<f32>, path: &Path) -> Result<()> {
    let (c, n) = (image.channels(), image.resolution());
    let color = match c {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        _ => return Err(Error::Shape(format!("cannot write a {c}-channel image as PNG"))),
    };
    let mut bytes = Vec::with_capacity(c * n * n);
    for row in 0..n {
        let y = n - 1 - row;
        for x in 0..n {
            for ch in 0..c {
                bytes.push((image.get(ch, y, x).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), n as u32, n as u32);
    enc.set_color(color);
    enc.set_depth(BitDepth::Eight);
    let to_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    };
    let mut writer = enc.write_header().map_err(to_err)?;
    writer.write_image_data(&bytes).map_err(to_err)?;
    writer.finish().map_err(to_err)
}
