//! PNG reading and writing for grayscale images and label maps.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::compose::LabelMap;
use crate::error::{Error, Result};
use crate::grid::{Grid, Image};

/// Palette for label PNGs: background black, catheter white, text grey.
const LABEL_PALETTE: [u8; 9] = [0, 0, 0, 255, 255, 255, 128, 128, 128];

fn decode_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn encode_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn open_reader(path: &Path, transform: Transformations) -> Result<png::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(transform);
    decoder.read_info().map_err(|e| decode_err(path, e))
}

/// Reads a PNG as grayscale in `[0, 1]`.
///
/// 8-bit samples are divided by 255 and 16-bit samples by 65535. Colour
/// images are reduced to Rec. 601 luma; alpha is ignored.
pub fn read_gray(path: &Path) -> Result<Image> {
    let mut reader = open_reader(path, Transformations::EXPAND)?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| decode_err(path, "image too large"))?
    ];
    let info = reader.next_frame(&mut buf).map_err(|e| decode_err(path, e))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => return Err(decode_err(path, "palette was not expanded")),
    };
    let (bytes, scale) = match info.bit_depth {
        BitDepth::Sixteen => (2, 65535.0),
        BitDepth::Eight => (1, 255.0),
        d => return Err(decode_err(path, format!("unexpected bit depth {d:?} after expansion"))),
    };
    let sample = |i: usize| -> f64 {
        let v = if bytes == 2 {
            u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as f64
        } else {
            buf[i] as f64
        };
        v / scale
    };
    let stride = info.line_size / bytes;
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let i = y * stride + x * channels;
            if channels >= 3 {
                0.299 * sample(i) + 0.587 * sample(i + 1) + 0.114 * sample(i + 2)
            } else {
                sample(i)
            }
        })
        .collect();
    Grid::from_vec(w, h, data)
}

/// Quantizes `[0, 1]` to 8 bits with rounding; out-of-range values clamp.
pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_u16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    palette: Option<&[u8]>,
    data: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    if let Some(p) = palette {
        enc.set_palette(p.to_vec());
    }
    let mut writer = enc.write_header().map_err(|e| encode_err(path, e))?;
    writer.write_image_data(data).map_err(|e| encode_err(path, e))?;
    writer.finish().map_err(|e| encode_err(path, e))
}

/// Writes an 8-bit grayscale PNG.
pub fn write_gray8(path: &Path, image: &Image) -> Result<()> {
    let data: Vec<u8> = image.iter().map(|&v| to_u8(v)).collect();
    write_png(
        path,
        image.width(),
        image.height(),
        ColorType::Grayscale,
        BitDepth::Eight,
        None,
        &data,
    )
}

/// Writes a 16-bit grayscale PNG.
pub fn write_gray16(path: &Path, image: &Image) -> Result<()> {
    let data: Vec<u8> = image.iter().flat_map(|&v| to_u16(v).to_be_bytes()).collect();
    write_png(
        path,
        image.width(),
        image.height(),
        ColorType::Grayscale,
        BitDepth::Sixteen,
        None,
        &data,
    )
}

/// Writes class ids as an 8-bit indexed PNG whose palette has one entry per class.
pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    write_png(
        path,
        labels.width(),
        labels.height(),
        ColorType::Indexed,
        BitDepth::Eight,
        Some(&LABEL_PALETTE),
        labels.as_slice(),
    )
}

/// Reads a label map from an indexed or grayscale PNG of raw class ids.
///
/// Any value outside `{0, 1, 2}` is rejected.
pub fn read_labels(path: &Path) -> Result<LabelMap> {
    let mut reader = open_reader(path, Transformations::IDENTITY)?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| decode_err(path, "image too large"))?
    ];
    let info = reader.next_frame(&mut buf).map_err(|e| decode_err(path, e))?;
    if !matches!(info.color_type, ColorType::Indexed | ColorType::Grayscale) {
        return Err(decode_err(
            path,
            format!("label PNG must be indexed or gray, got {:?}", info.color_type),
        ));
    }
    let bits = match info.bit_depth {
        BitDepth::One => 1,
        BitDepth::Two => 2,
        BitDepth::Four => 4,
        BitDepth::Eight => 8,
        BitDepth::Sixteen => return Err(decode_err(path, "16-bit label maps are not supported")),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..(y + 1) * info.line_size];
        for x in 0..w {
            let bit = x * bits;
            let byte = row[bit / 8];
            let v = (byte >> (8 - bits - bit % 8)) & ((1u16 << bits) - 1) as u8;
            if v > 2 {
                return Err(decode_err(path, format!("class id {v} at ({x}, {y})")));
            }
            data.push(v);
        }
    }
    Grid::from_vec(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray8_round_trip_is_exact_on_quantized_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Grid::from_fn(7, 5, |x, y| ((x * 5 + y * 11) % 256) as f64 / 255.0);
        write_gray8(&p, &img).unwrap();
        assert_eq!(read_gray(&p).unwrap(), img);
    }

    #[test]
    fn gray16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = Grid::from_fn(4, 3, |x, y| (x * 1000 + y * 17) as f64 / 65535.0);
        write_gray16(&p, &img).unwrap();
        assert_eq!(read_gray(&p).unwrap(), img);
    }

    #[test]
    fn labels_round_trip_and_reject_unknown_ids() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.png");
        let labels = Grid::from_fn(9, 4, |x, y| ((x + y) % 3) as u8);
        write_labels(&p, &labels).unwrap();
        assert_eq!(read_labels(&p).unwrap(), labels);

        let bad = Grid::from_fn(2, 2, |x, _| if x == 1 { 7.0 / 255.0 } else { 0.0 });
        write_gray8(&p, &bad).unwrap();
        assert!(read_labels(&p).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = read_gray(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
