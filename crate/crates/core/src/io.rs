//! PNG storage for label maps, masks and color renders.
//!
//! Label maps are single-channel 8-bit images whose pixel value is the class
//! id. They are written as palette images (so viewers show the taxonomy
//! colors) and read back without palette expansion, so both palette and
//! grayscale 8-bit files are accepted. Masks are 8-bit grayscale, any
//! non-zero value meaning "reconstruct".

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use crate::error::{Error, Result};
use crate::labelmap::{InpaintMask, LabelMap};
use crate::taxonomy::ClassTaxonomy;

fn read_single_channel(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|source| Error::PngDecode {
        path: path.into(),
        source,
    })?;
    let (color, depth) = reader.output_color_type();
    if !matches!(color, ColorType::Grayscale | ColorType::Indexed) || depth != BitDepth::Eight {
        return Err(Error::PngLayout {
            path: path.into(),
            detail: format!("expected 8-bit grayscale or indexed, found {color:?} {depth:?}"),
        });
    }
    let size = reader.output_buffer_size().ok_or_else(|| Error::PngLayout {
        path: path.into(),
        detail: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|source| Error::PngDecode {
        path: path.into(),
        source,
    })?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        data.extend_from_slice(&row[..w]);
    }
    Ok((w, h, data))
}

fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: ColorType,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(BitDepth::Eight);
    if let Some(palette) = palette {
        encoder.set_palette(palette);
    }
    let enc_err = |source| Error::PngEncode {
        path: path.into(),
        source,
    };
    let mut writer = encoder.write_header().map_err(enc_err)?;
    writer.write_image_data(data).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

/// Reads a label map; pixel values are returned as-is (taxonomy or raw ids).
pub fn read_label_png(path: impl AsRef<Path>) -> Result<LabelMap> {
    let (w, h, data) = read_single_channel(path.as_ref())?;
    LabelMap::new(w, h, data)
}

/// Writes a label map. With a taxonomy the file carries its palette; ids
/// outside the taxonomy (raw maps) get black entries.
pub fn write_label_png(path: impl AsRef<Path>, m: &LabelMap, tax: Option<&ClassTaxonomy>) -> Result<()> {
    let path = path.as_ref();
    match tax {
        Some(tax) => {
            let max = m.data().iter().copied().max().unwrap_or(0);
            let entries = usize::from(max).max(tax.num_classes() - 1) + 1;
            let mut palette = Vec::with_capacity(entries * 3);
            for id in 0..entries {
                palette.extend_from_slice(&tax.color(id as u8));
            }
            write_png(path, m.width(), m.height(), ColorType::Indexed, Some(palette), m.data())
        }
        None => write_png(path, m.width(), m.height(), ColorType::Grayscale, None, m.data()),
    }
}

pub fn read_mask_png(path: impl AsRef<Path>) -> Result<InpaintMask> {
    let (w, h, data) = read_single_channel(path.as_ref())?;
    InpaintMask::new(w, h, data.into_iter().map(|v| v != 0).collect())
}

pub fn write_mask_png(path: impl AsRef<Path>, mask: &InpaintMask) -> Result<()> {
    let data: Vec<u8> = mask.data().iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_png(
        path.as_ref(),
        mask.width(),
        mask.height(),
        ColorType::Grayscale,
        None,
        &data,
    )
}

/// 24-bit render of a label map with the taxonomy palette.
pub fn write_color_png(path: impl AsRef<Path>, m: &LabelMap, tax: &ClassTaxonomy) -> Result<()> {
    let mut rgb = Vec::with_capacity(m.len() * 3);
    for &l in m.data() {
        rgb.extend_from_slice(&tax.color(l));
    }
    write_rgb_png(path, m.width(), m.height(), &rgb)
}

/// Writes a packed 8-bit RGB buffer.
pub fn write_rgb_png(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    if rgb.len() != width * height * 3 {
        return Err(Error::BufferSize {
            width,
            height,
            len: rgb.len(),
        });
    }
    write_png(path.as_ref(), width, height, ColorType::Rgb, None, rgb)
}
