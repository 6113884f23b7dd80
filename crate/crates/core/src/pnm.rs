//! 8-bit grayscale image files (binary PGM, or PNG by extension).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

fn format_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(e) => Error::Io(e),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Reads a grayscale image; other color types are converted to luma.
pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<Signal<T>> {
    let path = path.as_ref();
    let img = ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| format_error(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Signal::new(
        h as usize,
        w as usize,
        img.into_raw()
            .into_iter()
            .map(|v| T::of(f64::from(v)))
            .collect(),
    )
}

/// Rounds to the nearest integer and clamps to `[0, 255]`.
pub fn quantize_u8<T: Real>(x: &Signal<T>) -> Vec<u8> {
    x.as_slice()
        .iter()
        .map(|v| v.to_f64_lossy().round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Binary PGM (P5, maxval 255) bytes of the quantized signal.
pub fn encode_pgm<T: Real>(x: &Signal<T>) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    PnmEncoder::new(&mut bytes)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            &quantize_u8(x),
            x.width() as u32,
            x.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(bytes)
}

/// Writes PNG when the extension is `.png`, binary PGM otherwise.
pub fn write_image<T: Real>(path: impl AsRef<Path>, x: &Signal<T>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        image::save_buffer_with_format(
            path,
            &quantize_u8(x),
            x.width() as u32,
            x.height() as u32,
            ExtendedColorType::L8,
            ImageFormat::Png,
        )
        .map_err(|e| format_error(path, e))
    } else {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&encode_pgm(x)?)?;
        out.flush()?;
        Ok(())
    }
}
