//! PNG/JPEG ingest and PNG output for encoded rasters.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::color::{BitDepth, EncodedImage};
use crate::error::{Error, Result};

/// File extensions accepted as source images (compared case-insensitively).
pub const SUPPORTED_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

pub fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| SUPPORTED_EXTENSIONS.iter().any(|s| e.eq_ignore_ascii_case(s)))
        .unwrap_or(false)
}

/// Reads an image as RGB. Alpha is dropped; 16-bit sources stay 16-bit.
pub fn read_image(path: &Path) -> Result<EncodedImage> {
    let img = image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    })?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if sixteen {
        let buf = img.to_rgb16();
        EncodedImage::new(width, height, BitDepth::Sixteen, buf.into_raw())
    } else {
        let buf = img.to_rgb8();
        let data = buf.into_raw().into_iter().map(u16::from).collect();
        EncodedImage::new(width, height, BitDepth::Eight, data)
    }
}

pub fn write_png(path: &Path, img: &EncodedImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PngEncoder::new(BufWriter::new(file));
    let (w, h) = (img.width() as u32, img.height() as u32);
    let written = match img.bit_depth() {
        BitDepth::Eight => {
            let bytes: Vec<u8> = img.data().iter().map(|&v| v as u8).collect();
            encoder.write_image(&bytes, w, h, ExtendedColorType::Rgb8)
        }
        BitDepth::Sixteen => {
            // PNG stores 16-bit samples big-endian; the encoder expects native order.
            let bytes: Vec<u8> = img.data().iter().flat_map(|v| v.to_ne_bytes()).collect();
            encoder.write_image(&bytes, w, h, ExtendedColorType::Rgb16)
        }
    };
    written.map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}
