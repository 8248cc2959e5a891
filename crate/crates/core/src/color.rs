//! Display-referred and scene-referred rasters and the transfers between them.
//!
//! Encoded images carry integer code values as read from or written to disk.
//! Linear images carry light-proportional samples in `[0, +inf)`; every
//! diffusion operation runs on them. Decoding goes through the piecewise sRGB
//! EOTF by default, with a pure power-law alternative.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per pixel. Both raster types are interleaved RGB.
pub const CHANNELS: usize = 3;

const PAR_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_code(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Structural(format!("empty raster {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(CHANNELS))
        .ok_or_else(|| Error::Structural(format!("raster {width}x{height} overflows")))?;
    if len != expected {
        return Err(Error::Structural(format!(
            "{width}x{height} RGB raster needs {expected} samples, got {len}"
        )));
    }
    Ok(())
}

/// Gamma-encoded integer RGB raster, row-major and interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    width: usize,
    height: usize,
    bit_depth: BitDepth,
    data: Vec<u16>,
}

impl EncodedImage {
    pub fn new(width: usize, height: usize, bit_depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        let max = bit_depth.max_code();
        if let Some(pos) = data.iter().position(|&v| v > max) {
            return Err(Error::Structural(format!(
                "sample {} at index {pos} exceeds {}-bit range",
                data[pos],
                bit_depth.bits()
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: BitDepth,
        mut f: impl FnMut(usize, usize) -> [u16; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, bit_depth, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u16; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Samples rescaled to `[0, 1]` by the maximum code value.
    pub fn normalized(&self) -> Vec<f64> {
        let scale = 1.0 / f64::from(self.bit_depth.max_code());
        self.data.iter().map(|&v| f64::from(v) * scale).collect()
    }
}

/// Scene-referred linear RGB raster. Samples are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_shape(width, height, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Structural(format!(
                "linear sample {} at index {pos} is negative or non-finite",
                data[pos]
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    /// Wraps a buffer produced by an operation that preserves the invariants.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * CHANNELS);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_shape(&self, other: &LinearImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Total energy: the sum of every sample, accumulated in f64.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum()
    }

    pub fn max_sample(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }
}

/// Electro-optical transfer used to linearize code values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Transfer {
    /// Piecewise IEC 61966-2-1 curve.
    #[default]
    Srgb,
    /// Pure power law with the given exponent.
    Gamma(f64),
}

impl Transfer {
    pub fn validate(self) -> Result<()> {
        match self {
            Transfer::Srgb => Ok(()),
            Transfer::Gamma(g) if g.is_finite() && g > 0.0 => Ok(()),
            Transfer::Gamma(g) => Err(Error::param(format!("gamma must be positive, got {g}"))),
        }
    }

    /// Encoded value in `[0, 1]` to linear light.
    pub fn to_linear(self, v: f64) -> f64 {
        match self {
            Transfer::Srgb => srgb_to_linear(v),
            Transfer::Gamma(g) => v.max(0.0).powf(g),
        }
    }

    /// Linear light to an encoded value; input is clamped to `[0, 1]` first.
    pub fn to_encoded(self, l: f64) -> f64 {
        let l = l.clamp(0.0, 1.0);
        match self {
            Transfer::Srgb => linear_to_srgb(l),
            Transfer::Gamma(g) => l.powf(1.0 / g),
        }
    }
}

impl fmt::Display for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transfer::Srgb => f.write_str("srgb"),
            Transfer::Gamma(g) => write!(f, "gamma{g}"),
        }
    }
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(l: f64) -> f64 {
    if l <= 0.003_130_8 {
        l * 12.92
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    }
}

pub fn decode_srgb(img: &EncodedImage) -> LinearImage {
    decode(img, Transfer::Srgb)
}

/// Normalizes code values to `[0, 1]` and linearizes them through `transfer`.
pub fn decode(img: &EncodedImage, transfer: Transfer) -> LinearImage {
    let max = img.bit_depth.max_code();
    let scale = 1.0 / f64::from(max);
    let lut: Vec<f32> = (0..=max)
        .map(|code| transfer.to_linear(f64::from(code) * scale) as f32)
        .collect();
    let data = img
        .data
        .par_chunks(PAR_CHUNK)
        .flat_map_iter(|chunk| chunk.iter().map(|&v| lut[v as usize]))
        .collect();
    LinearImage::from_raw(img.width, img.height, data)
}

pub fn encode_srgb(img: &LinearImage, bit_depth: BitDepth) -> EncodedImage {
    encode(img, Transfer::Srgb, bit_depth)
}

/// Clamps to `[0, 1]`, applies the inverse transfer and rounds to the nearest code.
pub fn encode(img: &LinearImage, transfer: Transfer, bit_depth: BitDepth) -> EncodedImage {
    let max = f64::from(bit_depth.max_code());
    let data = img
        .data
        .par_chunks(PAR_CHUNK)
        .flat_map_iter(|chunk| {
            chunk
                .iter()
                .map(|&l| (transfer.to_encoded(f64::from(l)) * max).round() as u16)
        })
        .collect();
    EncodedImage {
        width: img.width,
        height: img.height,
        bit_depth,
        data,
    }
}

/// Compression of scene-referred values into the display range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToneOperator {
    /// `min(x, 1)`.
    #[default]
    Clamp,
    /// `x / (1 + x)`.
    Reinhard,
}

impl ToneOperator {
    pub fn apply(self, x: f32) -> f32 {
        match self {
            ToneOperator::Clamp => x.min(1.0),
            ToneOperator::Reinhard => x / (1.0 + x),
        }
    }
}

impl fmt::Display for ToneOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToneOperator::Clamp => "clamp",
            ToneOperator::Reinhard => "reinhard",
        })
    }
}

impl FromStr for ToneOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clamp" => Ok(ToneOperator::Clamp),
            "reinhard" => Ok(ToneOperator::Reinhard),
            other => Err(Error::param(format!(
                "unknown tone operator `{other}` (expected clamp or reinhard)"
            ))),
        }
    }
}

pub fn tone_map(img: &LinearImage, op: ToneOperator) -> LinearImage {
    let data = img
        .data
        .par_chunks(PAR_CHUNK)
        .flat_map_iter(|chunk| chunk.iter().map(move |&x| op.apply(x)))
        .collect();
    LinearImage::from_raw(img.width, img.height, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray8(code: u8) -> EncodedImage {
        EncodedImage::new(1, 1, BitDepth::Eight, vec![code as u16; 3]).unwrap()
    }

    #[test]
    fn decode_black_white_and_midpoint() {
        assert_eq!(decode_srgb(&gray8(0)).data()[0], 0.0);
        assert_eq!(decode_srgb(&gray8(255)).data()[0], 1.0);
        // 128/255 through the power segment: ((0.501961 + 0.055) / 1.055)^2.4
        let mid = decode_srgb(&gray8(128)).data()[0];
        assert!((mid - 0.215_860_5).abs() < 1e-6, "{mid}");
    }

    #[test]
    fn encode_endpoints() {
        let img = LinearImage::new(2, 1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(encode_srgb(&img, BitDepth::Eight).data(), &[0, 0, 0, 255, 255, 255]);
        assert_eq!(
            encode_srgb(&img, BitDepth::Sixteen).data(),
            &[0, 0, 0, 65535, 65535, 65535]
        );
    }

    #[test]
    fn encode_clamps_headroom() {
        let img = LinearImage::new(1, 1, vec![4.0, 1.5, 0.0]).unwrap();
        assert_eq!(encode_srgb(&img, BitDepth::Eight).data(), &[255, 255, 0]);
    }

    #[test]
    fn round_trip_all_8bit_codes() {
        let data: Vec<u16> = (0..=255u16).flat_map(|c| [c, 255 - c, c / 2]).collect();
        let img = EncodedImage::new(256, 1, BitDepth::Eight, data).unwrap();
        assert_eq!(encode_srgb(&decode_srgb(&img), BitDepth::Eight), img);
    }

    #[test]
    fn round_trip_all_16bit_codes() {
        let data: Vec<u16> = (0..=u16::MAX).flat_map(|c| [c, c, c]).collect();
        let img = EncodedImage::new(256, 256, BitDepth::Sixteen, data).unwrap();
        assert_eq!(encode_srgb(&decode_srgb(&img), BitDepth::Sixteen), img);
    }

    #[test]
    fn round_trip_pure_gamma() {
        let transfer = Transfer::Gamma(2.2);
        let data: Vec<u16> = (0..=u16::MAX).flat_map(|c| [c, c, c]).collect();
        let img = EncodedImage::new(256, 256, BitDepth::Sixteen, data).unwrap();
        let back = encode(&decode(&img, transfer), transfer, BitDepth::Sixteen);
        assert_eq!(back, img);
    }

    #[test]
    fn decode_is_monotone() {
        let data: Vec<u16> = (0..=u16::MAX).flat_map(|c| [c, c, c]).collect();
        let img = EncodedImage::new(256, 256, BitDepth::Sixteen, data).unwrap();
        let lin = decode_srgb(&img);
        assert!(lin.data().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn tone_map_examples() {
        let img = LinearImage::new(1, 2, vec![0.5, 2.0, 0.0, 1.0, 3.0, 0.0]).unwrap();
        assert_eq!(
            tone_map(&img, ToneOperator::Clamp).data(),
            &[0.5, 1.0, 0.0, 1.0, 1.0, 0.0]
        );
        assert_eq!(
            tone_map(&img, ToneOperator::Reinhard).data(),
            &[0.5 / 1.5, 2.0 / 3.0, 0.0, 0.5, 0.75, 0.0]
        );
    }

    #[test]
    fn rejects_malformed_rasters() {
        assert!(matches!(
            EncodedImage::new(2, 2, BitDepth::Eight, vec![0; 11]),
            Err(Error::Structural(_))
        ));
        assert!(matches!(
            EncodedImage::new(1, 1, BitDepth::Eight, vec![0, 256, 0]),
            Err(Error::Structural(_))
        ));
        assert!(LinearImage::new(1, 1, vec![0.0, -1e-3, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, vec![0.0, f32::NAN, 0.0]).is_err());
        assert!(LinearImage::new(0, 4, vec![]).is_err());
    }

    #[test]
    fn tone_operator_parses() {
        assert_eq!("Reinhard".parse::<ToneOperator>().unwrap(), ToneOperator::Reinhard);
        assert!("aces".parse::<ToneOperator>().is_err());
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(Transfer::Gamma(0.0).validate().is_err());
        assert!(Transfer::Gamma(f64::NAN).validate().is_err());
        assert!(Transfer::Gamma(2.2).validate().is_ok());
    }
}
