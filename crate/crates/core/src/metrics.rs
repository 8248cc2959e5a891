//! HSV statistics and full-reference fidelity metrics for image pairs.
//!
//! Everything here works on display-referred samples in `[0, 1]`: encoded
//! images are divided by their maximum code value, float rasters must already
//! be in range.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::color::{EncodedImage, LinearImage};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 64;
pub const SSIM_WINDOW: usize = 8;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// A raster that can be read as RGB samples in `[0, 1]`.
pub trait UnitRaster {
    fn dimensions(&self) -> (usize, usize);
    fn unit_samples(&self) -> Result<Vec<f64>>;
}

impl UnitRaster for EncodedImage {
    fn dimensions(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn unit_samples(&self) -> Result<Vec<f64>> {
        Ok(self.normalized())
    }
}

impl UnitRaster for LinearImage {
    fn dimensions(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn unit_samples(&self) -> Result<Vec<f64>> {
        if let Some(v) = self.data().iter().find(|&&v| v > 1.0) {
            return Err(Error::param(format!("sample {v} outside [0, 1]")));
        }
        Ok(self.data().iter().map(|&v| f64::from(v)).collect())
    }
}

fn same_dimensions(a: &impl UnitRaster, b: &impl UnitRaster) -> Result<()> {
    let ((aw, ah), (bw, bh)) = (a.dimensions(), b.dimensions());
    if (aw, ah) != (bw, bh) {
        return Err(Error::DimensionMismatch {
            left_width: aw,
            left_height: ah,
            right_width: bw,
            right_height: bh,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    /// Degrees in `[0, 360)`; 0 when saturation is 0.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB to HSV conversion.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> Result<Hsv> {
    if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::param(format!("RGB {rgb:?} outside [0, 1]")));
    }
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else {
        let sector = if max == r {
            ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        };
        let h = 60.0 * sector;
        if h >= 360.0 {
            h - 360.0
        } else {
            h
        }
    };
    Ok(Hsv { h, s, v: max })
}

/// Per-pixel hue, saturation and value planes.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvPlanes {
    pub width: usize,
    pub height: usize,
    pub hue: Vec<f64>,
    pub sat: Vec<f64>,
    pub val: Vec<f64>,
}

impl HsvPlanes {
    pub fn from_image(img: &impl UnitRaster) -> Result<Self> {
        let (width, height) = img.dimensions();
        let samples = img.unit_samples()?;
        let n = width * height;
        let (mut hue, mut sat, mut val) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for px in samples.chunks_exact(3) {
            let hsv = rgb_to_hsv([px[0], px[1], px[2]])?;
            hue.push(hsv.h);
            sat.push(hsv.s);
            val.push(hsv.v);
        }
        Ok(Self {
            width,
            height,
            hue,
            sat,
            val,
        })
    }
}

/// Uniform bins over `[lo, hi]`; values at `hi` (and beyond) land in the last bin.
pub fn histogram(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Vec<u64>> {
    if bins == 0 {
        return Err(Error::param("histogram needs at least one bin"));
    }
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::param(format!("empty histogram domain [{lo}, {hi}]")));
    }
    let mut counts = vec![0u64; bins];
    let scale = bins as f64 / (hi - lo);
    for &x in samples {
        let bin = ((x - lo) * scale).floor();
        let bin = if bin <= 0.0 { 0 } else { (bin as usize).min(bins - 1) };
        counts[bin] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsvHistogram {
    pub bins: usize,
    pub hue_counts: Vec<u64>,
    pub sat_counts: Vec<u64>,
    pub val_counts: Vec<u64>,
}

impl HsvHistogram {
    pub fn from_planes(planes: &HsvPlanes, bins: usize) -> Result<Self> {
        Ok(Self {
            bins,
            hue_counts: histogram(&planes.hue, bins, 0.0, 360.0)?,
            sat_counts: histogram(&planes.sat, bins, 0.0, 1.0)?,
            val_counts: histogram(&planes.val, bins, 0.0, 1.0)?,
        })
    }
}

/// L1 distance between two histograms after normalizing each to unit mass.
pub fn histogram_l1(a: &[u64], b: &[u64]) -> f64 {
    let (ta, tb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if ta == 0.0 || tb == 0.0 {
        return if ta == tb { 0.0 } else { 1.0 };
    }
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / ta - y as f64 / tb).abs())
        .sum()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linearly interpolated percentile, `p` in `[0, 100]`.
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Spread of the value channel between its 1st and 99th percentiles.
pub fn dynamic_range(val: &[f64]) -> f64 {
    percentile(val, 99.0) - percentile(val, 1.0)
}

/// `10 log10(1 / MSE)` over all samples; `+inf` for identical images.
pub fn psnr(a: &impl UnitRaster, b: &impl UnitRaster) -> Result<f64> {
    same_dimensions(a, b)?;
    let (xa, xb) = (a.unit_samples()?, b.unit_samples()?);
    let mse = xa.iter().zip(&xb).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / xa.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn luma(img: &impl UnitRaster) -> Result<Vec<f64>> {
    Ok(img
        .unit_samples()?
        .chunks_exact(3)
        .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
        .collect())
}

/// Summed-area table with a zero row and column in front.
fn integral(width: usize, height: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = width + 1;
    let mut table = vec![0.0; stride * (height + 1)];
    for y in 0..height {
        let mut row = 0.0;
        for x in 0..width {
            row += f(y * width + x);
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    table
}

/// Mean SSIM of Rec. 709 luma over every 8x8 window (stride 1, uniform weights).
pub fn ssim(a: &impl UnitRaster, b: &impl UnitRaster) -> Result<f64> {
    same_dimensions(a, b)?;
    let (width, height) = a.dimensions();
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(Error::param(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {width}x{height}"
        )));
    }
    let (x, y) = (luma(a)?, luma(b)?);
    let sx = integral(width, height, |i| x[i]);
    let sy = integral(width, height, |i| y[i]);
    let sxx = integral(width, height, |i| x[i] * x[i]);
    let syy = integral(width, height, |i| y[i] * y[i]);
    let sxy = integral(width, height, |i| x[i] * y[i]);
    let stride = width + 1;
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let window_sum = |t: &[f64], top: usize, left: usize| {
        let (bottom, right) = (top + SSIM_WINDOW, left + SSIM_WINDOW);
        t[bottom * stride + right] - t[top * stride + right] - t[bottom * stride + left] + t[top * stride + left]
    };
    let mut total = 0.0;
    let mut windows = 0usize;
    for top in 0..=height - SSIM_WINDOW {
        for left in 0..=width - SSIM_WINDOW {
            let mx = window_sum(&sx, top, left) / n;
            let my = window_sum(&sy, top, left) / n;
            let vx = window_sum(&sxx, top, left) / n - mx * mx;
            let vy = window_sum(&syy, top, left) / n - my * my;
            let cov = window_sum(&sxy, top, left) / n - mx * my;
            let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

fn serialize_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// Display form of a PSNR value, `inf` for the identical-image sentinel.
pub fn format_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

/// Statistics comparing an original with its filtered counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    /// Mean V (filtered minus original).
    pub mean_value_delta: f64,
    pub mean_sat_delta: f64,
    /// In `[0, 2]`.
    pub hue_histogram_l1: f64,
    pub sat_histogram_l1: f64,
    /// p99 - p1 of V.
    pub dynamic_range_original: f64,
    pub dynamic_range_filtered: f64,
    #[serde(serialize_with = "serialize_psnr")]
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAnalysis {
    pub report: PairReport,
    pub original_histogram: HsvHistogram,
    pub filtered_histogram: HsvHistogram,
}

pub fn analyze_pair(original: &impl UnitRaster, filtered: &impl UnitRaster, bins: usize) -> Result<PairAnalysis> {
    same_dimensions(original, filtered)?;
    let po = HsvPlanes::from_image(original)?;
    let pf = HsvPlanes::from_image(filtered)?;
    let ho = HsvHistogram::from_planes(&po, bins)?;
    let hf = HsvHistogram::from_planes(&pf, bins)?;
    let report = PairReport {
        mean_value_delta: mean(&pf.val) - mean(&po.val),
        mean_sat_delta: mean(&pf.sat) - mean(&po.sat),
        hue_histogram_l1: histogram_l1(&ho.hue_counts, &hf.hue_counts),
        sat_histogram_l1: histogram_l1(&ho.sat_counts, &hf.sat_counts),
        dynamic_range_original: dynamic_range(&po.val),
        dynamic_range_filtered: dynamic_range(&pf.val),
        psnr_db: psnr(original, filtered)?,
        ssim: ssim(original, filtered)?,
    };
    Ok(PairAnalysis {
        report,
        original_histogram: ho,
        filtered_histogram: hf,
    })
}

pub fn pair_report(original: &impl UnitRaster, filtered: &impl UnitRaster) -> Result<PairReport> {
    Ok(analyze_pair(original, filtered, DEFAULT_BINS)?.report)
}

/// One analyzed pair with the (relative) paths it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub original: String,
    pub filtered: String,
    #[serde(flatten)]
    pub analysis: PairAnalysis,
}

pub fn write_pair_json(path: &Path, record: &PairRecord) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, record)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub const CSV_HEADER: [&str; 10] = [
    "original",
    "filtered",
    "mean_value_delta",
    "mean_sat_delta",
    "hue_histogram_l1",
    "sat_histogram_l1",
    "dynamic_range_original",
    "dynamic_range_filtered",
    "psnr_db",
    "ssim",
];

pub fn write_summary_csv(path: &Path, records: &[PairRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        let r = &rec.analysis.report;
        w.write_record([
            rec.original.clone(),
            rec.filtered.clone(),
            r.mean_value_delta.to_string(),
            r.mean_sat_delta.to_string(),
            r.hue_histogram_l1.to_string(),
            r.sat_histogram_l1.to_string(),
            r.dynamic_range_original.to_string(),
            r.dynamic_range_filtered.to_string(),
            format_psnr(r.psnr_db),
            r.ssim.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
