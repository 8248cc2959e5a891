//! Diffusion filter model: configuration, per-layer blur schedule, and the
//! composed emulation pipeline.
//!
//! A configuration (density grade, focal length, layer count) maps to a
//! [`BlurStack`]: octave-spaced Gaussian sigmas scaled by focal length and
//! image width, geometric layer weights whose ratio depends on density, and a
//! blend fraction equal to the density. The stack is applied in linear light
//! as a convex blend of the image with the weighted sum of its blurs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::color::{decode, encode, tone_map, EncodedImage, LinearImage, ToneOperator, Transfer};
use crate::error::{Error, Result};
use crate::gaussian::blur;

/// Focal length at which sigmas are not scaled.
pub const REFERENCE_FOCAL_MM: f64 = 20.0;
pub const DEFAULT_LAYER_COUNT: usize = 6;
pub const DEFAULT_BASE_SIGMA: f64 = 1.0;
pub const DEFAULT_REFERENCE_WIDTH: usize = 1024;

/// Filter grade in `(0, 1]`, e.g. 1/2 or 1/8.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Density(f64);

impl Density {
    pub const HALF: Density = Density(0.5);
    pub const EIGHTH: Density = Density(0.125);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 1.0 {
            Ok(Density(value))
        } else {
            Err(Error::param(format!("density must lie in (0, 1], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `Some(n)` when the density is exactly the grade `1/n`.
    fn reciprocal_grade(self) -> Option<u64> {
        let inv = 1.0 / self.0;
        let n = inv.round();
        ((inv - n).abs() < 1e-9 && n >= 1.0).then_some(n as u64)
    }

    /// Path-safe form: `1-2` for 1/2, `0p3` for 0.3.
    pub fn label(self) -> String {
        match self.reciprocal_grade() {
            Some(n) => format!("1-{n}"),
            None => decimal_label(self.0),
        }
    }
}

fn decimal_label(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reciprocal_grade() {
            Some(1) => f.write_str("1"),
            Some(n) => write!(f, "1/{n}"),
            None => write!(f, "{}", self.0),
        }
    }
}

impl FromStr for Density {
    type Err = Error;

    /// Accepts grade strings (`1/2`, `1-8`) and decimals (`0.25`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param(format!("cannot parse density `{s}`"));
        let value = match s.split_once(['/', '-']) {
            Some((num, den)) => {
                let num: f64 = num.trim().parse().map_err(|_| bad())?;
                let den: f64 = den.trim().parse().map_err(|_| bad())?;
                num / den
            }
            None => s.parse().map_err(|_| bad())?,
        };
        Density::new(value)
    }
}

impl Serialize for Density {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Density {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Density::new(v),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Geometric weight ratio per density. Anchors are matched exactly; other
/// densities interpolate `ln r` linearly in `log2 density` between the two
/// nearest anchors (extrapolating past the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRatios {
    anchors: Vec<(f64, f64)>,
}

impl Default for WeightRatios {
    fn default() -> Self {
        Self {
            anchors: vec![(Density::EIGHTH.0, 0.6), (Density::HALF.0, 1.5)],
        }
    }
}

impl WeightRatios {
    pub fn set(&mut self, density: Density, ratio: f64) -> Result<()> {
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(Error::param(format!(
                "weight ratio for density {density} must be positive, got {ratio}"
            )));
        }
        match self.anchors.iter_mut().find(|(d, _)| (d - density.0).abs() < 1e-12) {
            Some(slot) => slot.1 = ratio,
            None => {
                self.anchors.push((density.0, ratio));
                self.anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
        }
        Ok(())
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn ratio_for(&self, density: Density) -> f64 {
        let d = density.0;
        if let Some(&(_, r)) = self.anchors.iter().find(|(a, _)| (a - d).abs() < 1e-12) {
            return r;
        }
        match self.anchors.as_slice() {
            [] => 1.0,
            [(_, r)] => *r,
            anchors => {
                let upper = anchors
                    .iter()
                    .position(|(a, _)| *a > d)
                    .unwrap_or(anchors.len() - 1)
                    .max(1);
                let (d0, r0) = anchors[upper - 1];
                let (d1, r1) = anchors[upper];
                let t = (d.log2() - d0.log2()) / (d1.log2() - d0.log2());
                (r0.ln() + t * (r1.ln() - r0.ln())).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub density: Density,
    pub focal_mm: f64,
    pub layer_count: usize,
    /// Sigma of the first layer, in pixels at `reference_width`.
    pub base_sigma: f64,
    pub reference_width: usize,
    pub tone_operator: ToneOperator,
    pub transfer: Transfer,
    pub weight_ratios: WeightRatios,
}

impl FilterConfig {
    pub fn new(density: Density, focal_mm: f64) -> Self {
        Self {
            density,
            focal_mm,
            layer_count: DEFAULT_LAYER_COUNT,
            base_sigma: DEFAULT_BASE_SIGMA,
            reference_width: DEFAULT_REFERENCE_WIDTH,
            tone_operator: ToneOperator::default(),
            transfer: Transfer::default(),
            weight_ratios: WeightRatios::default(),
        }
    }

    /// The 2x2 grid {1/8, 1/2} x {20 mm, 50 mm}.
    pub fn default_grid() -> Vec<FilterConfig> {
        [
            (Density::EIGHTH, 20.0),
            (Density::EIGHTH, 50.0),
            (Density::HALF, 20.0),
            (Density::HALF, 50.0),
        ]
        .into_iter()
        .map(|(d, f)| FilterConfig::new(d, f))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.focal_mm.is_finite() || self.focal_mm <= 0.0 {
            return Err(Error::param(format!(
                "focal length must be positive, got {}",
                self.focal_mm
            )));
        }
        if self.layer_count == 0 {
            return Err(Error::param("layer count must be at least 1"));
        }
        if !self.base_sigma.is_finite() || self.base_sigma <= 0.0 {
            return Err(Error::param(format!(
                "base sigma must be positive, got {}",
                self.base_sigma
            )));
        }
        if self.reference_width == 0 {
            return Err(Error::param("reference width must be at least 1"));
        }
        self.transfer.validate()
    }

    /// Canonical directory-safe label, e.g. `d1-2_f20`.
    pub fn label(&self) -> String {
        let focal = if self.focal_mm.fract() == 0.0 {
            format!("{}", self.focal_mm as u64)
        } else {
            decimal_label(self.focal_mm)
        };
        format!("d{}_f{focal}", self.density.label())
    }

    pub fn weight_ratio(&self) -> f64 {
        self.weight_ratios.ratio_for(self.density)
    }
}

/// Parses a setting written either as `1/2@20` or as a label `d1-2_f20`.
pub fn parse_setting(s: &str) -> Result<(Density, f64)> {
    let s = s.trim();
    let bad = || {
        Error::param(format!(
            "cannot parse filter setting `{s}` (expected e.g. 1/2@20 or d1-2_f20)"
        ))
    };
    let (density, focal) = if let Some((d, f)) = s.split_once('@') {
        (d.to_string(), f.trim().trim_end_matches("mm").to_string())
    } else {
        let rest = s.strip_prefix('d').ok_or_else(bad)?;
        let (d, f) = rest.split_once("_f").ok_or_else(bad)?;
        (d.replace('p', "."), f.replace('p', "."))
    };
    let density: Density = density.parse()?;
    let focal: f64 = focal.parse().map_err(|_| bad())?;
    if !focal.is_finite() || focal <= 0.0 {
        return Err(Error::param(format!("focal length must be positive, got {focal}")));
    }
    Ok((density, focal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlurLayer {
    pub sigma: f64,
    pub weight: f64,
}

/// Ordered blur layers plus the fraction of diffused light blended in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlurStack {
    layers: Vec<BlurLayer>,
    alpha: f64,
}

impl BlurStack {
    pub fn new(layers: Vec<BlurLayer>, alpha: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("blur stack needs at least one layer"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        for l in &layers {
            if !l.sigma.is_finite() || l.sigma < 0.0 || !l.weight.is_finite() || l.weight < 0.0 {
                return Err(Error::param(format!("invalid layer {l:?}")));
            }
        }
        if layers.windows(2).any(|w| w[0].sigma >= w[1].sigma) {
            return Err(Error::param("layer sigmas must be strictly increasing"));
        }
        let total: f64 = layers.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("layer weights sum to {total}, not 1")));
        }
        Ok(Self { layers, alpha })
    }

    pub fn layers(&self) -> &[BlurLayer] {
        &self.layers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_sigma(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.sigma)
    }
}

/// Normalized geometric weights `ratio^(k * step)` for `count` layers.
pub(crate) fn geometric_weights(ratio: f64, count: usize, step: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|k| ratio.powf(k as f64 * step)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Sigma scale factor from focal length and image width.
pub(crate) fn sigma_scale(cfg: &FilterConfig, image_width: usize) -> f64 {
    (cfg.focal_mm / REFERENCE_FOCAL_MM) * (image_width as f64 / cfg.reference_width as f64)
}

pub fn derive_params(cfg: &FilterConfig, image_width: usize) -> Result<BlurStack> {
    cfg.validate()?;
    if image_width == 0 {
        return Err(Error::param("image width must be at least 1"));
    }
    let scale = sigma_scale(cfg, image_width);
    let weights = geometric_weights(cfg.weight_ratio(), cfg.layer_count, 1.0);
    let layers = weights
        .into_iter()
        .enumerate()
        .map(|(k, weight)| BlurLayer {
            sigma: cfg.base_sigma * (k as f64).exp2() * scale,
            weight,
        })
        .collect();
    BlurStack::new(layers, cfg.density.value())
}

/// `(1 - alpha) * img + alpha * sum_k w_k * blur(img, sigma_k)`.
pub fn apply_filter(img: &LinearImage, stack: &BlurStack) -> Result<LinearImage> {
    if stack.alpha == 0.0 {
        return Ok(img.clone());
    }
    let mut acc = vec![0.0f64; img.data().len()];
    for layer in &stack.layers {
        let blurred = blur(img, layer.sigma)?;
        for (a, &v) in acc.iter_mut().zip(blurred.data()) {
            *a += layer.weight * f64::from(v);
        }
    }
    let keep = 1.0 - stack.alpha;
    let data = img
        .data()
        .iter()
        .zip(&acc)
        .map(|(&v, &diffused)| (keep * f64::from(v) + stack.alpha * diffused) as f32)
        .collect();
    Ok(LinearImage::from_raw(img.width(), img.height(), data))
}

/// Full pipeline: linearize, diffuse, tone-map, re-encode at the input depth.
pub fn emulate(img: &EncodedImage, cfg: &FilterConfig) -> Result<EncodedImage> {
    let stack = derive_params(cfg, img.width())?;
    let linear = decode(img, cfg.transfer);
    let diffused = apply_filter(&linear, &stack)?;
    let mapped = tone_map(&diffused, cfg.tone_operator);
    Ok(encode(&mapped, cfg.transfer, img.bit_depth()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::BitDepth;
    use proptest::prelude::*;

    fn cfg(d: Density, f: f64) -> FilterConfig {
        FilterConfig::new(d, f)
    }

    #[test]
    fn density_parsing_and_labels() {
        assert_eq!("1/2".parse::<Density>().unwrap(), Density::HALF);
        assert_eq!("1-8".parse::<Density>().unwrap(), Density::EIGHTH);
        assert_eq!("0.125".parse::<Density>().unwrap(), Density::EIGHTH);
        assert_eq!(Density::HALF.label(), "1-2");
        assert_eq!(Density::new(0.3).unwrap().label(), "0p3");
        assert_eq!(Density::EIGHTH.to_string(), "1/8");
        assert!("0".parse::<Density>().is_err());
        assert!("3/2".parse::<Density>().is_err());
        assert!("half".parse::<Density>().is_err());
    }

    #[test]
    fn config_labels() {
        let labels: Vec<String> = FilterConfig::default_grid().iter().map(|c| c.label()).collect();
        assert_eq!(labels, ["d1-8_f20", "d1-8_f50", "d1-2_f20", "d1-2_f50"]);
        assert_eq!(cfg(Density::HALF, 35.5).label(), "d1-2_f35p5");
    }

    #[test]
    fn settings_parse_both_forms() {
        assert_eq!(parse_setting("1/2@20").unwrap(), (Density::HALF, 20.0));
        assert_eq!(parse_setting("1/8@50mm").unwrap(), (Density::EIGHTH, 50.0));
        assert_eq!(parse_setting("d1-8_f50").unwrap(), (Density::EIGHTH, 50.0));
        let (d, f) = parse_setting("d0p3_f35p5").unwrap();
        assert_eq!((d.value(), f), (0.3, 35.5));
        assert!(parse_setting("1/2").is_err());
        assert!(parse_setting("1/2@-20").is_err());
    }

    #[test]
    fn half_density_weights() {
        let stack = derive_params(&cfg(Density::HALF, 20.0), 1024).unwrap();
        let w: Vec<f64> = stack.layers().iter().map(|l| l.weight).collect();
        // 1.5^k / sum_{j<6} 1.5^j, with the sum 20.78125
        assert!((w[0] - 0.048_120_30).abs() < 1e-8);
        assert!((w[5] - 0.365_413_53).abs() < 1e-8);
        assert_eq!(stack.alpha(), 0.5);
        let sigmas: Vec<f64> = stack.layers().iter().map(|l| l.sigma).collect();
        assert_eq!(sigmas, [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
    }

    #[test]
    fn eighth_density_emphasizes_small_layers() {
        let stack = derive_params(&cfg(Density::EIGHTH, 20.0), 1024).unwrap();
        let w: Vec<f64> = stack.layers().iter().map(|l| l.weight).collect();
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        assert!((w[0] - 0.419_575_73).abs() < 1e-8);
        assert_eq!(stack.alpha(), 0.125);
    }

    #[test]
    fn focal_scaling_is_linear() {
        let near = derive_params(&cfg(Density::HALF, 20.0), 800).unwrap();
        let far = derive_params(&cfg(Density::HALF, 50.0), 800).unwrap();
        for (a, b) in near.layers().iter().zip(far.layers()) {
            assert!((b.sigma - 2.5 * a.sigma).abs() < 1e-12 * b.sigma);
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn single_layer_has_unit_weight() {
        let mut c = cfg(Density::HALF, 20.0);
        c.layer_count = 1;
        let stack = derive_params(&c, 512).unwrap();
        assert_eq!(stack.layers().len(), 1);
        assert_eq!(stack.layers()[0].weight, 1.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = cfg(Density::HALF, 20.0);
        c.layer_count = 0;
        assert!(matches!(derive_params(&c, 100), Err(Error::Parameter(_))));
        let mut c = cfg(Density::HALF, 0.0);
        assert!(derive_params(&c, 100).is_err());
        c.focal_mm = 20.0;
        assert!(derive_params(&c, 0).is_err());
        c.base_sigma = -1.0;
        assert!(derive_params(&c, 100).is_err());
        c.base_sigma = 1.0;
        c.reference_width = 0;
        assert!(derive_params(&c, 100).is_err());
    }

    #[test]
    fn ratio_interpolation() {
        let table = WeightRatios::default();
        assert_eq!(table.ratio_for(Density::HALF), 1.5);
        assert_eq!(table.ratio_for(Density::EIGHTH), 0.6);
        // 1/4 sits halfway between the anchors in log2 density: geometric mean
        let quarter = table.ratio_for(Density::new(0.25).unwrap());
        assert!((quarter - (1.5f64 * 0.6).sqrt()).abs() < 1e-12);
        // extrapolated ratios stay monotone in density
        assert!(table.ratio_for(Density::new(1.0).unwrap()) > 1.5);
        assert!(table.ratio_for(Density::new(1.0 / 32.0).unwrap()) < 0.6);

        let mut custom = WeightRatios::default();
        custom.set(Density::HALF, 2.0).unwrap();
        assert_eq!(custom.ratio_for(Density::HALF), 2.0);
        assert!(custom.set(Density::HALF, 0.0).is_err());
    }

    #[test]
    fn stack_invariants_enforced() {
        let layer = |sigma, weight| BlurLayer { sigma, weight };
        assert!(BlurStack::new(vec![], 0.5).is_err());
        assert!(BlurStack::new(vec![layer(2.0, 0.5), layer(1.0, 0.5)], 0.5).is_err());
        assert!(BlurStack::new(vec![layer(1.0, 0.5), layer(2.0, 0.6)], 0.5).is_err());
        assert!(BlurStack::new(vec![layer(1.0, 1.0)], 1.5).is_err());
        assert!(BlurStack::new(vec![layer(1.0, 1.0)], 1.0).is_ok());
    }

    #[test]
    fn zero_alpha_returns_input() {
        let img = LinearImage::from_fn(9, 5, |x, y| [x as f32, y as f32, 0.5]).unwrap();
        let stack = BlurStack::new(
            vec![BlurLayer {
                sigma: 2.0,
                weight: 1.0,
            }],
            0.0,
        )
        .unwrap();
        assert_eq!(apply_filter(&img, &stack).unwrap(), img);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = LinearImage::filled(21, 17, [0.25, 1.0, 3.5]).unwrap();
        for c in FilterConfig::default_grid() {
            let stack = derive_params(&c, 512).unwrap();
            assert_eq!(apply_filter(&img, &stack).unwrap(), img, "{}", c.label());
        }
    }

    #[test]
    fn black_image_stays_black() {
        let img = EncodedImage::new(7, 4, BitDepth::Eight, vec![0; 84]).unwrap();
        for c in FilterConfig::default_grid() {
            assert_eq!(emulate(&img, &c).unwrap(), img);
        }
    }

    #[test]
    fn emulate_keeps_depth_and_shape() {
        let img = EncodedImage::from_fn(16, 9, BitDepth::Sixteen, |x, y| {
            [(x * 4000) as u16, (y * 7000) as u16, 65535]
        })
        .unwrap();
        let out = emulate(&img, &cfg(Density::HALF, 50.0)).unwrap();
        assert_eq!(out.bit_depth(), BitDepth::Sixteen);
        assert_eq!((out.width(), out.height()), (16, 9));
        assert_ne!(out, img);
    }

    #[test]
    fn bright_pixel_peak_drops_and_energy_holds() {
        let size = 33;
        let img = LinearImage::from_fn(
            size,
            size,
            |x, y| {
                if x == 16 && y == 16 {
                    [100.0; 3]
                } else {
                    [0.0; 3]
                }
            },
        )
        .unwrap();
        for c in FilterConfig::default_grid() {
            let stack = derive_params(&c, size).unwrap();
            let out = apply_filter(&img, &stack).unwrap();
            assert!(out.max_sample() < 100.0);
            assert!((out.sum() - img.sum()).abs() <= 1e-4 * img.sum());
        }
    }

    #[test]
    fn bright_pixel_peak_matches_closed_form() {
        // Away from borders the centre of the response is
        // (1 - alpha) + alpha * sum_k w_k * t_k(0)^2 with t_k(0) the kernel centre.
        let size = 129;
        let img = LinearImage::from_fn(
            size,
            size,
            |x, y| {
                if x == 64 && y == 64 {
                    [100.0; 3]
                } else {
                    [0.0; 3]
                }
            },
        )
        .unwrap();
        let stack = derive_params(&cfg(Density::HALF, 20.0), 256).unwrap();
        let mut expected = 1.0 - stack.alpha();
        for l in stack.layers() {
            let r = (3.0 * l.sigma).ceil() as i64;
            let norm: f64 = (-r..=r)
                .map(|i| (-(i * i) as f64 / (2.0 * l.sigma * l.sigma)).exp())
                .sum();
            expected += stack.alpha() * l.weight / (norm * norm);
        }
        let out = apply_filter(&img, &stack).unwrap();
        let peak = f64::from(out.pixel(64, 64)[0]);
        assert!((peak - 100.0 * expected).abs() < 1e-4, "{peak} vs {}", 100.0 * expected);
    }

    proptest! {
        #[test]
        fn doubling_width_doubles_sigmas(width in 1usize..5000, focal in 1.0f64..300.0, layers in 1usize..9) {
            let mut c = cfg(Density::HALF, focal);
            c.layer_count = layers;
            let a = derive_params(&c, width).unwrap();
            let b = derive_params(&c, 2 * width).unwrap();
            for (x, y) in a.layers().iter().zip(b.layers()) {
                prop_assert_eq!(2.0 * x.sigma, y.sigma);
            }
        }

        #[test]
        fn derived_stacks_are_valid(d in 0.01f64..=1.0, focal in 1.0f64..300.0, layers in 1usize..12, width in 1usize..8000) {
            let mut c = cfg(Density::new(d).unwrap(), focal);
            c.layer_count = layers;
            let s = derive_params(&c, width).unwrap();
            prop_assert_eq!(s.layers().len(), layers);
            prop_assert!((s.layers().iter().map(|l| l.weight).sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(s.layers().windows(2).all(|w| w[0].sigma < w[1].sigma));
        }

        #[test]
        fn filter_preserves_energy_and_sign(
            data in prop::collection::vec(0.0f32..8.0, 20 * 14 * 3),
            idx in 0usize..4,
        ) {
            let img = LinearImage::new(20, 14, data).unwrap();
            let stack = derive_params(&FilterConfig::default_grid()[idx], 96).unwrap();
            let out = apply_filter(&img, &stack).unwrap();
            prop_assert!(out.same_shape(&img));
            prop_assert!(out.data().iter().all(|&v| v >= 0.0));
            prop_assert!((out.sum() - img.sum()).abs() <= 1e-4 * img.sum().max(1e-9));
        }

        #[test]
        fn stronger_grade_never_raises_impulse_peak(width in 16usize..512, focal in 5.0f64..60.0) {
            let img = LinearImage::from_fn(33, 33, |x, y| if (x, y) == (16, 16) { [1.0; 3] } else { [0.0; 3] }).unwrap();
            let peak = |d: Density| {
                let stack = derive_params(&cfg(d, focal), width).unwrap();
                (apply_filter(&img, &stack).unwrap().pixel(16, 16)[0], stack.layers()[0].sigma)
            };
            let (half, min_sigma) = peak(Density::HALF);
            let (eighth, _) = peak(Density::EIGHTH);
            prop_assert!(half <= eighth && eighth <= 1.0, "{} {}", half, eighth);
            if min_sigma >= 0.5 {
                prop_assert!(half < eighth && eighth < 1.0);
            }
        }
    }
}
