//! Impulse responses, radial profiles and the blur-layer ablation.
//!
//! The ablation compares the radially averaged impulse response of the
//! n-layer schedule against a dense reference: many more layers covering the
//! same octave range with the same per-octave weighting. Profiles are taken
//! at a fixed probe width, since sigmas scale with width anyway.

use crate::color::LinearImage;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, derive_params, geometric_weights, sigma_scale, BlurLayer, BlurStack, FilterConfig};

/// Image width at which ablation profiles are evaluated.
pub const PROFILE_WIDTH: usize = 256;
/// Layer count of the dense ablation reference.
pub const REFERENCE_LAYERS: usize = 32;
/// Fraction of the peak that defines the halo radius.
pub const HALO_FRACTION: f64 = 0.01;

/// Smallest canvas half-extent that keeps every kernel of `stacks` off the border.
pub fn support_radius<'a>(stacks: impl IntoIterator<Item = &'a BlurStack>) -> usize {
    stacks
        .into_iter()
        .map(|s| (3.0 * s.max_sigma()).ceil() as usize)
        .max()
        .unwrap_or(0)
}

/// Filters a unit impulse centred on a `(2 * half_extent + 1)` square canvas.
pub fn impulse_response(stack: &BlurStack, half_extent: usize) -> Result<LinearImage> {
    let side = 2 * half_extent + 1;
    let img = LinearImage::from_fn(side, side, |x, y| {
        if x == half_extent && y == half_extent {
            [1.0; 3]
        } else {
            [0.0; 3]
        }
    })?;
    apply_filter(&img, stack)
}

/// The scattered part of `stack` on its own: the same layers blended at full
/// strength, with no pass-through of the unscattered image.
pub fn scatter_only(stack: &BlurStack) -> BlurStack {
    BlurStack::new(stack.layers().to_vec(), 1.0).expect("layers of a valid stack")
}

/// Halo radius of `stack` around a light source centred at `(cx, cy)` in
/// `img`, measured on the scattered light alone.
pub fn halo_radius_around(
    img: &LinearImage,
    stack: &BlurStack,
    cx: usize,
    cy: usize,
    max_radius: usize,
) -> Result<f64> {
    let scattered = apply_filter(img, &scatter_only(stack))?;
    Ok(halo_radius(
        &radial_profile(&scattered, cx, cy, max_radius),
        HALO_FRACTION,
    ))
}

/// Mean channel-averaged intensity over rings of integer (rounded) distance
/// from `(cx, cy)`, for radii `0..=max_radius`. Rings with no pixels inside
/// the image are reported as 0.
pub fn radial_profile(img: &LinearImage, cx: usize, cy: usize, max_radius: usize) -> Vec<f64> {
    let mut sums = vec![0.0f64; max_radius + 1];
    let mut counts = vec![0usize; max_radius + 1];
    let lo_y = cy.saturating_sub(max_radius);
    let hi_y = (cy + max_radius).min(img.height() - 1);
    let lo_x = cx.saturating_sub(max_radius);
    let hi_x = (cx + max_radius).min(img.width() - 1);
    for y in lo_y..=hi_y {
        for x in lo_x..=hi_x {
            let dx = x as f64 - cx as f64;
            let dy = y as f64 - cy as f64;
            let ring = dx.hypot(dy).round() as usize;
            if ring <= max_radius {
                let p = img.pixel(x, y);
                sums[ring] += (f64::from(p[0]) + f64::from(p[1]) + f64::from(p[2])) / 3.0;
                counts[ring] += 1;
            }
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect()
}

/// Distance at which `profile` first drops below `fraction` of its value at
/// radius 0, linearly interpolated between rings. Returns the last radius
/// when the profile never falls that far.
pub fn halo_radius(profile: &[f64], fraction: f64) -> f64 {
    let Some(&peak) = profile.first() else {
        return 0.0;
    };
    let threshold = fraction * peak;
    for k in 1..profile.len() {
        if profile[k] < threshold {
            let (a, b) = (profile[k - 1], profile[k]);
            return (k - 1) as f64 + (a - threshold) / (a - b);
        }
    }
    (profile.len() - 1) as f64
}

/// L2 distance between two profiles, treating missing tail samples as 0.
pub fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `layers` blur layers spanning the same sigma range as `cfg`'s schedule
/// (`layer_count - 1` octaves) at sub-octave spacing, weighted with the same
/// geometric ratio per octave.
pub fn dense_reference_stack(cfg: &FilterConfig, image_width: usize, layers: usize) -> Result<BlurStack> {
    cfg.validate()?;
    if cfg.layer_count < 2 || layers < 2 {
        return Err(Error::param("dense reference needs a schedule of at least two layers"));
    }
    if image_width == 0 {
        return Err(Error::param("image width must be at least 1"));
    }
    let step = (cfg.layer_count - 1) as f64 / (layers - 1) as f64;
    let scale = sigma_scale(cfg, image_width);
    let layers = geometric_weights(cfg.weight_ratio(), layers, step)
        .into_iter()
        .enumerate()
        .map(|(j, weight)| BlurLayer {
            sigma: cfg.base_sigma * (j as f64 * step).exp2() * scale,
            weight,
        })
        .collect();
    BlurStack::new(layers, cfg.density.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub layer_count: usize,
    pub l2_distance: f64,
}

/// Radial impulse-profile distance of each layer count to the dense reference.
pub fn layer_ablation(
    cfg: &FilterConfig,
    layer_counts: &[usize],
    profile_width: usize,
    reference_layers: usize,
) -> Result<Vec<AblationRow>> {
    if layer_counts.is_empty() {
        return Err(Error::param("at least one layer count is required"));
    }
    let reference = dense_reference_stack(cfg, profile_width, reference_layers)?;
    let stacks = layer_counts
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.layer_count = n;
            derive_params(&c, profile_width)
        })
        .collect::<Result<Vec<_>>>()?;
    let extent = support_radius(stacks.iter().chain([&reference]));
    let profile = |stack: &BlurStack| -> Result<Vec<f64>> {
        let response = impulse_response(stack, extent)?;
        Ok(radial_profile(&response, extent, extent, extent))
    };
    let target = profile(&reference)?;
    layer_counts
        .iter()
        .zip(&stacks)
        .map(|(&layer_count, stack)| {
            Ok(AblationRow {
                layer_count,
                l2_distance: profile_distance(&profile(stack)?, &target),
            })
        })
        .collect()
}
