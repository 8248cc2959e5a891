//! Separable Gaussian blur with mirrored borders.
//!
//! The kernel is a sampled Gaussian truncated at `ceil(3 sigma)` and
//! normalized to unit sum. Borders mirror the image including the edge sample
//! (`cba|abc|cba`), which makes the blur operator doubly stochastic: constants
//! are preserved and so is the total sum of every channel.
//!
//! Both passes accumulate in f64 in a fixed tap order per output sample, so
//! the result does not depend on how rows are scheduled across threads.

use rayon::prelude::*;

use crate::color::{LinearImage, CHANNELS};
use crate::error::{Error, Result};

/// Largest kernel radius accepted, in pixels.
pub const MAX_RADIUS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    sigma: f64,
    radius: usize,
    taps: Vec<f64>,
}

impl Kernel1D {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `2 * radius + 1` weights, centre at index `radius`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn is_identity(&self) -> bool {
        self.radius == 0
    }
}

pub fn make_kernel(sigma: f64) -> Result<Kernel1D> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::param(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(Kernel1D {
            sigma,
            radius: 0,
            taps: vec![1.0],
        });
    }
    let radius = (3.0 * sigma).ceil();
    if radius > MAX_RADIUS as f64 {
        return Err(Error::param(format!(
            "sigma {sigma} needs a kernel radius above {MAX_RADIUS}"
        )));
    }
    let radius = radius as usize;
    let two_var = 2.0 * sigma * sigma;
    let r = radius as i64;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| {
            if i == 0 {
                1.0
            } else {
                (-((i * i) as f64) / two_var).exp()
            }
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(Kernel1D { sigma, radius, taps })
}

/// Index into `0..n` for a possibly out-of-range coordinate, mirroring about
/// the outer edge of the first and last samples.
#[inline]
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    if m < n {
        m as usize
    } else {
        (2 * n - 1 - m) as usize
    }
}

pub fn blur(img: &LinearImage, sigma: f64) -> Result<LinearImage> {
    let kernel = make_kernel(sigma)?;
    Ok(blur_with_kernel(img, &kernel))
}

pub fn blur_with_kernel(img: &LinearImage, kernel: &Kernel1D) -> LinearImage {
    if kernel.is_identity() {
        return img.clone();
    }
    let (width, height) = (img.width(), img.height());
    let horizontal = blur_rows(img.data(), width, kernel);
    let data = blur_columns(&horizontal, width, height, kernel);
    LinearImage::from_raw(width, height, data)
}

fn blur_rows(src: &[f32], width: usize, kernel: &Kernel1D) -> Vec<f32> {
    let row_len = width * CHANNELS;
    let r = kernel.radius;
    let center = kernel.taps[r];
    let side = &kernel.taps[r + 1..];
    let mut out = vec![0.0f32; src.len()];
    out.par_chunks_mut(row_len).zip(src.par_chunks(row_len)).for_each_init(
        || (Vec::new(), Vec::new()),
        |(padded, acc): &mut (Vec<f32>, Vec<f64>), (dst, row)| {
            padded.clear();
            for j in -(r as isize)..(width + r) as isize {
                let x = mirror_index(j, width) * CHANNELS;
                padded.extend_from_slice(&row[x..x + CHANNELS]);
            }
            acc.clear();
            acc.extend(row.iter().map(|&v| center * f64::from(v)));
            for (d, &t) in side.iter().enumerate() {
                let d = d + 1;
                let left = &padded[(r - d) * CHANNELS..][..row_len];
                let right = &padded[(r + d) * CHANNELS..][..row_len];
                for ((a, &lv), &rv) in acc.iter_mut().zip(left).zip(right) {
                    *a += t * (f64::from(lv) + f64::from(rv));
                }
            }
            for (o, &a) in dst.iter_mut().zip(acc.iter()) {
                *o = a as f32;
            }
        },
    );
    out
}

fn blur_columns(src: &[f32], width: usize, height: usize, kernel: &Kernel1D) -> Vec<f32> {
    let row_len = width * CHANNELS;
    let r = kernel.radius;
    let center = kernel.taps[r];
    let side = &kernel.taps[r + 1..];
    let row = |y: isize| {
        let m = mirror_index(y, height);
        &src[m * row_len..(m + 1) * row_len]
    };
    let mut out = vec![0.0f32; src.len()];
    out.par_chunks_mut(row_len)
        .enumerate()
        .for_each_init(Vec::new, |acc: &mut Vec<f64>, (y, dst)| {
            let y = y as isize;
            acc.clear();
            acc.extend(row(y).iter().map(|&v| center * f64::from(v)));
            for (d, &t) in side.iter().enumerate() {
                let d = d as isize + 1;
                let (above, below) = (row(y - d), row(y + d));
                for ((a, &u), &b) in acc.iter_mut().zip(above).zip(below) {
                    *a += t * (f64::from(u) + f64::from(b));
                }
            }
            for (o, &a) in dst.iter_mut().zip(acc.iter()) {
                *o = a as f32;
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense 2D convolution with the outer product of independently computed
    /// taps. Shares nothing with the separable path.
    fn dense_oracle(img: &LinearImage, sigma: f64) -> Vec<f64> {
        let radius = (3.0 * sigma).ceil() as i64;
        let raw: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = raw.iter().sum();
        let taps: Vec<f64> = raw.iter().map(|t| t / norm).collect();
        let (w, h) = (img.width() as i64, img.height() as i64);
        let reflect = |i: i64, n: i64| -> usize {
            let mut i = i;
            loop {
                if i < 0 {
                    i = -i - 1;
                } else if i >= n {
                    i = 2 * n - 1 - i;
                } else {
                    return i as usize;
                }
            }
        };
        let mut out = vec![0.0; img.data().len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3usize {
                    let mut acc = 0.0;
                    for dy in -radius..=radius {
                        for dx in -radius..=radius {
                            let sx = reflect(x + dx, w);
                            let sy = reflect(y + dy, h);
                            let v = img.pixel(sx, sy)[c] as f64;
                            acc += taps[(dy + radius) as usize] * taps[(dx + radius) as usize] * v;
                        }
                    }
                    out[(y * w + x) as usize * 3 + c] = acc;
                }
            }
        }
        out
    }

    fn impulse(size: usize) -> LinearImage {
        LinearImage::from_fn(size, size, |x, y| {
            if x == size / 2 && y == size / 2 {
                [1.0, 0.5, 0.25]
            } else {
                [0.0; 3]
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_sigma_is_identity_kernel() {
        let k = make_kernel(0.0).unwrap();
        assert_eq!(k.taps(), &[1.0]);
        assert_eq!(k.radius(), 0);
    }

    #[test]
    fn unit_sigma_center_tap() {
        let k = make_kernel(1.0).unwrap();
        assert_eq!(k.radius(), 3);
        // exp(-i^2/2) for i in -3..=3, normalized: 1 / 2.5059...
        assert!((k.taps()[3] - 0.399_050_3).abs() < 1e-6, "{}", k.taps()[3]);
    }

    #[test]
    fn kernel_radius_is_ceil_three_sigma() {
        for (sigma, radius) in [(0.25, 1), (0.5, 2), (1.0, 3), (1.1, 4), (2.5, 8), (80.0, 240)] {
            assert_eq!(make_kernel(sigma).unwrap().radius(), radius, "sigma {sigma}");
        }
    }

    #[test]
    fn invalid_sigma_rejected() {
        assert!(matches!(make_kernel(-0.1), Err(Error::Parameter(_))));
        assert!(matches!(make_kernel(f64::NAN), Err(Error::Parameter(_))));
        assert!(matches!(make_kernel(f64::INFINITY), Err(Error::Parameter(_))));
        assert!(make_kernel(1e9).is_err());
    }

    #[test]
    fn tiny_sigma_keeps_centre() {
        let k = make_kernel(1e-300).unwrap();
        assert_eq!(k.taps(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn mirror_index_includes_edge() {
        let got: Vec<usize> = (-4..8).map(|i| mirror_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(mirror_index(-7, 1), 0);
        assert_eq!(mirror_index(11, 3), 0);
    }

    #[test]
    fn zero_sigma_blur_returns_input() {
        let img = impulse(5);
        assert_eq!(blur(&img, 0.0).unwrap(), img);
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = LinearImage::filled(13, 7, [0.3, 1.7, 0.0]).unwrap();
        for sigma in [0.4, 1.0, 3.0, 10.0] {
            assert_eq!(blur(&img, sigma).unwrap(), img, "sigma {sigma}");
        }
    }

    #[test]
    fn impulse_matches_dense_convolution() {
        let img = impulse(9);
        let got = blur(&img, 1.0).unwrap();
        let want = dense_oracle(&img, 1.0);
        for (g, w) in got.data().iter().zip(&want) {
            assert!((f64::from(*g) - w).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_wider_than_image_wraps_mirror() {
        // radius 15 on a 4x3 image exercises repeated reflection
        let img = LinearImage::from_fn(4, 3, |x, y| [x as f32, y as f32, 1.0]).unwrap();
        let got = blur(&img, 5.0).unwrap();
        let want = dense_oracle(&img, 5.0);
        for (g, w) in got.data().iter().zip(&want) {
            assert!((f64::from(*g) - w).abs() < 1e-5);
        }
        assert!((got.sum() - img.sum()).abs() < 1e-4);
    }

    #[test]
    fn single_pixel_image() {
        let img = LinearImage::filled(1, 1, [2.0, 0.5, 0.0]).unwrap();
        assert_eq!(blur(&img, 4.0).unwrap(), img);
    }

    #[test]
    fn result_independent_of_thread_count() {
        let img = LinearImage::from_fn(61, 37, |x, y| {
            [((x * 7 + y * 13) % 17) as f32, (x % 5) as f32 * 0.3, (y % 3) as f32]
        })
        .unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| blur(&img, 2.7).unwrap())
        };
        let one = run(1);
        let many = run(7);
        let bits = |i: &LinearImage| i.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one), bits(&many));
    }

    fn random_image(max_side: usize) -> impl Strategy<Value = LinearImage> {
        (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
            prop::collection::vec(0.0f32..4.0, w * h * 3).prop_map(move |data| LinearImage::new(w, h, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn kernel_is_normalized_and_symmetric(sigma in 0.0f64..40.0) {
            let k = make_kernel(sigma).unwrap();
            let taps = k.taps();
            prop_assert_eq!(taps.len(), 2 * k.radius() + 1);
            prop_assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for i in 0..taps.len() {
                prop_assert_eq!(taps[i], taps[taps.len() - 1 - i]);
            }
        }

        #[test]
        fn separable_matches_dense(img in random_image(12), sigma in 0.1f64..3.0) {
            let got = blur(&img, sigma).unwrap();
            let want = dense_oracle(&img, sigma);
            for (g, w) in got.data().iter().zip(&want) {
                prop_assert!((f64::from(*g) - w).abs() <= 1e-5);
            }
        }

        #[test]
        fn blur_conserves_energy_and_bounds(img in random_image(24), sigma in 0.0f64..12.0) {
            let out = blur(&img, sigma).unwrap();
            prop_assert!(out.same_shape(&img));
            let (before, after) = (img.sum(), out.sum());
            prop_assert!((after - before).abs() <= 1e-4 * before.max(1e-12));
            prop_assert!(out.data().iter().all(|&v| v >= 0.0));
            prop_assert!(out.max_sample() <= img.max_sample());
        }
    }
}
