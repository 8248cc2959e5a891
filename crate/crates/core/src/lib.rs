//! Emulation of a Pro-Mist style diffusion filter on scene-linear images,
//! plus paired-dataset generation and analysis metrics.
//!
//! The pipeline decodes an encoded image to linear light, blends it with a
//! weighted stack of Gaussian blurs, tone-maps and re-encodes:
//!
//! ```
//! use promist_core::{emulate, BitDepth, Density, EncodedImage, FilterConfig};
//!
//! let img = EncodedImage::from_fn(32, 24, BitDepth::Eight, |x, y| {
//!     if (x, y) == (16, 12) { [255; 3] } else { [20; 3] }
//! })
//! .unwrap();
//! let out = emulate(&img, &FilterConfig::new(Density::HALF, 20.0)).unwrap();
//! assert!(out.pixel(16, 12)[0] < 255);
//! ```

pub mod color;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod gaussian;
pub mod io;
pub mod metrics;
pub mod params;
pub mod profile;

pub use color::{
    decode, decode_srgb, encode, encode_srgb, linear_to_srgb, srgb_to_linear, tone_map, BitDepth, EncodedImage,
    LinearImage, ToneOperator, Transfer,
};
pub use dataset::{generate, scan_corpus, split, GenerateOptions, GenerateSummary, Manifest, Split};
pub use error::{Error, Result};
pub use filter::{apply_filter, derive_params, emulate, parse_setting, BlurLayer, BlurStack, Density, FilterConfig};
pub use gaussian::{blur, make_kernel, Kernel1D};
pub use io::{read_image, write_png};
pub use metrics::{analyze_pair, pair_report, psnr, rgb_to_hsv, ssim, PairReport};
pub use params::ParamsFile;
