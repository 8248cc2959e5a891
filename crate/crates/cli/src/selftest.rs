use anyhow::{bail, Result};
use promist_core::dataset::assign_splits;
use promist_core::{
    apply_filter, decode_srgb, derive_params, encode_srgb, make_kernel, psnr, ssim, BitDepth, Density, EncodedImage,
    FilterConfig, LinearImage,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_linear(w: usize, h: usize, seed: u64) -> Result<LinearImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h * 3)
        .map(|_| rng.next_u32() as f32 / u32::MAX as f32)
        .collect();
    Ok(LinearImage::new(w, h, data)?)
}

fn check(name: &str, f: impl FnOnce() -> Result<bool>) -> bool {
    let ok = matches!(f(), Ok(true));
    println!("[{}] {name}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run() -> Result<()> {
    eprintln!("promist selftest");
    let results = [
        check("8-bit sRGB round trip", || {
            let img = EncodedImage::new(256, 1, BitDepth::Eight, (0..256u16).flat_map(|c| [c; 3]).collect())?;
            Ok(encode_srgb(&decode_srgb(&img), BitDepth::Eight) == img)
        }),
        check("kernel taps sum to one", || {
            Ok([0.5, 1.0, 3.7, 12.0]
                .iter()
                .map(|&s| make_kernel(s).map(|k| k.taps().iter().sum::<f64>()))
                .collect::<promist_core::Result<Vec<_>>>()?
                .iter()
                .all(|t| (t - 1.0).abs() < 1e-12))
        }),
        check("filter conserves energy", || {
            let img = random_linear(48, 40, 1)?;
            let mut ok = true;
            for cfg in FilterConfig::default_grid() {
                let out = apply_filter(&img, &derive_params(&cfg, 256)?)?;
                ok &= ((out.sum() - img.sum()) / img.sum()).abs() < 1e-4;
            }
            Ok(ok)
        }),
        check("identical images score psnr inf and ssim 1", || {
            let img = random_linear(16, 16, 2)?;
            Ok(psnr(&img, &img)?.is_infinite() && ssim(&img, &img)? == 1.0)
        }),
        check("split is reproducible", || {
            Ok(assign_splits(100, 0.9, 7)? == assign_splits(100, 0.9, 7)?)
        }),
        check("stronger grade spreads more", || {
            let img = LinearImage::from_fn(65, 65, |x, y| if (x, y) == (32, 32) { [50.0; 3] } else { [0.0; 3] })?;
            let peak = |d| -> Result<f32> {
                Ok(apply_filter(&img, &derive_params(&FilterConfig::new(d, 20.0), 256)?)?.pixel(32, 32)[0])
            };
            Ok(peak(Density::HALF)? < peak(Density::EIGHTH)?)
        }),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    if failed > 0 {
        bail!("{failed} self-test check(s) failed");
    }
    println!("all {} checks passed", results.len());
    Ok(())
}
