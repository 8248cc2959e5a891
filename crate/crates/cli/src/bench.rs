use std::time::Instant;

use anyhow::Result;
use clap::Args;
use promist_core::{
    blur, derive_params, emulate, make_kernel, BitDepth, Density, EncodedImage, FilterConfig, LinearImage,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
    if w == 0 || h == 0 {
        return Err(format!("size must be positive, got `{s}`"));
    }
    Ok((w, h))
}

#[derive(Args)]
pub struct BenchArgs {
    /// Image size as WIDTHxHEIGHT.
    #[arg(long, default_value = "1920x1080", value_parser = parse_size)]
    size: (usize, usize),
    /// Timed repetitions per row.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn time_per_iter(iters: u32, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..iters {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / f64::from(iters))
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let (w, h) = args.size;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let codes: Vec<u16> = (0..w * h * 3).map(|_| (rng.next_u32() >> 24) as u16).collect();
    let encoded = EncodedImage::new(w, h, BitDepth::Eight, codes)?;
    let linear = LinearImage::from_fn(w, h, |x, y| {
        let p = encoded.pixel(x, y);
        p.map(|c| f32::from(c) / 255.0)
    })?;
    let cfg = FilterConfig::new(Density::HALF, 20.0);
    let stack = derive_params(&cfg, w)?;
    let mp = (w * h) as f64 / 1e6;
    eprintln!(
        "promist bench: {w}x{h} iters={} seed={} threads={} config {}",
        args.iters,
        args.seed,
        rayon::current_num_threads(),
        cfg.label()
    );
    println!(
        "{:<14} {:>8} {:>7} {:>10} {:>9}",
        "stage", "sigma", "radius", "ms/iter", "MP/s"
    );
    for layer in stack.layers() {
        let radius = make_kernel(layer.sigma)?.radius();
        let secs = time_per_iter(args.iters, || blur(&linear, layer.sigma).map(drop).map_err(Into::into))?;
        println!(
            "{:<14} {:>8.3} {:>7} {:>10.2} {:>9.2}",
            "blur",
            layer.sigma,
            radius,
            secs * 1e3,
            mp / secs
        );
    }
    let secs = time_per_iter(args.iters, || emulate(&encoded, &cfg).map(drop).map_err(Into::into))?;
    println!(
        "{:<14} {:>8} {:>7} {:>10.2} {:>9.2}",
        "emulate",
        "-",
        "-",
        secs * 1e3,
        mp / secs
    );
    Ok(())
}
