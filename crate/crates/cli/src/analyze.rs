use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use promist_core::io::is_supported;
use promist_core::metrics::{analyze_pair, format_psnr, write_pair_json, write_summary_csv, PairRecord, DEFAULT_BINS};
use promist_core::read_image;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::invalid;

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Original image, or a directory of them.
    #[arg(long)]
    original: PathBuf,
    /// Filtered image, or a directory mirroring the original layout.
    #[arg(long)]
    filtered: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins per HSV channel.
    #[arg(long, default_value_t = DEFAULT_BINS as u16, value_parser = clap::value_parser!(u16).range(1..))]
    bins: u16,
}

/// Relative `/`-separated name and the two paths of each pair.
fn pairs(original: &Path, filtered: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if original.is_file() && filtered.is_file() {
        let name = original
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![(name, original.to_path_buf(), filtered.to_path_buf())]);
    }
    if !original.is_dir() || !filtered.is_dir() {
        return Err(invalid(format!(
            "--original and --filtered must both be files or both be directories ({}, {})",
            original.display(),
            filtered.display()
        )));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(original).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", original.display()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || !is_supported(path) {
            continue;
        }
        let rel = path
            .strip_prefix(original)
            .expect("walkdir yields children of its root");
        let counterpart = filtered.join(rel);
        if counterpart.is_file() {
            let name = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push((name, path.to_path_buf(), counterpart));
        } else {
            eprintln!("no filtered counterpart for {}", rel.display());
        }
    }
    if out.is_empty() {
        return Err(promist_core::Error::EmptyCorpus(original.to_path_buf()).into());
    }
    Ok(out)
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let pairs = pairs(&args.original, &args.filtered)?;
    eprintln!(
        "promist analyze: {} pairs, bins={}, original={} filtered={}",
        pairs.len(),
        args.bins,
        args.original.display(),
        args.filtered.display()
    );
    let records = pairs
        .par_iter()
        .map(|(name, o, f)| -> Result<PairRecord> {
            let a = read_image(o)?;
            let b = read_image(f)?;
            let analysis = analyze_pair(&a, &b, usize::from(args.bins)).with_context(|| format!("analyzing {name}"))?;
            Ok(PairRecord {
                original: o.display().to_string(),
                filtered: f.display().to_string(),
                analysis,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let json_dir = args.out.join("pairs");
    std::fs::create_dir_all(&json_dir).with_context(|| format!("creating {}", json_dir.display()))?;
    for ((name, _, _), rec) in pairs.iter().zip(&records) {
        let stem = name
            .rsplit_once('.')
            .map_or(name.as_str(), |(s, _)| s)
            .replace('/', "__");
        write_pair_json(&json_dir.join(format!("{stem}.json")), rec)?;
    }
    write_summary_csv(&args.out.join("summary.csv"), &records)?;

    let n = records.len() as f64;
    let mean = |f: fn(&PairRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    let finite_psnr: Vec<f64> = records
        .iter()
        .map(|r| r.analysis.report.psnr_db)
        .filter(|p| p.is_finite())
        .collect();
    let psnr = if finite_psnr.is_empty() {
        f64::INFINITY
    } else {
        finite_psnr.iter().sum::<f64>() / finite_psnr.len() as f64
    };
    println!("pairs                 {}", records.len());
    println!(
        "mean_value_delta      {:+.6}",
        mean(|r| r.analysis.report.mean_value_delta)
    );
    println!(
        "mean_sat_delta        {:+.6}",
        mean(|r| r.analysis.report.mean_sat_delta)
    );
    println!(
        "hue_histogram_l1      {:.6}",
        mean(|r| r.analysis.report.hue_histogram_l1)
    );
    println!(
        "dynamic_range         {:.6} -> {:.6}",
        mean(|r| r.analysis.report.dynamic_range_original),
        mean(|r| r.analysis.report.dynamic_range_filtered)
    );
    println!("psnr_db (finite mean) {}", format_psnr(psnr));
    println!("ssim                  {:.6}", mean(|r| r.analysis.report.ssim));
    println!("wrote {}", args.out.join("summary.csv").display());
    Ok(())
}
