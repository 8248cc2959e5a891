//! Paired dataset generation: corpus scan, seeded train/test split, batch
//! filtering and the JSON manifest.
//!
//! Output layout under the target directory:
//!
//! ```text
//! manifest.json
//! original/{train,test}/<stem>.png
//! <config label>/{train,test}/<stem>.png
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::ToneOperator;
use crate::error::{Error, Result};
use crate::filter::{emulate, FilterConfig};
use crate::io::{is_supported, read_image, write_png};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;
pub const MANIFEST_NAME: &str = "manifest.json";
pub const ORIGINAL_DIR: &str = "original";

/// Supported image files directly inside `dir`, sorted by file name.
pub fn scan_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && is_supported(&path) {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Uniform integer in `0..bound` by Lemire's widening multiply with rejection.
fn bounded(rng: &mut impl RngCore, bound: u64) -> u64 {
    let mut m = u128::from(rng.next_u64()) * u128::from(bound);
    if (m as u64) < bound {
        let threshold = bound.wrapping_neg() % bound;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(bound);
        }
    }
    (m >> 64) as u64
}

/// Seeded Fisher-Yates permutation of `0..n`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = bounded(&mut rng, i as u64 + 1) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Number of training items for `n` items at `ratio`.
pub fn train_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Split assignment for each of `n` items, in input order.
pub fn assign_splits(n: usize, ratio: f64, seed: u64) -> Result<Vec<Split>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    if n == 0 {
        return Err(Error::param("cannot split an empty list"));
    }
    let n_train = train_count(n, ratio);
    let mut splits = vec![Split::Test; n];
    for &i in &shuffled_indices(n, seed)[..n_train] {
        splits[i] = Split::Train;
    }
    Ok(splits)
}

/// Partitions `items` into (train, test), each keeping the input order.
pub fn split<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let splits = assign_splits(items.len(), ratio, seed)?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (item, s) in items.iter().zip(splits) {
        match s {
            Split::Train => train.push(item.clone()),
            Split::Test => test.push(item.clone()),
        }
    }
    Ok((train, test))
}

/// Resolved parameters of one filter configuration, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub label: String,
    pub density: String,
    pub focal_mm: f64,
    pub layer_count: usize,
    pub base_sigma: f64,
    pub reference_width: usize,
    pub weight_ratio: f64,
    pub tone_operator: ToneOperator,
    pub transfer: String,
}

impl From<&FilterConfig> for ConfigRecord {
    fn from(cfg: &FilterConfig) -> Self {
        Self {
            label: cfg.label(),
            density: cfg.density.to_string(),
            focal_mm: cfg.focal_mm,
            layer_count: cfg.layer_count,
            base_sigma: cfg.base_sigma,
            reference_width: cfg.reference_width,
            weight_ratio: cfg.weight_ratio(),
            tone_operator: cfg.tone_operator,
            transfer: cfg.transfer.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name inside the corpus directory.
    pub source: String,
    pub split: Split,
    /// Output paths relative to the dataset root, `/`-separated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub split_ratio: f64,
    pub configs: Vec<ConfigRecord>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerateSummary {
    pub sources: usize,
    pub processed: usize,
    pub skipped: usize,
    pub train: usize,
    pub test: usize,
    pub outputs_per_config: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub seed: u64,
    pub split_ratio: f64,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            split_ratio: DEFAULT_SPLIT_RATIO,
            jobs: None,
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn skip_reason(err: &Error) -> String {
    match err {
        Error::Image { source, .. } => format!("decode failed: {source}"),
        Error::Io { source, .. } => format!("read failed: {source}"),
        other => other.to_string(),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Filters one source through every config; `Ok(None)` when it cannot be decoded.
fn process_one(
    source: &Path,
    split: Split,
    configs: &[FilterConfig],
    out: &Path,
) -> Result<std::result::Result<ManifestEntry, String>> {
    let img = match read_image(source) {
        Ok(img) => img,
        Err(e @ (Error::Image { .. } | Error::Io { .. })) => return Ok(Err(skip_reason(&e))),
        Err(e) => return Err(e),
    };
    let name = format!("{}.png", stem(source));
    let rel = |group: &str| format!("{group}/{}/{name}", split.dir_name());
    let original = rel(ORIGINAL_DIR);
    write_png(&out.join(&original), &img)?;
    let mut outputs = BTreeMap::new();
    for cfg in configs {
        let label = cfg.label();
        let path = rel(&label);
        write_png(&out.join(&path), &emulate(&img, cfg)?)?;
        outputs.insert(label, path);
    }
    Ok(Ok(ManifestEntry {
        source: file_name(source),
        split,
        original: Some(original),
        outputs,
        skipped: None,
    }))
}

/// Builds the paired dataset for every supported image in `corpus`.
///
/// Outputs and the manifest depend only on the corpus contents, configs,
/// seed and ratio; the worker count does not change a single byte.
pub fn generate(
    corpus: &Path,
    configs: &[FilterConfig],
    out: &Path,
    opts: &GenerateOptions,
) -> Result<(Manifest, GenerateSummary)> {
    if configs.is_empty() {
        return Err(Error::param("at least one filter configuration is required"));
    }
    let mut labels = BTreeSet::new();
    for cfg in configs {
        cfg.validate()?;
        let label = cfg.label();
        if label == ORIGINAL_DIR || !labels.insert(label.clone()) {
            return Err(Error::param(format!("duplicate configuration label `{label}`")));
        }
    }
    if opts.jobs == Some(0) {
        return Err(Error::param("jobs must be at least 1"));
    }
    let sources = scan_corpus(corpus)?;
    let splits = assign_splits(sources.len(), opts.split_ratio, opts.seed)?;

    let mut seen = BTreeMap::new();
    let collisions: Vec<Option<String>> = sources
        .iter()
        .map(|p| {
            let s = stem(p);
            match seen.get(&s) {
                Some(first) => Some(format!("output name collides with {first}")),
                None => {
                    seen.insert(s, file_name(p));
                    None
                }
            }
        })
        .collect();

    for group in labels.iter().map(String::as_str).chain([ORIGINAL_DIR]) {
        for split in [Split::Train, Split::Test] {
            ensure_dir(&out.join(group).join(split.dir_name()))?;
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<ManifestEntry>> = pool.install(|| {
        sources
            .par_iter()
            .zip(&splits)
            .zip(&collisions)
            .map(|((source, &split), collision)| {
                let skipped = |reason: String| ManifestEntry {
                    source: file_name(source),
                    split,
                    original: None,
                    outputs: BTreeMap::new(),
                    skipped: Some(reason),
                };
                if let Some(reason) = collision {
                    return Ok(skipped(reason.clone()));
                }
                Ok(process_one(source, split, configs, out)?.unwrap_or_else(skipped))
            })
            .collect()
    });
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        seed: opts.seed,
        split_ratio: opts.split_ratio,
        configs: configs.iter().map(ConfigRecord::from).collect(),
        entries,
    };
    let manifest_path = out.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    let done = manifest.entries.iter().filter(|e| e.skipped.is_none());
    let summary = GenerateSummary {
        sources: manifest.entries.len(),
        processed: done.clone().count(),
        skipped: manifest.entries.iter().filter(|e| e.skipped.is_some()).count(),
        train: done.clone().filter(|e| e.split == Split::Train).count(),
        test: done.clone().filter(|e| e.split == Split::Test).count(),
        outputs_per_config: labels
            .iter()
            .map(|l| (l.clone(), done.clone().filter(|e| e.outputs.contains_key(l)).count()))
            .collect(),
    };
    Ok((manifest, summary))
}
