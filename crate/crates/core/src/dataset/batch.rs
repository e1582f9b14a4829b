use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, file_name, list_pngs, pair_rng, with_workers};
use crate::augment::{apply_image, apply_labels, sample_spec, AugmentSpec};
use crate::error::Result;
use crate::io;
use crate::preprocess::{clahe, denoise_hook, resize_width, ClaheParams, DenoiseHook};

/// Outcome of a per-file batch: processed file names and failures with reasons.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub processed: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl BatchSummary {
    fn from_results(results: Vec<(String, Result<()>)>) -> Self {
        let mut s = Self::default();
        for (name, r) in results {
            match r {
                Ok(()) => s.processed.push(name),
                Err(e) => s.failed.push((name, e.to_string())),
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub denoise: DenoiseHook,
    /// Aspect-preserving resize to this width.
    pub width: Option<usize>,
    pub clahe: Option<ClaheParams>,
}

/// Denoise hook, then resize, then CLAHE, on every PNG in `input`; results
/// are written under the same names in `output` as 8-bit grayscale.
pub fn preprocess_dir(input: &Path, output: &Path, opts: &PreprocessOptions, workers: usize) -> Result<BatchSummary> {
    let files = list_pngs(input)?;
    create_dir(output)?;
    let one = |path: &Path| -> Result<()> {
        let mut img = denoise_hook(&io::read_gray(path)?, &file_name(path), &opts.denoise)?;
        if let Some(w) = opts.width {
            img = resize_width(&img, w)?;
        }
        if let Some(p) = &opts.clahe {
            img = clahe(&img, p)?;
        }
        io::write_gray8(&output.join(file_name(path)), &img)
    };
    let results = with_workers(workers, || files.par_iter().map(|p| (file_name(p), one(p))).collect())?;
    Ok(BatchSummary::from_results(results))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    /// The same transform for every pair.
    Fixed(AugmentSpec),
    /// Pair `i` (in file-name order) draws its transform from `pair_rng(seed, i)`.
    Random { seed: u64 },
}

/// Augments image/label pairs matched by file name across `images` and
/// `labels`, writing `output/images` and `output/labels`. Returns the
/// summary and the transform applied to each processed pair.
pub fn augment_dir(
    images: &Path,
    labels: &Path,
    output: &Path,
    mode: AugmentMode,
    workers: usize,
) -> Result<(BatchSummary, Vec<(String, AugmentSpec)>)> {
    let files = list_pngs(images)?;
    let (out_img, out_lab) = (output.join("images"), output.join("labels"));
    create_dir(&out_img)?;
    create_dir(&out_lab)?;
    let one = |i: usize, path: &Path| -> Result<AugmentSpec> {
        let name = file_name(path);
        let spec = match mode {
            AugmentMode::Fixed(s) => s,
            AugmentMode::Random { seed } => sample_spec(&mut pair_rng(seed, i as u64)),
        };
        let img = io::read_gray(path)?;
        let lab = io::read_labels(&labels.join(&name))?;
        img.ensure_same_dims(&lab, "label map")?;
        io::write_gray8(&out_img.join(&name), &apply_image(&img, &spec)?)?;
        io::write_labels(&out_lab.join(&name), &apply_labels(&lab, &spec)?)?;
        Ok(spec)
    };
    let results: Vec<_> = with_workers(workers, || {
        files
            .par_iter()
            .enumerate()
            .map(|(i, p)| (file_name(p), one(i, p)))
            .collect()
    })?;
    let mut specs = vec![];
    let mut summary = BatchSummary::default();
    for (name, r) in results {
        match r {
            Ok(s) => {
                specs.push((name.clone(), s));
                summary.processed.push(name);
            }
            Err(e) => summary.failed.push((name, e.to_string())),
        }
    }
    Ok((summary, specs))
}
