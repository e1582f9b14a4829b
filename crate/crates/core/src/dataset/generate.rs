use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, file_name, list_pngs, pair_rng, pair_seed, with_workers, GenerationConfig};
use crate::augment::{self, AugmentSpec};
use crate::compose::{builtin_templates, render_pair, sample_provenance, BrushBank, LabeledPair, Provenance};
use crate::error::{Error, Result};
use crate::grid::Image;
use crate::io;
use crate::preprocess::{denoise_hook, resize_width};

pub const MANIFEST_FILE: &str = "manifest.json";
const IMAGE_DIR: &str = "images";
const LABEL_DIR: &str = "labels";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: u64,
    pub seed: u64,
    /// Background file name inside the configured background directory.
    pub background: String,
    /// Image and label paths relative to the output directory.
    pub image: PathBuf,
    pub label: PathBuf,
    pub provenance: Provenance,
    pub augment: Option<AugmentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit_version: String,
    /// Configuration snapshot, with `output_dir` recorded as `.` so that
    /// manifests do not depend on where they were written.
    pub config: GenerationConfig,
    pub records: Vec<PairRecord>,
}

/// State shared by every pair of one run.
struct Context {
    config: GenerationConfig,
    backgrounds: Vec<PathBuf>,
    templates: Vec<Image>,
    bank: BrushBank,
}

impl Context {
    fn new(config: &GenerationConfig) -> Result<Self> {
        config.validate()?;
        let backgrounds = list_pngs(&config.background_dir)?;
        if backgrounds.is_empty() {
            return Err(Error::Config(format!(
                "no PNG backgrounds in {}",
                config.background_dir.display()
            )));
        }
        let templates = match &config.text_template_dir {
            Some(dir) => list_pngs(dir)?
                .iter()
                .map(|p| io::read_gray(p))
                .collect::<Result<Vec<_>>>()?,
            None => builtin_templates(),
        };
        let bank = BrushBank::new(&config.synthesis)?;
        Ok(Self {
            config: config.clone(),
            backgrounds,
            templates,
            bank,
        })
    }

    fn background(&self, name: &str) -> Result<Image> {
        let path = self.config.background_dir.join(name);
        let raw = io::read_gray(&path)?;
        let clean = denoise_hook(&raw, name, &self.config.denoise)?;
        resize_width(&clean, self.config.image_width)
    }

    fn render(&self, background: &Image, provenance: &Provenance, spec: Option<&AugmentSpec>) -> Result<LabeledPair> {
        let pair = render_pair(
            background,
            &self.config.synthesis,
            &self.bank,
            &self.templates,
            provenance,
        )?;
        match spec {
            Some(s) => augment::apply(&pair, s),
            None => Ok(pair),
        }
    }

    fn write(&self, out: &Path, record: &PairRecord, pair: &LabeledPair) -> Result<()> {
        io::write_gray8(&out.join(&record.image), &pair.image)?;
        io::write_labels(&out.join(&record.label), &pair.labels)
    }
}

fn pair_paths(index: u64) -> (PathBuf, PathBuf) {
    let name = format!("{index:06}.png");
    (Path::new(IMAGE_DIR).join(&name), Path::new(LABEL_DIR).join(name))
}

fn generate_one(ctx: &Context, index: u64) -> Result<(PairRecord, LabeledPair)> {
    let mut rng = pair_rng(ctx.config.master_seed, index);
    let bg_name = file_name(&ctx.backgrounds[rng.random_range(0..ctx.backgrounds.len())]);
    let background = ctx.background(&bg_name)?;
    let provenance = sample_provenance(
        background.dims(),
        &ctx.config.synthesis,
        &ctx.bank,
        &ctx.templates,
        &mut rng,
    )?;
    let spec = ctx.config.augment.then(|| augment::sample_spec(&mut rng));
    let pair = ctx.render(&background, &provenance, spec.as_ref())?;
    let (image, label) = pair_paths(index);
    let record = PairRecord {
        index,
        seed: pair_seed(ctx.config.master_seed, index),
        background: bg_name,
        image,
        label,
        provenance,
        augment: spec,
    };
    Ok((record, pair))
}

fn prepare_output(out: &Path) -> Result<()> {
    create_dir(&out.join(IMAGE_DIR))?;
    create_dir(&out.join(LABEL_DIR))
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Encode {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn snapshot(config: &GenerationConfig) -> GenerationConfig {
    GenerationConfig {
        output_dir: PathBuf::from("."),
        ..config.clone()
    }
}

/// Generates `config.count` pairs into `config.output_dir` using `workers`
/// threads (0 for the default) and writes the manifest.
///
/// Pair `i` draws everything from its own stream seeded by
/// `pair_seed(master_seed, i)`, so the output does not depend on `workers`.
pub fn generate(config: &GenerationConfig, workers: usize) -> Result<Manifest> {
    let ctx = Context::new(config)?;
    let out = &config.output_dir;
    prepare_output(out)?;
    let records = with_workers(workers, || {
        (0..config.count as u64)
            .into_par_iter()
            .map(|i| {
                let (record, pair) = generate_one(&ctx, i)?;
                ctx.write(out, &record, &pair)?;
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let manifest = Manifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: snapshot(config),
        records,
    };
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Re-renders every record of `manifest` from its recorded provenance into
/// `output_dir` without drawing any random numbers.
pub fn regenerate(manifest: &Manifest, output_dir: &Path, workers: usize) -> Result<()> {
    let ctx = Context::new(&manifest.config)?;
    prepare_output(output_dir)?;
    with_workers(workers, || {
        manifest.records.par_iter().try_for_each(|record| {
            let background = ctx.background(&record.background)?;
            let pair = ctx.render(&background, &record.provenance, record.augment.as_ref())?;
            ctx.write(output_dir, record, &pair)
        })
    })??;
    write_manifest(output_dir, manifest)
}
