use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compose::SynthesisConfig;
use crate::error::{Error, Result};
use crate::preprocess::DenoiseHook;

/// Everything that determines a generated dataset, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub background_dir: PathBuf,
    pub output_dir: PathBuf,
    pub count: usize,
    pub master_seed: u64,
    /// Backgrounds are resized to this width before synthesis.
    pub image_width: usize,
    /// Directory of text template PNGs; the built-in glyphs when absent.
    pub text_template_dir: Option<PathBuf>,
    /// Apply a random augmentation (and 512x512 crop/pad) to every pair.
    pub augment: bool,
    pub denoise: DenoiseHook,
    pub synthesis: SynthesisConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            background_dir: PathBuf::from("backgrounds"),
            output_dir: PathBuf::from("out"),
            count: 1,
            master_seed: 0,
            image_width: 512,
            text_template_dir: None,
            augment: false,
            denoise: DenoiseHook::PassThrough,
            synthesis: SynthesisConfig::default(),
        }
    }
}

impl GenerationConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if self.image_width < 64 {
            return Err(Error::Config(format!(
                "image_width must be at least 64, got {}",
                self.image_width
            )));
        }
        self.synthesis.validate()
    }
}
