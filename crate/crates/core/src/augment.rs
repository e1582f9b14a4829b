//! Geometric augmentation of image/label pairs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compose::{Class, LabelMap, LabeledPair};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image};

pub const ROTATION_RANGE_DEG: [f64; 2] = [-60.0, 60.0];
pub const SCALE_RANGE: [f64; 2] = [0.5, 1.1];
pub const OUT_SIZE: usize = 512;

/// One augmentation: scale, then rotate, then flip, about the image centre,
/// then centre crop or zero pad to `out_size` squared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    /// Rotation angle; positive turns content from +x towards +y.
    pub rotation_deg: f64,
    pub hflip: bool,
    pub scale: f64,
    pub out_size: usize,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl AugmentSpec {
    pub fn identity() -> Self {
        Self {
            rotation_deg: 0.0,
            hflip: false,
            scale: 1.0,
            out_size: OUT_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [rlo, rhi] = ROTATION_RANGE_DEG;
        if !(rlo..=rhi).contains(&self.rotation_deg) {
            return Err(Error::Domain {
                value: self.rotation_deg,
                lo: rlo,
                hi: rhi,
            });
        }
        let [slo, shi] = SCALE_RANGE;
        if !(slo..=shi).contains(&self.scale) {
            return Err(Error::Domain {
                value: self.scale,
                lo: slo,
                hi: shi,
            });
        }
        if self.out_size == 0 {
            return Err(Error::invalid("output size must be positive"));
        }
        Ok(())
    }

    /// Source coordinates sampled by output pixel `(u, v)` for an input of
    /// size `w x h`.
    fn source_of(&self, u: usize, v: usize, w: usize, h: usize) -> (f64, f64) {
        let c_out = 0.5 * (self.out_size as f64 - 1.0);
        let mut qx = u as f64 - c_out;
        let qy = v as f64 - c_out;
        if self.hflip {
            qx = -qx;
        }
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let rx = cos * qx + sin * qy;
        let ry = -sin * qx + cos * qy;
        (
            rx / self.scale + 0.5 * (w as f64 - 1.0),
            ry / self.scale + 0.5 * (h as f64 - 1.0),
        )
    }
}

/// Draws rotation, flip and scale, in that order, from `rng`.
pub fn sample_spec<R: Rng + ?Sized>(rng: &mut R) -> AugmentSpec {
    let rotation_deg = rng.random_range(ROTATION_RANGE_DEG[0]..=ROTATION_RANGE_DEG[1]);
    let hflip = rng.random_bool(0.5);
    let scale = rng.random_range(SCALE_RANGE[0]..=SCALE_RANGE[1]);
    AugmentSpec {
        rotation_deg,
        hflip,
        scale,
        out_size: OUT_SIZE,
    }
}

/// Resamples the image bilinearly; pixels mapping outside it become 0.
pub fn apply_image(image: &Image, spec: &AugmentSpec) -> Result<Image> {
    spec.validate()?;
    let (w, h) = image.dims();
    let n = spec.out_size;
    Ok(Grid::from_fn(n, n, |u, v| {
        let (x, y) = spec.source_of(u, v, w, h);
        image.sample_bilinear(x, y).unwrap_or(0.0)
    }))
}

/// Resamples labels by nearest neighbour; pixels mapping outside become background.
pub fn apply_labels(labels: &LabelMap, spec: &AugmentSpec) -> Result<LabelMap> {
    spec.validate()?;
    let (w, h) = labels.dims();
    let n = spec.out_size;
    Ok(Grid::from_fn(n, n, |u, v| {
        let (x, y) = spec.source_of(u, v, w, h);
        let (xi, yi) = ((x + 0.5).floor(), (y + 0.5).floor());
        if xi < 0.0 || yi < 0.0 {
            return Class::Background.id();
        }
        labels
            .get(xi as isize, yi as isize)
            .copied()
            .unwrap_or(Class::Background.id())
    }))
}

/// Applies the same transform to both halves of a pair.
pub fn apply(pair: &LabeledPair, spec: &AugmentSpec) -> Result<LabeledPair> {
    pair.image.ensure_same_dims(&pair.labels, "label map")?;
    Ok(LabeledPair {
        image: apply_image(&pair.image, spec)?,
        labels: apply_labels(&pair.labels, spec)?,
        provenance: pair.provenance.clone(),
    })
}
