//! Contrast normalization and resizing applied before synthesis or inference.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::io;

/// Parameters of contrast-limited adaptive histogram equalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaheParams {
    pub tile_rows: usize,
    pub tile_cols: usize,
    /// Bin height limit as a multiple of the uniform bin height. Infinity
    /// disables clipping.
    pub clip_limit: f64,
    pub bins: usize,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            tile_rows: 8,
            tile_cols: 8,
            clip_limit: 2.0,
            bins: 256,
        }
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<()> {
        if self.tile_rows == 0 || self.tile_cols == 0 {
            return Err(Error::invalid("CLAHE needs at least one tile per axis"));
        }
        if self.bins < 2 {
            return Err(Error::invalid(format!(
                "CLAHE needs at least 2 bins, got {}",
                self.bins
            )));
        }
        if !(self.clip_limit > 1.0) {
            return Err(Error::invalid(format!(
                "clip limit must exceed 1, got {}",
                self.clip_limit
            )));
        }
        Ok(())
    }
}

/// Grey-level mapping of one tile.
#[derive(Debug, Clone, PartialEq)]
pub enum TileMap {
    /// The tile holds a single grey level; values pass through unchanged.
    Identity,
    /// Clipped-histogram CDF indexed by bin, values in `[0, 1]`.
    Lut(Vec<f64>),
}

impl TileMap {
    #[inline]
    fn apply(&self, v: f64, bin: usize) -> f64 {
        match self {
            TileMap::Identity => v,
            TileMap::Lut(lut) => lut[bin],
        }
    }
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

fn tile_edges(len: usize, tiles: usize) -> Vec<usize> {
    (0..=tiles).map(|i| i * len / tiles).collect()
}

/// Per-tile mappings in row-major tile order (`tile_rows * tile_cols` entries).
pub fn clahe_tile_maps(image: &Image, params: &ClaheParams) -> Result<Vec<TileMap>> {
    params.validate()?;
    let (w, h) = image.dims();
    if params.tile_cols > w || params.tile_rows > h {
        return Err(Error::invalid(format!(
            "{}x{} tiles do not fit a {w}x{h} image",
            params.tile_cols, params.tile_rows
        )));
    }
    let xs = tile_edges(w, params.tile_cols);
    let ys = tile_edges(h, params.tile_rows);
    let bins = params.bins;
    let mut maps = Vec::with_capacity(params.tile_rows * params.tile_cols);
    for r in 0..params.tile_rows {
        for c in 0..params.tile_cols {
            let mut hist = vec![0.0f64; bins];
            for y in ys[r]..ys[r + 1] {
                for &v in &image.row(y)[xs[c]..xs[c + 1]] {
                    hist[bin_of(v, bins)] += 1.0;
                }
            }
            let npix = ((ys[r + 1] - ys[r]) * (xs[c + 1] - xs[c])) as f64;
            if hist.iter().filter(|&&n| n > 0.0).count() <= 1 {
                maps.push(TileMap::Identity);
                continue;
            }
            if params.clip_limit.is_finite() {
                let limit = params.clip_limit * npix / bins as f64;
                let mut excess = 0.0;
                for n in hist.iter_mut() {
                    if *n > limit {
                        excess += *n - limit;
                        *n = limit;
                    }
                }
                let share = excess / bins as f64;
                for n in hist.iter_mut() {
                    *n += share;
                }
            }
            let mut acc = 0.0;
            let lut = hist
                .iter()
                .map(|&n| {
                    acc += n;
                    (acc / npix).min(1.0)
                })
                .collect();
            maps.push(TileMap::Lut(lut));
        }
    }
    Ok(maps)
}

/// Interpolation cell for coordinate `p` along an axis with the given tile
/// edges: lower tile index, upper tile index and weight of the upper one.
fn cell(p: usize, edges: &[usize]) -> (usize, usize, f64) {
    let n = edges.len() - 1;
    let centre = |i: usize| 0.5 * (edges[i] + edges[i + 1]) as f64 - 0.5;
    let p = p as f64;
    if p <= centre(0) {
        return (0, 0, 0.0);
    }
    if p >= centre(n - 1) {
        return (n - 1, n - 1, 0.0);
    }
    let mut i = 0;
    while centre(i + 1) < p {
        i += 1;
    }
    let t = (p - centre(i)) / (centre(i + 1) - centre(i));
    (i, i + 1, t)
}

/// Zuiderveld CLAHE: clipped per-tile histogram equalization, with each
/// pixel's output bilinearly blended from the four nearest tile mappings.
///
/// Tiles holding a single grey level map values to themselves, so a
/// constant image comes back unchanged.
pub fn clahe(image: &Image, params: &ClaheParams) -> Result<Image> {
    let maps = clahe_tile_maps(image, params)?;
    let (w, h) = image.dims();
    let xs = tile_edges(w, params.tile_cols);
    let ys = tile_edges(h, params.tile_rows);
    let cols = params.tile_cols;
    let xcells: Vec<_> = (0..w).map(|x| cell(x, &xs)).collect();
    let mut out = Grid::new(w, h);
    for y in 0..h {
        let (r0, r1, ty) = cell(y, &ys);
        for x in 0..w {
            let (c0, c1, tx) = xcells[x];
            let v = image[(x, y)].clamp(0.0, 1.0);
            let b = bin_of(v, params.bins);
            let m = |r: usize, c: usize| maps[r * cols + c].apply(v, b);
            let top = (1.0 - tx) * m(r0, c0) + tx * m(r0, c1);
            let bottom = (1.0 - tx) * m(r1, c0) + tx * m(r1, c1);
            out[(x, y)] = ((1.0 - ty) * top + ty * bottom).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Resampling weights from `src` samples to `dst` samples along one axis.
///
/// A tent filter widened by the reduction factor when shrinking (so every
/// source pixel contributes) and plain linear interpolation when growing.
/// Taps falling outside the source are dropped and the rest renormalized.
fn axis_weights(src: usize, dst: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    (0..dst)
        .map(|i| {
            let c = (i as f64 + 0.5) * scale - 0.5;
            let lo = ((c - support).floor() as isize + 1).max(0) as usize;
            let hi = ((c + support).ceil() as isize - 1).min(src as isize - 1).max(0) as usize;
            let mut taps: Vec<f64> = (lo..=hi)
                .map(|j| (1.0 - (j as f64 - c).abs() / support).max(0.0))
                .collect();
            let total: f64 = taps.iter().sum();
            if total > 0.0 {
                taps.iter_mut().for_each(|t| *t /= total);
            } else {
                taps = vec![1.0];
                return (c.round().clamp(0.0, (src - 1) as f64) as usize, taps);
            }
            (lo, taps)
        })
        .collect()
}

/// Resizes to `width x height` with the separable tent filter of [`axis_weights`].
pub fn resize(image: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("resize target must be non-empty"));
    }
    let (w, h) = image.dims();
    if (w, h) == (width, height) {
        return Ok(image.clone());
    }
    let wx = axis_weights(w, width);
    let wy = axis_weights(h, height);
    let horizontal: Image = Grid::from_fn(width, h, |x, y| {
        let (lo, taps) = &wx[x];
        let row = image.row(y);
        taps.iter().enumerate().map(|(k, t)| t * row[lo + k]).sum()
    });
    Ok(Grid::from_fn(width, height, |x, y| {
        let (lo, taps) = &wy[y];
        taps.iter().enumerate().map(|(k, t)| t * horizontal[(x, lo + k)]).sum()
    }))
}

/// Aspect-preserving resize to `target_width` columns.
pub fn resize_width(image: &Image, target_width: usize) -> Result<Image> {
    if target_width < 16 {
        return Err(Error::invalid(format!(
            "target width must be at least 16, got {target_width}"
        )));
    }
    let (w, h) = image.dims();
    let height = ((h as f64 * target_width as f64 / w as f64).round() as usize).max(1);
    resize(image, target_width, height)
}

/// Stand-in for external denoising.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseHook {
    #[default]
    PassThrough,
    /// Replace each image with the externally denoised file of the same
    /// name and size in this directory.
    Substitute(PathBuf),
}

/// Applies `hook` to `image`, which was read from a file called `name`.
pub fn denoise_hook(image: &Image, name: &str, hook: &DenoiseHook) -> Result<Image> {
    match hook {
        DenoiseHook::PassThrough => Ok(image.clone()),
        DenoiseHook::Substitute(dir) => {
            let sub = io::read_gray(&dir.join(name))?;
            image.ensure_same_dims(&sub, "denoised substitute")?;
            Ok(sub)
        }
    }
}
