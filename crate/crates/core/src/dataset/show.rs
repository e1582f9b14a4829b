use std::path::Path;

use serde::{Deserialize, Serialize};

use super::create_dir;
use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::grid::Grid;
use crate::io;
use crate::profile::{
    normalize_global_max, project, render_cross_section, sinogram, CrossSectionSpec, ProjectionProfile,
};
use crate::raster::{wu_line, IntensityLayer, LayerRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDump {
    pub spec: CrossSectionSpec,
    pub grid_side: usize,
    /// Profiles at the requested angles, normalized by their joint maximum.
    pub profiles: Vec<ProjectionProfile>,
}

const PLOT_W: usize = 480;
const PLOT_H: usize = 240;

fn scaled_by_max(g: &Grid<f64>) -> Grid<f64> {
    let m = g.max_value();
    if m > 0.0 {
        g.map(|v| v / m)
    } else {
        g.clone()
    }
}

/// Writes `cross_section.png`, `sinogram.png` (one row per angle over
/// `[0, 180)`), `profiles.png` and `profiles.json` into `out_dir`.
pub fn show_profile(
    spec: &CrossSectionSpec,
    angles_deg: &[f64],
    n_angles: usize,
    out_dir: &Path,
) -> Result<ProfileDump> {
    spec.validate()?;
    if angles_deg.is_empty() {
        return Err(Error::invalid("need at least one profile angle"));
    }
    create_dir(out_dir)?;
    let side = spec.min_grid_side();
    let field = render_cross_section(spec, side)?;
    io::write_gray8(&out_dir.join("cross_section.png"), &scaled_by_max(&field.grid))?;

    let rows = sinogram(&field, n_angles)?;
    let bins = rows[0].len();
    let sino = Grid::from_fn(bins, rows.len(), |x, y| rows[y].samples[x]);
    io::write_gray8(&out_dir.join("sinogram.png"), &scaled_by_max(&sino))?;

    let raw: Vec<_> = angles_deg.iter().map(|&a| project(&field, a)).collect();
    let profiles = normalize_global_max(&raw)?;
    let mut ink = IntensityLayer::new(PLOT_W, PLOT_H, LayerRole::CatheterInk);
    let margin = 10.0;
    let sx = (PLOT_W as f64 - 2.0 * margin) / (bins - 1).max(1) as f64;
    let sy = PLOT_H as f64 - 2.0 * margin;
    for p in &profiles {
        let pts: Vec<_> = p
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| Point2::new(margin + i as f64 * sx, PLOT_H as f64 - margin - v * sy))
            .collect();
        for w in pts.windows(2) {
            wu_line(&mut ink, w[0], w[1]);
        }
    }
    let plot = Grid::from_fn(PLOT_W, PLOT_H, |x, y| 1.0 - ink.grid[(x, y)]);
    io::write_gray8(&out_dir.join("profiles.png"), &plot)?;

    let dump = ProfileDump {
        spec: *spec,
        grid_side: side,
        profiles,
    };
    let path = out_dir.join("profiles.json");
    let text = serde_json::to_string_pretty(&dump).map_err(|e| Error::Encode {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(dump)
}
