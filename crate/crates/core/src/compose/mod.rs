//! Compositing of catheter ink and text onto background radiographs, and the
//! matching three-class label maps.

mod glyphs;

pub use glyphs::{builtin_templates, render_word, BUILTIN_WORDS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::preprocess::{clahe, resize, ClaheParams};
use crate::profile::{dual_edge_profile, strip_brushes, CrossSectionSpec, ProfileKind, ProjectionProfile};
use crate::raster::{stroke_label, stroke_path, IntensityLayer, LayerRole};
use crate::spline::{flatten, random_path, SplineSpec};

/// Per-pixel class ids, see [`Class`].
pub type LabelMap = Grid<u8>;

/// Template ink above this level counts as text in the label map.
pub const TEXT_INK_THRESHOLD: f64 = 0.1;

/// Placement attempts per text template before it is dropped.
const TEXT_PLACEMENT_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Class {
    Background = 0,
    Catheter = 1,
    Text = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Background, Class::Catheter, Class::Text];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Class> {
        match id {
            0 => Ok(Class::Background),
            1 => Ok(Class::Catheter),
            2 => Ok(Class::Text),
            other => Err(Error::UnknownClass(other)),
        }
    }
}

/// A tube family: its slice parameters and brush width on the target image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatheterType {
    pub name: String,
    pub tube: CrossSectionSpec,
    /// Brush width in image pixels.
    pub width: usize,
}

/// NGT and ETT as 9-pixel strip tubes, umbilical lines as 6-pixel plain tubes.
pub fn default_catheter_types() -> Vec<CatheterType> {
    vec![
        CatheterType {
            name: "ngt".into(),
            tube: CrossSectionSpec::default(),
            width: 9,
        },
        CatheterType {
            name: "ett".into(),
            tube: CrossSectionSpec::default(),
            width: 9,
        },
        CatheterType {
            name: "uac_uvc".into(),
            tube: CrossSectionSpec::plain_tube(),
            width: 6,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    /// Inclusive range of templates placed per image.
    pub count: [usize; 2],
    /// Uniform scale range applied to templates.
    pub scale: [f64; 2],
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            count: [1, 3],
            scale: [0.75, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Inclusive range of catheters per image.
    pub catheter_count: [usize; 2],
    pub catheter_types: Vec<CatheterType>,
    /// Projection angles available to strip tubes; each catheter uses one.
    pub brush_angles_deg: Vec<f64>,
    /// Range of the per-layer compositing weight.
    pub weight_range: [f64; 2],
    /// Inclusive range of spline control points per catheter.
    pub control_points: [usize; 2],
    pub degree: usize,
    pub arc_step: f64,
    pub text: TextConfig,
    pub clahe: ClaheParams,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            catheter_count: [1, 4],
            catheter_types: default_catheter_types(),
            brush_angles_deg: vec![0.0, 30.0, 60.0, 90.0],
            weight_range: [0.15, 0.35],
            control_points: [4, 8],
            degree: 3,
            arc_step: 0.5,
            text: TextConfig::default(),
            clahe: ClaheParams::default(),
        }
    }
}

fn check_range<T: PartialOrd + std::fmt::Debug>(name: &str, r: &[T; 2]) -> Result<()> {
    if r[0] > r[1] {
        return Err(Error::Config(format!(
            "{name}: lower bound {:?} above upper {:?}",
            r[0], r[1]
        )));
    }
    Ok(())
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("catheter_count", &self.catheter_count)?;
        check_range("weight_range", &self.weight_range)?;
        check_range("control_points", &self.control_points)?;
        check_range("text.count", &self.text.count)?;
        check_range("text.scale", &self.text.scale)?;
        if !(self.weight_range[0] >= 0.0 && self.weight_range[1] <= 1.0) {
            return Err(Error::Config(format!(
                "weight_range {:?} must lie within [0, 1]",
                self.weight_range
            )));
        }
        if self.catheter_types.is_empty() && self.catheter_count[1] > 0 {
            return Err(Error::Config("no catheter types configured".into()));
        }
        for t in &self.catheter_types {
            t.tube
                .validate()
                .map_err(|e| Error::Config(format!("{}: {e}", t.name)))?;
            if t.width < 2 {
                return Err(Error::Config(format!("{}: width must be at least 2", t.name)));
            }
        }
        if self.brush_angles_deg.is_empty() || self.brush_angles_deg.iter().any(|a| !(0.0..180.0).contains(a)) {
            return Err(Error::Config(
                "brush_angles_deg must be non-empty, each in [0, 180)".into(),
            ));
        }
        if self.degree == 0 || self.control_points[0] < self.degree + 1 {
            return Err(Error::Config(format!(
                "degree {} needs at least {} control points",
                self.degree,
                self.degree + 1
            )));
        }
        if !(self.arc_step > 0.0 && self.arc_step.is_finite()) {
            return Err(Error::Config("arc_step must be positive".into()));
        }
        if !(self.text.scale[0] > 0.0) {
            return Err(Error::Config("text.scale must be positive".into()));
        }
        self.clahe.validate()
    }
}

/// Brush profiles for every catheter type, computed once per configuration.
///
/// Strip tubes get one brush per configured angle, normalized together;
/// plain tubes get their single dual-edge brush.
#[derive(Debug, Clone)]
pub struct BrushBank {
    brushes: Vec<Vec<ProjectionProfile>>,
}

impl BrushBank {
    pub fn new(config: &SynthesisConfig) -> Result<Self> {
        let brushes = config
            .catheter_types
            .iter()
            .map(|t| match t.tube.kind {
                ProfileKind::StripTube => strip_brushes(&t.tube, &config.brush_angles_deg, t.width),
                ProfileKind::PlainTube => Ok(vec![dual_edge_profile(&t.tube, t.width)?]),
            })
            .collect::<Result<_>>()?;
        Ok(Self { brushes })
    }

    pub fn get(&self, type_index: usize, angle_index: usize) -> Result<&ProjectionProfile> {
        self.brushes
            .get(type_index)
            .and_then(|b| b.get(angle_index))
            .ok_or_else(|| Error::invalid(format!("no brush for type {type_index} angle {angle_index}")))
    }

    /// Number of brushes (angles) available for a type.
    pub fn angles(&self, type_index: usize) -> usize {
        self.brushes.get(type_index).map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatheterRecord {
    pub type_index: usize,
    pub type_name: String,
    pub spline: SplineSpec,
    pub angle_index: usize,
    pub angle_deg: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRecord {
    pub template: usize,
    /// Size of the template after scaling.
    pub width: usize,
    pub height: usize,
    /// Top-left corner of the placement.
    pub x: usize,
    pub y: usize,
    pub weight: f64,
}

/// Every random choice behind one pair; rendering it is deterministic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub catheters: Vec<CatheterRecord>,
    pub texts: Vec<TextRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub image: Image,
    pub labels: LabelMap,
    pub provenance: Provenance,
}

/// `clamp(background + sum(w_i * layer_i), 0, 1)`.
pub fn composite_catheters(background: &Image, layers: &[(&IntensityLayer, f64)]) -> Result<Image> {
    let mut out = background.clone();
    for (layer, w) in layers {
        background.ensure_same_dims(&layer.grid, "catheter layer")?;
        if !(0.0..=1.0).contains(w) {
            return Err(Error::Domain {
                value: *w,
                lo: 0.0,
                hi: 1.0,
            });
        }
        for (o, v) in out.as_mut_slice().iter_mut().zip(layer.grid.iter()) {
            *o += w * v;
        }
    }
    for o in out.as_mut_slice() {
        *o = o.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Draws text placements: a count in the configured range, then for each a
/// template, a scale (shrunk further if needed to fit), a weight and a
/// position that does not overlap earlier placements. Templates that find
/// no free position are dropped.
pub fn sample_text<R: Rng + ?Sized>(
    dims: (usize, usize),
    templates: &[Image],
    cfg: &TextConfig,
    weight_range: [f64; 2],
    rng: &mut R,
) -> Vec<TextRecord> {
    if templates.is_empty() {
        return vec![];
    }
    let (w, h) = dims;
    let count = rng.random_range(cfg.count[0]..=cfg.count[1]);
    let mut placed: Vec<TextRecord> = Vec::with_capacity(count);
    for _ in 0..count {
        let template = rng.random_range(0..templates.len());
        let t = &templates[template];
        let mut s = rng.random_range(cfg.scale[0]..=cfg.scale[1]);
        s = s.min(w as f64 / t.width() as f64).min(h as f64 / t.height() as f64);
        let tw = ((t.width() as f64 * s).round() as usize).clamp(1, w);
        let th = ((t.height() as f64 * s).round() as usize).clamp(1, h);
        let weight = rng.random_range(weight_range[0]..=weight_range[1]);
        for _ in 0..TEXT_PLACEMENT_TRIES {
            let x = rng.random_range(0..=w - tw);
            let y = rng.random_range(0..=h - th);
            let free = placed
                .iter()
                .all(|p| x + tw <= p.x || p.x + p.width <= x || y + th <= p.y || p.y + p.height <= y);
            if free {
                placed.push(TextRecord {
                    template,
                    width: tw,
                    height: th,
                    x,
                    y,
                    weight,
                });
                break;
            }
        }
    }
    placed
}

/// Adds recorded text placements to `image`; returns the image and the mask
/// of pixels where placed template ink exceeds [`TEXT_INK_THRESHOLD`].
pub fn render_text(image: &Image, templates: &[Image], records: &[TextRecord]) -> Result<(Image, Grid<bool>)> {
    let (w, h) = image.dims();
    let mut out = image.clone();
    let mut mask = Grid::filled(w, h, false);
    for r in records {
        let t = templates
            .get(r.template)
            .ok_or_else(|| Error::invalid(format!("text template {} not available", r.template)))?;
        if r.x + r.width > w || r.y + r.height > h {
            return Err(Error::invalid(format!(
                "text placement at ({}, {}) leaves the image",
                r.x, r.y
            )));
        }
        let ink = resize(t, r.width, r.height)?;
        for y in 0..r.height {
            for x in 0..r.width {
                let v = ink[(x, y)];
                let px = (r.x + x, r.y + y);
                out[px] = (out[px] + r.weight * v).clamp(0.0, 1.0);
                if v > TEXT_INK_THRESHOLD {
                    mask[px] = true;
                }
            }
        }
    }
    Ok((out, mask))
}

/// Samples and renders text in one step.
pub fn composite_text<R: Rng + ?Sized>(
    background: &Image,
    templates: &[Image],
    cfg: &TextConfig,
    weight_range: [f64; 2],
    rng: &mut R,
) -> Result<(Image, Grid<bool>, Vec<TextRecord>)> {
    let records = sample_text(background.dims(), templates, cfg, weight_range, rng);
    let (image, mask) = render_text(background, templates, &records)?;
    Ok((image, mask, records))
}

/// Catheter wherever any catheter label layer is set, else text where the
/// text mask is set, else background.
pub fn build_label_map(catheter_labels: &[&IntensityLayer], text_mask: &Grid<bool>) -> Result<LabelMap> {
    for l in catheter_labels {
        text_mask.ensure_same_dims(&l.grid, "catheter label layer")?;
    }
    let (w, h) = text_mask.dims();
    Ok(Grid::from_fn(w, h, |x, y| {
        if catheter_labels.iter().any(|l| l.grid[(x, y)] >= 0.5) {
            Class::Catheter.id()
        } else if text_mask[(x, y)] {
            Class::Text.id()
        } else {
            Class::Background.id()
        }
    }))
}

/// Draws all random choices for one pair on a `dims` image.
pub fn sample_provenance<R: Rng + ?Sized>(
    dims: (usize, usize),
    config: &SynthesisConfig,
    bank: &BrushBank,
    templates: &[Image],
    rng: &mut R,
) -> Result<Provenance> {
    let (w, h) = dims;
    let n = if config.catheter_types.is_empty() {
        0
    } else {
        rng.random_range(config.catheter_count[0]..=config.catheter_count[1])
    };
    let mut catheters = Vec::with_capacity(n);
    for _ in 0..n {
        let type_index = rng.random_range(0..config.catheter_types.len());
        let n_ctrl = rng.random_range(config.control_points[0]..=config.control_points[1]);
        let spline = random_path(rng, w as f64, h as f64, n_ctrl, config.degree)?;
        let angles = bank.angles(type_index);
        let angle_index = if angles > 1 { rng.random_range(0..angles) } else { 0 };
        let angle_deg = match config.catheter_types[type_index].tube.kind {
            ProfileKind::StripTube => config.brush_angles_deg[angle_index],
            ProfileKind::PlainTube => 0.0,
        };
        let weight = rng.random_range(config.weight_range[0]..=config.weight_range[1]);
        catheters.push(CatheterRecord {
            type_index,
            type_name: config.catheter_types[type_index].name.clone(),
            spline,
            angle_index,
            angle_deg,
            weight,
        });
    }
    let texts = sample_text(dims, templates, &config.text, config.weight_range, rng);
    Ok(Provenance { catheters, texts })
}

/// Ink and label layers of one recorded catheter.
pub fn render_catheter(
    dims: (usize, usize),
    record: &CatheterRecord,
    config: &SynthesisConfig,
    bank: &BrushBank,
) -> Result<(IntensityLayer, IntensityLayer)> {
    let brush = bank.get(record.type_index, record.angle_index)?;
    let path = flatten(&record.spline, config.arc_step)?;
    let mut ink = IntensityLayer::new(dims.0, dims.1, LayerRole::CatheterInk);
    stroke_path(&mut ink, &path, brush)?;
    let mut label = IntensityLayer::new(dims.0, dims.1, LayerRole::LabelInk);
    stroke_label(&mut label, &path, brush.support_width().max(1))?;
    Ok((ink, label))
}

/// Renders a pair from recorded choices: CLAHE on the background, weighted
/// catheter ink, then text, then the label map.
pub fn render_pair(
    background: &Image,
    config: &SynthesisConfig,
    bank: &BrushBank,
    templates: &[Image],
    provenance: &Provenance,
) -> Result<LabeledPair> {
    let dims = background.dims();
    let base = clahe(background, &config.clahe)?;
    let layers = provenance
        .catheters
        .iter()
        .map(|r| render_catheter(dims, r, config, bank))
        .collect::<Result<Vec<_>>>()?;
    let weighted: Vec<_> = layers
        .iter()
        .zip(&provenance.catheters)
        .map(|((ink, _), r)| (ink, r.weight))
        .collect();
    let inked = composite_catheters(&base, &weighted)?;
    let (image, mask) = render_text(&inked, templates, &provenance.texts)?;
    let labels: Vec<_> = layers.iter().map(|(_, l)| l).collect();
    let labels = build_label_map(&labels, &mask)?;
    Ok(LabeledPair {
        image,
        labels,
        provenance: provenance.clone(),
    })
}

pub fn synthesize_pair<R: Rng + ?Sized>(
    background: &Image,
    config: &SynthesisConfig,
    bank: &BrushBank,
    templates: &[Image],
    rng: &mut R,
) -> Result<LabeledPair> {
    let provenance = sample_provenance(background.dims(), config, bank, templates, rng)?;
    render_pair(background, config, bank, templates, &provenance)
}
