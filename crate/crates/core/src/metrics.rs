//! Segmentation metrics on catheter likelihood maps: thresholded precision
//! and recall, F-beta, the image-adaptive threshold and the class-weighted
//! cross-entropy training loss.

use serde::{Deserialize, Serialize};

use crate::compose::{Class, LabelMap};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image};

/// Default minimum component area kept by [`small_region_filter`], for
/// images 480 pixels wide.
pub const DEFAULT_MIN_AREA: usize = 64;

/// Probabilities are clamped here before taking the log in the loss.
pub const PROB_FLOOR: f64 = 1e-7;

/// Threshold sweep step on the 8-bit scale.
pub const SWEEP_STEP: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDomain {
    /// Reals in `[0, 1]`.
    Unit,
    /// Integers in `[0, 255]` stored as reals.
    Byte,
}

impl ValueDomain {
    pub fn max(self) -> f64 {
        match self {
            ValueDomain::Unit => 1.0,
            ValueDomain::Byte => 255.0,
        }
    }
}

/// Per-class likelihood channels. Channels may be absent when only some
/// classes were exported (evaluation needs only the catheter channel).
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    channels: [Option<Image>; 3],
    domain: ValueDomain,
}

impl LikelihoodMap {
    /// Builds a map from the three channels in class order.
    pub fn new(channels: [Image; 3], domain: ValueDomain) -> Result<Self> {
        let [a, b, c] = channels;
        Self::from_parts([Some(a), Some(b), Some(c)], domain)
    }

    /// Builds a map holding only the catheter channel.
    pub fn catheter_only(channel: Image, domain: ValueDomain) -> Result<Self> {
        Self::from_parts([None, Some(channel), None], domain)
    }

    pub fn from_parts(channels: [Option<Image>; 3], domain: ValueDomain) -> Result<Self> {
        let mut dims = None;
        for ch in channels.iter().flatten() {
            if ch.is_empty() {
                return Err(Error::invalid("likelihood channel is empty"));
            }
            match dims {
                None => dims = Some(ch.dims()),
                Some(d) if d != ch.dims() => {
                    return Err(Error::DimensionMismatch(format!(
                        "likelihood channels {d:?} vs {:?}",
                        ch.dims()
                    )))
                }
                _ => {}
            }
        }
        if dims.is_none() {
            return Err(Error::invalid("likelihood map has no channels"));
        }
        Ok(Self { channels, domain })
    }

    pub fn domain(&self) -> ValueDomain {
        self.domain
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels.iter().flatten().next().map(Grid::dims).unwrap_or((0, 0))
    }

    pub fn channel(&self, class: Class) -> Result<&Image> {
        self.channels[class as usize]
            .as_ref()
            .ok_or(Error::UnknownClass(class.id()))
    }

    /// Largest deviation of the per-pixel channel sum from the domain maximum.
    pub fn normalization_error(&self) -> Result<f64> {
        let a = self.channel(Class::Background)?;
        let b = self.channel(Class::Catheter)?;
        let c = self.channel(Class::Text)?;
        let m = self.domain.max();
        Ok(a.iter()
            .zip(b.iter())
            .zip(c.iter())
            .map(|((x, y), z)| ((x + y + z) / m - 1.0).abs())
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

/// Precision and recall; `None` where the ratio is 0/0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FBetaConfig {
    pub beta_sq: f64,
}

impl Default for FBetaConfig {
    fn default() -> Self {
        Self { beta_sq: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_bg: f64,
    pub w_catheter: f64,
    pub w_text: f64,
    /// Number of scales summed by [`multiscale_loss`].
    pub m: usize,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_bg: 1.0,
            w_catheter: 40.0,
            w_text: 80.0,
            m: 3,
        }
    }
}

impl LossWeights {
    pub fn weight(&self, class: Class) -> f64 {
        match class {
            Class::Background => self.w_bg,
            Class::Catheter => self.w_catheter,
            Class::Text => self.w_text,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.w_bg, self.w_catheter, self.w_text]
            .iter()
            .all(|w| *w > 0.0 && w.is_finite())
        {
            return Err(Error::invalid("loss weights must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("scale count must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// The 8-bit sweep 0, 30, ..., 240 expressed in `domain` units.
pub fn default_thresholds(domain: ValueDomain) -> Vec<f64> {
    (0..=240)
        .step_by(SWEEP_STEP as usize)
        .map(|t| t as f64 * domain.max() / 255.0)
        .collect()
}

/// Pixels whose `class` likelihood exceeds `threshold`.
pub fn binarize(map: &LikelihoodMap, class: Class, threshold: f64) -> Result<Grid<bool>> {
    Ok(map.channel(class)?.map(|&v| v > threshold))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Drops 8-connected components smaller than `min_area` pixels.
///
/// Two-pass union-find labelling.
pub fn small_region_filter(mask: &Grid<bool>, min_area: usize) -> Grid<bool> {
    if min_area <= 1 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let idx = |x: usize, y: usize| y * w + x;
    let mut parent: Vec<usize> = (0..w * h).collect();
    for y in 0..h {
        for x in 0..w {
            if !mask[(x, y)] {
                continue;
            }
            let here = idx(x, y);
            let mut link = |nx: usize, ny: usize| {
                if mask[(nx, ny)] {
                    let (a, b) = (find(&mut parent, here), find(&mut parent, idx(nx, ny)));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            };
            if x > 0 {
                link(x - 1, y);
            }
            if y > 0 {
                link(x, y - 1);
                if x > 0 {
                    link(x - 1, y - 1);
                }
                if x + 1 < w {
                    link(x + 1, y - 1);
                }
            }
        }
    }
    let mut area = vec![0usize; w * h];
    for i in 0..w * h {
        if mask.as_slice()[i] {
            let r = find(&mut parent, i);
            area[r] += 1;
        }
    }
    let mut out = Grid::filled(w, h, false);
    for i in 0..w * h {
        if mask.as_slice()[i] {
            let r = find(&mut parent, i);
            out.as_mut_slice()[i] = area[r] >= min_area;
        }
    }
    out
}

/// Counts with catheter as the positive class and background and text negative.
pub fn confusion(pred: &Grid<bool>, truth: &LabelMap) -> Result<ConfusionCounts> {
    pred.ensure_same_dims(truth, "truth label map")?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth.iter()) {
        let positive = Class::from_id(t)? == Class::Catheter;
        match (p, positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn precision_recall(c: &ConfusionCounts) -> PrecisionRecall {
    PrecisionRecall {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
    }
}

/// `(1 + b2) P R / (b2 P + R)`, and 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, cfg: &FBetaConfig) -> Result<f64> {
    for v in [precision, recall] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    if !(cfg.beta_sq > 0.0) {
        return Err(Error::invalid(format!(
            "beta squared must be positive, got {}",
            cfg.beta_sq
        )));
    }
    let den = cfg.beta_sq * precision + recall;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + cfg.beta_sq) * precision * recall / den)
}

/// Twice the mean of the class channel, before clamping.
pub fn mean_threshold(map: &LikelihoodMap, class: Class) -> Result<f64> {
    let ch = map.channel(class)?;
    let mut sum = 0.0;
    for &v in ch.iter() {
        sum += v;
    }
    Ok(2.0 * (sum / ch.len() as f64))
}

/// Image-dependent threshold: twice the channel mean, clamped to the domain maximum.
pub fn adaptive_threshold(map: &LikelihoodMap, class: Class) -> Result<f64> {
    Ok(mean_threshold(map, class)?.min(map.domain().max()))
}

/// Precision and recall of the catheter channel at each threshold, after
/// removing components smaller than `min_area`.
pub fn pr_curve(map: &LikelihoodMap, truth: &LabelMap, thresholds: &[f64], min_area: usize) -> Result<PrCurve> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thresholds must be strictly increasing"));
    }
    let points = thresholds
        .iter()
        .map(|&t| {
            let mask = small_region_filter(&binarize(map, Class::Catheter, t)?, min_area);
            let counts = confusion(&mask, truth)?;
            let pr = precision_recall(&counts);
            Ok(PrPoint {
                threshold: t,
                precision: pr.precision,
                recall: pr.recall,
                counts,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PrCurve { points })
}

/// Mean over pixels of `-w(truth) * ln(p(truth))`, with `p` floored at
/// [`PROB_FLOOR`]. Byte maps are read as probabilities `v / 255`.
pub fn weighted_ce(pred: &LikelihoodMap, truth: &LabelMap, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    let chans: Vec<&Image> = Class::ALL.iter().map(|&c| pred.channel(c)).collect::<Result<_>>()?;
    chans[0].ensure_same_dims(truth, "truth label map")?;
    let scale = pred.domain().max();
    let floor = PROB_FLOOR.ln();
    let mut total = 0.0;
    for (i, &t) in truth.iter().enumerate() {
        let class = Class::from_id(t)?;
        let p = chans[class as usize].as_slice()[i] / scale;
        total += -w.weight(class) * p.ln().max(floor);
    }
    Ok(total / truth.len() as f64)
}

/// Sum of [`weighted_ce`] over the `w.m` scales.
pub fn multiscale_loss(preds: &[LikelihoodMap], truths: &[LabelMap], w: &LossWeights) -> Result<f64> {
    if preds.len() != truths.len() || preds.len() != w.m {
        return Err(Error::invalid(format!(
            "need {} scales, got {} predictions and {} label maps",
            w.m,
            preds.len(),
            truths.len()
        )));
    }
    preds.iter().zip(truths).map(|(p, t)| weighted_ce(p, t, w)).sum()
}

/// Precision and recall of pooled counts.
pub fn aggregate_micro(counts: &[ConfusionCounts]) -> PrecisionRecall {
    let total = counts.iter().fold(ConfusionCounts::default(), |a, &b| a + b);
    precision_recall(&total)
}

/// Means of the defined per-image precisions and recalls.
pub fn aggregate_macro(per_image: &[PrecisionRecall]) -> PrecisionRecall {
    let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    PrecisionRecall {
        precision: mean(per_image.iter().filter_map(|p| p.precision).collect()),
        recall: mean(per_image.iter().filter_map(|p| p.recall).collect()),
    }
}
