use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{file_name, list_pngs, with_workers};
use crate::compose::Class;
use crate::error::Result;
use crate::geom::Point2;
use crate::grid::Grid;
use crate::io;
use crate::metrics::{
    adaptive_threshold, aggregate_macro, aggregate_micro, binarize, confusion, default_thresholds, f_beta, pr_curve,
    precision_recall, small_region_filter, ConfusionCounts, FBetaConfig, LikelihoodMap, PrCurve, PrecisionRecall,
    ValueDomain, DEFAULT_MIN_AREA,
};
use crate::raster::{wu_line, IntensityLayer, LayerRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Thresholds on the 8-bit scale.
    pub thresholds: Vec<f64>,
    pub min_area: usize,
    pub fbeta: FBetaConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(ValueDomain::Byte),
            min_area: DEFAULT_MIN_AREA,
            fbeta: FBetaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_beta: Option<f64>,
}

impl ScoredPoint {
    fn new(threshold: f64, pr: PrecisionRecall, cfg: &FBetaConfig) -> Self {
        let f = match (pr.precision, pr.recall) {
            (Some(p), Some(r)) => f_beta(p, r, cfg).ok(),
            _ => None,
        };
        Self {
            threshold,
            precision: pr.precision,
            recall: pr.recall,
            f_beta: f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub name: String,
    pub curve: PrCurve,
    /// Image-adaptive threshold and the counts it yields.
    pub t_seg: f64,
    pub adaptive_counts: ConfusionCounts,
    pub adaptive: ScoredPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Counts pooled over images before computing precision and recall.
    pub micro_curve: Vec<ScoredPoint>,
    /// Per-image precision and recall averaged over images where defined.
    pub macro_curve: Vec<ScoredPoint>,
    pub micro_adaptive: ScoredPoint,
    pub macro_adaptive: ScoredPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub options: EvalOptions,
    pub images: Vec<ImageReport>,
    pub aggregate: Option<AggregateReport>,
    /// Prediction files with no truth file of the same name.
    pub unpaired_predictions: Vec<String>,
    /// Truth files with no prediction of the same name.
    pub unpaired_truths: Vec<String>,
    /// Paired files that could not be scored, with the reason.
    pub failures: Vec<(String, String)>,
}

fn score_image(pred: &Path, truth: &Path, opts: &EvalOptions) -> Result<ImageReport> {
    let channel = io::read_gray(pred)?.map(|v| (v * 255.0).round());
    let map = LikelihoodMap::catheter_only(channel, ValueDomain::Byte)?;
    let labels = io::read_labels(truth)?;
    let curve = pr_curve(&map, &labels, &opts.thresholds, opts.min_area)?;
    let t_seg = adaptive_threshold(&map, Class::Catheter)?;
    let mask = small_region_filter(&binarize(&map, Class::Catheter, t_seg)?, opts.min_area);
    let adaptive_counts = confusion(&mask, &labels)?;
    let adaptive = ScoredPoint::new(t_seg, precision_recall(&adaptive_counts), &opts.fbeta);
    Ok(ImageReport {
        name: file_name(truth),
        curve,
        t_seg,
        adaptive_counts,
        adaptive,
    })
}

fn aggregate(images: &[ImageReport], opts: &EvalOptions) -> Option<AggregateReport> {
    if images.is_empty() {
        return None;
    }
    let (micro_curve, macro_curve) = opts
        .thresholds
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let counts: Vec<_> = images.iter().map(|im| im.curve.points[k].counts).collect();
            let per: Vec<_> = counts.iter().map(precision_recall).collect();
            (
                ScoredPoint::new(t, aggregate_micro(&counts), &opts.fbeta),
                ScoredPoint::new(t, aggregate_macro(&per), &opts.fbeta),
            )
        })
        .unzip();
    let counts: Vec<_> = images.iter().map(|im| im.adaptive_counts).collect();
    let per: Vec<_> = counts.iter().map(precision_recall).collect();
    let mean_t = images.iter().map(|im| im.t_seg).sum::<f64>() / images.len() as f64;
    Some(AggregateReport {
        micro_curve,
        macro_curve,
        micro_adaptive: ScoredPoint::new(mean_t, aggregate_micro(&counts), &opts.fbeta),
        macro_adaptive: ScoredPoint::new(mean_t, aggregate_macro(&per), &opts.fbeta),
    })
}

/// Scores catheter likelihood PNGs in `pred_dir` against label PNGs of the
/// same name in `truth_dir`. Unpaired or unreadable files are listed in the
/// report and skipped. `workers` as for generation (0 for the default).
pub fn evaluate(pred_dir: &Path, truth_dir: &Path, opts: &EvalOptions, workers: usize) -> Result<EvalReport> {
    let by_name =
        |v: Vec<PathBuf>| -> BTreeMap<String, PathBuf> { v.into_iter().map(|p| (file_name(&p), p)).collect() };
    let preds = by_name(list_pngs(pred_dir)?);
    let truths = by_name(list_pngs(truth_dir)?);
    let unpaired_predictions = preds.keys().filter(|k| !truths.contains_key(*k)).cloned().collect();
    let unpaired_truths = truths.keys().filter(|k| !preds.contains_key(*k)).cloned().collect();
    let pairs: Vec<_> = truths
        .iter()
        .filter_map(|(name, t)| preds.get(name).map(|p| (name.clone(), p.clone(), t.clone())))
        .collect();
    let results: Vec<_> = with_workers(workers, || {
        pairs
            .par_iter()
            .map(|(name, p, t)| (name.clone(), score_image(p, t, opts)))
            .collect()
    })?;
    let mut images = vec![];
    let mut failures = vec![];
    for (name, r) in results {
        match r {
            Ok(im) => images.push(im),
            Err(e) => failures.push((name, e.to_string())),
        }
    }
    let aggregate = aggregate(&images, opts);
    Ok(EvalReport {
        options: opts.clone(),
        images,
        aggregate,
        unpaired_predictions,
        unpaired_truths,
        failures,
    })
}

const PLOT_SIZE: usize = 400;
const PLOT_MARGIN: f64 = 40.0;

/// Draws precision (vertical) against recall (horizontal) for each curve,
/// dark ink on white, and writes it as an 8-bit PNG. Undefined points are skipped.
pub fn render_pr_plot(curves: &[&[ScoredPoint]], path: &Path) -> Result<()> {
    let mut ink = IntensityLayer::new(PLOT_SIZE, PLOT_SIZE, LayerRole::CatheterInk);
    let span = PLOT_SIZE as f64 - 2.0 * PLOT_MARGIN;
    let to_px = |r: f64, p: f64| Point2::new(PLOT_MARGIN + r * span, PLOT_MARGIN + (1.0 - p) * span);
    let origin = to_px(0.0, 0.0);
    wu_line(&mut ink, origin, to_px(1.0, 0.0));
    wu_line(&mut ink, origin, to_px(0.0, 1.0));
    for tick in 1..=10 {
        let f = tick as f64 / 10.0;
        let x = to_px(f, 0.0);
        wu_line(&mut ink, x, x + Point2::new(0.0, 4.0));
        let y = to_px(0.0, f);
        wu_line(&mut ink, y, y - Point2::new(4.0, 0.0));
    }
    for curve in curves {
        let pts: Vec<Point2> = curve
            .iter()
            .filter_map(|s| Some(to_px(s.recall?, s.precision?)))
            .collect();
        for w in pts.windows(2) {
            wu_line(&mut ink, w[0], w[1]);
        }
        for &p in &pts {
            for d in [Point2::new(-2.0, 0.0), Point2::new(0.0, -2.0)] {
                wu_line(&mut ink, p + d, p - d);
            }
        }
    }
    let image = Grid::from_fn(PLOT_SIZE, PLOT_SIZE, |x, y| 1.0 - ink.grid[(x, y)]);
    io::write_gray8(path, &image)
}
