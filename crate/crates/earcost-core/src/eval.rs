//! Threshold-sweep detection metrics: false-alarm / missed-detection
//! rates, DET curves in normal-deviate scale, and the equal error rate.
//!
//! A frame is predicted as target when its score is greater than or equal
//! to the threshold, so ties favor detection.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Scores with their ground-truth labels (`true` = target frame).
#[derive(Debug, Clone)]
pub struct ScoredFrames<R> {
    scores: Vec<R>,
    labels: Vec<bool>,
}

impl<R: Real> ScoredFrames<R> {
    pub fn new(scores: Vec<R>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("scores".into()));
        }
        Ok(Self { scores, labels })
    }

    /// Build from separate target and non-target score pools.
    pub fn from_pools(target: &[R], non_target: &[R]) -> Result<Self> {
        let mut scores = Vec::with_capacity(target.len() + non_target.len());
        let mut labels = Vec::with_capacity(scores.capacity());
        scores.extend_from_slice(target);
        labels.extend(std::iter::repeat(true).take(target.len()));
        scores.extend_from_slice(non_target);
        labels.extend(std::iter::repeat(false).take(non_target.len()));
        Self::new(scores, labels)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[R] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    fn class_counts(&self) -> (usize, usize) {
        let targets = self.labels.iter().filter(|&&l| l).count();
        (targets, self.labels.len() - targets)
    }
}

/// Confusion counts and error rates at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub fa_pct: f64,
    pub md_pct: f64,
}

/// Counts and rates with detection declared at `score >= threshold`.
pub fn rates_at_threshold<R: Real>(sf: &ScoredFrames<R>, threshold: R) -> Rates {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (&score, &label) in sf.scores.iter().zip(&sf.labels) {
        let detected = score >= threshold;
        match (label, detected) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let fa_pct = if fp + tn == 0 {
        0.0
    } else {
        fp as f64 / (fp + tn) as f64 * 100.0
    };
    let md_pct = if fn_ + tp == 0 {
        0.0
    } else {
        fn_ as f64 / (fn_ + tp) as f64 * 100.0
    };
    Rates {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        fa_pct,
        md_pct,
    }
}

/// One DET operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<R> {
    pub threshold: R,
    pub fa_pct: f64,
    pub md_pct: f64,
}

/// Operating points sorted by ascending threshold, including the
/// all-detected and none-detected sentinels at infinite thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve<R> {
    points: Vec<OperatingPoint<R>>,
}

impl<R: Real> DetCurve<R> {
    pub fn points(&self) -> &[OperatingPoint<R>] {
        &self.points
    }

    /// (nd_fa, nd_md) per point, clamped per [`normal_deviate`].
    pub fn normal_deviate_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (normal_deviate(p.fa_pct / 100.0), normal_deviate(p.md_pct / 100.0)))
            .collect()
    }
}

/// Sweep thresholds over every distinct score plus infinite sentinels.
pub fn sweep_det<R: Real>(sf: &ScoredFrames<R>) -> Result<DetCurve<R>> {
    let (n_target, n_non) = sf.class_counts();
    if n_target == 0 || n_non == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..sf.len()).collect();
    order.sort_by(|&a, &b| sf.scores[a].partial_cmp(&sf.scores[b]).unwrap());

    let mut points = vec![OperatingPoint {
        threshold: R::neg_infinity(),
        fa_pct: 100.0,
        md_pct: 0.0,
    }];

    // targets_below[i] = targets among the i lowest-scoring frames
    let mut targets_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let value = sf.scores[order[i]];
        // rates at threshold == value: frames at sorted index >= i detected
        let tp = n_target - targets_below;
        let detected = order.len() - i;
        let fp = detected - tp;
        points.push(OperatingPoint {
            threshold: value,
            fa_pct: fp as f64 / n_non as f64 * 100.0,
            md_pct: targets_below as f64 / n_target as f64 * 100.0,
        });
        // consume the tie group
        while i < order.len() && sf.scores[order[i]] == value {
            if sf.labels[order[i]] {
                targets_below += 1;
            }
            i += 1;
        }
    }

    points.push(OperatingPoint {
        threshold: R::infinity(),
        fa_pct: 0.0,
        md_pct: 100.0,
    });
    Ok(DetCurve { points })
}

/// Inverse standard normal CDF (probit), with the argument clamped to
/// [1e-6, 1 - 1e-6].
///
/// Uses Acklam's rational approximation, whose relative error is below
/// 1.15e-9 over the open unit interval; well inside the documented 1e-8.
pub fn normal_deviate(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

/// Equal error rate and the threshold where the curve crosses FA = MD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    pub eer_percent: f64,
    pub threshold: f64,
}

/// Locate the FA = MD crossing by linear interpolation between the
/// adjacent operating points where FA - MD changes sign. A point with
/// FA exactly equal to MD is returned as-is.
pub fn equal_error_rate<R: Real>(curve: &DetCurve<R>) -> Result<EerResult> {
    let points = curve.points();
    if points.len() < 2 {
        return Err(Error::NotEnoughData {
            needed: 2,
            available: points.len(),
        });
    }
    for pair in points.windows(2) {
        let (p0, p1) = (&pair[0], &pair[1]);
        let d0 = p0.fa_pct - p0.md_pct;
        let d1 = p1.fa_pct - p1.md_pct;
        if d0 == 0.0 {
            return Ok(EerResult {
                eer_percent: p0.fa_pct,
                threshold: finite_threshold(p0.threshold, p1.threshold),
            });
        }
        if d0 > 0.0 && d1 <= 0.0 {
            if d1 == 0.0 {
                return Ok(EerResult {
                    eer_percent: p1.fa_pct,
                    threshold: finite_threshold(p1.threshold, p0.threshold),
                });
            }
            let s = d0 / (d0 - d1);
            let eer = p0.fa_pct + s * (p1.fa_pct - p0.fa_pct);
            let t0 = p0.threshold.as_f64();
            let t1 = p1.threshold.as_f64();
            let threshold = if t0.is_finite() && t1.is_finite() {
                t0 + s * (t1 - t0)
            } else {
                finite_threshold(p0.threshold, p1.threshold)
            };
            return Ok(EerResult {
                eer_percent: eer,
                threshold,
            });
        }
    }
    // curves from sweep_det always cross; reaching here means the curve
    // was not built from two-class data
    Err(Error::SingleClass)
}

fn finite_threshold<R: Real>(primary: R, fallback: R) -> f64 {
    let p = primary.as_f64();
    if p.is_finite() {
        p
    } else {
        fallback.as_f64()
    }
}

/// Sweep scores and return the EER in one step.
pub fn eer_from_scores<R: Real>(sf: &ScoredFrames<R>) -> Result<EerResult> {
    equal_error_rate(&sweep_det(sf)?)
}

/// Write a DET curve as CSV: threshold, fa_pct, md_pct, nd_fa, nd_md.
pub fn write_det_csv<R: Real, W: Write>(curve: &DetCurve<R>, mut out: W) -> Result<()> {
    if curve.points().is_empty() {
        return Err(Error::InvalidParameter("empty DET curve".into()));
    }
    writeln!(out, "threshold,fa_pct,md_pct,nd_fa,nd_md")?;
    for (point, (nd_fa, nd_md)) in curve.points().iter().zip(curve.normal_deviate_points()) {
        writeln!(
            out,
            "{},{},{},{},{}",
            point.threshold, point.fa_pct, point.md_pct, nd_fa, nd_md
        )?;
    }
    Ok(())
}

pub fn export_det_csv<R: Real>(curve: &DetCurve<R>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_det_csv(curve, std::io::BufWriter::new(file))
}

/// Re-read a CSV produced by [`write_det_csv`].
pub fn read_det_csv(text: &str) -> Result<DetCurve<f64>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty DET csv".into()))?;
    if header != "threshold,fa_pct,md_pct,nd_fa,nd_md" {
        return Err(Error::Format(format!("unexpected DET header: {header}")));
    }
    let mut points = Vec::new();
    for (number, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "DET csv line {}: expected 5 fields, got {}",
                number + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("DET csv line {}: {e}", number + 2)))
        };
        points.push(OperatingPoint {
            threshold: parse(fields[0])?,
            fa_pct: parse(fields[1])?,
            md_pct: parse(fields[2])?,
        });
    }
    Ok(DetCurve { points })
}

/// Render the curve as a self-contained SVG in normal-deviate scale with
/// the FA = MD diagonal.
pub fn write_det_svg<R: Real, W: Write>(curve: &DetCurve<R>, mut out: W) -> Result<()> {
    if curve.points().is_empty() {
        return Err(Error::InvalidParameter("empty DET curve".into()));
    }
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 40.0;
    let lo = normal_deviate(1e-6);
    let hi = normal_deviate(1.0 - 1e-6);
    let to_px = |nd: f64| MARGIN + (nd - lo) / (hi - lo) * (SIZE - 2.0 * MARGIN);

    let path_points: Vec<String> = curve
        .normal_deviate_points()
        .iter()
        .map(|&(nd_fa, nd_md)| format!("{:.2},{:.2}", to_px(nd_fa), SIZE - to_px(nd_md)))
        .collect();

    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    )?;
    writeln!(
        out,
        "  <rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        SIZE - 2.0 * MARGIN,
        SIZE - 2.0 * MARGIN
    )?;
    writeln!(
        out,
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>",
        to_px(lo),
        SIZE - to_px(lo),
        to_px(hi),
        SIZE - to_px(hi)
    )?;
    writeln!(
        out,
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"#d22\" stroke-width=\"1.5\"/>",
        path_points.join(" ")
    )?;
    writeln!(
        out,
        "  <text x=\"{:.0}\" y=\"{:.0}\" font-size=\"12\">false alarm (normal deviate)</text>",
        SIZE / 2.0 - 90.0,
        SIZE - 8.0
    )?;
    writeln!(
        out,
        "  <text x=\"12\" y=\"{:.0}\" font-size=\"12\" transform=\"rotate(-90 12 {:.0})\">missed detection (normal deviate)</text>",
        SIZE / 2.0 + 90.0,
        SIZE / 2.0 + 90.0
    )?;
    writeln!(out, "</svg>")?;
    Ok(())
}

pub fn export_det_svg<R: Real>(curve: &DetCurve<R>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_det_svg(curve, std::io::BufWriter::new(file))
}
