//! PSNR and detection-quality scoring, plus the CSV report.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{BinaryMask, ClassMap, Frame, Label};

/// Reported for bit-identical frames so the CSV stays finite.
pub const PSNR_IDENTICAL_DB: f64 = 100.0;

/// Peak signal-to-noise ratio in dB over all pixels and channels jointly.
/// The squared-error sum is exact integer arithmetic; identical frames
/// report the 100 dB sentinel.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum_sq: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sum_sq == 0 {
        return Ok(PSNR_IDENTICAL_DB);
    }
    let mse = sum_sq as f64 / a.data().len() as f64;
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Detection quality of a classmap against ground-truth masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskScores {
    /// Fraction of truth-rain pixels labelled rain.
    pub rain_recall: f64,
    /// Fraction of rain-labelled pixels that are truth rain.
    pub rain_precision: f64,
    /// Fraction of truth-object pixels labelled object.
    pub object_recall: f64,
}

/// Count-based recall/precision. Empty denominators score 1.0.
pub fn mask_scores(
    pred: &ClassMap,
    truth_rain: &BinaryMask,
    truth_object: &BinaryMask,
) -> Result<MaskScores> {
    let dims = (pred.width(), pred.height(), 1);
    for mask in [truth_rain, truth_object] {
        if (mask.width(), mask.height(), 1) != dims {
            return Err(Error::shape(dims, (mask.width(), mask.height(), 1)));
        }
    }
    let mut rain_hit = 0usize;
    let mut rain_truth = 0usize;
    let mut rain_pred = 0usize;
    let mut object_hit = 0usize;
    let mut object_truth = 0usize;
    for ((&label, &rain), &object) in pred
        .labels()
        .iter()
        .zip(truth_rain.bits())
        .zip(truth_object.bits())
    {
        let is_rain = label == Label::Rain;
        let is_object = label == Label::Object;
        rain_truth += rain as usize;
        rain_pred += is_rain as usize;
        rain_hit += (is_rain && rain == 1) as usize;
        object_truth += object as usize;
        object_hit += (is_object && object == 1) as usize;
    }
    let ratio = |hit: usize, total: usize| {
        if total == 0 {
            1.0
        } else {
            hit as f64 / total as f64
        }
    };
    Ok(MaskScores {
        rain_recall: ratio(rain_hit, rain_truth),
        rain_precision: ratio(rain_hit, rain_pred),
        object_recall: ratio(object_hit, object_truth),
    })
}

/// One row of the evaluation report.
#[derive(Debug, Clone, Copy)]
pub struct FrameScore {
    pub frame_index: u32,
    /// Rainy input vs clean truth.
    pub psnr_input_db: f64,
    /// Derained output vs clean truth.
    pub psnr_output_db: f64,
    pub rain_recall: f64,
    pub rain_precision: f64,
    pub object_recall: f64,
}

pub const REPORT_HEADER: &str =
    "frame,psnr_input_db,psnr_output_db,rain_recall,rain_precision,object_recall";

/// Write per-frame scores plus a trailing `avg` row, 4-decimal fixed point.
pub fn write_report(scores: &[FrameScore], path: &Path) -> Result<()> {
    fs::write(path, render_report(scores)?)?;
    Ok(())
}

pub fn render_report(scores: &[FrameScore]) -> Result<String> {
    if scores.is_empty() {
        return Err(Error::Config(
            "report needs at least one frame score".into(),
        ));
    }
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    let mut sums = [0.0f64; 5];
    for s in scores {
        let cols = [
            s.psnr_input_db,
            s.psnr_output_db,
            s.rain_recall,
            s.rain_precision,
            s.object_recall,
        ];
        for (sum, v) in sums.iter_mut().zip(cols) {
            *sum += v;
        }
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            s.frame_index, cols[0], cols[1], cols[2], cols[3], cols[4]
        ));
    }
    let n = scores.len() as f64;
    out.push_str(&format!(
        "avg,{:.4},{:.4},{:.4},{:.4},{:.4}\n",
        sums[0] / n,
        sums[1] / n,
        sums[2] / n,
        sums[3] / n,
        sums[4] / n
    ));
    Ok(out)
}

/// Two-column report used by the standalone `psnr` subcommand.
pub fn render_psnr_report(rows: &[(u32, f64)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("report needs at least one frame".into()));
    }
    let mut out = String::from("frame,psnr_db\n");
    let mut sum = 0.0;
    for &(frame, value) in rows {
        sum += value;
        out.push_str(&format!("{frame},{value:.4}\n"));
    }
    out.push_str(&format!("avg,{:.4}\n", sum / rows.len() as f64));
    Ok(out)
}

pub fn write_psnr_report(rows: &[(u32, f64)], path: &Path) -> Result<()> {
    fs::write(path, render_psnr_report(rows)?)?;
    Ok(())
}
