//! Deterministic CSV reports. All floats print with six decimals so repeated
//! runs of the same bundle produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::pipeline::{ConfigScore, DepthEvalRow, ReplaySummary};
use crate::scenario::ConfigName;

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    match x {
        Some(v) => f(v),
        None => "nan".into(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn frames_csv(cfg: &ConfigScore) -> String {
    let mut out = String::from(
        "frame,occupied_count,inflated_count,iou,detection_rate,fpr,\
         fpr_inflation_artifact,fpr_sensor_invalid_fill,fpr_hallucination,clearance,scale_ok\n",
    );
    for s in &cfg.frames {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.frame,
            s.occupied_count,
            s.inflated_count,
            f(s.iou),
            opt(s.detection_rate),
            f(s.fpr.fpr),
            f(s.fpr.inflation_artifact),
            f(s.fpr.sensor_invalid_fill),
            f(s.fpr.hallucination),
            f(s.clearance),
            u8::from(s.scale_ok),
        );
    }
    out
}

/// File-name-safe form of a config name (`L+D+dyn` -> `L_D_dyn`).
pub fn config_slug(name: ConfigName) -> String {
    name.as_str().replace('+', "_")
}

fn summary_csv(summary: &ReplaySummary) -> String {
    // occupied-cell deltas are quoted against the lidar-only config when it
    // ran, otherwise against the baseline
    let reference = summary
        .configs
        .iter()
        .find(|c| c.name == ConfigName::LidarOnly)
        .map(|c| c.name)
        .unwrap_or(summary.baseline);
    let ref_occupied = summary
        .configs
        .iter()
        .find(|c| c.name == reference)
        .map(|c| mean(c.frames.iter().map(|s| s.occupied_count as f64)))
        .unwrap_or(0.0);
    let mut out = String::from(
        "config,frames,occupied_mean,occupied_delta_pct,iou_mean,iou_std,detection_mean,\
         fpr_mean,fpr_inflation_artifact_mean,fpr_sensor_invalid_fill_mean,\
         fpr_hallucination_mean,clearance_mean,jitter,centroid_drift,scale_fallbacks\n",
    );
    for cfg in &summary.configs {
        let occupied = mean(cfg.frames.iter().map(|s| s.occupied_count as f64));
        let delta_pct = if ref_occupied > 0.0 {
            (occupied - ref_occupied) / ref_occupied * 100.0
        } else {
            0.0
        };
        let ious: Vec<f64> = cfg.frames.iter().map(|s| s.iou).collect();
        let detections: Vec<f64> = cfg.frames.iter().filter_map(|s| s.detection_rate).collect();
        let fallbacks = cfg.frames.iter().filter(|s| !s.scale_ok).count();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.name,
            cfg.frames.len(),
            f(occupied),
            f(delta_pct),
            f(mean(ious.iter().copied())),
            f(std_dev(&ious)),
            if detections.is_empty() {
                "nan".into()
            } else {
                f(mean(detections.iter().copied()))
            },
            f(mean(cfg.frames.iter().map(|s| s.fpr.fpr))),
            f(mean(cfg.frames.iter().map(|s| s.fpr.inflation_artifact))),
            f(mean(cfg.frames.iter().map(|s| s.fpr.sensor_invalid_fill))),
            f(mean(cfg.frames.iter().map(|s| s.fpr.hallucination))),
            f(mean(cfg.frames.iter().map(|s| s.clearance))),
            f(cfg.jitter),
            f(cfg.centroid_drift),
            fallbacks,
        );
    }
    out
}

fn timing_csv(summary: &ReplaySummary) -> String {
    let mut out = String::from("config,frame,build_ms\n");
    for cfg in &summary.configs {
        for s in &cfg.frames {
            let _ = writeln!(out, "{},{},{}", cfg.name, s.frame, f(s.build_ms));
        }
    }
    out
}

pub fn write_reports(out: &Path, summary: &ReplaySummary, timing: bool) -> io::Result<()> {
    fs::write(out.join("summary.csv"), summary_csv(summary))?;
    for cfg in &summary.configs {
        fs::write(
            out.join(format!("frames_{}.csv", config_slug(cfg.name))),
            frames_csv(cfg),
        )?;
    }
    if timing {
        fs::write(out.join("timing.csv"), timing_csv(summary))?;
    }
    Ok(())
}

pub fn write_depth_report(out: &Path, band: (f64, f64), rows: &[DepthEvalRow]) -> io::Result<()> {
    let mut text = String::from("frame,source,band_lo,band_hi,count,rmse,mae,absrel,delta1\n");
    for r in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            r.frame,
            r.source,
            f(band.0),
            f(band.1),
            r.metrics.count,
            f(r.metrics.rmse),
            f(r.metrics.mae),
            f(r.metrics.abs_rel),
            f(r.metrics.delta1),
        );
    }
    fs::write(out.join("depth.csv"), text)?;

    let mut summary = String::from("source,count,rmse_mean,mae_mean,absrel_mean,delta1_mean\n");
    for source in ["learned_scaled", "fused"] {
        let of_source: Vec<&DepthEvalRow> = rows.iter().filter(|r| r.source == source).collect();
        if of_source.is_empty() {
            continue;
        }
        let m = |g: fn(&DepthEvalRow) -> f64| {
            of_source.iter().map(|r| g(r)).sum::<f64>() / of_source.len() as f64
        };
        let total: usize = of_source.iter().map(|r| r.metrics.count).sum();
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            source,
            total,
            f(m(|r| r.metrics.rmse)),
            f(m(|r| r.metrics.mae)),
            f(m(|r| r.metrics.abs_rel)),
            f(m(|r| r.metrics.delta1)),
        );
    }
    fs::write(out.join("depth_summary.csv"), summary)
}
