//! On-disk frame bundles.
//!
//! Layout: `manifest.json`, `frames/%06d.dfb`, `lidar/%06d.dls`.
//!
//! A `.dfb` file holds one or more frame records. Each record is:
//! magic `DFB1`, u32 width, u32 height, u8 channel bitmask (bit 0 depth f32,
//! bit 1 confidence f32, bit 2 label u8), then the present channels in bit
//! order, row-major, little-endian. A sequence frame stores three records:
//! ground truth (depth + labels), ToF (depth + confidence), learned
//! (depth + confidence).
//!
//! A `.dls` file is one scan: magic `DLS1`, f32 angle_min, f32
//! angle_increment, f32 scan_height, f32 range_max, u32 count, f32 ranges
//! with NaN marking no return.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use depthfuse_core::{DepthFrame, LabelMap, LidarScan, Pose2, SemClass};

use crate::scenario::{PoseSpec, Scenario, ScenarioError};

pub const FRAME_MAGIC: &[u8; 4] = b"DFB1";
pub const SCAN_MAGIC: &[u8; 4] = b"DLS1";

pub const CHAN_DEPTH: u8 = 1 << 0;
pub const CHAN_CONFIDENCE: u8 = 1 << 1;
pub const CHAN_LABEL: u8 = 1 << 2;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> BundleError {
    BundleError::Corrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// One stored frame record: always depth, optionally confidence and labels.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub depth: DepthFrame,
    pub labels: Option<LabelMap>,
}

fn write_record<W: Write>(
    w: &mut W,
    depth: &DepthFrame,
    confidence: bool,
    labels: Option<&LabelMap>,
) -> io::Result<()> {
    let mut mask = CHAN_DEPTH;
    if confidence {
        mask |= CHAN_CONFIDENCE;
    }
    if labels.is_some() {
        mask |= CHAN_LABEL;
    }
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&(depth.width as u32).to_le_bytes())?;
    w.write_all(&(depth.height as u32).to_le_bytes())?;
    w.write_all(&[mask])?;
    for d in &depth.depth {
        w.write_all(&(*d as f32).to_le_bytes())?;
    }
    if confidence {
        for c in &depth.confidence {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
    }
    if let Some(map) = labels {
        for l in &map.labels {
            w.write_all(&[l.id()])?;
        }
    }
    Ok(())
}

fn read_exact_or(path: &Path, r: &mut impl Read, buf: &mut [u8]) -> Result<(), BundleError> {
    r.read_exact(buf)
        .map_err(|_| corrupt(path, "truncated record"))
}

fn read_record(path: &Path, r: &mut impl Read, timestamp: f64) -> Result<FrameRecord, BundleError> {
    let mut magic = [0u8; 4];
    read_exact_or(path, r, &mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(corrupt(path, "bad frame magic"));
    }
    let mut u32buf = [0u8; 4];
    read_exact_or(path, r, &mut u32buf)?;
    let width = u32::from_le_bytes(u32buf) as usize;
    read_exact_or(path, r, &mut u32buf)?;
    let height = u32::from_le_bytes(u32buf) as usize;
    let mut mask = [0u8; 1];
    read_exact_or(path, r, &mut mask)?;
    let mask = mask[0];
    if mask & CHAN_DEPTH == 0 {
        return Err(corrupt(path, "record without a depth channel"));
    }
    if mask & !(CHAN_DEPTH | CHAN_CONFIDENCE | CHAN_LABEL) != 0 {
        return Err(corrupt(path, format!("unknown channel bits {mask:#04x}")));
    }
    let n = width
        .checked_mul(height)
        .filter(|n| *n > 0 && *n <= 64 << 20)
        .ok_or_else(|| corrupt(path, "implausible frame dimensions"))?;
    let mut depth = DepthFrame::zeroed(width, height, timestamp);
    let mut f32buf = [0u8; 4];
    for i in 0..n {
        read_exact_or(path, r, &mut f32buf)?;
        depth.depth[i] = f32::from_le_bytes(f32buf) as f64;
    }
    if mask & CHAN_CONFIDENCE != 0 {
        for i in 0..n {
            read_exact_or(path, r, &mut f32buf)?;
            depth.confidence[i] = f32::from_le_bytes(f32buf) as f64;
        }
    } else {
        depth.confidence = vec![1.0; n];
    }
    let labels = if mask & CHAN_LABEL != 0 {
        let mut raw = vec![0u8; n];
        read_exact_or(path, r, &mut raw)?;
        let mut map = LabelMap::filled(width, height, SemClass::Other);
        for (i, id) in raw.iter().enumerate() {
            map.labels[i] = SemClass::from_id(*id)
                .ok_or_else(|| corrupt(path, format!("label id {id} out of range")))?;
        }
        Some(map)
    } else {
        None
    };
    Ok(FrameRecord { depth, labels })
}

pub fn write_scan(path: &Path, scan: &LidarScan) -> Result<(), BundleError> {
    let mut buf = Vec::with_capacity(24 + scan.ranges.len() * 4);
    buf.extend_from_slice(SCAN_MAGIC);
    buf.extend_from_slice(&(scan.angle_min as f32).to_le_bytes());
    buf.extend_from_slice(&(scan.angle_increment as f32).to_le_bytes());
    buf.extend_from_slice(&(scan.scan_height as f32).to_le_bytes());
    buf.extend_from_slice(&(scan.range_max as f32).to_le_bytes());
    buf.extend_from_slice(&(scan.ranges.len() as u32).to_le_bytes());
    for r in &scan.ranges {
        buf.extend_from_slice(&(*r as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(io_err(path))
}

pub fn read_scan(path: &Path) -> Result<LidarScan, BundleError> {
    let data = fs::read(path).map_err(io_err(path))?;
    if data.len() < 24 || &data[0..4] != SCAN_MAGIC {
        return Err(corrupt(path, "bad scan header"));
    }
    let f = |o: usize| f32::from_le_bytes(data[o..o + 4].try_into().unwrap()) as f64;
    let count = u32::from_le_bytes(data[20..24].try_into().unwrap()) as usize;
    if data.len() != 24 + count * 4 {
        return Err(corrupt(path, "scan length mismatch"));
    }
    let ranges = (0..count).map(|i| f(24 + i * 4)).collect();
    Ok(LidarScan {
        angle_min: f(4),
        angle_increment: f(8),
        scan_height: f(12),
        range_max: f(16),
        ranges,
    })
}

/// Everything one frame of a sequence stores.
#[derive(Debug, Clone)]
pub struct SequenceFrame {
    pub gt: DepthFrame,
    pub labels: LabelMap,
    pub tof: DepthFrame,
    pub learned: DepthFrame,
    pub scan: LidarScan,
    pub pose: Pose2,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub frames: usize,
    pub dt: f64,
    pub scenario: Scenario,
    pub poses: Vec<PoseSpec>,
    pub times: Vec<f64>,
}

pub fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join("frames").join(format!("{k:06}.dfb"))
}

pub fn scan_path(dir: &Path, k: usize) -> PathBuf {
    dir.join("lidar").join(format!("{k:06}.dls"))
}

pub fn write_frame_file(
    dir: &Path,
    k: usize,
    gt: &DepthFrame,
    labels: &LabelMap,
    tof: &DepthFrame,
    learned: &DepthFrame,
) -> Result<(), BundleError> {
    let path = frame_path(dir, k);
    let mut buf = Vec::new();
    write_record(&mut buf, gt, false, Some(labels)).map_err(io_err(&path))?;
    write_record(&mut buf, tof, true, None).map_err(io_err(&path))?;
    write_record(&mut buf, learned, true, None).map_err(io_err(&path))?;
    fs::write(&path, buf).map_err(io_err(&path))
}

pub fn read_frame_file(
    dir: &Path,
    k: usize,
    timestamp: f64,
) -> Result<(DepthFrame, LabelMap, DepthFrame, DepthFrame), BundleError> {
    let path = frame_path(dir, k);
    let data = fs::read(&path).map_err(io_err(&path))?;
    let mut cursor = io::Cursor::new(data);
    let gt = read_record(&path, &mut cursor, timestamp)?;
    let tof = read_record(&path, &mut cursor, timestamp)?;
    let learned = read_record(&path, &mut cursor, timestamp)?;
    if cursor.position() != cursor.get_ref().len() as u64 {
        return Err(corrupt(&path, "trailing bytes after the last record"));
    }
    let labels = gt
        .labels
        .ok_or_else(|| corrupt(&path, "ground-truth record is missing labels"))?;
    Ok((gt.depth, labels, tof.depth, learned.depth))
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), BundleError> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

/// A fully loaded bundle.
#[derive(Debug)]
pub struct Bundle {
    pub manifest: Manifest,
    pub frames: Vec<SequenceFrame>,
}

pub fn load_bundle(dir: &Path) -> Result<Bundle, BundleError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != "bundle-v1" {
        return Err(corrupt(&manifest_path, format!("unknown format `{}`", manifest.format)));
    }
    if manifest.poses.len() != manifest.frames || manifest.times.len() != manifest.frames {
        return Err(corrupt(&manifest_path, "pose/time tables do not match frame count"));
    }
    manifest.scenario.validate()?;
    let mut frames = Vec::with_capacity(manifest.frames);
    for k in 0..manifest.frames {
        let time = manifest.times[k];
        let (gt, labels, tof, learned) = read_frame_file(dir, k, time)?;
        let scan = read_scan(&scan_path(dir, k))?;
        frames.push(SequenceFrame {
            gt,
            labels,
            tof,
            learned,
            scan,
            pose: manifest.poses[k].build(),
            time,
        });
    }
    Ok(Bundle { manifest, frames })
}
