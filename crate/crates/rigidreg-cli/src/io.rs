//! Text formats: correspondence files, source clouds, and JSON pose or
//! ground-truth records.
//!
//! Correspondence files are UTF-8 text with one pair per line, six
//! whitespace-separated decimals `x1 x2 x3 y1 y2 y3`. Lines starting with
//! `#` and blank lines are skipped. Numbers are written with 17 significant
//! digits so a read-back reproduces every `f64` bit-exactly.

use anyhow::{bail, Context, Result};
use nalgebra::{Matrix3, Vector3};
use rigidreg::synth::SynthInstance;
use rigidreg::{CorrespondenceSet, RigidTransform};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Parses a correspondence file. Errors name the offending 1-based line.
pub fn read_correspondences(path: &Path) -> Result<CorrespondenceSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = parse_numbers(path, idx + 1, line, 6)?;
        pairs.push((
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        ));
    }
    Ok(CorrespondenceSet::from_pairs(pairs))
}

/// Writes a correspondence file that [`read_correspondences`] parses back
/// to the identical in-memory set.
pub fn write_correspondences(path: &Path, set: &CorrespondenceSet) -> Result<()> {
    let mut out = String::from("# x1 x2 x3 y1 y2 y3\n");
    for i in 0..set.len() {
        let c = set.get(i);
        out.push_str(&format!(
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n",
            c.x[0], c.x[1], c.x[2], c.y[0], c.y[1], c.y[2]
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Parses a source point cloud: one `x1 x2 x3` line per point, with the
/// same comment and blank-line rules as correspondence files.
pub fn read_source_cloud(path: &Path) -> Result<Vec<Vector3<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = parse_numbers(path, idx + 1, line, 3)?;
        points.push(Vector3::new(v[0], v[1], v[2]));
    }
    Ok(points)
}

fn parse_numbers(path: &Path, lineno: usize, line: &str, expect: usize) -> Result<Vec<f64>> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != expect {
        bail!(
            "{}:{}: expected {} numbers per line, found {}",
            path.display(),
            lineno,
            expect,
            tokens.len()
        );
    }
    tokens
        .iter()
        .map(|tok| {
            tok.parse::<f64>()
                .with_context(|| format!("{}:{}: '{}' is not a number", path.display(), lineno, tok))
        })
        .collect()
}

/// An estimated pose plus the indices it explains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    /// Row-major 3×3 rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    /// Consensus indices into the correspondence file (comment and blank
    /// lines do not count).
    pub consensus: Vec<usize>,
}

impl PoseFile {
    pub fn new(tf: &RigidTransform, consensus: &[usize]) -> Self {
        Self {
            rotation: flatten_row_major(&tf.rotation),
            translation: tf.translation.into(),
            consensus: consensus.to_vec(),
        }
    }
}

/// The ground truth behind a synthetic correspondence file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    /// Row-major 3×3 rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    /// 1 where the correspondence at that index is a true inlier, else 0.
    pub inlier_mask: Vec<u8>,
}

impl TruthFile {
    pub fn new(inst: &SynthInstance) -> Self {
        Self {
            rotation: flatten_row_major(&inst.truth.rotation),
            translation: inst.truth.translation.into(),
            inlier_mask: inst.inlier_mask.iter().map(|&m| m as u8).collect(),
        }
    }

    pub fn transform(&self) -> RigidTransform {
        RigidTransform::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from(self.translation),
        )
    }

    pub fn mask(&self) -> Vec<bool> {
        self.inlier_mask.iter().map(|&m| m != 0).collect()
    }
}

fn flatten_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
