//! JSON-lines record files.
//!
//! One JSON object per line. Blank lines and lines starting with `#` are
//! skipped, unknown fields are ignored, and floats are written in shortest
//! round-trip form so a write/read cycle reproduces every value bit for bit.
//! Angles are always radians, in fields suffixed `_rad`.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::anchor_codec::{Anchor, EncodedEllipse};
use crate::detection_eval::GroundTruth;
use crate::error::{Error, Result};
use crate::geometry::Ellipse;
use crate::raster_metrics::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseRecord {
    #[serde(default)]
    pub image_id: String,
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_l: f64,
    pub sigma_s: f64,
    pub theta_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl EllipseRecord {
    pub fn from_ellipse(e: &Ellipse, image_id: impl Into<String>, score: Option<f64>) -> Self {
        Self {
            image_id: image_id.into(),
            mu_x: e.mu_x(),
            mu_y: e.mu_y(),
            sigma_l: e.sigma_l(),
            sigma_s: e.sigma_s(),
            theta_rad: e.theta(),
            score,
        }
    }

    pub fn ellipse(&self) -> Result<Ellipse> {
        Ellipse::new(self.mu_x, self.mu_y, self.sigma_l, self.sigma_s, self.theta_rad)
    }

    /// Detections need a score; a missing one is an error.
    pub fn detection(&self) -> Result<Detection> {
        let score = self
            .score
            .ok_or_else(|| Error::invalid(format!("detection on image '{}' has no score", self.image_id)))?;
        Detection::new(self.ellipse()?, score, self.image_id.clone())
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth::new(self.ellipse()?, self.image_id.clone()))
    }
}

impl From<&Detection> for EllipseRecord {
    fn from(d: &Detection) -> Self {
        Self::from_ellipse(&d.ellipse, d.image_id.clone(), Some(d.score))
    }
}

impl From<&GroundTruth> for EllipseRecord {
    fn from(g: &GroundTruth) -> Self {
        Self::from_ellipse(&g.ellipse, g.image_id.clone(), None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl AnchorRecord {
    pub fn anchor(&self) -> Result<Anchor> {
        Anchor::new(self.cx, self.cy, self.w, self.h)
    }
}

impl From<&Anchor> for AnchorRecord {
    fn from(a: &Anchor) -> Self {
        Self { cx: a.cx, cy: a.cy, w: a.w, h: a.h }
    }
}

/// Encoded targets, optionally carrying the anchor they are relative to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedRecord {
    #[serde(default)]
    pub image_id: String,
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
    pub t_tan: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorRecord>,
}

impl EncodedRecord {
    pub fn encoded(&self) -> EncodedEllipse {
        EncodedEllipse::new(self.tx, self.ty, self.tw, self.th, self.t_tan)
    }

    pub fn new(enc: &EncodedEllipse, image_id: impl Into<String>, anchor: Option<&Anchor>) -> Self {
        Self {
            image_id: image_id.into(),
            tx: enc.tx,
            ty: enc.ty,
            tw: enc.tw,
            th: enc.th,
            t_tan: enc.t_tan,
            anchor: anchor.map(AnchorRecord::from),
        }
    }
}

/// Parses every record, reporting the 1-based line of the first bad one.
pub fn read_records<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec = serde_json::from_str(trimmed).map_err(|e| Error::Record { line: i + 1, msg: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records<T: Serialize>(mut writer: impl Write, records: &[T]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Reads ellipse records and converts them, keeping the line number on failure.
pub fn read_with<T>(reader: impl BufRead, convert: impl Fn(&EllipseRecord) -> Result<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec: EllipseRecord =
            serde_json::from_str(trimmed).map_err(|e| Error::Record { line: i + 1, msg: e.to_string() })?;
        let v = convert(&rec).map_err(|e| match e {
            Error::InvalidInput(msg) | Error::DegenerateEllipse(msg) => Error::Record { line: i + 1, msg },
            other => other,
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn read_detections(reader: impl BufRead) -> Result<Vec<Detection>> {
    read_with(reader, EllipseRecord::detection)
}

pub fn read_ground_truths(reader: impl BufRead) -> Result<Vec<GroundTruth>> {
    read_with(reader, EllipseRecord::ground_truth)
}

pub fn read_ellipses(reader: impl BufRead) -> Result<Vec<Ellipse>> {
    read_with(reader, EllipseRecord::ellipse)
}

pub fn write_detections(writer: impl Write, dets: &[Detection]) -> Result<()> {
    write_records(writer, &dets.iter().map(EllipseRecord::from).collect::<Vec<_>>())
}

pub fn write_ground_truths(writer: impl Write, gts: &[GroundTruth]) -> Result<()> {
    write_records(writer, &gts.iter().map(EllipseRecord::from).collect::<Vec<_>>())
}
