//! Plain-text record streams: input detections, ground-truth tracks, and
//! tracker output.
//!
//! All three layouts are comma-separated ASCII with LF line endings:
//!
//! - detections: `frame,class_id,confidence,x_min,y_min,width,height`
//! - ground truth: `frame,track_id,class_id,x_min,y_min,width,height`
//! - tracker output: `frame,track_id,class_id,x_min,y_min,width,height,status`
//!   with status `M` (matched) or `I` (inferred during occlusion)
//!
//! Frames are 1-based, track ids start at 1, and class ids are 0 flower,
//! 1 immature fruit, 2 mature fruit. Blank lines and lines starting with `#`
//! are ignored by every parser, so writers may prepend comment headers.
//! Floats are written in shortest round-trip form; parsing is
//! locale-independent (decimal point only).

use crate::geometry::BBox;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate identity (frame {frame}, class {class_id}, track {track_id})")]
    DuplicateIdentity { line: usize, frame: u32, class_id: u8, track_id: u32 },
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("no ground truth at {path} and no per-class files alongside it")]
    Missing { path: PathBuf },
}

/// Object class. The on-disk encoding is the numeric discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassId {
    Flower = 0,
    ImmatureFruit = 1,
    MatureFruit = 2,
}

impl ClassId {
    pub const ALL: [ClassId; 3] = [ClassId::Flower, ClassId::ImmatureFruit, ClassId::MatureFruit];

    pub fn from_u8(v: u8) -> Option<ClassId> {
        match v {
            0 => Some(ClassId::Flower),
            1 => Some(ClassId::ImmatureFruit),
            2 => Some(ClassId::MatureFruit),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            ClassId::Flower => "flower",
            ClassId::ImmatureFruit => "immature_fruit",
            ClassId::MatureFruit => "mature_fruit",
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub frame: u32,
    pub class_id: ClassId,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtRecord {
    pub frame: u32,
    pub track_id: u32,
    pub class_id: ClassId,
    pub bbox: BBox,
}

/// Whether a track record came from a detection or was inferred while the
/// object was presumed occluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Matched,
    Inferred,
}

impl TrackStatus {
    pub fn letter(self) -> char {
        match self {
            TrackStatus::Matched => 'M',
            TrackStatus::Inferred => 'I',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRecord {
    pub frame: u32,
    pub track_id: u32,
    pub class_id: ClassId,
    pub bbox: BBox,
    pub status: TrackStatus,
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedLine { line, reason: reason.into() }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_u32(s: &str, what: &str, line: usize) -> Result<u32, FormatError> {
    s.parse::<u32>().map_err(|_| malformed(line, format!("invalid {what}: {s:?}")))
}

fn parse_f64(s: &str, what: &str, line: usize) -> Result<f64, FormatError> {
    s.parse::<f64>().map_err(|_| malformed(line, format!("invalid {what}: {s:?}")))
}

fn parse_frame(s: &str, line: usize) -> Result<u32, FormatError> {
    let frame = parse_u32(s, "frame", line)?;
    if frame == 0 {
        return Err(malformed(line, "frame must be >= 1"));
    }
    Ok(frame)
}

fn parse_track_id(s: &str, line: usize) -> Result<u32, FormatError> {
    let id = parse_u32(s, "track_id", line)?;
    if id == 0 {
        return Err(malformed(line, "track_id must be >= 1"));
    }
    Ok(id)
}

fn parse_class(s: &str, line: usize) -> Result<ClassId, FormatError> {
    let raw = s.parse::<u8>().map_err(|_| malformed(line, format!("invalid class_id: {s:?}")))?;
    ClassId::from_u8(raw).ok_or_else(|| malformed(line, "class_id out of range"))
}

fn parse_bbox(fields: &[&str], line: usize) -> Result<BBox, FormatError> {
    let x = parse_f64(fields[0], "x_min", line)?;
    let y = parse_f64(fields[1], "y_min", line)?;
    let w = parse_f64(fields[2], "width", line)?;
    let h = parse_f64(fields[3], "height", line)?;
    BBox::new(x, y, w, h).map_err(|e| malformed(line, e.to_string()))
}

/// Parses a detection file. Records are returned in file order; frames need
/// not be sorted on input.
pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>, FormatError> {
    let mut out = Vec::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(malformed(line, format!("expected 7 fields, got {}", fields.len())));
        }
        let frame = parse_frame(fields[0], line)?;
        let class_id = parse_class(fields[1], line)?;
        let confidence = parse_f64(fields[2], "confidence", line)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(malformed(line, "confidence outside [0,1]"));
        }
        let bbox = parse_bbox(&fields[3..7], line)?;
        out.push(DetectionRecord { frame, class_id, confidence, bbox });
    }
    Ok(out)
}

/// Tracks `(frame, class, id)` triples so duplicates are rejected in one pass.
struct IdentityGuard {
    seen: std::collections::HashSet<(u32, u8, u32)>,
}

impl IdentityGuard {
    fn new() -> Self {
        IdentityGuard { seen: std::collections::HashSet::new() }
    }

    fn check(&mut self, frame: u32, class_id: ClassId, track_id: u32, line: usize) -> Result<(), FormatError> {
        if !self.seen.insert((frame, class_id.as_u8(), track_id)) {
            return Err(FormatError::DuplicateIdentity {
                line,
                frame,
                class_id: class_id.as_u8(),
                track_id,
            });
        }
        Ok(())
    }
}

/// Parses a combined ground-truth file (all classes in one stream).
pub fn parse_ground_truth(text: &str) -> Result<Vec<GtRecord>, FormatError> {
    let mut out = Vec::new();
    let mut guard = IdentityGuard::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(malformed(line, format!("expected 7 fields, got {}", fields.len())));
        }
        let frame = parse_frame(fields[0], line)?;
        let track_id = parse_track_id(fields[1], line)?;
        let class_id = parse_class(fields[2], line)?;
        let bbox = parse_bbox(&fields[3..7], line)?;
        guard.check(frame, class_id, track_id, line)?;
        out.push(GtRecord { frame, track_id, class_id, bbox });
    }
    Ok(out)
}

/// Parses a per-class ground-truth file. The lines carry no class column
/// (`frame,track_id,x_min,y_min,width,height`); the class comes from the
/// caller, which reads it off the `_c0/_c1/_c2` filename suffix.
pub fn parse_ground_truth_single_class(
    text: &str,
    class_id: ClassId,
) -> Result<Vec<GtRecord>, FormatError> {
    let mut out = Vec::new();
    let mut guard = IdentityGuard::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(malformed(line, format!("expected 6 fields, got {}", fields.len())));
        }
        let frame = parse_frame(fields[0], line)?;
        let track_id = parse_track_id(fields[1], line)?;
        let bbox = parse_bbox(&fields[2..6], line)?;
        guard.check(frame, class_id, track_id, line)?;
        out.push(GtRecord { frame, track_id, class_id, bbox });
    }
    Ok(out)
}

/// Parses tracker output (the 8-field layout with a trailing status letter).
pub fn parse_tracks(text: &str) -> Result<Vec<TrackRecord>, FormatError> {
    let mut out = Vec::new();
    let mut guard = IdentityGuard::new();
    for (line, raw) in data_lines(text) {
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(malformed(line, format!("expected 8 fields, got {}", fields.len())));
        }
        let frame = parse_frame(fields[0], line)?;
        let track_id = parse_track_id(fields[1], line)?;
        let class_id = parse_class(fields[2], line)?;
        let bbox = parse_bbox(&fields[3..7], line)?;
        let status = match fields[7] {
            "M" => TrackStatus::Matched,
            "I" => TrackStatus::Inferred,
            other => return Err(malformed(line, format!("invalid status: {other:?}"))),
        };
        guard.check(frame, class_id, track_id, line)?;
        out.push(TrackRecord { frame, track_id, class_id, bbox, status });
    }
    Ok(out)
}

pub fn write_detections(records: &[DetectionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.frame, r.class_id, r.confidence, r.bbox.x_min, r.bbox.y_min, r.bbox.width, r.bbox.height
        ));
    }
    out
}

pub fn write_ground_truth(records: &[GtRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.frame, r.track_id, r.class_id, r.bbox.x_min, r.bbox.y_min, r.bbox.width, r.bbox.height
        ));
    }
    out
}

/// Serializes track records sorted by (frame, class, id).
pub fn write_tracks(records: &[TrackRecord]) -> String {
    let mut sorted: Vec<&TrackRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.class_id.as_u8(), r.track_id));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.frame,
            r.track_id,
            r.class_id,
            r.bbox.x_min,
            r.bbox.y_min,
            r.bbox.width,
            r.bbox.height,
            r.status.letter()
        ));
    }
    out
}

/// Loads ground truth from `path`, or, when `path` does not exist, from the
/// per-class files `stem_c0/../stem_c2` next to it (at least one must exist).
/// Merged records are sorted by (frame, class, id).
pub fn load_ground_truth(path: &Path) -> Result<Vec<GtRecord>, LoadError> {
    let read = |p: &Path| -> Result<String, LoadError> {
        std::fs::read_to_string(p).map_err(|source| LoadError::Io { path: p.to_path_buf(), source })
    };
    if path.exists() {
        let text = read(path)?;
        return parse_ground_truth(&text)
            .map_err(|source| LoadError::Format { path: path.to_path_buf(), source });
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned());
    let mut merged = Vec::new();
    let mut found = false;
    for class in ClassId::ALL {
        let mut name = format!("{stem}_c{}", class.as_u8());
        if let Some(ext) = &ext {
            name.push('.');
            name.push_str(ext);
        }
        let candidate = path.with_file_name(name);
        if !candidate.exists() {
            continue;
        }
        found = true;
        let text = read(&candidate)?;
        let records = parse_ground_truth_single_class(&text, class)
            .map_err(|source| LoadError::Format { path: candidate.clone(), source })?;
        merged.extend(records);
    }
    if !found {
        return Err(LoadError::Missing { path: path.to_path_buf() });
    }
    merged.sort_by_key(|r| (r.frame, r.class_id.as_u8(), r.track_id));
    Ok(merged)
}
