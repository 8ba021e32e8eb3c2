//! Shared tracker state machine and the two baseline trackers.
//!
//! All trackers here follow the same per-frame contract: one `step` call per
//! frame with that frame's same-class detections, returning the records to
//! emit. Classes never share a tracker instance; run three instances for a
//! three-class sequence.

pub mod assignment;
mod cta;
mod sort;

pub use cta::CtaTracker;
pub use sort::SortTracker;

use crate::formats::{ClassId, TrackRecord};
use crate::geometry::BBox;
use crate::ibta::LocationScore;
use crate::kalman::{KalmanParams, KalmanState};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Direction the rig moves through the image, in image coordinates
/// (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionAxis {
    PosX,
    NegX,
    #[default]
    PosY,
    NegY,
}

impl MotionAxis {
    /// Unit step in image coordinates.
    pub fn unit(self) -> (f64, f64) {
        match self {
            MotionAxis::PosX => (1.0, 0.0),
            MotionAxis::NegX => (-1.0, 0.0),
            MotionAxis::PosY => (0.0, 1.0),
            MotionAxis::NegY => (0.0, -1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotionAxis::PosX => "+x",
            MotionAxis::NegX => "-x",
            MotionAxis::PosY => "+y",
            MotionAxis::NegY => "-y",
        }
    }
}

impl fmt::Display for MotionAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotionAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+x" => Ok(MotionAxis::PosX),
            "-x" => Ok(MotionAxis::NegX),
            "+y" => Ok(MotionAxis::PosY),
            "-y" => Ok(MotionAxis::NegY),
            other => Err(format!("motion_axis must be one of +x, -x, +y, -y, got `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, reason: String },
    #[error("invalid config: {0}")]
    Constraint(String),
}

/// Knobs shared by every tracker. Speeds are in pixels per frame as seen in
/// the image; the tolerances a rig actually needs depend on camera height and
/// frame rate, so everything is exposed here and echoed into output headers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Minimum IOU between a (predicted) track box and a detection to match.
    pub iou_threshold: f64,
    /// Minimum IOU between two same-frame boxes to count them as adjacent
    /// when assigning location scores.
    pub neighbor_iou_threshold: f64,
    /// Expected per-frame displacement along `motion_axis`.
    pub v_avg: f64,
    /// Upper bound on the per-frame displacement.
    pub v_max: f64,
    pub motion_axis: MotionAxis,
    /// Consecutive unmatched frames a track survives.
    pub max_age: u32,
    /// Matched frames before a track's records are emitted.
    pub min_hits: u32,
    /// How many frames after death a track may still be revived by a
    /// compatible detection. Zero disables reactivation.
    pub reactivation_window: u32,
    /// Kalman noise scaling, used by the SORT baseline only.
    pub kalman: KalmanParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            iou_threshold: 0.3,
            neighbor_iou_threshold: 0.1,
            v_avg: 12.0,
            v_max: 15.0,
            motion_axis: MotionAxis::PosY,
            max_age: 3,
            min_hits: 1,
            reactivation_window: 3,
            kalman: KalmanParams::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Constraint(msg));
        if !(self.v_avg.is_finite() && self.v_max.is_finite()) {
            return err("speeds must be finite".into());
        }
        if self.v_avg < 0.0 {
            return err(format!("v_avg must be >= 0, got {}", self.v_avg));
        }
        if self.v_max < self.v_avg {
            return err(format!(
                "v_max must be >= v_avg, got v_max {} < v_avg {}",
                self.v_max, self.v_avg
            ));
        }
        for (name, t) in
            [("iou_threshold", self.iou_threshold), ("neighbor_iou_threshold", self.neighbor_iou_threshold)]
        {
            if !(0.0..=1.0).contains(&t) {
                return err(format!("{name} must be in [0, 1], got {t}"));
            }
        }
        for (name, w) in [
            ("position_weight", self.kalman.position_weight),
            ("velocity_weight", self.kalman.velocity_weight),
        ] {
            if !w.is_finite() || w <= 0.0 {
                return err(format!("{name} must be > 0, got {w}"));
            }
        }
        Ok(())
    }

    /// Parses a plain-text config: one `key = value` per line, `#` comments
    /// and blank lines ignored, unknown keys rejected.
    pub fn from_text(text: &str) -> Result<TrackerConfig, ConfigError> {
        let mut cfg = TrackerConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or(ConfigError::BadLine { line: line_no })?;
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::BadLine { line: line_no });
            }
            let invalid = |reason: String| ConfigError::InvalidValue {
                line: line_no,
                key: key.to_string(),
                reason,
            };
            let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| invalid(e.to_string()));
            let parse_u32 = |v: &str| v.parse::<u32>().map_err(|e| invalid(e.to_string()));
            match key {
                "iou_threshold" => cfg.iou_threshold = parse_f64(value)?,
                "neighbor_iou_threshold" => cfg.neighbor_iou_threshold = parse_f64(value)?,
                "v_avg" => cfg.v_avg = parse_f64(value)?,
                "v_max" => cfg.v_max = parse_f64(value)?,
                "motion_axis" => cfg.motion_axis = value.parse().map_err(invalid)?,
                "max_age" => cfg.max_age = parse_u32(value)?,
                "min_hits" => cfg.min_hits = parse_u32(value)?,
                "reactivation_window" => cfg.reactivation_window = parse_u32(value)?,
                "position_weight" => cfg.kalman.position_weight = parse_f64(value)?,
                "velocity_weight" => cfg.kalman.velocity_weight = parse_f64(value)?,
                _ => return Err(ConfigError::UnknownKey { line: line_no, key: key.to_string() }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The config as `key = value` lines, parseable by `from_text`.
    pub fn to_text(&self) -> String {
        format!(
            "iou_threshold = {}\nneighbor_iou_threshold = {}\nv_avg = {}\nv_max = {}\n\
             motion_axis = {}\nmax_age = {}\nmin_hits = {}\nreactivation_window = {}\n\
             position_weight = {}\nvelocity_weight = {}\n",
            self.iou_threshold,
            self.neighbor_iou_threshold,
            self.v_avg,
            self.v_max,
            self.motion_axis,
            self.max_age,
            self.min_hits,
            self.reactivation_window,
            self.kalman.position_weight,
            self.kalman.velocity_weight,
        )
    }
}

/// Lifecycle phase of a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    /// Seen, but not for `min_hits` frames yet; not emitted.
    Tentative,
    Confirmed,
    Dead,
}

/// One tracked object. All trackers share this shape; `kstate` stays `None`
/// everywhere except the SORT baseline, and the location fields are only
/// maintained by the tracker that uses them.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u32,
    pub class_id: ClassId,
    pub bbox: BBox,
    pub kstate: Option<KalmanState>,
    /// Total matched frames.
    pub hits: u32,
    /// Consecutive frames since the last match.
    pub time_since_update: u32,
    pub location_score: Option<LocationScore>,
    /// The larger same-class track this one is paired with, if any.
    pub partner_id: Option<u32>,
    pub status: TrackState,
    /// Consecutive frames sustained by occlusion inference.
    pub inferred_streak: u32,
}

impl Track {
    pub fn new(id: u32, class_id: ClassId, bbox: BBox, min_hits: u32) -> Track {
        Track {
            id,
            class_id,
            bbox,
            kstate: None,
            hits: 1,
            time_since_update: 0,
            location_score: None,
            partner_id: None,
            status: if 1 >= min_hits { TrackState::Confirmed } else { TrackState::Tentative },
            inferred_streak: 0,
        }
    }

    /// Registers a match: bumps hits, resets the age counter, and promotes
    /// tentative tracks once they have `min_hits` matches.
    pub fn mark_matched(&mut self, min_hits: u32) {
        self.hits += 1;
        self.time_since_update = 0;
        self.inferred_streak = 0;
        if self.status == TrackState::Tentative && self.hits >= min_hits {
            self.status = TrackState::Confirmed;
        }
    }

    /// Ages an unmatched track one frame; returns true if it just died.
    pub fn age(&mut self, max_age: u32) -> bool {
        self.time_since_update += 1;
        if self.time_since_update > max_age {
            self.status = TrackState::Dead;
            true
        } else {
            false
        }
    }

    pub fn is_emittable(&self) -> bool {
        self.status == TrackState::Confirmed
    }
}

/// Per-frame tracking interface. Call `step` exactly once per frame, in frame
/// order, with that frame's detections for the instance's class (possibly
/// empty). Frames are numbered internally starting at 1.
pub trait Tracker {
    fn step(&mut self, detections: &[BBox]) -> Vec<TrackRecord>;

    /// Live (non-dead) tracks after the latest step.
    fn tracks(&self) -> &[Track];
}
