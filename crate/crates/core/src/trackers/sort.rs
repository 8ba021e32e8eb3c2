//! SORT baseline: Kalman prediction plus Hungarian assignment on IOU.

use super::assignment::hungarian;
use super::{Track, TrackState, Tracker, TrackerConfig};
use crate::formats::{ClassId, TrackRecord, TrackStatus};
use crate::geometry::{iou, BBox};
use crate::kalman::{kf_init, kf_predict, kf_update, state_bbox};

/// Cost standing in for "gated out"; far above any real 1 - IOU value so the
/// solver only crosses the gate when nothing valid remains, and such pairs
/// are dropped afterwards anyway.
const GATED: f64 = 1e6;

pub struct SortTracker {
    cfg: TrackerConfig,
    class_id: ClassId,
    tracks: Vec<Track>,
    next_id: u32,
    frame: u32,
}

impl SortTracker {
    pub fn new(class_id: ClassId, cfg: TrackerConfig) -> SortTracker {
        SortTracker { cfg, class_id, tracks: Vec::new(), next_id: 1, frame: 0 }
    }
}

impl Tracker for SortTracker {
    fn step(&mut self, detections: &[BBox]) -> Vec<TrackRecord> {
        self.frame += 1;

        // Advance every track to this frame; the predicted box is what
        // detections are matched against.
        for t in &mut self.tracks {
            let st = t.kstate.as_ref().expect("SORT tracks always carry filter state");
            let predicted = kf_predict(st, &self.cfg.kalman);
            t.bbox = state_bbox(&predicted);
            t.kstate = Some(predicted);
        }

        let n = self.tracks.len();
        let m = detections.len();
        let mut matched_det = vec![usize::MAX; n];
        let mut det_used = vec![false; m];
        if n > 0 && m > 0 {
            let overlaps: Vec<Vec<f64>> = self
                .tracks
                .iter()
                .map(|t| detections.iter().map(|d| iou(&t.bbox, d)).collect())
                .collect();
            let cost: Vec<Vec<f64>> = overlaps
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&o| if o < self.cfg.iou_threshold { GATED } else { 1.0 - o })
                        .collect()
                })
                .collect();
            for (ti, di) in hungarian(&cost) {
                if overlaps[ti][di] >= self.cfg.iou_threshold {
                    matched_det[ti] = di;
                    det_used[di] = true;
                }
            }
        }

        for (ti, t) in self.tracks.iter_mut().enumerate() {
            if matched_det[ti] != usize::MAX {
                let st = t.kstate.as_ref().expect("checked above");
                let posterior = kf_update(st, &detections[matched_det[ti]], &self.cfg.kalman);
                t.bbox = state_bbox(&posterior);
                t.kstate = Some(posterior);
                t.mark_matched(self.cfg.min_hits);
            } else {
                t.age(self.cfg.max_age);
            }
        }
        self.tracks.retain(|t| t.status != TrackState::Dead);

        for (di, d) in detections.iter().enumerate() {
            if !det_used[di] {
                let mut t = Track::new(self.next_id, self.class_id, *d, self.cfg.min_hits);
                t.kstate = Some(kf_init(d, &self.cfg.kalman));
                self.tracks.push(t);
                self.next_id += 1;
            }
        }

        let mut records: Vec<TrackRecord> = self
            .tracks
            .iter()
            .filter(|t| t.time_since_update == 0 && t.is_emittable())
            .map(|t| TrackRecord {
                frame: self.frame,
                track_id: t.id,
                class_id: self.class_id,
                bbox: t.bbox,
                status: TrackStatus::Matched,
            })
            .collect();
        records.sort_by_key(|r| r.track_id);
        records
    }

    fn tracks(&self) -> &[Track] {
        &self.tracks
    }
}
