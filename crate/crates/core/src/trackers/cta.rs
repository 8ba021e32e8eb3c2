//! Centroid tracker baseline: no motion model, nearest-centroid association.

use super::{Track, TrackState, Tracker, TrackerConfig};
use crate::formats::{ClassId, TrackRecord, TrackStatus};
use crate::geometry::BBox;

/// Matches detections to the nearest track centroid, greedily by ascending
/// distance, gated at `v_max` plus half the larger box diagonal. No motion
/// prediction: the gate slack is all the tolerance it has.
pub struct CtaTracker {
    cfg: TrackerConfig,
    class_id: ClassId,
    tracks: Vec<Track>,
    next_id: u32,
    frame: u32,
}

impl CtaTracker {
    pub fn new(class_id: ClassId, cfg: TrackerConfig) -> CtaTracker {
        CtaTracker { cfg, class_id, tracks: Vec::new(), next_id: 1, frame: 0 }
    }

    fn gate(&self, t: &Track, d: &BBox) -> f64 {
        self.cfg.v_max + t.bbox.diagonal().max(d.diagonal()) / 2.0
    }
}

impl Tracker for CtaTracker {
    fn step(&mut self, detections: &[BBox]) -> Vec<TrackRecord> {
        self.frame += 1;

        // All in-gate pairs, cheapest first. Ties break on (track, detection)
        // index so replays are bit-identical.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            let tc = t.bbox.center();
            for (di, d) in detections.iter().enumerate() {
                let dist = tc.distance(&d.center());
                if dist <= self.gate(t, d) {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));

        let mut track_used = vec![false; self.tracks.len()];
        let mut det_used = vec![false; detections.len()];
        for &(_, ti, di) in &pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let t = &mut self.tracks[ti];
            t.bbox = detections[di];
            t.mark_matched(self.cfg.min_hits);
        }

        for (ti, t) in self.tracks.iter_mut().enumerate() {
            if !track_used[ti] {
                t.age(self.cfg.max_age);
            }
        }
        self.tracks.retain(|t| t.status != TrackState::Dead);

        for (di, d) in detections.iter().enumerate() {
            if !det_used[di] {
                self.tracks.push(Track::new(self.next_id, self.class_id, *d, self.cfg.min_hits));
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
