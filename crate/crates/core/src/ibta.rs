//! Tracker tuned for a rig moving at a known, near-constant speed.
//!
//! Instead of estimating motion per object with a filter, every track is
//! advanced by the configured platform velocity and matched inside a small
//! buffer around that prediction. Overlapping same-class objects are scored
//! by relative position, and those scores drive two things a plain
//! IOU tracker lacks: matching tie-breaks, and occlusion inference that keeps
//! a hidden smaller object alive by co-moving it with its larger neighbor.

use crate::formats::{ClassId, TrackRecord, TrackStatus};
use crate::geometry::{iou, BBox, Point};
use crate::trackers::{Track, TrackState, Tracker, TrackerConfig};

/// Relative-position code for overlapping same-class boxes.
///
/// The larger member of a pair is `Larger`; the smaller member is `Left`,
/// `Central`, or `Right` by where its center x falls among the horizontal
/// thirds of the larger box. Isolated boxes carry no score at all
/// (`Option::None` at the use sites).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationScore {
    Larger,
    Left,
    Central,
    Right,
}

impl LocationScore {
    pub fn code(self) -> u8 {
        match self {
            LocationScore::Larger => 0,
            LocationScore::Left => 1,
            LocationScore::Central => 2,
            LocationScore::Right => 3,
        }
    }

    pub fn is_smaller_member(self) -> bool {
        self != LocationScore::Larger
    }
}

/// Where a track is expected to be this frame, plus how much slack the match
/// gets around that point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedPosition {
    /// Last observed box translated along the motion axis.
    pub raw_box: BBox,
    pub buffer_center: Point,
    /// Allowed deviation from the buffer center. Grows with every missed
    /// frame, as does the translation.
    pub buffer_radius: f64,
}

/// Scores the smaller box of a qualifying pair by the horizontal thirds of
/// the larger box; boundary hits count as central.
fn third_of(larger: &BBox, smaller: &BBox) -> LocationScore {
    let cx = smaller.center().cx;
    if cx < larger.x_min + larger.width / 3.0 {
        LocationScore::Left
    } else if cx > larger.x_min + 2.0 * larger.width / 3.0 {
        LocationScore::Right
    } else {
        LocationScore::Central
    }
}

/// Scores plus, for each smaller member, the index of the larger box it
/// paired with. Boxes are processed in descending area order so that in a
/// cluster the biggest pair settles first; each box pairs with the qualifying
/// not-smaller neighbor it overlaps most.
fn score_and_partner(
    boxes: &[BBox],
    neighbor_iou_threshold: f64,
) -> (Vec<Option<LocationScore>>, Vec<Option<usize>>) {
    let n = boxes.len();
    let mut scores: Vec<Option<LocationScore>> = vec![None; n];
    let mut partners: Vec<Option<usize>> = vec![None; n];
    if n < 2 {
        return (scores, partners);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        boxes[b].area().partial_cmp(&boxes[a].area()).expect("finite areas").then(a.cmp(&b))
    });
    // rank[i] = position of box i in the descending-area order; earlier rank
    // means "counts as larger" for equal areas.
    let mut rank = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }

    for &i in &order {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if rank[j] >= rank[i] {
                continue;
            }
            let o = iou(&boxes[i], &boxes[j]);
            if o <= neighbor_iou_threshold {
                continue;
            }
            let better = match best {
                None => true,
                Some((bo, bj)) => o > bo || (o == bo && rank[j] < rank[bj]),
            };
            if better {
                best = Some((o, j));
            }
        }
        if let Some((_, j)) = best {
            scores[i] = Some(third_of(&boxes[j], &boxes[i]));
            partners[i] = Some(j);
        }
    }

    // Anything that ended up as somebody's larger partner, and was not itself
    // scored as a smaller member, is the larger member of its pair.
    for &p in partners.iter().flatten() {
        if scores[p].is_none() {
            scores[p] = Some(LocationScore::Larger);
        }
    }
    (scores, partners)
}

/// Location scores for one frame's same-class boxes, parallel to the input.
pub fn assign_location_scores(
    boxes: &[BBox],
    neighbor_iou_threshold: f64,
) -> Vec<Option<LocationScore>> {
    score_and_partner(boxes, neighbor_iou_threshold).0
}

/// Expected position of a track this frame. A track unmatched for k frames
/// is translated (k+1) steps and gets a (k+1)-times-wider buffer.
pub fn predict_position(t: &Track, cfg: &TrackerConfig) -> PredictedPosition {
    let steps = (t.time_since_update + 1) as f64;
    let (ux, uy) = cfg.motion_axis.unit();
    let raw_box = t.bbox.translate(ux * steps * cfg.v_avg, uy * steps * cfg.v_avg);
    PredictedPosition {
        buffer_center: raw_box.center(),
        buffer_radius: steps * (cfg.v_max - cfg.v_avg),
        raw_box,
    }
}

/// Match gate: enough overlap with the predicted box, and the detection's
/// center inside the buffer. The buffer is widened by the detection's
/// half-diagonal because it bounds a center-to-center distance between boxes,
/// not between points.
pub fn gate(pred: &PredictedPosition, d: &BBox, cfg: &TrackerConfig) -> bool {
    iou(&pred.raw_box, d) >= cfg.iou_threshold
        && d.center().distance(&pred.buffer_center) <= pred.buffer_radius + d.diagonal() / 2.0
}

/// Two ious closer than this count as tied, letting location-score agreement
/// pick the winner.
const IOU_TIE: f64 = 1e-6;

struct DeadTrack {
    track: Track,
    /// Full frames spent in the pool (0 during the step right after death).
    frames_dead: u32,
}

pub struct IbtaTracker {
    cfg: TrackerConfig,
    class_id: ClassId,
    tracks: Vec<Track>,
    /// Recently dead tracks eligible for reactivation.
    pool: Vec<DeadTrack>,
    next_id: u32,
    frame: u32,
}

impl IbtaTracker {
    pub fn new(class_id: ClassId, cfg: TrackerConfig) -> IbtaTracker {
        IbtaTracker { cfg, class_id, tracks: Vec::new(), pool: Vec::new(), next_id: 1, frame: 0 }
    }
}

fn make_record(frame: u32, class_id: ClassId, t: &Track, status: TrackStatus) -> TrackRecord {
    TrackRecord { frame, track_id: t.id, class_id, bbox: t.bbox, status }
}

impl Tracker for IbtaTracker {
    fn step(&mut self, detections: &[BBox]) -> Vec<TrackRecord> {
        self.frame += 1;
        let frame = self.frame;
        let class_id = self.class_id;
        let (det_scores, det_partners) =
            score_and_partner(detections, self.cfg.neighbor_iou_threshold);
        let preds: Vec<PredictedPosition> =
            self.tracks.iter().map(|t| predict_position(t, &self.cfg)).collect();

        // Gate-passing candidates, best overlap first; ties broken by index
        // so identical inputs replay identically.
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, pred) in preds.iter().enumerate() {
            for (di, d) in detections.iter().enumerate() {
                if gate(pred, d, &self.cfg) {
                    cands.push((iou(&pred.raw_box, d), ti, di));
                }
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).expect("finite iou").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });

        // det_owner[di] = id of the track that ends up owning detection di.
        let mut det_owner: Vec<Option<u32>> = vec![None; detections.len()];
        let mut track_det = vec![usize::MAX; self.tracks.len()];
        let agrees = |ti: usize, di: usize| self.tracks[ti].location_score == det_scores[di];
        let mut i = 0;
        while i < cands.len() {
            let (o, ti, di) = cands[i];
            if track_det[ti] != usize::MAX || det_owner[di].is_some() {
                i += 1;
                continue;
            }
            // Within a near-tie on overlap, a pair whose location scores
            // agree outranks one whose don't.
            let mut pick = i;
            if !agrees(ti, di) {
                let mut j = i + 1;
                while j < cands.len() && cands[j].0 >= o - IOU_TIE {
                    let (_, tj, dj) = cands[j];
                    if track_det[tj] == usize::MAX && det_owner[dj].is_none() && agrees(tj, dj) {
                        pick = j;
                        break;
                    }
                    j += 1;
                }
            }
            let (_, pt, pd) = cands[pick];
            track_det[pt] = pd;
            det_owner[pd] = Some(self.tracks[pt].id);
            if pick == i {
                i += 1;
            }
        }

        let mut records: Vec<TrackRecord> = Vec::new();

        // Matched tracks adopt the detection box; the center displacement is
        // kept around because occluded partners are co-moved by it.
        let mut displacement: Vec<Option<(f64, f64)>> = vec![None; self.tracks.len()];
        for (ti, t) in self.tracks.iter_mut().enumerate() {
            let di = track_det[ti];
            if di == usize::MAX {
                continue;
            }
            let before = t.bbox.center();
            let after = detections[di].center();
            displacement[ti] = Some((after.cx - before.cx, after.cy - before.cy));
            t.bbox = detections[di];
            t.mark_matched(self.cfg.min_hits);
            if t.is_emittable() {
                records.push(make_record(frame, class_id, t, TrackStatus::Matched));
            }
        }

        // Occlusion inference: an unmatched smaller member whose larger
        // partner did match is assumed hidden behind it and rides along.
        // Capped at max_age consecutive inferred frames so a vanished object
        // cannot be ghost-tracked forever.
        let id_to_idx: Vec<(u32, usize)> =
            self.tracks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let mut inferred = vec![false; self.tracks.len()];
        for ti in 0..self.tracks.len() {
            if track_det[ti] != usize::MAX {
                continue;
            }
            let t = &self.tracks[ti];
            let smaller = t.location_score.is_some_and(LocationScore::is_smaller_member);
            if !smaller || t.inferred_streak >= self.cfg.max_age {
                continue;
            }
            let partner_idx = t
                .partner_id
                .and_then(|pid| id_to_idx.iter().find(|&&(id, _)| id == pid))
                .map(|&(_, idx)| idx);
            let Some(pi) = partner_idx else { continue };
            let Some((dx, dy)) = displacement[pi] else { continue };
            {
                let t = &mut self.tracks[ti];
                t.bbox = t.bbox.translate(dx, dy);
                t.inferred_streak += 1;
            }
            inferred[ti] = true;
            if self.tracks[ti].is_emittable() {
                records.push(make_record(frame, class_id, &self.tracks[ti], TrackStatus::Inferred));
            }
        }

        // Everything else ages; the dead move to the reactivation pool. The
        // inferred streak is deliberately not cleared here: only a real match
        // re-arms inference, otherwise a capped track would alternate between
        // aging and inferring and outstay the cap.
        for (ti, t) in self.tracks.iter_mut().enumerate() {
            if track_det[ti] != usize::MAX || inferred[ti] {
                continue;
            }
            t.age(self.cfg.max_age);
        }
        let mut newly_dead: Vec<Track> = Vec::new();
        let mut kept = Vec::with_capacity(self.tracks.len());
        for t in self.tracks.drain(..) {
            if t.status == TrackState::Dead {
                newly_dead.push(t);
            } else {
                kept.push(t);
            }
        }
        self.tracks = kept;

        // Leftover detections: larger/isolated ones may be an object that
        // died during a gap, so they try the pool first; every remaining one
        // opens a fresh track.
        if !self.pool.is_empty() {
            let mut pool_cands: Vec<(f64, usize, usize)> = Vec::new();
            for (di, d) in detections.iter().enumerate() {
                if det_owner[di].is_some()
                    || det_scores[di].is_some_and(LocationScore::is_smaller_member)
                {
                    continue;
                }
                for (pi, dead) in self.pool.iter().enumerate() {
                    if dead.frames_dead >= self.cfg.reactivation_window {
                        continue;
                    }
                    let pred = predict_position(&dead.track, &self.cfg);
                    if gate(&pred, d, &self.cfg) {
                        pool_cands.push((iou(&pred.raw_box, d), di, pi));
                    }
                }
            }
            pool_cands.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).expect("finite iou").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
            });
            let mut revived: Vec<(usize, usize)> = Vec::new();
            let mut pool_used = vec![false; self.pool.len()];
            for (_, di, pi) in pool_cands {
                if det_owner[di].is_some() || pool_used[pi] {
                    continue;
                }
                det_owner[di] = Some(self.pool[pi].track.id);
                pool_used[pi] = true;
                revived.push((pi, di));
            }
            // Descending pool index so removals don't shift later ones.
            revived.sort_unstable_by(|a, b| b.cmp(a));
            for (pi, di) in revived {
                let mut dead = self.pool.remove(pi);
                dead.track.bbox = detections[di];
                dead.track.status = TrackState::Tentative;
                dead.track.mark_matched(self.cfg.min_hits);
                if dead.track.is_emittable() {
                    records.push(make_record(frame, class_id, &dead.track, TrackStatus::Matched));
                }
                self.tracks.push(dead.track);
            }
        }

        for (di, d) in detections.iter().enumerate() {
            if det_owner[di].is_some() {
                continue;
            }
            let t = Track::new(self.next_id, self.class_id, *d, self.cfg.min_hits);
            self.next_id += 1;
            det_owner[di] = Some(t.id);
            if t.is_emittable() {
                records.push(make_record(frame, class_id, &t, TrackStatus::Matched));
            }
            self.tracks.push(t);
        }

        // With every detection owned, scores and partner links can be
        // rewritten in track-id terms for the tracks observed this frame.
        for t in &mut self.tracks {
            if let Some(di) = det_owner.iter().position(|&owner| owner == Some(t.id)) {
                t.location_score = det_scores[di];
                t.partner_id = det_partners[di].and_then(|pj| det_owner[pj]);
            }
        }

        // Pool bookkeeping: survivors age one frame, hopeless ones drop out,
        // and this frame's deaths join fresh.
        for dead in &mut self.pool {
            dead.frames_dead += 1;
            dead.track.time_since_update += 1;
        }
        self.pool.retain(|d| d.frames_dead < self.cfg.reactivation_window);
        for t in newly_dead {
            if self.cfg.reactivation_window > 0 {
                self.pool.push(DeadTrack { track: t, frames_dead: 0 });
            }
        }

        records.sort_by_key(|r| r.track_id);
        records
    }

    fn tracks(&self) -> &[Track] {
        &self.tracks
    }
}
