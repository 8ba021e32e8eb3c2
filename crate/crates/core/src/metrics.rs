//! Tracking and detection evaluation: CLEAR-style per-frame matching with
//! MOTA/MOTP, identity metrics (IDP/IDR/IDF1), mostly-tracked counts, ID
//! switches, AP/mAP at IOU 0.5, and throughput.
//!
//! Conventions: MOTP here is the mean overlap of matched pairs (higher is
//! better), and MOTA is unclamped (a bad run goes negative). All functions
//! take one class's records at a time; cross-class aggregation is the
//! caller's concern.

use crate::formats::{ClassId, DetectionRecord, GtRecord, TrackRecord};
use crate::geometry::{iou, BBox};
use crate::trackers::assignment::hungarian;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("no matched boxes")]
    NoMatches,
    #[error("empty input")]
    EmptyInput,
    #[error("hypothesis has records but ground truth has none")]
    FrameRangeMismatch,
}

/// Per-frame matching totals over a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotCounts {
    /// Ground-truth boxes never matched in their frame.
    pub fn_total: u64,
    /// Hypothesis boxes never matched in their frame.
    pub fp_total: u64,
    /// Matched hypothesis id changed against the identity's most recent
    /// prior match.
    pub idsw_total: u64,
    /// All ground-truth boxes.
    pub gt_total: u64,
    /// Sum of matched-pair overlaps.
    pub overlap_sum: f64,
    /// Number of matched pairs.
    pub match_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdCounts {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdScores {
    pub idp: f64,
    pub idr: f64,
    pub idf1: f64,
}

/// Cost placeholder for pairs below the match threshold: large enough that
/// the solver always prefers one more valid match over any invalid pairing.
const UNMATCHABLE: f64 = 1e9;

fn group_by_frame<'a, T, F>(records: &'a [T], key: F) -> BTreeMap<u32, Vec<(u32, BBox)>>
where
    F: Fn(&'a T) -> (u32, u32, BBox),
{
    let mut frames: BTreeMap<u32, Vec<(u32, BBox)>> = BTreeMap::new();
    for r in records {
        let (frame, id, bbox) = key(r);
        frames.entry(frame).or_default().push((id, bbox));
    }
    frames
}

struct ClearOutcome {
    counts: MotCounts,
    /// Per ground-truth identity: (frames present, frames matched).
    per_identity: BTreeMap<u32, (u64, u64)>,
}

fn clear_match_detail(
    gt_seq: &[GtRecord],
    hyp_seq: &[TrackRecord],
    match_iou: f64,
) -> Result<ClearOutcome, MetricsError> {
    if gt_seq.is_empty() && !hyp_seq.is_empty() {
        return Err(MetricsError::FrameRangeMismatch);
    }
    let gt_frames = group_by_frame(gt_seq, |r| (r.frame, r.track_id, r.bbox));
    let hyp_frames = group_by_frame(hyp_seq, |r| (r.frame, r.track_id, r.bbox));
    let all_frames: Vec<u32> =
        gt_frames.keys().chain(hyp_frames.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();

    let mut counts = MotCounts::default();
    let mut per_identity: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    // Matches of the immediately preceding frame, eligible for carryover.
    let mut prev: BTreeMap<u32, u32> = BTreeMap::new();
    // Most recent matched hypothesis id per GT identity, across any gap.
    let mut last_matched: BTreeMap<u32, u32> = BTreeMap::new();
    let empty: Vec<(u32, BBox)> = Vec::new();

    for frame in all_frames {
        let gts = gt_frames.get(&frame).unwrap_or(&empty);
        let hyps = hyp_frames.get(&frame).unwrap_or(&empty);
        counts.gt_total += gts.len() as u64;
        for &(gid, _) in gts {
            per_identity.entry(gid).or_default().0 += 1;
        }

        let mut gt_used = vec![false; gts.len()];
        let mut hyp_used = vec![false; hyps.len()];
        let mut matches: Vec<(usize, usize, f64)> = Vec::new();

        // Keep last frame's pairs when both ends are still around and still
        // overlap enough; this is what makes matching sticky instead of
        // flickering between equally good hypotheses.
        for (&gid, &hid) in &prev {
            let gi = gts.iter().position(|&(id, _)| id == gid);
            let hi = hyps.iter().position(|&(id, _)| id == hid);
            if let (Some(gi), Some(hi)) = (gi, hi) {
                let o = iou(&gts[gi].1, &hyps[hi].1);
                if o >= match_iou {
                    gt_used[gi] = true;
                    hyp_used[hi] = true;
                    matches.push((gi, hi, o));
                }
            }
        }

        // The rest by minimum-cost assignment, invalid pairs priced out.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&i| !gt_used[i]).collect();
        let free_hyp: Vec<usize> = (0..hyps.len()).filter(|&i| !hyp_used[i]).collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let cost: Vec<Vec<f64>> = free_gt
                .iter()
                .map(|&gi| {
                    free_hyp
                        .iter()
                        .map(|&hi| {
                            let o = iou(&gts[gi].1, &hyps[hi].1);
                            if o >= match_iou {
                                1.0 - o
                            } else {
                                UNMATCHABLE
                            }
                        })
                        .collect()
                })
                .collect();
            for (r, c) in hungarian(&cost) {
                let (gi, hi) = (free_gt[r], free_hyp[c]);
                let o = iou(&gts[gi].1, &hyps[hi].1);
                if o >= match_iou {
                    gt_used[gi] = true;
                    hyp_used[hi] = true;
                    matches.push((gi, hi, o));
                }
            }
        }

        counts.fn_total += gt_used.iter().filter(|&&u| !u).count() as u64;
        counts.fp_total += hyp_used.iter().filter(|&&u| !u).count() as u64;
        counts.match_total += matches.len() as u64;
        prev = BTreeMap::new();
        for (gi, hi, o) in matches {
            counts.overlap_sum += o;
            let gid = gts[gi].0;
            let hid = hyps[hi].0;
            per_identity.entry(gid).or_default().1 += 1;
            if let Some(&prev_hid) = last_matched.get(&gid) {
                if prev_hid != hid {
                    counts.idsw_total += 1;
                }
            }
            last_matched.insert(gid, hid);
            prev.insert(gid, hid);
        }
    }
    Ok(ClearOutcome { counts, per_identity })
}

/// Frame-by-frame matching of one class's hypothesis records against ground
/// truth: previous-frame matches carry over while they still overlap at
/// least `match_iou`, the remainder is matched fresh by minimum-cost
/// assignment, and identity switches are counted against each ground-truth
/// identity's most recent prior match.
pub fn clear_match(
    gt_seq: &[GtRecord],
    hyp_seq: &[TrackRecord],
    match_iou: f64,
) -> Result<MotCounts, MetricsError> {
    clear_match_detail(gt_seq, hyp_seq, match_iou).map(|o| o.counts)
}

/// 1 − (FN + FP + IDSW) / GT. Unclamped; can be negative.
pub fn mota(c: &MotCounts) -> Result<f64, MetricsError> {
    if c.gt_total == 0 {
        return Err(MetricsError::EmptyGroundTruth);
    }
    Ok(1.0 - (c.fn_total + c.fp_total + c.idsw_total) as f64 / c.gt_total as f64)
}

/// Mean overlap of matched pairs, in [0, 1]; higher is better.
pub fn motp(c: &MotCounts) -> Result<f64, MetricsError> {
    if c.match_total == 0 {
        return Err(MetricsError::NoMatches);
    }
    Ok(c.overlap_sum / c.match_total as f64)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Identity-level evaluation: ground-truth and hypothesis identities are
/// paired once for the whole sequence so that the number of co-located boxes
/// (same frame, IOU at least `match_iou`) is maximal; boxes outside that
/// pairing count as IDFN (ground truth) or IDFP (hypothesis).
pub fn id_metrics(
    gt_seq: &[GtRecord],
    hyp_seq: &[TrackRecord],
    match_iou: f64,
) -> Result<(IdCounts, IdScores), MetricsError> {
    if gt_seq.is_empty() && !hyp_seq.is_empty() {
        return Err(MetricsError::FrameRangeMismatch);
    }
    let gt_frames = group_by_frame(gt_seq, |r| (r.frame, r.track_id, r.bbox));
    let hyp_frames = group_by_frame(hyp_seq, |r| (r.frame, r.track_id, r.bbox));

    let mut gt_ids: Vec<u32> = gt_seq.iter().map(|r| r.track_id).collect();
    gt_ids.sort_unstable();
    gt_ids.dedup();
    let mut hyp_ids: Vec<u32> = hyp_seq.iter().map(|r| r.track_id).collect();
    hyp_ids.sort_unstable();
    hyp_ids.dedup();

    // colocated[g][h] = frames where identity pair (g, h) overlaps enough.
    let mut colocated = vec![vec![0u64; hyp_ids.len()]; gt_ids.len()];
    for (frame, gts) in &gt_frames {
        let Some(hyps) = hyp_frames.get(frame) else { continue };
        for &(gid, gb) in gts {
            let g = gt_ids.binary_search(&gid).expect("id collected above");
            for &(hid, hb) in hyps {
                if iou(&gb, &hb) >= match_iou {
                    let h = hyp_ids.binary_search(&hid).expect("id collected above");
                    colocated[g][h] += 1;
                }
            }
        }
    }

    let mut idtp = 0u64;
    if !gt_ids.is_empty() && !hyp_ids.is_empty() {
        // Co-location counts are non-negative, so the max-weight maximal
        // matching is also the best over all partial matchings.
        let cost: Vec<Vec<f64>> =
            colocated.iter().map(|row| row.iter().map(|&c| -(c as f64)).collect()).collect();
        for (g, h) in hungarian(&cost) {
            idtp += colocated[g][h];
        }
    }
    let counts = IdCounts {
        idtp,
        idfp: hyp_seq.len() as u64 - idtp,
        idfn: gt_seq.len() as u64 - idtp,
    };
    let scores = IdScores {
        idp: ratio(counts.idtp, counts.idtp + counts.idfp),
        idr: ratio(counts.idtp, counts.idtp + counts.idfn),
        idf1: ratio(2 * counts.idtp, 2 * counts.idtp + counts.idfp + counts.idfn),
    };
    Ok((counts, scores))
}

/// Ground-truth identities matched (per `clear_match`) in at least 80% of
/// the frames where they appear; the boundary is inclusive.
pub fn mostly_tracked(
    gt_seq: &[GtRecord],
    hyp_seq: &[TrackRecord],
    match_iou: f64,
) -> Result<u64, MetricsError> {
    let outcome = clear_match_detail(gt_seq, hyp_seq, match_iou)?;
    Ok(outcome
        .per_identity
        .values()
        .filter(|&&(present, matched)| matched * 5 >= present * 4)
        .count() as u64)
}

/// Detection quality for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAp {
    pub class_id: ClassId,
    /// None when the class has no ground truth (skipped, not zero).
    pub ap: Option<f64>,
    pub gt_count: usize,
    pub det_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEval {
    pub per_class: Vec<ClassAp>,
    /// Unweighted mean AP over classes that have ground truth.
    pub map50: Option<f64>,
}

fn class_ap(dets: &[&DetectionRecord], gt: &[&GtRecord], iou_thr: f64) -> f64 {
    if gt.is_empty() {
        unreachable!("caller skips classes without ground truth");
    }
    if dets.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // Stable under confidence ties: original file order breaks them.
    order.sort_by(|&a, &b| {
        dets[b].confidence.partial_cmp(&dets[a].confidence).expect("finite confidence").then(a.cmp(&b))
    });

    let mut gt_by_frame: BTreeMap<u32, Vec<(usize, BBox)>> = BTreeMap::new();
    for (i, g) in gt.iter().enumerate() {
        gt_by_frame.entry(g.frame).or_default().push((i, g.bbox));
    }
    let mut gt_taken = vec![false; gt.len()];

    let mut tp = 0u64;
    let mut fp = 0u64;
    let total_gt = gt.len() as f64;
    let mut recall_prec: Vec<(f64, f64)> = Vec::with_capacity(dets.len());
    for &di in &order {
        let d = dets[di];
        let mut best: Option<(f64, usize)> = None;
        if let Some(cands) = gt_by_frame.get(&d.frame) {
            for &(gi, gb) in cands {
                if gt_taken[gi] {
                    continue;
                }
                let o = iou(&d.bbox, &gb);
                if o >= iou_thr && best.is_none_or(|(bo, _)| o > bo) {
                    best = Some((o, gi));
                }
            }
        }
        match best {
            Some((_, gi)) => {
                gt_taken[gi] = true;
                tp += 1;
            }
            None => fp += 1,
        }
        recall_prec.push((tp as f64 / total_gt, tp as f64 / (tp + fp) as f64));
    }

    // Area under the precision envelope (all-point interpolation).
    let mut ap = 0.0;
    let mut best_prec = 0.0f64;
    let mut prev_recall;
    // Walk right to left so each point carries the max precision to its right.
    let mut envel: Vec<(f64, f64)> = recall_prec.clone();
    for i in (0..envel.len()).rev() {
        best_prec = best_prec.max(envel[i].1);
        envel[i].1 = best_prec;
    }
    prev_recall = 0.0;
    for (recall, prec) in envel {
        if recall > prev_recall {
            ap += (recall - prev_recall) * prec;
            prev_recall = recall;
        }
    }
    ap
}

/// AP per class at the given IOU threshold, plus the unweighted class mean.
/// Classes without ground truth get `ap: None` and are left out of the mean.
pub fn average_precision(
    detections: &[DetectionRecord],
    gt: &[GtRecord],
    iou_thr: f64,
) -> DetectionEval {
    let mut per_class = Vec::new();
    let mut sum = 0.0;
    let mut counted = 0usize;
    for class_id in ClassId::ALL {
        let dets: Vec<&DetectionRecord> =
            detections.iter().filter(|d| d.class_id == class_id).collect();
        let gts: Vec<&GtRecord> = gt.iter().filter(|g| g.class_id == class_id).collect();
        let ap = if gts.is_empty() {
            None
        } else {
            let v = class_ap(&dets, &gts, iou_thr);
            sum += v;
            counted += 1;
            Some(v)
        };
        per_class.push(ClassAp { class_id, ap, gt_count: gts.len(), det_count: dets.len() });
    }
    DetectionEval {
        per_class,
        map50: if counted > 0 { Some(sum / counted as f64) } else { None },
    }
}

/// Throughput as the reciprocal mean duration, seconds in, frames/second out.
pub fn fps(durations: &[f64]) -> Result<f64, MetricsError> {
    if durations.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mean = durations.iter().sum::<f64>() / durations.len() as f64;
    Ok(1.0 / mean)
}
