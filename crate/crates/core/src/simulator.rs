//! Synthetic scene generator: a camera translating at near-constant speed
//! over a static bed of objects, emitting ground truth plus a degraded
//! detection stream. Deterministic for a given config, so tests can treat it
//! as an oracle.
//!
//! Motion is rigid: one speed per frame, shared by every object, drawn
//! uniformly from [2·v_avg − v_max, v_max]. That interval is centered on
//! v_avg with half-width v_max − v_avg, so a per-frame displacement never
//! deviates from v_avg by more than the buffer radius a tracker configured
//! with the same speeds will allow.
//!
//! Randomness comes from a ChaCha8 stream seeded with the config's seed. The
//! draw order is part of the output contract:
//!
//! 1. frames − 1 per-frame speeds;
//! 2. placement, classes in order, ids ascending: width, height, cross-axis
//!    position, along-axis position per object (occlusion smalls are skipped
//!    here); placements violating the separation constraint are redrawn, all
//!    four values at once;
//! 3. occlusion smalls, in occlusion-list order: width fraction, height fraction;
//! 4. per frame, objects in (class, id) order, visible objects only:
//!    suppressed detections draw nothing; otherwise one miss uniform (only
//!    when miss_prob > 0), two center-noise normals (only when sigma > 0),
//!    one confidence uniform from [0.7, 1.0];
//! 5. per frame, when fp_rate > 0: one Poisson count, then per false
//!    positive: class, width, height, x, y, confidence from [0.3, 0.7].
//!
//! Ground truth records an object exactly when its box lies fully inside the
//! image rectangle; detections are derived from the same boxes, so a
//! noiseless scene reproduces ground truth bit for bit.

use crate::formats::{ClassId, DetectionRecord, GtRecord};
use crate::geometry::BBox;
use crate::trackers::MotionAxis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scene config: {0}")]
    ConfigInvalid(String),
    #[error("could not place a class {class_id} object after {attempts} attempts; lower separation or object counts")]
    PlacementFailed { class_id: u8, attempts: u32 },
}

/// Suppresses the smaller object's detections over an inclusive frame range
/// while its larger neighbor stays detected. The generator sizes and places
/// `small_id` relative to `large_id` so the two genuinely overlap, and keeps
/// the pair inside the image for the whole sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionSpec {
    pub class_id: ClassId,
    pub small_id: u32,
    pub large_id: u32,
    pub frame_start: u32,
    pub frame_end: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub image_width: f64,
    pub image_height: f64,
    pub frames: u32,
    /// Object counts per class, indexed by class id.
    pub objects: [u32; 3],
    /// Box side length range per class, sampled per axis.
    pub size_ranges: [(f64, f64); 3],
    pub v_avg: f64,
    pub v_max: f64,
    pub motion_axis: MotionAxis,
    /// Probability that a visible object yields no detection in a frame.
    pub miss_prob: f64,
    /// Expected false positives per frame (Poisson).
    pub fp_rate: f64,
    /// Std-dev of Gaussian noise added to detection centers.
    pub center_noise_sigma: f64,
    /// Minimum gap between same-class boxes at placement (rigid motion keeps
    /// it for all frames). None disables the constraint. Occlusion smalls are
    /// exempt: they are meant to overlap their partner.
    pub separation: Option<f64>,
    pub occlusions: Vec<OcclusionSpec>,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            image_width: 640.0,
            image_height: 480.0,
            frames: 50,
            objects: [2, 3, 4],
            size_ranges: [(18.0, 30.0), (24.0, 40.0), (30.0, 48.0)],
            v_avg: 12.0,
            v_max: 15.0,
            motion_axis: MotionAxis::PosY,
            miss_prob: 0.0,
            fp_rate: 0.0,
            center_noise_sigma: 0.0,
            separation: None,
            occlusions: Vec::new(),
            seed: 1,
        }
    }
}

/// One generated object; the box is its frame-1 position (possibly outside
/// the image, for objects that enter later).
#[derive(Debug, Clone, PartialEq)]
pub struct SimObject {
    pub id: u32,
    pub class_id: ClassId,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneData {
    pub gt: Vec<GtRecord>,
    pub detections: Vec<DetectionRecord>,
    pub objects: Vec<SimObject>,
    /// Drawn per-frame speeds (length frames − 1).
    pub speeds: Vec<f64>,
}

const PLACEMENT_ATTEMPTS: u32 = 1000;

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::ConfigInvalid(m));
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return err("image dimensions must be positive".into());
        }
        if self.v_avg < 0.0 || self.v_max < self.v_avg {
            return err(format!("need v_max >= v_avg >= 0, got {} / {}", self.v_avg, self.v_max));
        }
        if !(0.0..=1.0).contains(&self.miss_prob) {
            return err(format!("miss_prob must be in [0, 1], got {}", self.miss_prob));
        }
        if self.fp_rate < 0.0 || !self.fp_rate.is_finite() {
            return err(format!("fp_rate must be >= 0, got {}", self.fp_rate));
        }
        if self.center_noise_sigma < 0.0 {
            return err(format!("center_noise_sigma must be >= 0, got {}", self.center_noise_sigma));
        }
        if self.separation.is_some_and(|s| s < 0.0) {
            return err("separation must be >= 0".into());
        }
        let max_side = self.image_width.min(self.image_height);
        for (c, &(lo, hi)) in self.size_ranges.iter().enumerate() {
            if !(lo > 0.0 && hi >= lo) {
                return err(format!("class {c} size range must satisfy 0 < lo <= hi"));
            }
            if hi > max_side {
                return err(format!("class {c} sizes up to {hi} do not fit the image"));
            }
        }
        let mut smalls = Vec::new();
        for o in &self.occlusions {
            let count = self.objects[o.class_id.as_u8() as usize];
            if o.small_id == 0 || o.small_id > count || o.large_id == 0 || o.large_id > count {
                return err(format!(
                    "occlusion ids {}/{} out of range for class {}",
                    o.small_id, o.large_id, o.class_id
                ));
            }
            if o.small_id == o.large_id {
                return err("occlusion pair needs two distinct objects".into());
            }
            if o.frame_start == 0 || o.frame_end < o.frame_start {
                return err(format!("occlusion frames {}..{} invalid", o.frame_start, o.frame_end));
            }
            if smalls.contains(&(o.class_id, o.small_id)) {
                return err(format!("object {} occluded by two entries", o.small_id));
            }
            smalls.push((o.class_id, o.small_id));
            if smalls.contains(&(o.class_id, o.large_id)) {
                return err("an occluded object cannot itself be an occluder".into());
            }
            // The pair must be placeable fully inside for every frame even at
            // maximum travel.
            let travel = (self.frames.saturating_sub(1)) as f64 * self.v_max;
            let along_extent = match self.motion_axis {
                MotionAxis::PosX | MotionAxis::NegX => self.image_width,
                MotionAxis::PosY | MotionAxis::NegY => self.image_height,
            };
            let hi = self.size_ranges[o.class_id.as_u8() as usize].1;
            if along_extent - hi - travel < 0.0 {
                return err(format!(
                    "image too short along the motion axis to keep an occlusion pair visible for {} frames",
                    self.frames
                ));
            }
        }
        Ok(())
    }
}

fn boxes_gap(a: &BBox, b: &BBox) -> f64 {
    let gx = (b.x_min - a.x_max()).max(a.x_min - b.x_max());
    let gy = (b.y_min - a.y_max()).max(a.y_min - b.y_max());
    gx.max(gy)
}

fn fully_inside(b: &BBox, w: f64, h: f64) -> bool {
    b.x_min >= 0.0 && b.y_min >= 0.0 && b.x_max() <= w && b.y_max() <= h
}

/// (cross extent, along extent) of the image for the configured axis.
fn axis_extents(cfg: &SceneConfig) -> (f64, f64) {
    match cfg.motion_axis {
        MotionAxis::PosX | MotionAxis::NegX => (cfg.image_height, cfg.image_width),
        MotionAxis::PosY | MotionAxis::NegY => (cfg.image_width, cfg.image_height),
    }
}

/// Box from (cross, along) minima plus (cross, along) sizes.
fn box_from_axis(cfg: &SceneConfig, cross: f64, along: f64, sc: f64, sa: f64) -> BBox {
    match cfg.motion_axis {
        MotionAxis::PosX | MotionAxis::NegX => BBox::new(along, cross, sa, sc),
        MotionAxis::PosY | MotionAxis::NegY => BBox::new(cross, along, sc, sa),
    }
    .expect("generated sizes are positive")
}

pub fn simulate(cfg: &SceneConfig) -> Result<SceneData, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (ux, uy) = cfg.motion_axis.unit();

    // 1. Speeds, then cumulative per-frame offsets (frame 1 sits at zero).
    let lo_speed = 2.0 * cfg.v_avg - cfg.v_max;
    let speeds: Vec<f64> = (1..cfg.frames)
        .map(|_| rng.random_range(lo_speed..=cfg.v_max))
        .collect();
    let mut offsets: Vec<(f64, f64)> = Vec::with_capacity(cfg.frames as usize);
    let mut acc = 0.0;
    offsets.push((0.0, 0.0));
    for &s in &speeds {
        acc += s;
        offsets.push((ux * acc, uy * acc));
    }
    let along_offsets: Vec<f64> = offsets.iter().map(|&(ox, oy)| ox + oy).collect();
    let min_off = along_offsets.iter().copied().fold(0.0f64, f64::min);
    let max_off = along_offsets.iter().copied().fold(0.0f64, f64::max);

    let (cross_extent, along_extent) = axis_extents(cfg);
    let travel = (cfg.frames.saturating_sub(1)) as f64 * cfg.v_max;

    // 2. Placement. Occlusion smalls wait for their partners.
    let is_small = |class_id: ClassId, id: u32| {
        cfg.occlusions.iter().any(|o| o.class_id == class_id && o.small_id == id)
    };
    let is_occ_large = |class_id: ClassId, id: u32| {
        cfg.occlusions.iter().any(|o| o.class_id == class_id && o.large_id == id)
    };
    let mut objects: Vec<SimObject> = Vec::new();
    for class_id in ClassId::ALL {
        let ci = class_id.as_u8() as usize;
        let (size_lo, size_hi) = cfg.size_ranges[ci];
        for id in 1..=cfg.objects[ci] {
            if is_small(class_id, id) {
                continue;
            }
            let mut placed = None;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let sc = rng.random_range(size_lo..=size_hi);
                let sa = rng.random_range(size_lo..=size_hi);
                let b = if is_occ_large(class_id, id) {
                    // Anchor of an occlusion pair: fully visible every frame,
                    // with cross margin so the dependent small fits too.
                    let cross = rng.random_range(sc / 4.0..=cross_extent - sc);
                    let along =
                        rng.random_range(-min_off..=along_extent - sa - max_off);
                    box_from_axis(cfg, cross, along, sc, sa)
                } else {
                    let cross = rng.random_range(0.0..=cross_extent - sc);
                    let along = match cfg.motion_axis {
                        MotionAxis::PosX | MotionAxis::PosY => {
                            rng.random_range(-travel..=along_extent - sa)
                        }
                        MotionAxis::NegX | MotionAxis::NegY => {
                            rng.random_range(0.0..=along_extent - sa + travel)
                        }
                    };
                    box_from_axis(cfg, cross, along, sc, sa)
                };
                let clear = match cfg.separation {
                    None => true,
                    Some(gap) => objects
                        .iter()
                        .filter(|o| o.class_id == class_id)
                        .all(|o| boxes_gap(&o.bbox, &b) >= gap),
                };
                if clear {
                    placed = Some(b);
                    break;
                }
            }
            let Some(bbox) = placed else {
                return Err(SimError::PlacementFailed {
                    class_id: class_id.as_u8(),
                    attempts: PLACEMENT_ATTEMPTS,
                });
            };
            objects.push(SimObject { id, class_id, bbox });
        }
    }

    // 3. Occlusion smalls: sized as a fraction of the partner, centered on
    // it along the motion axis, pushed a third of the partner's width toward
    // the left so the location relation is unambiguous.
    for o in &cfg.occlusions {
        let large = objects
            .iter()
            .find(|x| x.class_id == o.class_id && x.id == o.large_id)
            .expect("validated above")
            .bbox;
        let fw = rng.random_range(0.4..=0.6);
        let fh = rng.random_range(0.4..=0.6);
        let (w, h) = (large.width * fw, large.height * fh);
        let lc = large.center();
        let cross_shift = match cfg.motion_axis {
            MotionAxis::PosX | MotionAxis::NegX => large.height / 3.0,
            MotionAxis::PosY | MotionAxis::NegY => large.width / 3.0,
        };
        let (cx, cy) = match cfg.motion_axis {
            MotionAxis::PosX | MotionAxis::NegX => (lc.cx, lc.cy - cross_shift),
            MotionAxis::PosY | MotionAxis::NegY => (lc.cx - cross_shift, lc.cy),
        };
        let bbox = BBox::new(cx - w / 2.0, cy - h / 2.0, w, h).expect("positive fraction sizes");
        objects.push(SimObject { id: o.small_id, class_id: o.class_id, bbox });
    }
    objects.sort_by_key(|o| (o.class_id.as_u8(), o.id));

    // 4.–5. Frame streams.
    let noise = (cfg.center_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cfg.center_noise_sigma).expect("positive sigma"));
    let poisson = (cfg.fp_rate > 0.0).then(|| Poisson::new(cfg.fp_rate).expect("positive rate"));
    let mut gt = Vec::new();
    let mut detections = Vec::new();
    for frame in 1..=cfg.frames {
        let (ox, oy) = offsets[(frame - 1) as usize];
        for obj in &objects {
            let b = obj.bbox.translate(ox, oy);
            if !fully_inside(&b, cfg.image_width, cfg.image_height) {
                continue;
            }
            gt.push(GtRecord { frame, track_id: obj.id, class_id: obj.class_id, bbox: b });
            let suppressed = cfg.occlusions.iter().any(|occ| {
                occ.class_id == obj.class_id
                    && occ.small_id == obj.id
                    && (occ.frame_start..=occ.frame_end).contains(&frame)
            });
            if suppressed {
                continue;
            }
            if cfg.miss_prob > 0.0 && rng.random_range(0.0..1.0) < cfg.miss_prob {
                continue;
            }
            let db = match noise {
                Some(n) => b.translate(n.sample(&mut rng), n.sample(&mut rng)),
                None => b,
            };
            detections.push(DetectionRecord {
                frame,
                class_id: obj.class_id,
                confidence: rng.random_range(0.7..=1.0),
                bbox: db,
            });
        }
        if let Some(p) = &poisson {
            let count = p.sample(&mut rng) as u64;
            for _ in 0..count {
                let class_id = ClassId::ALL[rng.random_range(0..3usize)];
                let (lo, hi) = cfg.size_ranges[class_id.as_u8() as usize];
                let w = rng.random_range(lo..=hi);
                let h = rng.random_range(lo..=hi);
                let x = rng.random_range(0.0..=cfg.image_width - w);
                let y = rng.random_range(0.0..=cfg.image_height - h);
                detections.push(DetectionRecord {
                    frame,
                    class_id,
                    confidence: rng.random_range(0.3..=0.7),
                    bbox: BBox::new(x, y, w, h).expect("sizes validated"),
                });
            }
        }
    }

    Ok(SceneData { gt, detections, objects, speeds })
}
