//! Tracking-by-detection toolkit for fruit-counting rigs that move at a
//! near-constant speed over a static scene.
//!
//! The crate bundles three frame-to-frame trackers (a buffer-gated
//! constant-velocity tracker with occlusion inference, a SORT-style
//! Kalman/Hungarian baseline, and a nearest-centroid baseline), the usual
//! tracking and detection metrics (MOTA, MOTP, IDF1/IDP/IDR, MT, ID switches,
//! mAP@0.5, FPS), and a deterministic scene simulator used as the test oracle.

pub mod formats;
pub mod geometry;
pub mod ibta;
pub mod kalman;
pub mod metrics;
pub mod simulator;
pub mod trackers;
