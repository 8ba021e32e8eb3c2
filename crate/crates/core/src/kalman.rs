//! Constant-velocity linear Kalman filter over bounding boxes.
//!
//! State layout is the 7-vector (cx, cy, s, r, vx, vy, vs) where s is the box
//! area and r the aspect ratio w/h. The motion model advances cx, cy, s by
//! their velocities and holds r constant (no vr component). Only the SORT
//! baseline uses this filter.
//!
//! Noise construction follows the common SORT-lineage convention: standard
//! deviations are scaled by the current box size, with `position_weight`
//! (default 1/20) for the observable components and `velocity_weight`
//! (default 1/160) for the velocities. With d = sqrt(s):
//!
//! - initial cov stds: (2wp·d, 2wp·d, 2wp·s, 1e-2, 10wv·d, 10wv·d, 10wv·s)
//! - process stds:     (wp·d, wp·d, wp·s, 1e-2, wv·d, wv·d, wv·s)
//! - measurement stds: (wp·d, wp·d, wp·s, 1e-1)

use crate::geometry::BBox;
use nalgebra::{DMatrix, DVector};

/// Smallest admissible scale/aspect; predictions and updates clamp to this.
pub const SCALE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    pub position_weight: f64,
    pub velocity_weight: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams { position_weight: 1.0 / 20.0, velocity_weight: 1.0 / 160.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    /// (cx, cy, s, r, vx, vy, vs)
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Set when a predict drove the scale non-positive and it was pinned at
    /// `SCALE_EPS` with its velocity zeroed.
    pub scale_frozen: bool,
}

fn transition() -> DMatrix<f64> {
    let mut f = DMatrix::identity(7, 7);
    f[(0, 4)] = 1.0;
    f[(1, 5)] = 1.0;
    f[(2, 6)] = 1.0;
    f
}

fn observation() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(4, 7);
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

fn diag_from_stds(stds: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(stds.len(), stds.iter().map(|s| s * s)))
}

fn process_noise(s: f64, p: &KalmanParams) -> DMatrix<f64> {
    let d = s.max(SCALE_EPS).sqrt();
    let (wp, wv) = (p.position_weight, p.velocity_weight);
    diag_from_stds(&[wp * d, wp * d, wp * s, 1e-2, wv * d, wv * d, wv * s])
}

fn measurement_noise(s: f64, p: &KalmanParams) -> DMatrix<f64> {
    let d = s.max(SCALE_EPS).sqrt();
    let wp = p.position_weight;
    diag_from_stds(&[wp * d, wp * d, wp * s, 1e-1])
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// One generic linear predict step: x' = F x, P' = F P Fᵀ + Q.
pub fn linear_predict(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let mean = f * mean;
    let mut cov = f * cov * f.transpose() + q;
    symmetrize(&mut cov);
    (mean, cov)
}

/// One generic linear update step with measurement z under model H, noise R.
/// A numerically singular innovation covariance leaves the state unchanged
/// (it means the measured subspace is already known exactly).
pub fn linear_update(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    z: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let s = h * cov * h.transpose() + r;
    let ph_t = cov * h.transpose();
    let k_t = match s.clone().cholesky() {
        Some(chol) => chol.solve(&ph_t.transpose()),
        None => match s.try_inverse() {
            Some(inv) => inv * ph_t.transpose(),
            None => return (mean.clone(), cov.clone()),
        },
    };
    let k = k_t.transpose();
    let innovation = z - h * mean;
    let mean = mean + &k * innovation;
    let n = cov.nrows();
    let mut cov = (DMatrix::identity(n, n) - &k * h) * cov;
    symmetrize(&mut cov);
    (mean, cov)
}

/// Fresh state centered on a box: velocities zero, covariance the configured
/// initial diagonal.
pub fn kf_init(b: &BBox, params: &KalmanParams) -> KalmanState {
    let c = b.center();
    let s = b.area();
    let r = b.width / b.height;
    let mean = DVector::from_vec(vec![c.cx, c.cy, s, r, 0.0, 0.0, 0.0]);
    let d = s.sqrt();
    let (wp, wv) = (params.position_weight, params.velocity_weight);
    let cov = diag_from_stds(&[
        2.0 * wp * d,
        2.0 * wp * d,
        2.0 * wp * s,
        1e-2,
        10.0 * wv * d,
        10.0 * wv * d,
        10.0 * wv * s,
    ]);
    KalmanState { mean, cov, scale_frozen: false }
}

/// Advances the state one frame under constant velocity. A non-positive
/// predicted scale is pinned at `SCALE_EPS` with its velocity zeroed and the
/// state flagged.
pub fn kf_predict(st: &KalmanState, params: &KalmanParams) -> KalmanState {
    let q = process_noise(st.mean[2], params);
    let (mut mean, cov) = linear_predict(&st.mean, &st.cov, &transition(), &q);
    let mut frozen = st.scale_frozen;
    if mean[2] <= 0.0 {
        mean[2] = SCALE_EPS;
        mean[6] = 0.0;
        frozen = true;
    }
    KalmanState { mean, cov, scale_frozen: frozen }
}

/// Folds a measured box into the state.
pub fn kf_update(st: &KalmanState, z: &BBox, params: &KalmanParams) -> KalmanState {
    let c = z.center();
    let zv = DVector::from_vec(vec![c.cx, c.cy, z.area(), z.width / z.height]);
    let r = measurement_noise(st.mean[2], params);
    let (mut mean, cov) = linear_update(&st.mean, &st.cov, &observation(), &r, &zv);
    mean[2] = mean[2].max(SCALE_EPS);
    mean[3] = mean[3].max(SCALE_EPS);
    KalmanState { mean, cov, scale_frozen: st.scale_frozen }
}

/// Converts the state estimate back to a box.
pub fn state_bbox(st: &KalmanState) -> BBox {
    let s = st.mean[2].max(SCALE_EPS);
    let r = st.mean[3].max(SCALE_EPS);
    let w = (s * r).sqrt();
    let h = (s / r).sqrt();
    BBox::new(st.mean[0] - w / 2.0, st.mean[1] - h / 2.0, w, h)
        .expect("state mean produced an invalid box")
}
