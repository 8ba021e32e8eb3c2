//! Axis-aligned bounding boxes and the overlap arithmetic used everywhere else.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("box size must be positive, got {width}x{height}")]
    NonPositiveSize { width: f64, height: f64 },
    #[error("box fields must be finite")]
    NonFinite,
}

/// Axis-aligned box, origin at the top-left corner, continuous pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub width: f64,
    pub height: f64,
}

/// A point in image coordinates (box centers, mostly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub cx: f64,
    pub cy: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        ((self.cx - other.cx).powi(2) + (self.cy - other.cy).powi(2)).sqrt()
    }
}

impl BBox {
    /// Builds a box, rejecting degenerate or non-finite geometry up front so
    /// the operations below never have to handle it.
    pub fn new(x_min: f64, y_min: f64, width: f64, height: f64) -> Result<BBox, GeometryError> {
        if !(x_min.is_finite() && y_min.is_finite() && width.is_finite() && height.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if width <= 0.0 || height <= 0.0 {
            return Err(GeometryError::NonPositiveSize { width, height });
        }
        Ok(BBox { x_min, y_min, width, height })
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_min + self.width
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y_min + self.height
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point { cx: self.x_min + self.width / 2.0, cy: self.y_min + self.height / 2.0 }
    }

    /// Same size, origin shifted by (dx, dy).
    #[inline]
    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox { x_min: self.x_min + dx, y_min: self.y_min + dy, ..*self }
    }

    /// Diagonal length; half of this is the "extent" used by distance gates.
    #[inline]
    pub fn diagonal(&self) -> f64 {
        (self.width * self.width + self.height * self.height).sqrt()
    }
}

/// Intersection over union. Zero when the boxes are disjoint or merely touch.
///
/// All extents here are derived from the corner coordinates, including the
/// per-box areas, so identical boxes score exactly 1.0. Mixing corner-derived
/// intersection widths with `width * height` areas would lose that at the
/// last ulp whenever `x_min + width` rounds, and evaluation code relies on
/// self-overlap being exact.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ax1, ay0, ay1) = (a.x_min, a.x_max(), a.y_min, a.y_max());
    let (bx0, bx1, by0, by1) = (b.x_min, b.x_max(), b.y_min, b.y_max());
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let area_a = (ax1 - ax0) * (ay1 - ay0);
    let area_b = (bx1 - bx0) * (by1 - by0);
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}
