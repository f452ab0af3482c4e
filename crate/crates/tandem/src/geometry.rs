//! Axis-aligned bounding boxes and the box arithmetic behind the benchmark
//! metrics.
//!
//! Boxes use a top-left origin and `(x, y, w, h)` layout, matching the
//! ground-truth file format, with real-valued coordinates throughout.

use serde::{Deserialize, Serialize};

/// Axis-aligned target region in pixel coordinates.
///
/// `x`/`y` locate the top-left corner; `w` and `h` must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Creates a box from its top-left corner and size.
    ///
    /// Panics if `w` or `h` is not strictly positive.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        assert!(w > 0.0 && h > 0.0, "bounding box must have positive size");
        Self { x, y, w, h }
    }

    /// Creates a box from its center point and size.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    /// Center of the box, `(x + w/2, y + h/2)`.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Diagonal length, `sqrt(w^2 + h^2)`.
    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }
}

/// Intersection-over-union of two boxes. Symmetric, in `[0, 1]`, and zero
/// for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = overlap_1d(a.x, a.w, b.x, b.w);
    let iy = overlap_1d(a.y, a.h, b.y, b.h);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}

fn overlap_1d(a0: f64, alen: f64, b0: f64, blen: f64) -> f64 {
    let lo = a0.max(b0);
    let hi = (a0 + alen).min(b0 + blen);
    (hi - lo).max(0.0)
}

/// Euclidean distance between box centers.
pub fn center_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}
