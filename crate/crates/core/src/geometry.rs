//! Boxes, cylinders and the pinhole projection relations between them.
//!
//! Boxes are stored in center/aspect/height form throughout the crate; the
//! corner (tlwh) form exists only at I/O boundaries. World objects are upright
//! cylinders in the camera frame with Z pointing forward.

use crate::error::CoreError;

/// Image-space bounding box as (center x, center y, aspect ratio, height).
///
/// Aspect is width/height, so `width = aspect * height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub aspect: f64,
    pub height: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, aspect: f64, height: f64) -> Result<Self, CoreError> {
        let b = BBox { cx, cy, aspect, height };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(CoreError::InvalidGeometry("non-finite box center"));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(CoreError::InvalidGeometry("box height must be positive"));
        }
        if !(self.aspect.is_finite() && self.aspect > 0.0) {
            return Err(CoreError::InvalidGeometry("box aspect must be positive"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.aspect * self.height
    }

    /// Corners as (left, top, right, bottom).
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        let w = self.width();
        let h = self.height;
        (self.cx - w / 2.0, self.cy - h / 2.0, self.cx + w / 2.0, self.cy + h / 2.0)
    }

    /// Corner form used by the MOT text files.
    pub fn to_tlwh(&self) -> (f64, f64, f64, f64) {
        let (l, t, r, b) = self.corners();
        (l, t, r - l, b - t)
    }

    pub fn from_tlwh(left: f64, top: f64, width: f64, height: f64) -> Result<Self, CoreError> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(CoreError::InvalidGeometry("tlwh box needs positive extent"));
        }
        BBox::new(left + width / 2.0, top + height / 2.0, width / height, height)
    }
}

/// Upright cylinder in the camera frame: centroid (X, Y, Z), height H, aspect A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub height: f64,
    pub aspect: f64,
}

impl Cylinder3D {
    pub fn new(x: f64, y: f64, z: f64, height: f64, aspect: f64) -> Result<Self, CoreError> {
        if !(z.is_finite() && z > 0.0) {
            return Err(CoreError::InvalidGeometry("cylinder Z must be positive"));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(CoreError::InvalidGeometry("cylinder height must be positive"));
        }
        Ok(Cylinder3D { x, y, z, height, aspect })
    }
}

/// Pinhole camera with a single focal length in pixels and a principal point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Focal length in pixels.
    pub focal: f64,
    /// Principal point (px, py); defaults to the image center.
    pub principal: (f64, f64),
}

impl CameraModel {
    pub fn new(focal: f64, principal: (f64, f64)) -> Result<Self, CoreError> {
        if !(focal.is_finite() && focal > 0.0) {
            return Err(CoreError::InvalidGeometry("focal length must be positive"));
        }
        Ok(CameraModel { focal, principal })
    }

    /// Fallback camera when no calibration is known: focal = image width,
    /// principal point at the image center.
    pub fn from_image_size(width: u32, height: u32) -> Self {
        CameraModel { focal: width as f64, principal: (width as f64 / 2.0, height as f64 / 2.0) }
    }
}

/// Row-major 3x3 homography mapping the previous frame's pixel coordinates
/// into the current frame, used to compensate camera egomotion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Warp(pub [[f64; 3]; 3]);

impl Warp {
    pub fn identity() -> Self {
        Warp([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Warp([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Map a point with homogeneous normalization.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.0;
        let u = m[0][0] * x + m[0][1] * y + m[0][2];
        let v = m[1][0] * x + m[1][1] * y + m[1][2];
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (u / w, v / w)
    }

    /// Local Jacobian of the map at (x, y); transforms velocities.
    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let m = &self.0;
        let u = m[0][0] * x + m[0][1] * y + m[0][2];
        let v = m[1][0] * x + m[1][1] * y + m[1][2];
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        let w2 = w * w;
        [
            [(m[0][0] * w - u * m[2][0]) / w2, (m[0][1] * w - u * m[2][1]) / w2],
            [(m[1][0] * w - v * m[2][0]) / w2, (m[1][1] * w - v * m[2][1]) / w2],
        ]
    }
}

/// Intersection-over-union of two boxes in axis-aligned corner form.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (al, at, ar, ab) = a.corners();
    let (bl, bt, br, bb) = b.corners();
    let iw = (ar.min(br) - al.max(bl)).max(0.0);
    let ih = (ab.min(bb) - at.max(bt)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.width() * a.height + b.width() * b.height - inter;
    inter / union
}

/// Project a cylinder through the pinhole camera to an image box.
///
/// cx = f*X/Z + px, cy = f*Y/Z + py, height = f*H/Z, aspect carried over.
pub fn project(c: &Cylinder3D, cam: &CameraModel) -> Result<BBox, CoreError> {
    if c.z <= 0.0 {
        return Err(CoreError::InvalidGeometry("cannot project Z <= 0"));
    }
    BBox::new(
        cam.focal * c.x / c.z + cam.principal.0,
        cam.focal * c.y / c.z + cam.principal.1,
        c.aspect,
        cam.focal * c.height / c.z,
    )
}

/// Invert [`project`] at a known inverse depth.
///
/// `project(backproject(b, g, cam), cam)` reproduces `b` exactly.
pub fn backproject(b: &BBox, inv_depth: f64, cam: &CameraModel) -> Result<Cylinder3D, CoreError> {
    if !(inv_depth.is_finite() && inv_depth > 0.0) {
        return Err(CoreError::NonPositiveDepth);
    }
    let z = 1.0 / inv_depth;
    Cylinder3D::new(
        (b.cx - cam.principal.0) * z / cam.focal,
        (b.cy - cam.principal.1) * z / cam.focal,
        z,
        b.height * z / cam.focal,
        b.aspect,
    )
}
