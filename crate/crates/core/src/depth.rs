//! Dense depth rasters and the freespace queries made against them.
//!
//! A [`DepthField`] stores the per-pixel depth of the nearest observed surface.
//! Space between the camera and that surface must be empty; space beyond it is
//! unobserved and may hide people. Queries are pure and the field is immutable
//! after construction, so concurrent reads are safe.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::geometry::BBox;

/// Per-frame dense depth raster in relative units (> 0).
#[derive(Debug, Clone)]
pub struct DepthField {
    width: u32,
    height: u32,
    frame_id: u64,
    values: Vec<f32>,
}

/// Binary foreground raster (person masks), same geometry as the depth raster.
#[derive(Debug, Clone)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// Outcome of checking a forecast depth against the freespace horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreespaceVerdict {
    /// The forecast lies at or beyond the horizon: report it as occluded.
    ReportOccluded,
    /// The forecast lies slightly inside freespace: withhold it this frame.
    Suppress,
    /// The forecast lies deep inside freespace: the track is wrong, delete it.
    Delete,
}

impl DepthField {
    /// Build a field from row-major values, validating that every entry is
    /// finite and positive.
    pub fn new(
        width: u32,
        height: u32,
        frame_id: u64,
        values: Vec<f32>,
    ) -> Result<Self, CoreError> {
        if values.len() != (width as usize) * (height as usize) {
            return Err(CoreError::InvalidGeometry("depth raster size mismatch"));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(CoreError::NonPositiveDepth);
        }
        Ok(DepthField { width, height, frame_id, values })
    }

    /// Constant-depth field, mostly useful in tests.
    pub fn constant(width: u32, height: u32, frame_id: u64, depth: f32) -> Result<Self, CoreError> {
        Self::new(width, height, frame_id, alloc::vec![depth; (width as usize) * (height as usize)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_id(&self) -> u64 {
        self.frame_id
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.values[(y as usize) * (self.width as usize) + (x as usize)] as f64
    }

    /// Integer pixel spans covered by a box, clipped to the image.
    /// Returns `(x0, x1, y0, y1)` half-open, or `None` when nothing overlaps.
    fn clipped_span(&self, b: &BBox) -> Option<(u32, u32, u32, u32)> {
        let (l, t, r, bo) = b.corners();
        let x0 = floor_clamp(l, self.width);
        let x1 = ceil_clamp(r, self.width);
        let y0 = floor_clamp(t, self.height);
        let y1 = ceil_clamp(bo, self.height);
        if x0 >= x1 || y0 >= y1 {
            None
        } else {
            Some((x0, x1, y0, y1))
        }
    }

    /// Mean inverse depth over the box, optionally restricted to a person mask.
    ///
    /// The mask is honoured only when it covers at least a quarter of the
    /// box's in-image pixels; sparser masks are treated as segmentation
    /// failures and the full box is used instead.
    pub fn region_inverse_depth(&self, b: &BBox, mask: Option<&Mask>) -> Result<f64, CoreError> {
        let (x0, x1, y0, y1) = self.clipped_span(b).ok_or(CoreError::BoxOutsideImage)?;
        let box_pixels = ((x1 - x0) as u64) * ((y1 - y0) as u64);

        if let Some(m) = mask {
            let mut sum = 0.0;
            let mut n: u64 = 0;
            for y in y0..y1 {
                for x in x0..x1 {
                    if m.covers(x, y) {
                        sum += 1.0 / self.at(x, y);
                        n += 1;
                    }
                }
            }
            if n * 4 >= box_pixels {
                return Ok(sum / n as f64);
            }
        }

        let mut sum = 0.0;
        for y in y0..y1 {
            for x in x0..x1 {
                sum += 1.0 / self.at(x, y);
            }
        }
        Ok(sum / box_pixels as f64)
    }

    /// Observed depth of the freespace horizon at a forecast box.
    ///
    /// Robust surrogate for the point depth at the box center: the median
    /// depth over the 50%-scaled central sub-box, with the center clamped
    /// inside the image so border forecasts still get a value.
    pub fn horizon_depth(&self, b: &BBox) -> f64 {
        let cx = b.cx.clamp(0.0, (self.width - 1) as f64);
        let cy = b.cy.clamp(0.0, (self.height - 1) as f64);
        let w = b.width() / 2.0;
        let h = b.height / 2.0;
        let x0 = floor_clamp(cx - w / 2.0, self.width);
        let x1 = ceil_clamp(cx + w / 2.0, self.width).max(x0 + 1).min(self.width);
        let y0 = floor_clamp(cy - h / 2.0, self.height);
        let y1 = ceil_clamp(cy + h / 2.0, self.height).max(y0 + 1).min(self.height);

        let mut vals: Vec<f32> = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize);
        for y in y0..y1 {
            for x in x0..x1 {
                vals.push(self.values[(y as usize) * (self.width as usize) + (x as usize)]);
            }
        }
        if vals.is_empty() {
            // clamped center always lands on a pixel
            let x = cx as u32;
            let y = cy as u32;
            return self.at(x.min(self.width - 1), y.min(self.height - 1));
        }
        vals.sort_unstable_by(f32::total_cmp);
        vals[(vals.len() - 1) / 2] as f64
    }
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, CoreError> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(CoreError::InvalidGeometry("mask raster size mismatch"));
        }
        Ok(Mask { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn covers(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        self.data[(y as usize) * (self.width as usize) + (x as usize)] != 0
    }
}

/// Classify a forecast depth against the observed horizon depth.
pub fn freespace_verdict(
    z_f: f64,
    z_o: f64,
    alpha_supp: f64,
    alpha_delete: f64,
) -> Result<FreespaceVerdict, CoreError> {
    if !(z_f.is_finite() && z_f > 0.0 && z_o.is_finite() && z_o > 0.0) {
        return Err(CoreError::NonPositiveDepth);
    }
    if !(alpha_delete < alpha_supp) {
        return Err(CoreError::InvalidParameter("alpha_delete must be < alpha_supp"));
    }
    if z_f < alpha_delete * z_o {
        Ok(FreespaceVerdict::Delete)
    } else if z_f < alpha_supp * z_o {
        Ok(FreespaceVerdict::Suppress)
    } else {
        Ok(FreespaceVerdict::ReportOccluded)
    }
}

fn floor_clamp(v: f64, max: u32) -> u32 {
    let f = libm::floor(v);
    if f <= 0.0 {
        0
    } else if f >= max as f64 {
        max
    } else {
        f as u32
    }
}

fn ceil_clamp(v: f64, max: u32) -> u32 {
    let c = libm::ceil(v);
    if c <= 0.0 {
        0
    } else if c >= max as f64 {
        max
    } else {
        c as u32
    }
}
