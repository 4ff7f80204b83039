//! Quad-camera model: four physical cameras on the corners of a square, a
//! virtual camera at their centroid, radial distortion, and the mapping from
//! target disparity to per-camera patch offsets.
//!
//! Offsets are computed in the shared pinhole model, so they are exactly
//! antisymmetric across the camera square (they sum to zero for any
//! disparity). Per-camera deviations, including distortion residuals beyond
//! the shared radial model, enter the pipeline through calibration-kernel
//! center offsets instead of this module.

use crate::fd::CalibKernel;
use serde::{Deserialize, Serialize};

/// Camera order around the square. Coordinates are image convention:
/// x right, y down, so camera 0 is top-left.
pub const CAMERA_COUNT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("target disparity {0} is negative")]
    NegativeDisparity(f64),
    #[error("point ({0}, {1}) outside the {2}x{3} image")]
    OutOfImage(f64, f64, usize, usize),
    #[error("undistort did not converge after {iters} iterations at r = {radius} px")]
    UndistortDiverged { iters: usize, radius: f64 },
    #[error("kernel grid with {nodes} nodes cannot be {rows}x{cols}")]
    BadGridShape {
        nodes: usize,
        rows: usize,
        cols: usize,
    },
}

/// Fixed quad layout: unit-square corners in baseline units,
/// order TL, TR, BL, BR.
pub const SQUARE_POSITIONS: [[f64; 2]; 4] = [
    [-0.5, -0.5],
    [0.5, -0.5],
    [-0.5, 0.5],
    [0.5, 0.5],
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraGeometry {
    /// Square side, meters.
    pub baseline_m: f64,
    /// Meters per pixel on the sensor.
    pub pixel_pitch_m: f64,
    /// Meters.
    pub focal_length_m: f64,
    /// (width, height) pixels.
    pub image_size: (usize, usize),
    /// Corner offsets in baseline units; must sum to zero per axis.
    pub camera_positions: [[f64; 2]; 4],
    /// Radial coefficients (k1, k2, k3) in px^-2, px^-4, px^-6.
    pub radial_distortion: [f64; 3],
}

impl CameraGeometry {
    /// Standard square rig with the given physical parameters.
    pub fn quad(
        baseline_m: f64,
        pixel_pitch_m: f64,
        focal_length_m: f64,
        image_size: (usize, usize),
        radial_distortion: [f64; 3],
    ) -> Self {
        CameraGeometry {
            baseline_m,
            pixel_pitch_m,
            focal_length_m,
            image_size,
            camera_positions: SQUARE_POSITIONS,
            radial_distortion,
        }
    }

    /// Principal point: the image center, continuous pixel coordinates.
    pub fn principal_point(&self) -> (f64, f64) {
        (self.image_size.0 as f64 / 2.0, self.image_size.1 as f64 / 2.0)
    }

    /// Disparity in pixels for an object at `range_m` meters.
    pub fn range_to_disparity(&self, range_m: f64) -> f64 {
        self.baseline_m * self.focal_length_m / (self.pixel_pitch_m * range_m)
    }

    /// Range in meters for a disparity in pixels.
    pub fn disparity_to_range(&self, disparity_px: f64) -> f64 {
        self.baseline_m * self.focal_length_m / (self.pixel_pitch_m * disparity_px)
    }

    fn check_inside(&self, x: f64, y: f64) -> Result<(), GeomError> {
        let (w, h) = self.image_size;
        if !(x.is_finite() && y.is_finite())
            || x < 0.0
            || y < 0.0
            || x >= w as f64
            || y >= h as f64
        {
            return Err(GeomError::OutOfImage(x, y, w, h));
        }
        Ok(())
    }
}

/// Per-camera patch offsets for one tile at the given target disparity:
/// camera i looks at `tile_center + offset_i`, `offset_i = -d * position_i`.
/// Horizontal pairs then differ by exactly d in x, vertical pairs by d in y,
/// diagonal pairs by d*sqrt(2) along their diagonal.
pub fn disparity_to_offsets(
    geom: &CameraGeometry,
    tile_center: (f64, f64),
    target_disparity: f64,
) -> Result<[[f64; 2]; 4], GeomError> {
    if !(target_disparity >= 0.0) {
        return Err(GeomError::NegativeDisparity(target_disparity));
    }
    geom.check_inside(tile_center.0, tile_center.1)?;
    let mut offsets = [[0.0f64; 2]; 4];
    for (o, p) in offsets.iter_mut().zip(geom.camera_positions.iter()) {
        o[0] = -target_disparity * p[0];
        o[1] = -target_disparity * p[1];
    }
    Ok(offsets)
}

/// Splits a real offset into integer and fractional parts with the fraction
/// in [-0.5, 0.5): round half away from zero, with exact negative halves
/// normalized upward so the fraction stays in range. Reconstruction
/// `integer + fraction` is exact.
pub fn split_scalar(v: f64) -> (i64, f64) {
    let mut i = v.abs().round().copysign(v) as i64; // half away from zero
    let mut f = v - i as f64;
    if f == 0.5 {
        // only reachable from negative exact halves
        i += 1;
        f = -0.5;
    }
    (i, f)
}

/// [`split_scalar`] on both components of a 2D offset.
pub fn split_offset(offset: [f64; 2]) -> ([i64; 2], [f64; 2]) {
    let (ix, fx) = split_scalar(offset[0]);
    let (iy, fy) = split_scalar(offset[1]);
    ([ix, iy], [fx, fy])
}

/// Applies the shared radial model about the principal point:
/// `r' = r (1 + k1 r^2 + k2 r^4 + k3 r^6)`.
pub fn distort(geom: &CameraGeometry, point: (f64, f64)) -> (f64, f64) {
    let (px, py) = geom.principal_point();
    let (vx, vy) = (point.0 - px, point.1 - py);
    let r2 = vx * vx + vy * vy;
    let [k1, k2, k3] = geom.radial_distortion;
    let s = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    (px + vx * s, py + vy * s)
}

const UNDISTORT_TOL: f64 = 1e-10;
const UNDISTORT_MAX_ITERS: usize = 50;
const UNDISTORT_DAMPING: f64 = 0.8;

/// Inverts [`distort`] by damped fixed-point iteration. Converges to well
/// under 1e-9 px for physical coefficient magnitudes; coefficient sets that
/// fail to settle within 50 iterations are reported as non-invertible.
pub fn undistort(geom: &CameraGeometry, point: (f64, f64)) -> Result<(f64, f64), GeomError> {
    let (px, py) = geom.principal_point();
    let (dx, dy) = (point.0 - px, point.1 - py);
    let [k1, k2, k3] = geom.radial_distortion;
    let (mut ux, mut uy) = (dx, dy);
    for _ in 0..UNDISTORT_MAX_ITERS {
        let r2 = ux * ux + uy * uy;
        let s = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
        let (nx, ny) = (dx / s, dy / s);
        let step2 = (nx - ux) * (nx - ux) + (ny - uy) * (ny - uy);
        ux += UNDISTORT_DAMPING * (nx - ux);
        uy += UNDISTORT_DAMPING * (ny - uy);
        if step2 < UNDISTORT_TOL * UNDISTORT_TOL {
            return Ok((px + ux, py + uy));
        }
    }
    Err(GeomError::UndistortDiverged {
        iters: UNDISTORT_MAX_ITERS,
        radius: (dx * dx + dy * dy).sqrt(),
    })
}

/// One tile's worth of per-camera aiming data on the stride-8 grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TileJob {
    pub tile_index: (usize, usize),
    pub target_disparity: f64,
    /// Whole-pixel part of each camera's patch offset.
    pub integer_offsets: [[i64; 2]; 4],
    /// Sub-pixel remainder, each component in [-0.5, 0.5).
    pub fractional_offsets: [[f64; 2]; 4],
}

/// Builds a [`TileJob`]: disparity offsets plus per-camera extras (kernel
/// center offsets), split into integer and fractional parts.
pub fn make_tile_job(
    geom: &CameraGeometry,
    tile_index: (usize, usize),
    tile_center: (f64, f64),
    target_disparity: f64,
    extra_offsets: &[[f64; 2]; 4],
) -> Result<TileJob, GeomError> {
    let base = disparity_to_offsets(geom, tile_center, target_disparity)?;
    let mut integer_offsets = [[0i64; 2]; 4];
    let mut fractional_offsets = [[0.0f64; 2]; 4];
    for cam in 0..CAMERA_COUNT {
        let total = [
            base[cam][0] + extra_offsets[cam][0],
            base[cam][1] + extra_offsets[cam][1],
        ];
        let (i, f) = split_offset(total);
        integer_offsets[cam] = i;
        fractional_offsets[cam] = f;
    }
    Ok(TileJob {
        tile_index,
        target_disparity,
        integer_offsets,
        fractional_offsets,
    })
}

/// Regular lattice of calibration kernels covering the image, spacing
/// `spacing` pixels, node (0,0) at pixel (0,0).
#[derive(Clone, Debug)]
pub struct KernelGrid {
    spacing: f64,
    rows: usize,
    cols: usize,
    nodes: Vec<CalibKernel>,
}

impl KernelGrid {
    pub fn new(
        spacing: f64,
        rows: usize,
        cols: usize,
        nodes: Vec<CalibKernel>,
    ) -> Result<Self, GeomError> {
        if nodes.len() != rows * cols || rows == 0 || cols == 0 || !(spacing > 0.0) {
            return Err(GeomError::BadGridShape {
                nodes: nodes.len(),
                rows,
                cols,
            });
        }
        Ok(KernelGrid {
            spacing,
            rows,
            cols,
            nodes,
        })
    }

    /// Identity kernels on a lattice that covers `image_size`.
    pub fn identity_cover(spacing: f64, image_size: (usize, usize)) -> Self {
        let cols = (image_size.0 as f64 / spacing).ceil() as usize + 1;
        let rows = (image_size.1 as f64 / spacing).ceil() as usize + 1;
        KernelGrid {
            spacing,
            rows,
            cols,
            nodes: vec![CalibKernel::identity(); rows * cols],
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn node(&self, row: usize, col: usize) -> &CalibKernel {
        &self.nodes[row * self.cols + col]
    }

    pub fn node_mut(&mut self, row: usize, col: usize) -> &mut CalibKernel {
        &mut self.nodes[row * self.cols + col]
    }

    /// True when the node lattice extends to every pixel of `image_size`.
    pub fn covers(&self, image_size: (usize, usize)) -> bool {
        (self.cols - 1) as f64 * self.spacing >= image_size.0 as f64 - 1.0
            && (self.rows - 1) as f64 * self.spacing >= image_size.1 as f64 - 1.0
    }
}

/// Kernel for a tile: bilinear interpolation of the four surrounding nodes'
/// center offsets, with the multiplier tensor taken from the nearest node
/// (ties resolve to the lower index).
pub fn lookup_kernel(
    grid: &KernelGrid,
    geom: &CameraGeometry,
    tile_center: (f64, f64),
) -> Result<CalibKernel, GeomError> {
    geom.check_inside(tile_center.0, tile_center.1)?;
    let cell = |v: f64, count: usize| -> (usize, f64) {
        let t = (v / grid.spacing).clamp(0.0, (count - 1) as f64);
        // low corner in [0, count-2] so low+1 stays valid; 1-node axes pin to 0
        let i = if count > 1 {
            (t.floor() as usize).min(count - 2)
        } else {
            0
        };
        (i, t - i as f64)
    };
    let (cx, fx) = cell(tile_center.0, grid.cols);
    let (cy, fy) = cell(tile_center.1, grid.rows);
    let (x1, y1) = (
        if grid.cols > 1 { cx + 1 } else { cx },
        if grid.rows > 1 { cy + 1 } else { cy },
    );
    let n00 = grid.node(cy, cx);
    let n01 = grid.node(cy, x1);
    let n10 = grid.node(y1, cx);
    let n11 = grid.node(y1, x1);
    let lerp2 = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let mut center_offset = [0.0f64; 2];
    for axis in 0..2 {
        let top = lerp2(n00.center_offset[axis], n01.center_offset[axis], fx);
        let bottom = lerp2(n10.center_offset[axis], n11.center_offset[axis], fx);
        center_offset[axis] = lerp2(top, bottom, fy);
    }
    let nearest_x = if fx > 0.5 { x1 } else { cx };
    let nearest_y = if fy > 0.5 { y1 } else { cy };
    Ok(CalibKernel {
        multipliers: grid.node(nearest_y, nearest_x).multipliers,
        center_offset,
    })
}
