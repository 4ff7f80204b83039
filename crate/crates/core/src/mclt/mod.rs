//! Windowed lapped transform of 16x16 tiles, forward and inverse.
//!
//! A 16x16 pixel tile, weighted by separable half-sine windows, maps to four
//! 8x8 quadrants `[CC, SC, CS, SS]` (first letter = vertical basis,
//! C = cosine, S = sine). Per axis the basis is
//! `cos or sin of (pi/8) (n + 1/2 + 4)(k + 1/2)`, `n = 0..16`, `k = 0..8`,
//! evaluated as a fold to 8 samples followed by an 8-point DCT-IV/DST-IV.
//!
//! Scaling: each quadrant carries `sqrt(2/16)` per dimension (1/8 overall vs.
//! the bare basis summation), which makes the four-quadrant analysis an
//! isometry: quadrant energies sum to the windowed-tile energy, and the
//! synthesis path [`imclt_tile`] is the exact transpose. With the shift-0
//! window pair (Princen-Bradley condition) stride-8 overlap-add therefore
//! reconstructs interior pixels exactly.
//!
//! [`reference::mclt_forward_direct`] is the normative direct-summation form;
//! the folded fast path is tested against it.

mod bayer;

pub use bayer::{
    bayer_window_mass, mclt_forward_bayer, mclt_forward_bayer_reference, BayerFdTile, BayerPhase,
    Color,
};

use crate::dtt::{self, apply_2d, Block8, Transform};
use std::f64::consts::PI;

/// Tile side in pixels.
pub const TILE: usize = 16;
/// Tile grid stride in pixels (50% overlap).
pub const STRIDE: usize = 8;

/// A 16x16 pixel tile, row-major, `tile[row][col]`, linear-light values.
pub type Tile16 = [[f64; TILE]; TILE];

/// Quadrant indices within [`FdTile::quadrants`].
pub const QUAD_CC: usize = 0;
pub const QUAD_SC: usize = 1;
pub const QUAD_CS: usize = 2;
pub const QUAD_SS: usize = 3;

/// Per-quadrant (horizontal, vertical) transform kinds used after folding.
const QUAD_KINDS: [(Transform, Transform); 4] = [
    (Transform::Dct4, Transform::Dct4), // CC
    (Transform::Dct4, Transform::Dst4), // SC: vertical sine
    (Transform::Dst4, Transform::Dct4), // CS: horizontal sine
    (Transform::Dst4, Transform::Dst4), // SS
];

/// Scale applied on top of the orthonormal 2D DTT of the folded blocks; makes
/// the analysis map an isometry (see module docs).
const QUADRANT_SCALE: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum McltError {
    #[error("window shift {0} outside [-0.5, 0.5]")]
    ShiftOutOfRange(f64),
    #[error("tile at origin ({0}, {1}) does not fit a {2}x{3} canvas")]
    OutOfCanvas(i64, i64, usize, usize),
}

/// One-dimensional analysis/synthesis window: 16 half-sine taps, optionally
/// shifted by up to half a pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window1D {
    taps: [f64; TILE],
    shift: f64,
}

impl Window1D {
    pub fn taps(&self) -> &[f64; TILE] {
        &self.taps
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Sum of the taps (window mass).
    pub fn mass(&self) -> f64 {
        self.taps.iter().sum()
    }
}

/// Builds the half-sine window `taps(n) = sin(pi (n + 1/2 + shift) / 16)`,
/// clamped to zero outside the half-sine support. At `shift = 0` the taps
/// satisfy the Princen-Bradley condition `taps(n)^2 + taps(n+8)^2 = 1`.
pub fn make_window(shift: f64) -> Result<Window1D, McltError> {
    if !shift.is_finite() || shift.abs() > 0.5 {
        return Err(McltError::ShiftOutOfRange(shift));
    }
    let mut taps = [0.0f64; TILE];
    for (n, t) in taps.iter_mut().enumerate() {
        let arg = (n as f64 + 0.5 + shift) / TILE as f64;
        *t = if (0.0..=1.0).contains(&arg) {
            (PI * arg).sin()
        } else {
            0.0
        };
    }
    Ok(Window1D { taps, shift })
}

/// Frequency-domain tile: four 8x8 quadrants plus the window shifts that were
/// in effect when the tile was analyzed.
#[derive(Clone, Debug, PartialEq)]
pub struct FdTile {
    /// `[CC, SC, CS, SS]`; first letter = vertical basis.
    pub quadrants: [Block8; 4],
    /// Horizontal window shift used at analysis time.
    pub shift_h: f64,
    /// Vertical window shift used at analysis time.
    pub shift_v: f64,
}

impl FdTile {
    pub fn zero() -> Self {
        FdTile {
            quadrants: [[[0.0; 8]; 8]; 4],
            shift_h: 0.0,
            shift_v: 0.0,
        }
    }

    /// Sum of squared values over all four quadrants.
    pub fn energy(&self) -> f64 {
        self.quadrants
            .iter()
            .flat_map(|q| q.iter())
            .flat_map(|row| row.iter())
            .map(|v| v * v)
            .sum()
    }
}

// --- folding ---
//
// Per axis the 16 windowed samples fold onto 8 by the basis symmetries
// (antiperiod 16 about the tile, symmetry about n = 3.5 inside). The folded
// vectors feed DCT-IV (cosine branch) / DST-IV (sine branch).

fn fold_cos(a: &[f64; TILE]) -> [f64; 8] {
    let mut f = [0.0f64; 8];
    for j in 0..4 {
        f[j] = -a[11 - j] - a[12 + j];
    }
    for j in 4..8 {
        f[j] = a[j - 4] - a[11 - j];
    }
    f
}

fn fold_sin(a: &[f64; TILE]) -> [f64; 8] {
    let mut g = [0.0f64; 8];
    for j in 0..4 {
        g[j] = a[11 - j] - a[12 + j];
    }
    for j in 4..8 {
        g[j] = a[j - 4] + a[11 - j];
    }
    g
}

/// `(folded index, sign)` per output position: transpose of the fold gathers.
const COS_UNFOLD: [(usize, f64); TILE] = [
    (4, 1.0),
    (5, 1.0),
    (6, 1.0),
    (7, 1.0),
    (7, -1.0),
    (6, -1.0),
    (5, -1.0),
    (4, -1.0),
    (3, -1.0),
    (2, -1.0),
    (1, -1.0),
    (0, -1.0),
    (0, -1.0),
    (1, -1.0),
    (2, -1.0),
    (3, -1.0),
];

const SIN_UNFOLD: [(usize, f64); TILE] = [
    (4, 1.0),
    (5, 1.0),
    (6, 1.0),
    (7, 1.0),
    (7, 1.0),
    (6, 1.0),
    (5, 1.0),
    (4, 1.0),
    (3, 1.0),
    (2, 1.0),
    (1, 1.0),
    (0, 1.0),
    (0, -1.0),
    (1, -1.0),
    (2, -1.0),
    (3, -1.0),
];

/// Forward lapped transform of a monochrome tile with the given per-axis
/// windows. Costs four 2D transform sets (one per quadrant).
pub fn mclt_forward(tile: &Tile16, window_h: &Window1D, window_v: &Window1D) -> FdTile {
    for _ in 0..4 {
        dtt::count_2d_set();
    }
    let mut ww = [[0.0f64; TILE]; TILE];
    for r in 0..TILE {
        for c in 0..TILE {
            ww[r][c] = tile[r][c] * window_v.taps[r] * window_h.taps[c];
        }
    }
    // Horizontal fold of every row, cosine and sine branches.
    let mut fc = [[0.0f64; 8]; TILE];
    let mut fs = [[0.0f64; 8]; TILE];
    for r in 0..TILE {
        fc[r] = fold_cos(&ww[r]);
        fs[r] = fold_sin(&ww[r]);
    }
    // Vertical fold of every column of both branches.
    let mut blocks = [[[0.0f64; 8]; 8]; 4];
    for c in 0..8 {
        let mut col_c = [0.0f64; TILE];
        let mut col_s = [0.0f64; TILE];
        for r in 0..TILE {
            col_c[r] = fc[r][c];
            col_s[r] = fs[r][c];
        }
        let vcc = fold_cos(&col_c);
        let vsc = fold_sin(&col_c);
        let vcs = fold_cos(&col_s);
        let vss = fold_sin(&col_s);
        for r in 0..8 {
            blocks[QUAD_CC][r][c] = vcc[r];
            blocks[QUAD_SC][r][c] = vsc[r];
            blocks[QUAD_CS][r][c] = vcs[r];
            blocks[QUAD_SS][r][c] = vss[r];
        }
    }
    let mut quadrants = [[[0.0f64; 8]; 8]; 4];
    for q in 0..4 {
        let (hk, vk) = QUAD_KINDS[q];
        let t = apply_2d(&blocks[q], hk, vk);
        for r in 0..8 {
            for c in 0..8 {
                quadrants[q][r][c] = t[r][c] * QUADRANT_SCALE;
            }
        }
    }
    FdTile {
        quadrants,
        shift_h: window_h.shift,
        shift_v: window_v.shift,
    }
}

/// Inverse of [`mclt_forward`] for a single tile: returns the window-weighted
/// reconstruction `w_v(n_v) w_h(n_h) * (w_v w_h x)(n_v, n_h)`. Overlap-adding
/// the stride-8 grid of these with shift-0 windows reproduces the source
/// exactly (Princen-Bradley).
pub fn imclt_tile(fd: &FdTile, window_h: &Window1D, window_v: &Window1D) -> Tile16 {
    let mut acc = [[0.0f64; TILE]; TILE];
    for q in 0..4 {
        let (hk, vk) = QUAD_KINDS[q];
        let t = apply_2d(&fd.quadrants[q], hk, vk);
        let vmap = if q == QUAD_CC || q == QUAD_CS {
            &COS_UNFOLD
        } else {
            &SIN_UNFOLD
        };
        let hmap = if q == QUAD_CC || q == QUAD_SC {
            &COS_UNFOLD
        } else {
            &SIN_UNFOLD
        };
        for nv in 0..TILE {
            let (jv, sv) = vmap[nv];
            for nh in 0..TILE {
                let (jh, sh) = hmap[nh];
                acc[nv][nh] += sv * sh * t[jv][jh];
            }
        }
    }
    for nv in 0..TILE {
        for nh in 0..TILE {
            acc[nv][nh] *= QUADRANT_SCALE * window_v.taps[nv] * window_h.taps[nh];
        }
    }
    acc
}

/// Accumulation canvas for overlap-add reconstruction.
#[derive(Clone, Debug)]
pub struct Canvas {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Self {
        Canvas {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Inverse-transforms one tile and adds it into `canvas` with its top-left
/// corner at `origin = (row, col)`. The tile must fit entirely inside the
/// canvas.
pub fn imclt_accumulate(
    fd: &FdTile,
    window_h: &Window1D,
    window_v: &Window1D,
    canvas: &mut Canvas,
    origin: (i64, i64),
) -> Result<(), McltError> {
    let (or, oc) = origin;
    if or < 0
        || oc < 0
        || or + TILE as i64 > canvas.height as i64
        || oc + TILE as i64 > canvas.width as i64
    {
        return Err(McltError::OutOfCanvas(or, oc, canvas.height, canvas.width));
    }
    let tile = imclt_tile(fd, window_h, window_v);
    for (r, row) in tile.iter().enumerate() {
        let base = (or as usize + r) * canvas.width + oc as usize;
        for (c, &v) in row.iter().enumerate() {
            canvas.data[base + c] += v;
        }
    }
    Ok(())
}

pub mod reference {
    //! Direct-summation forward transform: the normative definition the
    //! folded fast path is tested against. O((2N)^2) per output coefficient;
    //! test use only.

    use super::{FdTile, Tile16, Window1D, QUADRANT_SCALE, TILE};
    use std::f64::consts::PI;

    /// Computes every quadrant as the full windowed 16x16 basis summation
    /// `Q[kv][kh] = (1/8) sum_{nv,nh} w_v(nv) w_h(nh) x[nv][nh] b(nv,kv) b(nh,kh)`
    /// with `b = cos` or `sin` of `(pi/8)(n + 1/2 + 4)(k + 1/2)`.
    pub fn mclt_forward_direct(tile: &Tile16, window_h: &Window1D, window_v: &Window1D) -> FdTile {
        // 1/8 = QUADRANT_SCALE * (orthonormal DTT scale 1/2 per axis).
        let scale = QUADRANT_SCALE * 0.25;
        let mut quadrants = [[[0.0f64; 8]; 8]; 4];
        for kv in 0..8 {
            for kh in 0..8 {
                let mut acc = [0.0f64; 4]; // cc, sc, cs, ss
                for nv in 0..TILE {
                    let av = PI / 8.0 * (nv as f64 + 0.5 + 4.0) * (kv as f64 + 0.5);
                    let wv = window_v.taps()[nv];
                    for nh in 0..TILE {
                        let ah = PI / 8.0 * (nh as f64 + 0.5 + 4.0) * (kh as f64 + 0.5);
                        let s = tile[nv][nh] * wv * window_h.taps()[nh];
                        acc[0] += s * av.cos() * ah.cos();
                        acc[1] += s * av.sin() * ah.cos();
                        acc[2] += s * av.cos() * ah.sin();
                        acc[3] += s * av.sin() * ah.sin();
                    }
                }
                for q in 0..4 {
                    quadrants[q][kv][kh] = acc[q] * scale;
                }
            }
        }
        FdTile {
            quadrants,
            shift_h: window_h.shift(),
            shift_v: window_v.shift(),
        }
    }
}
