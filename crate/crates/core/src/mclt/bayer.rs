//! Lapped transform of raw Bayer mosaic tiles, one spectrum per color.
//!
//! Each color occupies a parity sub-lattice of the 16x16 tile (red and blue
//! one each, green two). Transforming a sub-lattice does not need the dense
//! fold: with `n = 2t + p` the basis angle splits as
//! `(pi/8)(k+1/2)(2t+p+4.5) = (pi/4)(k+1/2)(t+1/2) + phi_k (p+3.5)`,
//! `phi_k = pi(k+1/2)/8`, so the cosine and sine moments of the 8 compacted
//! samples are the odd-indexed DCT-II outputs and even-indexed DST-II
//! outputs, mirrored to k = 4..8 and rotated by the parity twist. A rows pass
//! plus a columns pass over one 8x8 compacted block yields all four
//! quadrants, so the whole mosaic tile costs four transform sets (one per
//! sub-lattice: 1 red, 1 blue, 2 green) where dense per-color zero-stuffed
//! processing would cost twelve.
//!
//! Per-color spectra are renormalized by window mass (full mass over the mass
//! that falls on the color's samples) so a constant scene produces the same
//! DC term in every color.

use super::{FdTile, McltError, Tile16, Window1D, QUAD_CC, QUAD_CS, QUAD_SC, QUAD_SS, TILE};
use crate::dtt::{self, dct2_raw, dst2_raw, Block8};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Mosaic color channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Color {
    Red,
    Green,
    Blue,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Red, Color::Green, Color::Blue];

    pub fn index(self) -> usize {
        match self {
            Color::Red => 0,
            Color::Green => 1,
            Color::Blue => 2,
        }
    }
}

/// The four possible alignments of the 2x2 mosaic cell at a tile origin,
/// named by their top-left 2x2 pixels in reading order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BayerPhase {
    Rggb,
    Grbg,
    Gbrg,
    Bggr,
}

impl BayerPhase {
    /// (row, col) parity of the red samples.
    pub fn red_parity(self) -> (usize, usize) {
        match self {
            BayerPhase::Rggb => (0, 0),
            BayerPhase::Grbg => (0, 1),
            BayerPhase::Gbrg => (1, 0),
            BayerPhase::Bggr => (1, 1),
        }
    }

    pub fn from_red_parity(row: usize, col: usize) -> Self {
        match (row % 2, col % 2) {
            (0, 0) => BayerPhase::Rggb,
            (0, 1) => BayerPhase::Grbg,
            (1, 0) => BayerPhase::Gbrg,
            _ => BayerPhase::Bggr,
        }
    }

    pub fn color_at(self, row: usize, col: usize) -> Color {
        let (pv, ph) = self.red_parity();
        match (row % 2 == pv, col % 2 == ph) {
            (true, true) => Color::Red,
            (false, false) => Color::Blue,
            _ => Color::Green,
        }
    }

    /// Phase seen by a tile whose origin moves by (`dv`, `dh`) pixels. Mirror
    /// (reflect-101) padding preserves sample parity, so this also covers
    /// origins reflected at image borders.
    pub fn shifted(self, dv: i64, dh: i64) -> Self {
        let (pv, ph) = self.red_parity();
        Self::from_red_parity(
            (pv as i64 + dv).rem_euclid(2) as usize,
            (ph as i64 + dh).rem_euclid(2) as usize,
        )
    }
}

/// Per-color frequency-domain tiles of one mosaic tile.
#[derive(Clone, Debug, PartialEq)]
pub struct BayerFdTile {
    pub red: FdTile,
    pub green: FdTile,
    pub blue: FdTile,
    pub phase: BayerPhase,
}

impl BayerFdTile {
    /// Wraps a monochrome spectrum as a mosaic result with every color slot
    /// equal: the form color-weighted operations take on non-mosaic content.
    pub fn from_mono(fd: FdTile) -> Self {
        BayerFdTile {
            red: fd.clone(),
            green: fd.clone(),
            blue: fd,
            phase: BayerPhase::Rggb,
        }
    }

    pub fn get(&self, color: Color) -> &FdTile {
        match color {
            Color::Red => &self.red,
            Color::Green => &self.green,
            Color::Blue => &self.blue,
        }
    }

    pub fn get_mut(&mut self, color: Color) -> &mut FdTile {
        match color {
            Color::Red => &mut self.red,
            Color::Green => &mut self.green,
            Color::Blue => &mut self.blue,
        }
    }
}

/// Window mass (sum of separable window products) over the positions of one
/// color. Red, blue, and the two green sub-lattices together partition the
/// full 2D window mass.
pub fn bayer_window_mass(
    window_h: &Window1D,
    window_v: &Window1D,
    phase: BayerPhase,
    color: Color,
) -> f64 {
    let (pv, ph) = phase.red_parity();
    let axis = |w: &Window1D, p: usize| -> f64 { (0..8).map(|t| w.taps()[2 * t + p]).sum() };
    match color {
        Color::Red => axis(window_v, pv) * axis(window_h, ph),
        Color::Blue => axis(window_v, 1 - pv) * axis(window_h, 1 - ph),
        Color::Green => {
            axis(window_v, pv) * axis(window_h, 1 - ph)
                + axis(window_v, 1 - pv) * axis(window_h, ph)
        }
    }
}

/// Parity twist factors e^{i phi_k (p + 3.5)} as (cos, sin) per k, for p = 0, 1.
fn twist_table() -> &'static [[(f64, f64); 8]; 2] {
    static TABLE: OnceLock<[[(f64, f64); 8]; 2]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[(0.0, 0.0); 8]; 2];
        for (p, row) in t.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                let theta = PI * (k as f64 + 0.5) / 8.0 * (p as f64 + 3.5);
                *cell = (theta.cos(), theta.sin());
            }
        }
        t
    })
}

/// Cosine and sine moments of 8 samples living on parity `p` of a 16-sample
/// axis: out_c[k] = sum_t b[t] cos((pi/8)(k+1/2)(2t+p+4.5)), out_s likewise
/// with sin. One DCT-II plus one DST-II of the compacted samples.
fn axis_moments(b: &[f64; 8], p: usize) -> ([f64; 8], [f64; 8]) {
    let mut c2 = [0.0f64; 8];
    let mut s2 = [0.0f64; 8];
    dct2_raw(b, &mut c2);
    dst2_raw(b, &mut s2);
    // Quarter-frequency moments of the compacted samples: odd DCT-II bins and
    // even-indexed DST-II bins, mirrored into the upper half.
    let mut cq = [0.0f64; 8];
    let mut sq = [0.0f64; 8];
    for k in 0..4 {
        cq[k] = c2[2 * k + 1];
        sq[k] = s2[2 * k];
    }
    for k in 4..8 {
        cq[k] = -cq[7 - k];
        sq[k] = sq[7 - k];
    }
    let twist = &twist_table()[p];
    let mut out_c = [0.0f64; 8];
    let mut out_s = [0.0f64; 8];
    for k in 0..8 {
        let (ct, st) = twist[k];
        out_c[k] = ct * cq[k] - st * sq[k];
        out_s[k] = st * cq[k] + ct * sq[k];
    }
    (out_c, out_s)
}

/// All four quadrant contributions of one parity sub-lattice: a rows pass and
/// a columns pass over the 8x8 compacted block, counted as one transform set.
fn sublattice_forward(ww: &Tile16, pv: usize, ph: usize) -> [Block8; 4] {
    dtt::count_2d_set();
    let mut row_c = [[0.0f64; 8]; 8];
    let mut row_s = [[0.0f64; 8]; 8];
    for tv in 0..8 {
        let mut b = [0.0f64; 8];
        for (th, v) in b.iter_mut().enumerate() {
            *v = ww[2 * tv + pv][2 * th + ph];
        }
        let (mc, ms) = axis_moments(&b, ph);
        row_c[tv] = mc;
        row_s[tv] = ms;
    }
    let mut q = [[[0.0f64; 8]; 8]; 4];
    for kh in 0..8 {
        let mut u = [0.0f64; 8];
        let mut v = [0.0f64; 8];
        for tv in 0..8 {
            u[tv] = row_c[tv][kh];
            v[tv] = row_s[tv][kh];
        }
        let (uc, us) = axis_moments(&u, pv);
        let (vc, vs) = axis_moments(&v, pv);
        for kv in 0..8 {
            q[QUAD_CC][kv][kh] = uc[kv] * 0.125;
            q[QUAD_SC][kv][kh] = us[kv] * 0.125;
            q[QUAD_CS][kv][kh] = vc[kv] * 0.125;
            q[QUAD_SS][kv][kh] = vs[kv] * 0.125;
        }
    }
    q
}

fn scaled_fd(blocks: [Block8; 4], scale: f64, wh: &Window1D, wv: &Window1D) -> FdTile {
    let mut quadrants = blocks;
    for q in &mut quadrants {
        for row in q.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    FdTile {
        quadrants,
        shift_h: wh.shift(),
        shift_v: wv.shift(),
    }
}

fn color_normalizers(
    window_h: &Window1D,
    window_v: &Window1D,
    phase: BayerPhase,
) -> Result<[f64; 3], McltError> {
    let full = window_v.mass() * window_h.mass();
    let mut norm = [0.0f64; 3];
    for color in Color::ALL {
        let mass = bayer_window_mass(window_h, window_v, phase, color);
        if mass <= 0.0 {
            return Err(McltError::ShiftOutOfRange(window_h.shift()));
        }
        norm[color.index()] = full / mass;
    }
    Ok(norm)
}

/// Forward lapped transform of a raw mosaic tile: one window-mass-normalized
/// spectrum per color, computed on each color's own samples. Costs exactly
/// four transform sets (versus twelve for dense zero-stuffed processing).
pub fn mclt_forward_bayer(
    tile: &Tile16,
    phase: BayerPhase,
    window_h: &Window1D,
    window_v: &Window1D,
) -> BayerFdTile {
    let norm = color_normalizers(window_h, window_v, phase)
        .expect("half-sine window masses are positive");
    let mut ww = [[0.0f64; TILE]; TILE];
    for r in 0..TILE {
        for c in 0..TILE {
            ww[r][c] = tile[r][c] * window_v.taps()[r] * window_h.taps()[c];
        }
    }
    let (pv, ph) = phase.red_parity();
    let red = sublattice_forward(&ww, pv, ph);
    let blue = sublattice_forward(&ww, 1 - pv, 1 - ph);
    let g0 = sublattice_forward(&ww, pv, 1 - ph);
    let g1 = sublattice_forward(&ww, 1 - pv, ph);
    let mut green = g0;
    for (qa, qb) in green.iter_mut().zip(g1.iter()) {
        for (ra, rb) in qa.iter_mut().zip(qb.iter()) {
            for (va, vb) in ra.iter_mut().zip(rb.iter()) {
                *va += vb;
            }
        }
    }
    BayerFdTile {
        red: scaled_fd(red, norm[Color::Red.index()], window_h, window_v),
        green: scaled_fd(green, norm[Color::Green.index()], window_h, window_v),
        blue: scaled_fd(blue, norm[Color::Blue.index()], window_h, window_v),
        phase,
    }
}

/// Zero-stuffed reference for [`mclt_forward_bayer`]: each color's samples
/// copied into an otherwise zero tile and sent through the dense forward
/// transform, then normalized identically. Test use only (three dense tiles,
/// twelve transform sets).
pub fn mclt_forward_bayer_reference(
    tile: &Tile16,
    phase: BayerPhase,
    window_h: &Window1D,
    window_v: &Window1D,
) -> BayerFdTile {
    let norm = color_normalizers(window_h, window_v, phase)
        .expect("half-sine window masses are positive");
    let mut per_color = [FdTile::zero(), FdTile::zero(), FdTile::zero()];
    for color in Color::ALL {
        let mut stuffed = [[0.0f64; TILE]; TILE];
        for r in 0..TILE {
            for c in 0..TILE {
                if phase.color_at(r, c) == color {
                    stuffed[r][c] = tile[r][c];
                }
            }
        }
        let mut fd = super::mclt_forward(&stuffed, window_h, window_v);
        for q in &mut fd.quadrants {
            for row in q.iter_mut() {
                for v in row.iter_mut() {
                    *v *= norm[color.index()];
                }
            }
        }
        per_color[color.index()] = fd;
    }
    let [red, green, blue] = per_color;
    BayerFdTile {
        red,
        green,
        blue,
        phase,
    }
}
