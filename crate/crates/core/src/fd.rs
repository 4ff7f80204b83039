//! Frequency-domain tile operations: complex-spectrum view, fractional-pixel
//! phase rotation, calibration-kernel multiplication, and normalized 2D phase
//! correlation.
//!
//! The four real quadrants of an [`FdTile`] combine into two complex planes
//!
//! ```text
//! pos = (CC - SS) + i(SC + CS)    (vertical and horizontal spin aligned)
//! neg = (CC + SS) + i(SC - CS)    (opposed)
//! ```
//!
//! which behave like halves of a complex spectrum: shifting tile content by
//! +d multiplies `pos[kv][kh]` by `e^{i(wv dv + wh dh)}` and `neg` by
//! `e^{i(wv dv - wh dh)}`, `w_k = pi(k+1/2)/8`. Convolution kernels multiply
//! the planes pointwise, and the phase-correlation surface is the real part
//! of the plane inverse evaluated on the integer pixel lattice.
//!
//! Sign conventions (rotation direction, peak displacement) are pinned by the
//! shift-oracle regression tests here and in the workspace conventions tests.

use crate::mclt::{BayerFdTile, Color, FdTile, QUAD_CC, QUAD_CS, QUAD_SC, QUAD_SS};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default per-color correlation weights (R, G, B); green doubled because the
/// mosaic carries twice as many green samples.
pub const DEFAULT_COLOR_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

/// Default relative floor for correlation-spectrum normalization.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Camera-pair direction a correlation surface measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDirection {
    Horizontal,
    Vertical,
    DiagMain,
    DiagAnti,
}

impl PairDirection {
    pub const ALL: [PairDirection; 4] = [
        PairDirection::Horizontal,
        PairDirection::Vertical,
        PairDirection::DiagMain,
        PairDirection::DiagAnti,
    ];

    pub fn index(self) -> usize {
        match self {
            PairDirection::Horizontal => 0,
            PairDirection::Vertical => 1,
            PairDirection::DiagMain => 2,
            PairDirection::DiagAnti => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FdError {
    #[error("fractional shift ({0}, {1}) outside [-0.5, 0.5]")]
    ShiftOutOfRange(f64, f64),
    #[error("color weights sum to {0}, expected 1")]
    BadWeights(f64),
    #[error("epsilon {0} must be positive")]
    BadEpsilon(f64),
}

/// Complex view of an [`FdTile`]. Quadrants are stored verbatim (the view is
/// lossless and the round trip is bit-exact); the two planes are computed by
/// the accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum8 {
    quadrants: [[[f64; 8]; 8]; 4],
    shift_h: f64,
    shift_v: f64,
}

impl ComplexSpectrum8 {
    /// Aligned-spin plane `(CC - SS) + i(SC + CS)` at one frequency bin.
    pub fn pos_at(&self, kv: usize, kh: usize) -> Complex64 {
        Complex64::new(
            self.quadrants[QUAD_CC][kv][kh] - self.quadrants[QUAD_SS][kv][kh],
            self.quadrants[QUAD_SC][kv][kh] + self.quadrants[QUAD_CS][kv][kh],
        )
    }

    /// Opposed-spin plane `(CC + SS) + i(SC - CS)` at one frequency bin.
    pub fn neg_at(&self, kv: usize, kh: usize) -> Complex64 {
        Complex64::new(
            self.quadrants[QUAD_CC][kv][kh] + self.quadrants[QUAD_SS][kv][kh],
            self.quadrants[QUAD_SC][kv][kh] - self.quadrants[QUAD_CS][kv][kh],
        )
    }

    /// Writes one frequency bin from its two plane values.
    pub fn set_planes_at(&mut self, kv: usize, kh: usize, pos: Complex64, neg: Complex64) {
        self.quadrants[QUAD_CC][kv][kh] = 0.5 * (pos.re + neg.re);
        self.quadrants[QUAD_SS][kv][kh] = 0.5 * (neg.re - pos.re);
        self.quadrants[QUAD_SC][kv][kh] = 0.5 * (pos.im + neg.im);
        self.quadrants[QUAD_CS][kv][kh] = 0.5 * (pos.im - neg.im);
    }

    pub fn zero() -> Self {
        ComplexSpectrum8 {
            quadrants: [[[0.0; 8]; 8]; 4],
            shift_h: 0.0,
            shift_v: 0.0,
        }
    }
}

pub fn to_complex(fd: &FdTile) -> ComplexSpectrum8 {
    ComplexSpectrum8 {
        quadrants: fd.quadrants,
        shift_h: fd.shift_h,
        shift_v: fd.shift_v,
    }
}

pub fn from_complex(cs: &ComplexSpectrum8) -> FdTile {
    FdTile {
        quadrants: cs.quadrants,
        shift_h: cs.shift_h,
        shift_v: cs.shift_v,
    }
}

/// Per-axis bin frequency `w_k = pi(k+1/2)/8` in radians per pixel.
pub fn bin_frequency(k: usize) -> f64 {
    PI * (k as f64 + 0.5) / 8.0
}

/// Rotates the spectrum so tile content moves by (+dx, +dy) pixels: the
/// lossless fractional shift. Rotations compose additively; shifts larger
/// than half a pixel belong to integer window selection and are rejected.
pub fn phase_rotate(fd: &FdTile, dx: f64, dy: f64) -> Result<FdTile, FdError> {
    if !(dx.is_finite() && dy.is_finite()) || dx.abs() > 0.5 || dy.abs() > 0.5 {
        return Err(FdError::ShiftOutOfRange(dx, dy));
    }
    let mut out = fd.clone();
    // Vertical rotation mixes (CC, SC) and (CS, SS); horizontal mixes
    // (CC, CS) and (SC, SS). Together: plane multiplication by
    // e^{i(wv dy +/- wh dx)}.
    for kv in 0..8 {
        let a = bin_frequency(kv) * dy;
        let (s, c) = a.sin_cos();
        for kh in 0..8 {
            let cc = out.quadrants[QUAD_CC][kv][kh];
            let sc = out.quadrants[QUAD_SC][kv][kh];
            let cs = out.quadrants[QUAD_CS][kv][kh];
            let ss = out.quadrants[QUAD_SS][kv][kh];
            out.quadrants[QUAD_CC][kv][kh] = cc * c - sc * s;
            out.quadrants[QUAD_SC][kv][kh] = sc * c + cc * s;
            out.quadrants[QUAD_CS][kv][kh] = cs * c - ss * s;
            out.quadrants[QUAD_SS][kv][kh] = ss * c + cs * s;
        }
    }
    for kh in 0..8 {
        let a = bin_frequency(kh) * dx;
        let (s, c) = a.sin_cos();
        for kv in 0..8 {
            let cc = out.quadrants[QUAD_CC][kv][kh];
            let sc = out.quadrants[QUAD_SC][kv][kh];
            let cs = out.quadrants[QUAD_CS][kv][kh];
            let ss = out.quadrants[QUAD_SS][kv][kh];
            out.quadrants[QUAD_CC][kv][kh] = cc * c - cs * s;
            out.quadrants[QUAD_CS][kv][kh] = cs * c + cc * s;
            out.quadrants[QUAD_SC][kv][kh] = sc * c - ss * s;
            out.quadrants[QUAD_SS][kv][kh] = ss * c + sc * s;
        }
    }
    Ok(out)
}

/// [`phase_rotate`] applied to every color of a mosaic tile.
pub fn phase_rotate_bayer(fd: &BayerFdTile, dx: f64, dy: f64) -> Result<BayerFdTile, FdError> {
    Ok(BayerFdTile {
        red: phase_rotate(&fd.red, dx, dy)?,
        green: phase_rotate(&fd.green, dx, dy)?,
        blue: phase_rotate(&fd.blue, dx, dy)?,
        phase: fd.phase,
    })
}

/// Space-variant correction kernel: a per-color pointwise spectrum multiplier
/// in quadrant form plus the sub-pixel centering offset its point source was
/// measured at (consumed by the geometry offset computation, not here).
#[derive(Clone, Debug, PartialEq)]
pub struct CalibKernel {
    /// Indexed by [`Color::index`]; same quadrant layout as `FdTile`.
    pub multipliers: [[[[f64; 8]; 8]; 4]; 3],
    /// (x, y) pixels.
    pub center_offset: [f64; 2],
}

impl CalibKernel {
    /// Kernel that leaves every tile unchanged: CC all ones (the spectrum of
    /// a centered delta), other quadrants zero.
    pub fn identity() -> Self {
        let mut q = [[[0.0f64; 8]; 8]; 4];
        q[QUAD_CC] = [[1.0; 8]; 8];
        CalibKernel {
            multipliers: [q; 3],
            center_offset: [0.0, 0.0],
        }
    }

    /// The fractional-shift operator expressed as a kernel; multiplying by it
    /// equals [`phase_rotate`] with the same (dx, dy).
    pub fn from_phase_shift(dx: f64, dy: f64) -> Self {
        let mut cs = ComplexSpectrum8::zero();
        for kv in 0..8 {
            for kh in 0..8 {
                let av = bin_frequency(kv) * dy;
                let ah = bin_frequency(kh) * dx;
                let pos = Complex64::from_polar(1.0, av + ah);
                let neg = Complex64::from_polar(1.0, av - ah);
                cs.set_planes_at(kv, kh, pos, neg);
            }
        }
        CalibKernel {
            multipliers: [cs.quadrants; 3],
            center_offset: [0.0, 0.0],
        }
    }

    /// Isotropic Gaussian blur of standard deviation `sigma` pixels: real
    /// separable attenuation e^{-2 pi^2 sigma^2 f^2} per axis at the bin
    /// frequencies f_k = (k+1/2)/16 cycles per pixel.
    pub fn gaussian_blur(sigma: f64) -> Self {
        let att = |k: usize| -> f64 {
            let f = (k as f64 + 0.5) / 16.0;
            (-2.0 * PI * PI * sigma * sigma * f * f).exp()
        };
        let mut q = [[[0.0f64; 8]; 8]; 4];
        for kv in 0..8 {
            for kh in 0..8 {
                q[QUAD_CC][kv][kh] = att(kv) * att(kh);
            }
        }
        CalibKernel {
            multipliers: [q; 3],
            center_offset: [0.0, 0.0],
        }
    }

    /// Regularized pointwise inverse: each plane value z maps to
    /// conj(z) / (|z|^2 + reg^2), the Wiener-style deconvolution multiplier.
    pub fn regularized_inverse(&self, reg: f64) -> Self {
        let mut out = self.clone();
        for color in 0..3 {
            let mut src = ComplexSpectrum8::zero();
            src.quadrants = self.multipliers[color];
            let mut dst = ComplexSpectrum8::zero();
            for kv in 0..8 {
                for kh in 0..8 {
                    let inv = |z: Complex64| z.conj() / (z.norm_sqr() + reg * reg);
                    dst.set_planes_at(kv, kh, inv(src.pos_at(kv, kh)), inv(src.neg_at(kv, kh)));
                }
            }
            out.multipliers[color] = dst.quadrants;
        }
        out
    }
}

/// Pointwise per-color multiplication by a calibration kernel (convolution in
/// the pixel domain).
pub fn apply_kernel(fd: &BayerFdTile, kernel: &CalibKernel) -> BayerFdTile {
    let mut out = fd.clone();
    for color in Color::ALL {
        let mut k_cs = ComplexSpectrum8::zero();
        k_cs.quadrants = kernel.multipliers[color.index()];
        let src = to_complex(fd.get(color));
        let mut dst = src.clone();
        for kv in 0..8 {
            for kh in 0..8 {
                let pos = src.pos_at(kv, kh) * k_cs.pos_at(kv, kh);
                let neg = src.neg_at(kv, kh) * k_cs.neg_at(kv, kh);
                dst.set_planes_at(kv, kh, pos, neg);
            }
        }
        *out.get_mut(color) = from_complex(&dst);
    }
    out
}

/// One-pair phase-correlation result: the center 9x9 of the pixel-domain
/// correlation surface. Cell (4,4) is zero residual shift; the peak sits at
/// +d when tile b's content is tile a's content displaced by +d.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrTile {
    pub surface: [[f64; 9]; 9],
    pub pair_direction: PairDirection,
}

impl CorrTile {
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut val = f64::NEG_INFINITY;
        for (r, row) in self.surface.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > val {
                    val = v;
                    best = (r, c);
                }
            }
        }
        best
    }
}

/// cos/sin of w_k * u for u = idx - 8 in [-8, 7].
fn lattice_table() -> &'static [[(f64, f64); 16]; 8] {
    static TABLE: OnceLock<[[(f64, f64); 16]; 8]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[(0.0, 0.0); 16]; 8];
        for (k, row) in t.iter_mut().enumerate() {
            for (idx, cell) in row.iter_mut().enumerate() {
                let a = bin_frequency(k) * (idx as f64 - 8.0);
                *cell = (a.cos(), a.sin());
            }
        }
        t
    })
}

/// Real part of the two-plane inverse on the 16x16 integer lattice
/// (u in [-8,7] per axis), evaluated separably: a horizontal pass per
/// vertical bin, then a vertical pass. Peak value 1 for a unit-modulus
/// phase-ramp spectrum.
fn plane_inverse_16(
    pos: &[[Complex64; 8]; 8],
    neg: &[[Complex64; 8]; 8],
) -> [[f64; 16]; 16] {
    let table = lattice_table();
    // g[kv][uh] = sum_kh pos e^{+i wh uh} + neg e^{-i wh uh}
    let mut g = [[Complex64::ZERO; 16]; 8];
    for kv in 0..8 {
        for uh in 0..16 {
            let mut acc = Complex64::ZERO;
            for kh in 0..8 {
                let (c, s) = table[kh][uh];
                acc += pos[kv][kh] * Complex64::new(c, s);
                acc += neg[kv][kh] * Complex64::new(c, -s);
            }
            g[kv][uh] = acc;
        }
    }
    let mut out = [[0.0f64; 16]; 16];
    for uv in 0..16 {
        for uh in 0..16 {
            let mut acc = 0.0;
            for kv in 0..8 {
                let (c, s) = table[kv][uv];
                acc += g[kv][uh].re * c - g[kv][uh].im * s;
            }
            out[uv][uh] = acc / 128.0;
        }
    }
    out
}

/// Normalized 2D phase correlation of two mosaic tiles.
///
/// Per color the cross-spectrum `F_a conj(F_b)` is formed on both planes,
/// colors are averaged with `color_weights`, every bin is divided by
/// `|P| + epsilon * max|P|`, and the result is inverse-transformed to the
/// pixel domain and cropped to the center 9x9.
/// Spectral trust weight of one frequency bin for one mosaic color. A color
/// plane is alias-free only below its sub-lattice Nyquist: red and blue live
/// on a stride-2 grid per axis, so only the lower quarter of the 2D band
/// carries content their comb cannot fake; green's quincunx folds across the
/// anti-diagonal, with the fold line itself split evenly.
pub fn sublattice_weight(color: Color, kv: usize, kh: usize) -> f64 {
    match color {
        Color::Red | Color::Blue => {
            if kv < 4 && kh < 4 {
                1.0
            } else {
                0.0
            }
        }
        Color::Green => match (kv + kh).cmp(&7) {
            std::cmp::Ordering::Less => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 0.0,
        },
    }
}

pub fn phase_correlate(
    a: &BayerFdTile,
    b: &BayerFdTile,
    color_weights: [f64; 3],
    epsilon: f64,
    direction: PairDirection,
) -> Result<CorrTile, FdError> {
    if !(epsilon > 0.0) {
        return Err(FdError::BadEpsilon(epsilon));
    }
    let wsum: f64 = color_weights.iter().sum();
    if !wsum.is_finite() || (wsum - 1.0).abs() > 1e-9 {
        return Err(FdError::BadWeights(wsum));
    }
    // Each color is whitened against its own magnitude scale, then only its
    // alias-free bins are summed; bins outside every color's trusted band
    // would otherwise whiten coherent alias residue up to unit magnitude and
    // ghost the surface whenever the sample combs are sub-pixel misaligned.
    let mut pos = [[Complex64::ZERO; 8]; 8];
    let mut neg = [[Complex64::ZERO; 8]; 8];
    let mut norm = 0.0f64;
    for color in Color::ALL {
        let w = color_weights[color.index()];
        let ca = to_complex(a.get(color));
        let cb = to_complex(b.get(color));
        let mut cpos = [[Complex64::ZERO; 8]; 8];
        let mut cneg = [[Complex64::ZERO; 8]; 8];
        let mut max_mag = 0.0f64;
        for kv in 0..8 {
            for kh in 0..8 {
                let p = ca.pos_at(kv, kh) * cb.pos_at(kv, kh).conj();
                let n = ca.neg_at(kv, kh) * cb.neg_at(kv, kh).conj();
                cpos[kv][kh] = p;
                cneg[kv][kh] = n;
                max_mag = max_mag.max(p.norm()).max(n.norm());
            }
        }
        let mut mass = 0.0f64;
        let floor = epsilon * max_mag;
        for kv in 0..8 {
            for kh in 0..8 {
                let m = sublattice_weight(color, kv, kh);
                mass += m;
                if max_mag > 0.0 {
                    pos[kv][kh] += w * m * cpos[kv][kh] / (cpos[kv][kh].norm() + floor);
                    neg[kv][kh] += w * m * cneg[kv][kh] / (cneg[kv][kh].norm() + floor);
                }
            }
        }
        norm += w * mass / 64.0;
    }
    let mut full = plane_inverse_16(&pos, &neg);
    if norm > 0.0 {
        for row in &mut full {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    let mut surface = [[0.0f64; 9]; 9];
    for r in 0..9 {
        for c in 0..9 {
            surface[r][c] = full[r + 4][c + 4];
        }
    }
    Ok(CorrTile {
        surface,
        pair_direction: direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mclt::{make_window, mclt_forward, mclt_forward_bayer, BayerPhase, Tile16, TILE};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_fd(rng: &mut StdRng) -> FdTile {
        let mut fd = FdTile::zero();
        for q in &mut fd.quadrants {
            for row in q.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
        }
        fd.shift_h = 0.25;
        fd.shift_v = -0.125;
        fd
    }

    fn fd_max_diff(a: &FdTile, b: &FdTile) -> f64 {
        let mut m: f64 = 0.0;
        for q in 0..4 {
            for r in 0..8 {
                for c in 0..8 {
                    m = m.max((a.quadrants[q][r][c] - b.quadrants[q][r][c]).abs());
                }
            }
        }
        m
    }

    /// Band-limited test texture: a small sum of cosines below half Nyquist,
    /// exactly evaluable at any real coordinate.
    struct CosineField {
        comps: Vec<(f64, f64, f64, f64)>, // (fv, fh, phase, amp)
    }

    impl CosineField {
        fn new(rng: &mut StdRng, n: usize) -> Self {
            let mut comps: Vec<(f64, f64, f64, f64)> = (0..n)
                .map(|_| {
                    let ang = rng.random_range(0.0..PI);
                    let freq = rng.random_range(0.05..0.2); // cycles/px
                    (
                        freq * ang.sin(),
                        freq * ang.cos(),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.2..1.0),
                    )
                })
                .collect();
            let total: f64 = comps.iter().map(|c| c.3).sum();
            for c in &mut comps {
                c.3 /= total;
            }
            CosineField { comps }
        }

        fn at(&self, v: f64, h: f64) -> f64 {
            self.comps
                .iter()
                .map(|&(fv, fh, p, a)| a * (2.0 * PI * (fv * v + fh * h) + p).cos())
                .sum()
        }

        /// 16x16 samples with the tile's (0,0) pixel at field coord `origin`,
        /// content displaced by +shift pixels.
        fn tile(&self, origin: (f64, f64), shift: (f64, f64)) -> Tile16 {
            let mut t = [[0.0f64; TILE]; TILE];
            for (r, row) in t.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = self.at(
                        origin.0 + r as f64 - shift.0,
                        origin.1 + c as f64 - shift.1,
                    );
                }
            }
            t
        }
    }

    fn mosaic_fd(tile: &Tile16) -> BayerFdTile {
        let w = make_window(0.0).unwrap();
        mclt_forward_bayer(tile, BayerPhase::Rggb, &w, &w)
    }

    /// Dense monochrome spectrum wrapped for color-weighted ops. Correlation
    /// unit tests use this: a sparse cosine spectrum on a mosaic sub-lattice
    /// aliases into equal-power image bins, which is a property of mosaic
    /// sampling (covered end to end by the pipeline tests on broadband
    /// textures), not of the correlation operator under test here.
    fn mono_fd(tile: &Tile16) -> BayerFdTile {
        let w = make_window(0.0).unwrap();
        BayerFdTile::from_mono(mclt_forward(tile, &w, &w))
    }

    #[test]
    fn complex_round_trip_is_bit_exact() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3001);
        for _ in 0..20 {
            let fd = random_fd(&mut rng);
            let back = from_complex(&to_complex(&fd));
            assert_eq!(fd, back);
        }
    }

    #[test]
    fn zero_tile_gives_zero_planes() {
        let cs = to_complex(&FdTile::zero());
        for kv in 0..8 {
            for kh in 0..8 {
                assert_eq!(cs.pos_at(kv, kh), Complex64::ZERO);
                assert_eq!(cs.neg_at(kv, kh), Complex64::ZERO);
            }
        }
    }

    #[test]
    fn plane_set_then_get_round_trips() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3002);
        let mut cs = ComplexSpectrum8::zero();
        for kv in 0..8 {
            for kh in 0..8 {
                let pos = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let neg = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                cs.set_planes_at(kv, kh, pos, neg);
                assert!((cs.pos_at(kv, kh) - pos).norm() < 1e-15);
                assert!((cs.neg_at(kv, kh) - neg).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn center_symmetric_content_has_real_spectrum() {
        // Content even about the basis center n = 11.5 per axis (windowed
        // values paired (8,15),(9,14),(10,13),(11,12)) has zero sine moments,
        // so the complex planes are purely real. The dual symmetry about
        // n = 3.5 kills the cosine moments instead. Both checked against the
        // direct-summation oracle.
        let mut rng = StdRng::seed_from_u64(0x5eed_3003);
        let w = make_window(0.0).unwrap();
        let mut tile = [[0.0f64; TILE]; TILE];
        for r in 8..12 {
            for c in 8..12 {
                let v = rng.random_range(0.5..1.0);
                for (rr, cc) in [(r, c), (23 - r, c), (r, 23 - c), (23 - r, 23 - c)] {
                    tile[rr][cc] = v / (w.taps()[rr] * w.taps()[cc]);
                }
            }
        }
        let fd = mclt_forward(&tile, &w, &w);
        let oracle = crate::mclt::reference::mclt_forward_direct(&tile, &w, &w);
        assert!(fd_max_diff(&fd, &oracle) < 1e-10);
        let cs = to_complex(&fd);
        let mut max_im = 0.0f64;
        let mut max_re = 0.0f64;
        for kv in 0..8 {
            for kh in 0..8 {
                max_im = max_im
                    .max(cs.pos_at(kv, kh).im.abs())
                    .max(cs.neg_at(kv, kh).im.abs());
                max_re = max_re.max(cs.pos_at(kv, kh).re.abs());
            }
        }
        assert!(max_im < 1e-10 * max_re, "im {max_im} re {max_re}");
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3004);
        let fd = random_fd(&mut rng);
        let out = phase_rotate(&fd, 0.0, 0.0).unwrap();
        assert_eq!(fd, out);
    }

    #[test]
    fn rotations_compose_and_invert() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3005);
        let fd = random_fd(&mut rng);
        let there = phase_rotate(&fd, 0.3, -0.2).unwrap();
        let back = phase_rotate(&there, -0.3, 0.2).unwrap();
        assert!(fd_max_diff(&fd, &back) < 1e-12);
        let two_step = phase_rotate(&phase_rotate(&fd, 0.2, 0.1).unwrap(), 0.15, 0.3).unwrap();
        let one_step = phase_rotate(&fd, 0.35, 0.4).unwrap();
        assert!(fd_max_diff(&two_step, &one_step) < 1e-12);
    }

    #[test]
    fn oversized_rotation_rejected() {
        let fd = FdTile::zero();
        assert!(phase_rotate(&fd, 0.51, 0.0).is_err());
        assert!(phase_rotate(&fd, 0.0, -0.6).is_err());
        assert!(phase_rotate(&fd, f64::NAN, 0.0).is_err());
        assert!(phase_rotate(&fd, 0.5, -0.5).is_ok());
    }

    #[test]
    fn rotation_shifts_content() {
        // imclt of the rotated spectrum approximates w(n) * (w x)(n - d):
        // the windowed content moves by +d. Compared analytically in the
        // tile interior where fold aliasing is negligible.
        let mut rng = StdRng::seed_from_u64(0x5eed_3006);
        let field = CosineField::new(&mut rng, 6);
        let w = make_window(0.0).unwrap();
        let (dx, dy) = (0.25, -0.25);
        let tile = field.tile((100.0, 200.0), (0.0, 0.0));
        let fd = mclt_forward(&tile, &w, &w);
        let rot = phase_rotate(&fd, dx, dy).unwrap();
        let back = crate::mclt::imclt_tile(&rot, &w, &w);
        let wm = |n: usize, d: f64| (PI * (n as f64 + 0.5 - d) / 16.0).sin();
        let mut max_err = 0.0f64;
        for r in 4..12 {
            for c in 4..12 {
                let want = w.taps()[r]
                    * w.taps()[c]
                    * wm(r, dy)
                    * wm(c, dx)
                    * field.at(100.0 + r as f64 - dy, 200.0 + c as f64 - dx);
                max_err = max_err.max((back[r][c] - want).abs());
            }
        }
        assert!(max_err < 1e-3, "max interior error {max_err}");
    }

    #[test]
    fn identity_kernel_preserves_tiles() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3007);
        let field = CosineField::new(&mut rng, 5);
        let fd = mosaic_fd(&field.tile((0.0, 0.0), (0.0, 0.0)));
        let out = apply_kernel(&fd, &CalibKernel::identity());
        for color in Color::ALL {
            assert!(fd_max_diff(fd.get(color), out.get(color)) < 1e-12);
        }
    }

    #[test]
    fn phase_shift_kernel_equals_phase_rotate() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3008);
        let field = CosineField::new(&mut rng, 5);
        let fd = mosaic_fd(&field.tile((7.0, -3.0), (0.0, 0.0)));
        let (dx, dy) = (0.31, -0.17);
        let via_kernel = apply_kernel(&fd, &CalibKernel::from_phase_shift(dx, dy));
        let via_rotate = phase_rotate_bayer(&fd, dx, dy).unwrap();
        for color in Color::ALL {
            assert!(fd_max_diff(via_kernel.get(color), via_rotate.get(color)) < 1e-12);
        }
    }

    #[test]
    fn blur_then_regularized_inverse_restores_tile() {
        let mut rng = StdRng::seed_from_u64(0x5eed_3009);
        let field = CosineField::new(&mut rng, 5);
        let w = make_window(0.0).unwrap();
        let tile = field.tile((11.0, 4.0), (0.0, 0.0));
        let fd = mono_fd(&tile);
        let blur = CalibKernel::gaussian_blur(0.8);
        let unblur = blur.regularized_inverse(1e-3);
        let restored = apply_kernel(&apply_kernel(&fd, &blur), &unblur);
        let bw = crate::mclt::imclt_tile(restored.get(Color::Green), &w, &w);
        let ow = crate::mclt::imclt_tile(fd.get(Color::Green), &w, &w);
        let mut max_err = 0.0f64;
        for r in 4..12 {
            for c in 4..12 {
                max_err = max_err.max((bw[r][c] - ow[r][c]).abs());
            }
        }
        assert!(max_err < 1e-2, "interior restore error {max_err}");
    }

    #[test]
    fn self_correlation_peaks_at_center() {
        let mut rng = StdRng::seed_from_u64(0x5eed_300a);
        let field = CosineField::new(&mut rng, 6);
        let fd = mosaic_fd(&field.tile((50.0, 60.0), (0.0, 0.0)));
        let corr = phase_correlate(
            &fd,
            &fd,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::Horizontal,
        )
        .unwrap();
        assert_eq!(corr.argmax(), (4, 4));
        assert!(corr.surface[4][4] > 0.9);
        for row in &corr.surface {
            for &v in row {
                assert!(v.abs() <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn integer_shift_moves_peak_one_cell() {
        // Integer displacement needs no interpolation: carve two tiles out
        // of one noise patch one pixel apart. Full-band content gives the
        // normalized correlation its sharpest peak.
        let mut rng = StdRng::seed_from_u64(0x5eed_300b);
        let mut img = [[0.0f64; 18]; 18];
        for row in &mut img {
            for v in row.iter_mut() {
                *v = rng.random_range(0.0..1.0);
            }
        }
        let carve = |or: usize, oc: usize| -> Tile16 {
            let mut t = [[0.0f64; TILE]; TILE];
            for r in 0..TILE {
                for c in 0..TILE {
                    t[r][c] = img[or + r][oc + c];
                }
            }
            t
        };
        let a = mono_fd(&carve(1, 1));
        // b content equals a content displaced +1 px horizontally.
        let b = mono_fd(&carve(1, 0));
        let corr = phase_correlate(
            &a,
            &b,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::Horizontal,
        )
        .unwrap();
        assert_eq!(corr.argmax(), (4, 5));
        assert!(corr.surface[4][5] > 0.5);
        let b_up = mono_fd(&carve(0, 1));
        let corr_v = phase_correlate(
            &a,
            &b_up,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::Vertical,
        )
        .unwrap();
        assert_eq!(corr_v.argmax(), (5, 4));
    }

    #[test]
    fn half_pixel_shift_recovered_by_parabola() {
        // b is a's spectrum losslessly shifted half a pixel, so the
        // whitened cross spectrum is an exact phase ramp and the surface a
        // translated correlation kernel, symmetric about +0.5. A three-point
        // parabola is unbiased there. (Resampled content adds realization
        // noise and the integer-locking bias the refinement loop removes;
        // those paths are exercised by the pipeline tests.)
        let mut rng = StdRng::seed_from_u64(0x5eed_300c);
        let field = CosineField::new(&mut rng, 48);
        let a_fd = {
            let w = make_window(0.0).unwrap();
            mclt_forward(&field.tile((30.0, 40.0), (0.0, 0.0)), &w, &w)
        };
        let a = BayerFdTile::from_mono(a_fd.clone());
        let b = BayerFdTile::from_mono(phase_rotate(&a_fd, 0.5, 0.0).unwrap());
        let corr = phase_correlate(
            &a,
            &b,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::Horizontal,
        )
        .unwrap();
        let (pr, pc) = corr.argmax();
        assert_eq!(pr, 4);
        assert!(pc == 4 || pc == 5);
        let (ym, y0, yp) = (
            corr.surface[4][pc - 1],
            corr.surface[4][pc],
            corr.surface[4][pc + 1],
        );
        let sub = pc as f64 - 4.0 + 0.5 * (ym - yp) / (ym - 2.0 * y0 + yp);
        assert!((sub - 0.5).abs() < 0.05, "subpixel {sub}");
    }

    #[test]
    fn swapped_inputs_reflect_surface() {
        let mut rng = StdRng::seed_from_u64(0x5eed_300d);
        let field = CosineField::new(&mut rng, 6);
        let a = mosaic_fd(&field.tile((5.0, 8.0), (0.0, 0.0)));
        let b = mosaic_fd(&field.tile((5.0, 8.0), (0.3, -0.2)));
        let ab = phase_correlate(
            &a,
            &b,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::DiagMain,
        )
        .unwrap();
        let ba = phase_correlate(
            &b,
            &a,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::DiagMain,
        )
        .unwrap();
        for r in 0..9 {
            for c in 0..9 {
                let d = (ab.surface[r][c] - ba.surface[8 - r][8 - c]).abs();
                assert!(d < 1e-9, "({r},{c}): {d}");
            }
        }
    }

    #[test]
    fn invalid_weights_and_epsilon_rejected() {
        let fd = mosaic_fd(&[[0.5; TILE]; TILE]);
        assert!(matches!(
            phase_correlate(&fd, &fd, [0.4, 0.4, 0.4], 1e-6, PairDirection::Horizontal),
            Err(FdError::BadWeights(_))
        ));
        assert!(matches!(
            phase_correlate(
                &fd,
                &fd,
                DEFAULT_COLOR_WEIGHTS,
                0.0,
                PairDirection::Horizontal
            ),
            Err(FdError::BadEpsilon(_))
        ));
    }

    #[test]
    fn textureless_tiles_produce_zero_surface() {
        let fd = mosaic_fd(&[[0.0; TILE]; TILE]);
        let corr = phase_correlate(
            &fd,
            &fd,
            DEFAULT_COLOR_WEIGHTS,
            DEFAULT_EPSILON,
            PairDirection::Vertical,
        )
        .unwrap();
        for row in &corr.surface {
            for &v in row {
                assert_eq!(v, 0.0);
            }
        }
    }
}
