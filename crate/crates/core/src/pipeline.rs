//! Tile Processor orchestration: per-tile unary processing of four Bayer
//! images (windowed lapped transform, lossless fractional pre-shift,
//! aberration kernels), six-pair phase correlation consolidated into four
//! epipolar directions, texture tiles with an agreement alpha channel, and
//! deterministic full-frame scheduling.

use crate::fd::{apply_kernel, phase_correlate, phase_rotate_bayer, CorrTile, FdError, PairDirection};
use crate::geometry::{
    lookup_kernel, make_tile_job, CameraGeometry, GeomError, KernelGrid, TileJob, CAMERA_COUNT,
};
use crate::mclt::{
    imclt_tile, make_window, mclt_forward_bayer, BayerFdTile, BayerPhase, FdTile, Tile16,
    Window1D, STRIDE, TILE,
};
use rayon::prelude::*;

/// Mirror apron around the image: nominal tile windows overhang the frame by
/// at most half a stride on each side, and integer offsets may not push a
/// window past this margin.
pub const APRON: usize = STRIDE / 2;

/// Full-scale value of the 16-bit linear samples.
pub const FULL_SCALE: f64 = 65535.0;

/// Default agreement threshold for the texture alpha channel, full-scale
/// fraction.
pub const DEFAULT_ALPHA_TAU: f64 = 0.05;

/// Patch contrast (unit scale) below which a tile carries no measurable
/// structure and correlation is not attempted. Whitening would otherwise
/// inflate a flat patch's window leakage into a fake zero-shift peak.
pub const CONTENT_FLOOR: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("image {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        index: usize,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("image dimensions {0}x{1} not divisible by the tile stride")]
    NotStrideAligned(usize, usize),
    #[error("pixel buffer has {got} samples, expected {want}")]
    BadBufferLength { got: usize, want: usize },
    #[error("kernel grid {0} does not cover the image")]
    GridCoverage(usize),
    #[error("target disparity grid has {got} entries, expected {want}")]
    BadTargetGrid { got: usize, want: usize },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Correlation(#[from] FdError),
}

/// Reflect-101 fold of an index into `[0, n)`. The reflection axes sit on
/// samples 0 and n-1, so index parity is preserved: mirrored reads keep the
/// Bayer color lattice intact.
pub fn mirror_index(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    debug_assert!(n > 1);
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// One camera's raw mosaic frame: 16-bit linear samples, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BayerImage {
    width: usize,
    height: usize,
    phase: BayerPhase,
    data: Vec<u16>,
}

impl BayerImage {
    pub fn new(
        width: usize,
        height: usize,
        phase: BayerPhase,
        data: Vec<u16>,
    ) -> Result<Self, PipelineError> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(PipelineError::BadBufferLength {
                got: data.len(),
                want: width * height,
            });
        }
        Ok(BayerImage {
            width,
            height,
            phase,
            data,
        })
    }

    /// Quantizes unit-scale values to the 16-bit sample format.
    pub fn from_float(
        width: usize,
        height: usize,
        phase: BayerPhase,
        values: &[f64],
    ) -> Result<Self, PipelineError> {
        let data = values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * FULL_SCALE).round() as u16)
            .collect();
        BayerImage::new(width, height, phase, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn phase(&self) -> BayerPhase {
        self.phase
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    /// Unit-scale sample with reflect-101 mirroring outside the frame.
    pub fn get(&self, row: i64, col: i64) -> f64 {
        let r = mirror_index(row, self.height);
        let c = mirror_index(col, self.width);
        self.data[r * self.width + c] as f64 / FULL_SCALE
    }
}

/// Four synchronized mosaic frames plus the shared rig calibration.
#[derive(Clone, Debug)]
pub struct QuadFrameSet {
    pub images: [BayerImage; 4],
    pub geometry: CameraGeometry,
    pub kernels: [KernelGrid; 4],
}

impl QuadFrameSet {
    pub fn new(
        images: [BayerImage; 4],
        geometry: CameraGeometry,
        kernels: [KernelGrid; 4],
    ) -> Result<Self, PipelineError> {
        let (w, h) = (images[0].width, images[0].height);
        for (i, img) in images.iter().enumerate() {
            if img.width != w || img.height != h {
                return Err(PipelineError::DimensionMismatch {
                    index: i,
                    got_w: img.width,
                    got_h: img.height,
                    want_w: w,
                    want_h: h,
                });
            }
        }
        if w % STRIDE != 0 || h % STRIDE != 0 {
            return Err(PipelineError::NotStrideAligned(w, h));
        }
        for (i, grid) in kernels.iter().enumerate() {
            if !grid.covers((w, h)) {
                return Err(PipelineError::GridCoverage(i));
            }
        }
        Ok(QuadFrameSet {
            images,
            geometry,
            kernels,
        })
    }

    /// Frame set with no per-camera corrections.
    pub fn with_identity_kernels(
        images: [BayerImage; 4],
        geometry: CameraGeometry,
    ) -> Result<Self, PipelineError> {
        let size = (images[0].width, images[0].height);
        let grid = KernelGrid::identity_cover(64.0, size);
        QuadFrameSet::new(images, geometry, [grid.clone(), grid.clone(), grid.clone(), grid])
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.images[0].width, self.images[0].height)
    }

    /// (rows, cols) of the stride-8 tile grid.
    pub fn tile_grid(&self) -> (usize, usize) {
        (self.images[0].height / STRIDE, self.images[0].width / STRIDE)
    }

    /// Center of tile (row, col) in pixel coordinates (x, y).
    pub fn tile_center(&self, tile_row: usize, tile_col: usize) -> (f64, f64) {
        (
            (STRIDE * tile_col + STRIDE / 2) as f64,
            (STRIDE * tile_row + STRIDE / 2) as f64,
        )
    }

    /// Per-camera patch aiming for one tile at the given target disparity,
    /// kernel center offsets folded in.
    pub fn make_job(
        &self,
        tile_index: (usize, usize),
        target_disparity: f64,
    ) -> Result<TileJob, GeomError> {
        let center = self.tile_center(tile_index.0, tile_index.1);
        let mut extras = [[0.0f64; 2]; 4];
        for cam in 0..CAMERA_COUNT {
            let kernel = lookup_kernel(&self.kernels[cam], &self.geometry, center)?;
            extras[cam] = kernel.center_offset;
        }
        make_tile_job(&self.geometry, tile_index, center, target_disparity, &extras)
    }
}

/// Correlation parameters shared by every pair.
#[derive(Clone, Copy, Debug)]
pub struct CorrConfig {
    pub color_weights: [f64; 3],
    pub epsilon: f64,
}

impl Default for CorrConfig {
    fn default() -> Self {
        CorrConfig {
            color_weights: crate::fd::DEFAULT_COLOR_WEIGHTS,
            epsilon: crate::fd::DEFAULT_EPSILON,
        }
    }
}

/// Four directional 9x9 correlation surfaces for one tile, or none when the
/// tile could not be processed (window out of frame). Directions are indexed
/// by [`PairDirection::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct TileCorrSet {
    pub tile_index: (usize, usize),
    pub target_disparity: f64,
    pub directions: Option<[CorrTile; 4]>,
}

impl TileCorrSet {
    pub fn valid(&self) -> bool {
        self.directions.is_some()
    }
}

/// 16x16 RGBA texture tile; alpha in [0,1], 1 where the cameras agree.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureTile {
    pub rgba: [[[f64; 4]; TILE]; TILE],
}

fn standard_windows() -> (Window1D, Window1D) {
    let w = make_window(0.0).expect("zero shift is in range");
    (w.clone(), w)
}

/// Reads one camera's 16x16 patch for `job`, returning the mosaic tile, its
/// Bayer phase, and the window origin. None when the window leaves the
/// mirrored apron.
fn read_patch(
    image: &BayerImage,
    job: &TileJob,
    cam: usize,
) -> Option<(Tile16, BayerPhase, (i64, i64))> {
    let (tr, tc) = job.tile_index;
    let origin_r = (STRIDE * tr) as i64 - (TILE / 4) as i64 + job.integer_offsets[cam][1];
    let origin_c = (STRIDE * tc) as i64 - (TILE / 4) as i64 + job.integer_offsets[cam][0];
    let apron = APRON as i64;
    if origin_r < -apron
        || origin_c < -apron
        || origin_r + TILE as i64 > image.height as i64 + apron
        || origin_c + TILE as i64 > image.width as i64 + apron
    {
        return None;
    }
    let mut tile = [[0.0f64; TILE]; TILE];
    for (dr, row) in tile.iter_mut().enumerate() {
        for (dc, v) in row.iter_mut().enumerate() {
            *v = image.get(origin_r + dr as i64, origin_c + dc as i64);
        }
    }
    Some((
        tile,
        image.phase.shifted(origin_r, origin_c),
        (origin_r, origin_c),
    ))
}

/// Unary stage for one tile: per camera, window the patch at the integer
/// offset, analyze with fractionally shifted windows, phase-rotate the
/// spectrum by the same fraction (together a lossless sub-pixel shift onto
/// the tile center), and apply that camera's aberration kernel. None when any
/// camera's window leaves the frame apron.
pub fn process_tile_unary(
    frames: &QuadFrameSet,
    job: &TileJob,
) -> Option<[BayerFdTile; 4]> {
    let center = frames.tile_center(job.tile_index.0, job.tile_index.1);
    let mut out: [Option<BayerFdTile>; 4] = [None, None, None, None];
    for cam in 0..CAMERA_COUNT {
        let (tile, phase, _origin) = read_patch(&frames.images[cam], job, cam)?;
        let [fx, fy] = job.fractional_offsets[cam];
        // Fractions lie in [-0.5, 0.5), so both shifts are within the
        // half-pixel bound the window and rotation accept.
        let wh = make_window(-fx).expect("fraction within half pixel");
        let wv = make_window(-fy).expect("fraction within half pixel");
        let fd = mclt_forward_bayer(&tile, phase, &wh, &wv);
        let fd = phase_rotate_bayer(&fd, -fx, -fy).expect("fraction within half pixel");
        let kernel = lookup_kernel(&frames.kernels[cam], &frames.geometry, center)
            .expect("tile centers lie inside the image");
        out[cam] = Some(apply_kernel(&fd, &kernel));
    }
    Some(out.map(|t| t.expect("all four cameras processed")))
}

fn average_surfaces(a: &CorrTile, b: &CorrTile) -> CorrTile {
    let mut out = a.clone();
    for (ro, rb) in out.surface.iter_mut().zip(b.surface.iter()) {
        for (vo, vb) in ro.iter_mut().zip(rb.iter()) {
            *vo = 0.5 * (*vo + *vb);
        }
    }
    out
}

/// Correlates the six camera pairs and consolidates them into four epipolar
/// directions: the two co-parallel horizontal pairs (top 0-1, bottom 2-3) and
/// vertical pairs (left 0-2, right 1-3) are averaged; the diagonals stand
/// alone. In every pair the later camera is the correlation reference, so a
/// positive residual disparity displaces each peak toward positive axis
/// values.
pub fn correlate_tile(
    corrected: &[BayerFdTile; 4],
    config: &CorrConfig,
    tile_index: (usize, usize),
    target_disparity: f64,
) -> Result<TileCorrSet, FdError> {
    let pc = |a: usize, b: usize, dir: PairDirection| {
        phase_correlate(
            &corrected[a],
            &corrected[b],
            config.color_weights,
            config.epsilon,
            dir,
        )
    };
    let horizontal = average_surfaces(
        &pc(1, 0, PairDirection::Horizontal)?,
        &pc(3, 2, PairDirection::Horizontal)?,
    );
    let vertical = average_surfaces(
        &pc(2, 0, PairDirection::Vertical)?,
        &pc(3, 1, PairDirection::Vertical)?,
    );
    let diag_main = pc(3, 0, PairDirection::DiagMain)?;
    let diag_anti = pc(2, 1, PairDirection::DiagAnti)?;
    Ok(TileCorrSet {
        tile_index,
        target_disparity,
        directions: Some([horizontal, vertical, diag_main, diag_anti]),
    })
}

/// Convenience: unary stage plus correlation for one tile at one target
/// disparity. Invalid (out-of-frame) tiles yield a set with no directions.
pub fn correlate_at(
    frames: &QuadFrameSet,
    tile_index: (usize, usize),
    target_disparity: f64,
    config: &CorrConfig,
) -> Result<TileCorrSet, PipelineError> {
    let job = frames.make_job(tile_index, target_disparity)?;
    match process_tile_unary(frames, &job) {
        Some(corrected) if tile_contrast(frames, &job) >= CONTENT_FLOOR => Ok(correlate_tile(
            &corrected,
            config,
            tile_index,
            target_disparity,
        )?),
        _ => Ok(TileCorrSet {
            tile_index,
            target_disparity,
            directions: None,
        }),
    }
}

/// Largest per-camera contrast (standard deviation of the 16x16 window,
/// unit scale) of `job`'s patches. Patches the unary stage accepted always
/// read successfully; anything else counts as zero contrast.
fn tile_contrast(frames: &QuadFrameSet, job: &TileJob) -> f64 {
    let mut best = 0.0f64;
    for cam in 0..CAMERA_COUNT {
        let Some((tile, _, _)) = read_patch(&frames.images[cam], job, cam) else {
            return 0.0;
        };
        let n = (TILE * TILE) as f64;
        let mut mean = 0.0;
        for row in &tile {
            for v in row {
                mean += v;
            }
        }
        mean /= n;
        let mut var = 0.0;
        for row in &tile {
            for v in row {
                var += (v - mean) * (v - mean);
            }
        }
        best = best.max((var / n).sqrt());
    }
    best
}

/// Zeroes the alias-image bins a single camera's color sub-lattice cannot
/// distinguish from content. Red and blue live on a stride-2 lattice per
/// axis, so only the low half-band per axis is real; green's quincunx lattice
/// supports the diamond kv + kh < 7, with the self-aliased kv + kh = 7
/// anti-diagonal halved.
fn alias_cut(fd: &FdTile, color: crate::mclt::Color) -> FdTile {
    let mut out = fd.clone();
    for q in out.quadrants.iter_mut() {
        for kv in 0..8 {
            for kh in 0..8 {
                q[kv][kh] *= crate::fd::sublattice_weight(color, kv, kh);
            }
        }
    }
    out
}

/// Combines the four corrected tiles into an RGB texture tile with an
/// agreement alpha: per color the camera spectra are averaged, alias-cut to
/// the color's sampling band, and inverse transformed; alpha is 1 minus the
/// per-pixel RMS deviation across cameras over `tau` full scale, clamped to
/// [0,1]. Pixel values carry the analysis window squared, as produced by
/// single-tile inversion.
pub fn texture_tile(corrected: &[BayerFdTile; 4], tau: f64) -> TextureTile {
    let (wh, wv) = standard_windows();
    let mut rgba = [[[0.0f64; 4]; TILE]; TILE];
    let mut deviation_sq = [[0.0f64; TILE]; TILE];
    for color in crate::mclt::Color::ALL {
        let mut mean = FdTile::zero();
        for cam in corrected {
            let fd = cam.get(color);
            for (qm, qc) in mean.quadrants.iter_mut().zip(fd.quadrants.iter()) {
                for (rm, rc) in qm.iter_mut().zip(qc.iter()) {
                    for (vm, vc) in rm.iter_mut().zip(rc.iter()) {
                        *vm += vc / CAMERA_COUNT as f64;
                    }
                }
            }
        }
        let mean_px = imclt_tile(&alias_cut(&mean, color), &wh, &wv);
        for cam in corrected {
            let px = imclt_tile(&alias_cut(cam.get(color), color), &wh, &wv);
            for r in 0..TILE {
                for c in 0..TILE {
                    let d = px[r][c] - mean_px[r][c];
                    deviation_sq[r][c] += d * d;
                }
            }
        }
        for r in 0..TILE {
            for c in 0..TILE {
                rgba[r][c][color.index()] = mean_px[r][c];
            }
        }
    }
    let samples = (CAMERA_COUNT * crate::mclt::Color::ALL.len()) as f64;
    for r in 0..TILE {
        for c in 0..TILE {
            let rms = (deviation_sq[r][c] / samples).sqrt();
            rgba[r][c][3] = (1.0 - rms / tau).clamp(0.0, 1.0);
        }
    }
    TextureTile { rgba }
}

/// Texture rendering parameters for full-frame processing.
#[derive(Clone, Copy, Debug)]
pub struct TextureParams {
    pub tau: f64,
}

impl Default for TextureParams {
    fn default() -> Self {
        TextureParams {
            tau: DEFAULT_ALPHA_TAU,
        }
    }
}

/// Full-frame processing parameters. `workers` of 0 uses the ambient thread
/// pool; any other count builds a dedicated pool of that size. Output is
/// byte-identical for every worker count.
#[derive(Clone, Debug, Default)]
pub struct FrameConfig {
    pub corr: CorrConfig,
    pub workers: usize,
    pub texture: Option<TextureParams>,
}

/// Overlap-added texture planes over the full frame, RGB plus alpha,
/// normalized by the accumulated window weight.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureCanvas {
    pub width: usize,
    pub height: usize,
    /// R, G, B, alpha; row-major `width * height`.
    pub planes: [Vec<f64>; 4],
}

/// One frame's correlation output: row-major tile grid.
#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub grid: (usize, usize),
    pub tiles: Vec<TileCorrSet>,
    pub texture: Option<TextureCanvas>,
}

/// Per-pixel overlap weight of the stride-8 half-sine tiling along one axis
/// of `n` pixels with the half-stride apron: interior weights are exactly 1.
fn axis_overlap_weight(n: usize) -> Vec<f64> {
    let w = make_window(0.0).expect("zero shift is in range");
    let taps = w.taps();
    let mut out = vec![0.0f64; n + 2 * APRON];
    let tiles = n / STRIDE;
    for t in 0..tiles {
        let origin = (STRIDE * t) as i64 - (TILE / 4) as i64 + APRON as i64;
        for (i, &tap) in taps.iter().enumerate() {
            let p = origin + i as i64;
            if p >= 0 && (p as usize) < out.len() {
                out[p as usize] += tap * tap;
            }
        }
    }
    out
}

/// Processes every tile of the grid at the supplied per-tile target
/// disparities. Tiles are independent; the worker pool may execute them in
/// any order and the collected output preserves row-major tile order, so
/// results do not depend on the worker count.
pub fn process_frame(
    frames: &QuadFrameSet,
    targets: &[f64],
    config: &FrameConfig,
) -> Result<FrameOutput, PipelineError> {
    let (rows, cols) = frames.tile_grid();
    if targets.len() != rows * cols {
        return Err(PipelineError::BadTargetGrid {
            got: targets.len(),
            want: rows * cols,
        });
    }
    let run = || -> Result<Vec<(TileCorrSet, Option<(TileJob, [BayerFdTile; 4])>)>, PipelineError> {
        (0..rows * cols)
            .into_par_iter()
            .map(|i| {
                let tile_index = (i / cols, i % cols);
                let job = frames.make_job(tile_index, targets[i])?;
                match process_tile_unary(frames, &job) {
                    Some(corrected) => {
                        let set = if tile_contrast(frames, &job) < CONTENT_FLOOR {
                            TileCorrSet {
                                tile_index,
                                target_disparity: targets[i],
                                directions: None,
                            }
                        } else {
                            correlate_tile(&corrected, &config.corr, tile_index, targets[i])?
                        };
                        let tex = config.texture.map(|_| (job, corrected));
                        Ok((set, tex))
                    }
                    None => Ok((
                        TileCorrSet {
                            tile_index,
                            target_disparity: targets[i],
                            directions: None,
                        },
                        None,
                    )),
                }
            })
            .collect()
    };
    let processed = if config.workers == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool construction");
        pool.install(run)?
    };

    let texture = match config.texture {
        None => None,
        Some(params) => Some(render_texture_canvas(frames, &processed, params)),
    };
    let tiles = processed.into_iter().map(|(set, _)| set).collect();
    Ok(FrameOutput {
        grid: (rows, cols),
        tiles,
        texture,
    })
}

/// Overlap-adds per-tile textures into full RGB and alpha planes. Tile RGB
/// values already carry the squared analysis window, so they sum directly;
/// alpha is weighted explicitly. The accumulation runs in a fixed tile order
/// so the canvas is deterministic.
fn render_texture_canvas(
    frames: &QuadFrameSet,
    processed: &[(TileCorrSet, Option<(TileJob, [BayerFdTile; 4])>)],
    params: TextureParams,
) -> TextureCanvas {
    let (width, height) = frames.image_size();
    let (wh, wv) = standard_windows();
    let (pw, ph) = (width + 2 * APRON, height + 2 * APRON);
    let mut acc = [
        vec![0.0f64; pw * ph],
        vec![0.0f64; pw * ph],
        vec![0.0f64; pw * ph],
        vec![0.0f64; pw * ph],
    ];
    for (set, tex) in processed {
        let Some((_job, corrected)) = tex else {
            continue;
        };
        let (tr, tc) = set.tile_index;
        let origin_r = STRIDE * tr + APRON - TILE / 4;
        let origin_c = STRIDE * tc + APRON - TILE / 4;
        let tile = texture_tile(corrected, params.tau);
        for r in 0..TILE {
            for c in 0..TILE {
                let at = (origin_r + r) * pw + origin_c + c;
                let weight = wv.taps()[r] * wv.taps()[r] * wh.taps()[c] * wh.taps()[c];
                for plane in 0..3 {
                    acc[plane][at] += tile.rgba[r][c][plane];
                }
                acc[3][at] += weight * tile.rgba[r][c][3];
            }
        }
    }
    let wx = axis_overlap_weight(width);
    let wy = axis_overlap_weight(height);
    let mut planes: [Vec<f64>; 4] = [
        vec![0.0; width * height],
        vec![0.0; width * height],
        vec![0.0; width * height],
        vec![0.0; width * height],
    ];
    for r in 0..height {
        for c in 0..width {
            let (pr, pc) = (r + APRON, c + APRON);
            let weight = wy[pr] * wx[pc];
            let inv = if weight > 0.0 { 1.0 / weight } else { 0.0 };
            for plane in 0..4 {
                planes[plane][r * width + c] = acc[plane][pr * pw + pc] * inv;
            }
        }
    }
    TextureCanvas {
        width,
        height,
        planes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mclt::Color;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_geometry(size: (usize, usize)) -> CameraGeometry {
        CameraGeometry::quad(0.258, 2.2e-6, 4.264e-3, size, [0.0; 3])
    }

    fn noise_image(width: usize, height: usize, seed: u64) -> Vec<u16> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..width * height)
            .map(|_| rng.random_range(0..=u16::MAX))
            .collect()
    }

    /// Four cameras observing the same noise world at integer residual
    /// disparity `d` (d even so all per-camera shifts are whole pixels):
    /// camera i's frame is the world sampled at u + d * position_i.
    fn integer_disparity_frames(size: usize, d: i64, seed: u64) -> QuadFrameSet {
        assert!(d % 2 == 0);
        let margin = (d / 2).unsigned_abs() as usize + 1;
        let (ww, wh) = (size + 2 * margin, size + 2 * margin);
        let world = noise_image(ww, wh, seed);
        let mut images = Vec::new();
        for pos in crate::geometry::SQUARE_POSITIONS {
            let (sx, sy) = (d * (2.0 * pos[0]) as i64 / 2, d * (2.0 * pos[1]) as i64 / 2);
            let mut data = vec![0u16; size * size];
            for r in 0..size {
                for c in 0..size {
                    let wr = (r as i64 + margin as i64 + sy) as usize;
                    let wc = (c as i64 + margin as i64 + sx) as usize;
                    data[r * size + c] = world[wr * ww + wc];
                }
            }
            images.push(BayerImage::new(size, size, BayerPhase::Rggb, data).unwrap());
        }
        let images: [BayerImage; 4] = images.try_into().unwrap();
        QuadFrameSet::with_identity_kernels(images, test_geometry((size, size))).unwrap()
    }

    #[test]
    fn mirror_index_reflects_and_preserves_parity() {
        assert_eq!(mirror_index(0, 8), 0);
        assert_eq!(mirror_index(7, 8), 7);
        assert_eq!(mirror_index(-1, 8), 1);
        assert_eq!(mirror_index(-4, 8), 4);
        assert_eq!(mirror_index(8, 8), 6);
        assert_eq!(mirror_index(11, 8), 3);
        for i in -20i64..30 {
            let m = mirror_index(i, 12) as i64;
            assert_eq!(m.rem_euclid(2), i.rem_euclid(2), "parity broken at {i}");
        }
    }

    #[test]
    fn identical_frames_give_identical_unary_tiles() {
        let size = 64;
        let data = noise_image(size, size, 7);
        let img = BayerImage::new(size, size, BayerPhase::Rggb, data).unwrap();
        let frames = QuadFrameSet::with_identity_kernels(
            [img.clone(), img.clone(), img.clone(), img],
            test_geometry((size, size)),
        )
        .unwrap();
        let job = frames.make_job((3, 3), 0.0).unwrap();
        let tiles = process_tile_unary(&frames, &job).unwrap();
        for cam in 1..4 {
            assert_eq!(tiles[0], tiles[cam]);
        }
    }

    #[test]
    fn oversized_offset_flags_tile_out_of_frame() {
        let frames = integer_disparity_frames(64, 0, 9);
        // Corner tile: nominal origin -4 sits exactly on the apron edge,
        // so any further negative integer offset must invalidate it.
        let job = frames.make_job((0, 0), 2.0).unwrap();
        assert!(process_tile_unary(&frames, &job).is_none());
        let job = frames.make_job((0, 0), 0.0).unwrap();
        assert!(process_tile_unary(&frames, &job).is_some());
    }

    #[test]
    fn self_correlation_peaks_at_center_in_all_directions() {
        let frames = integer_disparity_frames(64, 0, 11);
        let set = correlate_at(&frames, (4, 4), 0.0, &CorrConfig::default()).unwrap();
        for dir in set.directions.unwrap() {
            assert_eq!(dir.argmax(), (4, 4), "{:?}", dir.pair_direction);
        }
    }

    #[test]
    fn residual_disparity_displaces_peaks_along_each_axis() {
        // True disparity 2, target 0: residual +2 px shows up as +2 in x for
        // horizontal, +2 in y for vertical, and +2 on each diagonal axis.
        let frames = integer_disparity_frames(64, 2, 13);
        let set = correlate_at(&frames, (4, 4), 0.0, &CorrConfig::default()).unwrap();
        let dirs = set.directions.unwrap();
        assert_eq!(dirs[PairDirection::Horizontal.index()].argmax(), (4, 6));
        assert_eq!(dirs[PairDirection::Vertical.index()].argmax(), (6, 4));
        assert_eq!(dirs[PairDirection::DiagMain.index()].argmax(), (6, 6));
        assert_eq!(dirs[PairDirection::DiagAnti.index()].argmax(), (6, 2));
    }

    #[test]
    fn exact_target_disparity_recenters_peaks() {
        let frames = integer_disparity_frames(64, 2, 17);
        let set = correlate_at(&frames, (4, 4), 2.0, &CorrConfig::default()).unwrap();
        for dir in set.directions.unwrap() {
            assert_eq!(dir.argmax(), (4, 4), "{:?}", dir.pair_direction);
        }
    }

    #[test]
    fn texture_alpha_full_for_agreement_low_for_outlier() {
        let frames = integer_disparity_frames(64, 0, 19);
        let job = frames.make_job((4, 4), 0.0).unwrap();
        let mut corrected = process_tile_unary(&frames, &job).unwrap();
        let tex = texture_tile(&corrected, DEFAULT_ALPHA_TAU);
        for row in &tex.rgba {
            for px in row {
                assert_eq!(px[3], 1.0);
            }
        }
        // Replace one camera's green plane with strong noise: interior
        // alpha collapses for tau below the disturbance RMS.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for q in corrected[2].get_mut(Color::Green).quadrants.iter_mut() {
            for row in q.iter_mut() {
                for v in row.iter_mut() {
                    *v += rng.random_range(-0.5..0.5);
                }
            }
        }
        let tex = texture_tile(&corrected, 0.01);
        let mut interior = 0.0;
        let mut count = 0;
        for r in 4..12 {
            for c in 4..12 {
                interior += tex.rgba[r][c][3];
                count += 1;
            }
        }
        assert!(interior / (count as f64) < 0.5);
    }

    #[test]
    fn zero_tiles_give_zero_texture_with_full_alpha() {
        let zero = BayerFdTile::from_mono(FdTile::zero());
        let tex = texture_tile(&[zero.clone(), zero.clone(), zero.clone(), zero], 0.05);
        for row in &tex.rgba {
            for px in row {
                assert_eq!(px[0], 0.0);
                assert_eq!(px[1], 0.0);
                assert_eq!(px[2], 0.0);
                assert_eq!(px[3], 1.0);
            }
        }
    }

    #[test]
    fn frame_grid_shape_matches_image_dimensions() {
        let frames = integer_disparity_frames(64, 0, 29);
        let targets = vec![0.0; 64];
        let out = process_frame(&frames, &targets, &FrameConfig::default()).unwrap();
        assert_eq!(out.grid, (8, 8));
        assert_eq!(out.tiles.len(), 64);
        assert!(out.tiles.iter().all(|t| t.valid()));
        assert!(process_frame(&frames, &targets[..63], &FrameConfig::default()).is_err());
    }

    #[test]
    fn frame_output_is_identical_across_worker_counts() {
        let frames = integer_disparity_frames(64, 2, 31);
        let targets: Vec<f64> = (0..64).map(|i| (i % 5) as f64 * 0.5).collect();
        let config = |workers| FrameConfig {
            workers,
            texture: Some(TextureParams::default()),
            ..FrameConfig::default()
        };
        let a = process_frame(&frames, &targets, &config(1)).unwrap();
        let b = process_frame(&frames, &targets, &config(8)).unwrap();
        assert_eq!(a.tiles, b.tiles);
        assert_eq!(a.texture, b.texture);
    }

    #[test]
    fn texture_canvas_reconstructs_constant_frame_interior() {
        // A constant gray frame: per-color OLA canvases must return the
        // constant in the interior and alpha must stay 1 everywhere.
        let size = 64;
        let gray = vec![0.5f64; size * size];
        let img = BayerImage::from_float(size, size, BayerPhase::Rggb, &gray).unwrap();
        let frames = QuadFrameSet::with_identity_kernels(
            [img.clone(), img.clone(), img.clone(), img],
            test_geometry((size, size)),
        )
        .unwrap();
        let targets = vec![0.0; 64];
        let config = FrameConfig {
            texture: Some(TextureParams::default()),
            ..FrameConfig::default()
        };
        let out = process_frame(&frames, &targets, &config).unwrap();
        let tex = out.texture.unwrap();
        let want = (0.5 * FULL_SCALE).round() / FULL_SCALE; // the quantized gray
        let mut worst = 0.0f64;
        for r in 8..size - 8 {
            for c in 8..size - 8 {
                for plane in 0..3 {
                    let got = tex.planes[plane][r * size + c];
                    worst = worst.max((got - want).abs());
                }
                assert!((tex.planes[3][r * size + c] - 1.0).abs() < 1e-9);
            }
        }
        println!("constant-frame texture ripple: {worst:.3e}");
        assert!(worst < 1e-6, "interior ripple {worst}");
    }
}
