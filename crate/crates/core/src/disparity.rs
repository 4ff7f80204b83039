//! Subpixel disparity from directional correlation sets.
//!
//! Each of the four pair directions constrains the same scalar disparity
//! along a different image axis. The surfaces are projected onto their
//! disparity axes, weighted by peak sharpness (an edge running parallel to
//! a pair's baseline leaves that pair's surface a ridge with no usable
//! maximum), and the combined profile is fit with a Gaussian-plus-floor
//! model. Refinement re-centers the correlation at the updated target
//! until the fitted residual drops below threshold, so the final estimate
//! is always measured near zero residual where the fit is unbiased.

use crate::pipeline::{correlate_at, CorrConfig, PipelineError, QuadFrameSet, TileCorrSet};
use crate::synth::{GroundTruth, SynthError};
use rayon::prelude::*;
use thiserror::Error;

/// Bins of a projected disparity profile, spanning -4..=+4 px.
pub const PROFILE_BINS: usize = 9;
const CENTER_BIN: usize = PROFILE_BINS / 2;

/// Peak-to-baseline contrast below which a direction is flagged
/// ridge-ambiguous and excluded from the combined profile.
pub const AMBIGUITY_THRESHOLD: f64 = 0.25;

/// Flattened feature vector length: four 9x9 surfaces plus the target.
pub const FEATURE_LEN: usize = 9 * 9 * 4 + 1;

const PROFILE_FIT_WINDOW: usize = 7;
const LMA_MAX_ITERS: usize = 20;

#[derive(Debug, Error)]
pub enum DisparityError {
    #[error("no direction offers a usable correlation peak")]
    NoValidDirections,
    #[error("expected {expected} per-tile entries for the grid, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("sweep step must be positive and range non-empty")]
    BadSweep,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Scene(#[from] SynthError),
}

/// One tile's disparity measurement. `disparity` is exactly
/// `target + residual` for the last accepted fit; `strength` of 0 marks an
/// estimate with no usable peak.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisparityEstimate {
    pub disparity: f64,
    pub residual: f64,
    pub strength: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DisparityEstimate {
    fn invalid(target: f64, iterations: usize) -> Self {
        DisparityEstimate {
            disparity: target,
            residual: 0.0,
            strength: 0.0,
            iterations,
            converged: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.strength > 0.0
    }
}

/// Per-tile estimates over the full tile grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    grid: (usize, usize),
    estimates: Vec<DisparityEstimate>,
}

impl DisparityMap {
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn at(&self, tile_row: usize, tile_col: usize) -> &DisparityEstimate {
        &self.estimates[tile_row * self.grid.1 + tile_col]
    }

    pub fn estimates(&self) -> &[DisparityEstimate] {
        &self.estimates
    }
}

/// Directional profiles projected onto the disparity axis, in pair order
/// horizontal, vertical, main diagonal, anti diagonal. Bin `b` covers
/// disparity `b - 4` px. `peaks` holds each direction's raw surface
/// maximum, the natural confidence scale for whitened correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionProfiles {
    pub profiles: [[f64; PROFILE_BINS]; 4],
    pub peaks: [f64; 4],
    pub weights: [f64; 4],
    pub ambiguous: [bool; 4],
    pub combined: [f64; PROFILE_BINS],
}

/// Projects each valid surface onto its disparity axis and combines them
/// with sharpness weights. Horizontal pairs read displacement along x,
/// vertical along y; diagonal pairs see the disparity on both axes at
/// once, so their along-diagonal displacement is rescaled by the sqrt(2)
/// baseline excess, i.e. cell (y, x) projects to (dx +- dy) / 2.
pub fn combine_directions(set: &TileCorrSet) -> Result<DirectionProfiles, DisparityError> {
    let directions = set.directions.as_ref().ok_or(DisparityError::NoValidDirections)?;

    let mut out = DirectionProfiles {
        profiles: [[0.0; PROFILE_BINS]; 4],
        peaks: [0.0; 4],
        weights: [0.0; 4],
        ambiguous: [true; 4],
        combined: [0.0; PROFILE_BINS],
    };

    for (d, corr) in directions.iter().enumerate() {
        let mut wsum = [0.0f64; PROFILE_BINS];
        let mut wcnt = [0.0f64; PROFILE_BINS];
        let mut peak = f64::NEG_INFINITY;
        for y in 0..9 {
            for x in 0..9 {
                let v = corr.surface[y][x];
                peak = peak.max(v);
                let dx = x as i64 - 4;
                let dy = y as i64 - 4;
                // Twice the disparity this cell represents; odd values on
                // the diagonals land between bins and split in half.
                let xi2 = match d {
                    0 => 2 * dx,
                    1 => 2 * dy,
                    2 => dx + dy,
                    _ => dy - dx,
                };
                if xi2 % 2 == 0 {
                    let b = (xi2 / 2 + 4) as usize;
                    wsum[b] += v;
                    wcnt[b] += 1.0;
                } else {
                    let lo = ((xi2 - 1) / 2 + 4) as usize;
                    wsum[lo] += 0.5 * v;
                    wcnt[lo] += 0.5;
                    wsum[lo + 1] += 0.5 * v;
                    wcnt[lo + 1] += 0.5;
                }
            }
        }
        // Two normalizations, two jobs. The fit profile uses a fixed
        // center-bin divisor: a compact peak's full perpendicular mass
        // lands in every near-center bin, so dividing by the actual cell
        // count would warp the diagonal profiles with the crop's
        // triangular count envelope and bias the fit outward. Ambiguity
        // instead judges the per-bin mean, where flat surfaces and ridges
        // come out exactly flat rather than tent-shaped.
        let mut profile = [0.0; PROFILE_BINS];
        let mut mean_profile = [0.0; PROFILE_BINS];
        for b in 0..PROFILE_BINS {
            profile[b] = wsum[b] / wcnt[CENTER_BIN];
            mean_profile[b] = wsum[b] / wcnt[b];
        }

        out.peaks[d] = peak;
        let (peak_bin, contrast) = profile_contrast(&mean_profile);
        let ambiguous = contrast < AMBIGUITY_THRESHOLD;
        out.profiles[d] = profile;
        out.ambiguous[d] = ambiguous;
        if !ambiguous {
            out.weights[d] = mean_profile[peak_bin].max(0.0) * contrast;
        }
    }

    let total: f64 = out.weights.iter().sum();
    if total <= 0.0 {
        return Err(DisparityError::NoValidDirections);
    }
    for d in 0..4 {
        let w = out.weights[d] / total;
        for b in 0..PROFILE_BINS {
            out.combined[b] += w * out.profiles[d][b];
        }
    }
    Ok(out)
}

/// Peak bin and its contrast against the mean of the remaining bins,
/// normalized by the peak. A flat or non-positive profile scores 0.
fn profile_contrast(profile: &[f64; PROFILE_BINS]) -> (usize, f64) {
    let mut peak_bin = 0;
    for b in 1..PROFILE_BINS {
        if profile[b] > profile[peak_bin] {
            peak_bin = b;
        }
    }
    let peak = profile[peak_bin];
    if peak <= 0.0 {
        return (peak_bin, 0.0);
    }
    let rest: f64 = profile
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != peak_bin)
        .map(|(_, &v)| v)
        .sum::<f64>()
        / (PROFILE_BINS - 1) as f64;
    (peak_bin, ((peak - rest) / peak).clamp(0.0, 1.0))
}

/// Result of a 2D surface fit: peak displacement from the center cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceFit {
    pub dx: f64,
    pub dy: f64,
    pub strength: f64,
}

/// Fits a Gaussian-plus-floor to `fit_window` bins around the profile
/// argmax. Returns (residual px, strength), or None when the profile has
/// no strict interior maximum. Falls back to a 3-point parabola when the
/// model fit does not converge or wanders off the peak.
pub fn fit_profile(profile: &[f64; PROFILE_BINS], fit_window: usize) -> Option<(f64, f64)> {
    assert!(fit_window >= 3 && fit_window % 2 == 1 && fit_window <= PROFILE_BINS);
    let k = strict_profile_max(profile)?;

    let lo = (k.saturating_sub(fit_window / 2)).min(PROFILE_BINS - fit_window);
    let pts: Vec<(f64, f64)> = (lo..lo + fit_window)
        .map(|b| (b as f64 - CENTER_BIN as f64, profile[b]))
        .collect();

    let guess = k as f64 - CENTER_BIN as f64;
    if let Some([a, c, s, _b]) = lma_gaussian_1d(&pts, guess) {
        let plausible = a > 0.0 && (0.25..8.0).contains(&s) && (c - guess).abs() <= 1.5;
        if plausible {
            return Some((c, a.clamp(0.0, 1.0)));
        }
    }
    parabola(profile[k - 1], profile[k], profile[k + 1])
        .map(|d| (guess + d, profile[k].clamp(0.0, 1.0)))
}

/// Fits a 2D Gaussian-plus-floor to `fit_window` x `fit_window` cells
/// around the surface argmax. None when no strict interior maximum exists.
pub fn fit_surface(surface: &[[f64; 9]; 9], fit_window: usize) -> Option<SurfaceFit> {
    assert!(fit_window >= 3 && fit_window % 2 == 1 && fit_window <= 9);
    let (pr, pc) = strict_surface_max(surface)?;

    let r0 = (pr.saturating_sub(fit_window / 2)).min(9 - fit_window);
    let c0 = (pc.saturating_sub(fit_window / 2)).min(9 - fit_window);
    let mut pts = Vec::with_capacity(fit_window * fit_window);
    for r in r0..r0 + fit_window {
        for c in c0..c0 + fit_window {
            pts.push((c as f64 - 4.0, r as f64 - 4.0, surface[r][c]));
        }
    }

    let guess = (pc as f64 - 4.0, pr as f64 - 4.0);
    if let Some([a, cx, cy, s, _b]) = lma_gaussian_2d(&pts, guess) {
        let plausible = a > 0.0
            && (0.25..8.0).contains(&s)
            && (cx - guess.0).abs() <= 1.5
            && (cy - guess.1).abs() <= 1.5;
        if plausible {
            return Some(SurfaceFit {
                dx: cx,
                dy: cy,
                strength: a.clamp(0.0, 1.0),
            });
        }
    }
    let dx = parabola(surface[pr][pc - 1], surface[pr][pc], surface[pr][pc + 1])?;
    let dy = parabola(surface[pr - 1][pc], surface[pr][pc], surface[pr + 1][pc])?;
    Some(SurfaceFit {
        dx: guess.0 + dx,
        dy: guess.1 + dy,
        strength: surface[pr][pc].clamp(0.0, 1.0),
    })
}

fn strict_profile_max(profile: &[f64; PROFILE_BINS]) -> Option<usize> {
    let mut k = 0;
    for b in 1..PROFILE_BINS {
        if profile[b] > profile[k] {
            k = b;
        }
    }
    if k == 0 || k == PROFILE_BINS - 1 {
        return None;
    }
    (profile[k] > profile[k - 1] && profile[k] > profile[k + 1]).then_some(k)
}

fn strict_surface_max(surface: &[[f64; 9]; 9]) -> Option<(usize, usize)> {
    let mut best = (0usize, 0usize);
    for r in 0..9 {
        for c in 0..9 {
            if surface[r][c] > surface[best.0][best.1] {
                best = (r, c);
            }
        }
    }
    let (pr, pc) = best;
    if !(1..=7).contains(&pr) || !(1..=7).contains(&pc) {
        return None;
    }
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let v = surface[(pr as i64 + dr) as usize][(pc as i64 + dc) as usize];
            if v >= surface[pr][pc] {
                return None;
            }
        }
    }
    Some((pr, pc))
}

/// Vertex offset of the parabola through three equispaced samples; None
/// when the triple is not concave.
fn parabola(left: f64, mid: f64, right: f64) -> Option<f64> {
    let denom = left - 2.0 * mid + right;
    (denom < 0.0).then(|| 0.5 * (left - right) / denom)
}

/// Levenberg-Marquardt for b + A exp(-(x-c)^2 / (2 s^2)).
/// Returns [A, c, s, b] or None when the normal equations go singular.
fn lma_gaussian_1d(pts: &[(f64, f64)], center_guess: f64) -> Option<[f64; 4]> {
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut p = [(ymax - ymin).max(1e-12), center_guess, 1.0, ymin];

    let model = |p: &[f64; 4], x: f64| {
        let e = (-(x - p[1]) * (x - p[1]) / (2.0 * p[2] * p[2])).exp();
        let jac = [
            e,
            p[0] * e * (x - p[1]) / (p[2] * p[2]),
            p[0] * e * (x - p[1]) * (x - p[1]) / (p[2] * p[2] * p[2]),
            1.0,
        ];
        (p[3] + p[0] * e, jac)
    };
    let sse = |p: &[f64; 4]| -> f64 {
        pts.iter()
            .map(|&(x, y)| {
                let d = y - model(p, x).0;
                d * d
            })
            .sum()
    };

    let mut lambda = 1e-3;
    let mut err = sse(&p);
    for _ in 0..LMA_MAX_ITERS {
        let mut jtj = [[0.0f64; 5]; 5];
        let mut jtr = [0.0f64; 5];
        for &(x, y) in pts {
            let (m, jac) = model(&p, x);
            let r = y - m;
            for i in 0..4 {
                jtr[i] += jac[i] * r;
                for j in 0..4 {
                    jtj[i][j] += jac[i] * jac[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut a = jtj;
            for i in 0..4 {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(step) = solve_linear(4, a, jtr) else {
                return None;
            };
            let mut cand = p;
            for i in 0..4 {
                cand[i] += step[i];
            }
            cand[2] = cand[2].abs().max(1e-6);
            let cand_err = sse(&cand);
            if cand_err < err {
                p = cand;
                err = cand_err;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(p)
}

/// Levenberg-Marquardt for b + A exp(-((x-cx)^2 + (y-cy)^2) / (2 s^2)).
/// Returns [A, cx, cy, s, b] or None on singular normal equations.
fn lma_gaussian_2d(pts: &[(f64, f64, f64)], center_guess: (f64, f64)) -> Option<[f64; 5]> {
    let vmin = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let vmax = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let mut p = [
        (vmax - vmin).max(1e-12),
        center_guess.0,
        center_guess.1,
        1.0,
        vmin,
    ];

    let model = |p: &[f64; 5], x: f64, y: f64| {
        let q = (x - p[1]) * (x - p[1]) + (y - p[2]) * (y - p[2]);
        let e = (-q / (2.0 * p[3] * p[3])).exp();
        let jac = [
            e,
            p[0] * e * (x - p[1]) / (p[3] * p[3]),
            p[0] * e * (y - p[2]) / (p[3] * p[3]),
            p[0] * e * q / (p[3] * p[3] * p[3]),
            1.0,
        ];
        (p[4] + p[0] * e, jac)
    };
    let sse = |p: &[f64; 5]| -> f64 {
        pts.iter()
            .map(|&(x, y, v)| {
                let d = v - model(p, x, y).0;
                d * d
            })
            .sum()
    };

    let mut lambda = 1e-3;
    let mut err = sse(&p);
    for _ in 0..LMA_MAX_ITERS {
        let mut jtj = [[0.0f64; 5]; 5];
        let mut jtr = [0.0f64; 5];
        for &(x, y, v) in pts {
            let (m, jac) = model(&p, x, y);
            let r = v - m;
            for i in 0..5 {
                jtr[i] += jac[i] * r;
                for j in 0..5 {
                    jtj[i][j] += jac[i] * jac[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut a = jtj;
            for i in 0..5 {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let Some(step) = solve_linear(5, a, jtr) else {
                return None;
            };
            let mut cand = p;
            for i in 0..5 {
                cand[i] += step[i];
            }
            cand[3] = cand[3].abs().max(1e-6);
            let cand_err = sse(&cand);
            if cand_err < err {
                p = cand;
                err = cand_err;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(p)
}

/// Gaussian elimination with partial pivoting on the leading n x n block.
fn solve_linear(n: usize, mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 5];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Refinement loop parameters. `step_threshold` is the residual magnitude
/// below which the estimate counts as converged.
#[derive(Clone, Copy, Debug)]
pub struct RefineConfig {
    pub step_threshold: f64,
    pub max_iters: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            step_threshold: 0.001,
            max_iters: 10,
        }
    }
}

/// Iteratively re-correlates one tile at an updated target disparity until
/// the fitted residual falls below threshold. The target is clamped to
/// non-negative disparities. A combined-profile argmax pinned to the +-4
/// window edge means the true residual is outside the capture range; the
/// target steps a whole cell toward it before fitting resumes.
pub fn refine_tile(
    frames: &QuadFrameSet,
    tile_index: (usize, usize),
    initial_target: f64,
    corr: &CorrConfig,
    config: &RefineConfig,
) -> Result<DisparityEstimate, DisparityError> {
    let mut target = initial_target.max(0.0);
    let mut best: Option<DisparityEstimate> = None;

    for iteration in 1..=config.max_iters.max(1) {
        let set = correlate_at(frames, tile_index, target, corr)?;
        if !set.valid() {
            return Ok(DisparityEstimate::invalid(target, iteration));
        }
        let profiles = match combine_directions(&set) {
            Ok(p) => p,
            Err(DisparityError::NoValidDirections) => {
                return Ok(DisparityEstimate::invalid(target, iteration))
            }
            Err(e) => return Err(e),
        };

        let mut peak_bin = 0;
        for b in 1..PROFILE_BINS {
            if profiles.combined[b] > profiles.combined[peak_bin] {
                peak_bin = b;
            }
        }
        if peak_bin == 0 || peak_bin == PROFILE_BINS - 1 {
            target = (target + (peak_bin as f64 - CENTER_BIN as f64)).max(0.0);
            continue;
        }

        let Some((residual, _)) = fit_profile(&profiles.combined, PROFILE_FIT_WINDOW) else {
            return Ok(DisparityEstimate::invalid(target, iteration));
        };
        // Confidence from the sharpest usable surface: whitened correlation
        // peaks near 1 on a perfect match, independent of the projection's
        // amplitude attenuation.
        let strength = profiles
            .peaks
            .iter()
            .zip(&profiles.ambiguous)
            .filter(|&(_, &ambiguous)| !ambiguous)
            .map(|(&p, _)| p)
            .fold(0.0f64, f64::max)
            .clamp(0.0, 1.0);
        let estimate = DisparityEstimate {
            disparity: target + residual,
            residual,
            strength,
            iterations: iteration,
            converged: residual.abs() < config.step_threshold,
        };
        if estimate.converged {
            return Ok(estimate);
        }
        best = Some(estimate);
        target = (target + residual).max(0.0);
    }

    Ok(best.unwrap_or_else(|| DisparityEstimate::invalid(target, config.max_iters.max(1))))
}

/// Refines every tile of the grid from its per-tile initial target.
/// `workers` of 0 uses the ambient thread pool; any other count builds a
/// dedicated pool. Output is identical for any worker count.
pub fn estimate_frame(
    frames: &QuadFrameSet,
    initial_targets: &[f64],
    corr: &CorrConfig,
    config: &RefineConfig,
    workers: usize,
) -> Result<DisparityMap, DisparityError> {
    let grid = frames.tile_grid();
    let expected = grid.0 * grid.1;
    if initial_targets.len() != expected {
        return Err(DisparityError::ShapeMismatch {
            expected,
            got: initial_targets.len(),
        });
    }

    let run = || -> Result<Vec<DisparityEstimate>, DisparityError> {
        (0..expected)
            .into_par_iter()
            .map(|i| {
                let tile_index = (i / grid.1, i % grid.1);
                refine_tile(frames, tile_index, initial_targets[i], corr, config)
            })
            .collect()
    };
    let estimates = if workers == 0 {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(run)?
    };

    Ok(DisparityMap { grid, estimates })
}

/// Network input features for one valid tile: the four correlation
/// surfaces flattened direction-major, row-major within each surface,
/// with the target disparity as the final value.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub tile_index: (usize, usize),
    pub values: Vec<f32>,
    pub gt_disparity: Option<f64>,
}

/// Feature records in row-major tile order plus the indices of invalid
/// tiles that were skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExport {
    pub records: Vec<FeatureRecord>,
    pub skipped: Vec<(usize, usize)>,
}

/// Flattens every valid correlation set into a fixed-length record.
/// `tiles` must hold one set per grid cell in row-major order; ground
/// truth, when supplied, must cover the same grid.
pub fn export_features(
    tiles: &[TileCorrSet],
    grid: (usize, usize),
    gt: Option<&GroundTruth>,
) -> Result<FeatureExport, DisparityError> {
    let expected = grid.0 * grid.1;
    if tiles.len() != expected {
        return Err(DisparityError::ShapeMismatch {
            expected,
            got: tiles.len(),
        });
    }
    if let Some(gt) = gt {
        if (gt.rows, gt.cols) != grid {
            return Err(DisparityError::ShapeMismatch {
                expected,
                got: gt.rows * gt.cols,
            });
        }
    }

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for set in tiles {
        let Some(directions) = set.directions.as_ref() else {
            skipped.push(set.tile_index);
            continue;
        };
        let mut values = Vec::with_capacity(FEATURE_LEN);
        for corr in directions {
            for row in &corr.surface {
                for &v in row {
                    values.push(v as f32);
                }
            }
        }
        values.push(set.target_disparity as f32);
        debug_assert_eq!(values.len(), FEATURE_LEN);
        let (tr, tc) = set.tile_index;
        let gt_disparity = gt.and_then(|g| g.is_valid(tr, tc).then(|| g.at(tr, tc)));
        records.push(FeatureRecord {
            tile_index: set.tile_index,
            values,
            gt_disparity,
        });
    }
    Ok(FeatureExport { records, skipped })
}

/// One point of a disparity bias sweep. Biases are mean signed errors over
/// the tiles valid under both estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub disparity: f64,
    pub refined_bias: f64,
    pub single_pass_bias: f64,
    pub tiles: usize,
}

/// Sweeps true disparity across `range` in `step` increments, rendering a
/// scene per point and estimating every tile from target 0, refined and
/// single-pass. Subpixel interpolation bias shows up as periodic structure
/// in the single-pass curve that refinement removes.
pub fn pixel_locking_sweep<F>(
    mut render: F,
    range: (f64, f64),
    step: f64,
    corr: &CorrConfig,
    config: &RefineConfig,
) -> Result<Vec<SweepPoint>, DisparityError>
where
    F: FnMut(f64) -> Result<QuadFrameSet, SynthError>,
{
    if !(step > 0.0) || range.1 < range.0 {
        return Err(DisparityError::BadSweep);
    }
    let single = RefineConfig {
        max_iters: 1,
        ..*config
    };

    let mut points = Vec::new();
    let count = ((range.1 - range.0) / step).round() as usize;
    for i in 0..=count {
        let d = range.0 + i as f64 * step;
        let frames = render(d)?;
        let grid = frames.tile_grid();
        let targets = vec![0.0; grid.0 * grid.1];
        let refined = estimate_frame(&frames, &targets, corr, config, 0)?;
        let once = estimate_frame(&frames, &targets, corr, &single, 0)?;

        // Interior tiles only: near the frame edge the mirrored apron
        // feeds the cameras reflected content that no longer obeys the
        // scene's disparity, which would bias the mean.
        let mut refined_sum = 0.0;
        let mut single_sum = 0.0;
        let mut tiles = 0usize;
        for tr in 1..grid.0.saturating_sub(1) {
            for tc in 1..grid.1.saturating_sub(1) {
                let a = refined.at(tr, tc);
                let b = once.at(tr, tc);
                if a.is_valid() && b.is_valid() {
                    refined_sum += a.disparity - d;
                    single_sum += b.disparity - d;
                    tiles += 1;
                }
            }
        }
        if tiles == 0 {
            return Err(DisparityError::NoValidDirections);
        }
        points.push(SweepPoint {
            disparity: d,
            refined_bias: refined_sum / tiles as f64,
            single_pass_bias: single_sum / tiles as f64,
            tiles,
        });
    }
    Ok(points)
}
