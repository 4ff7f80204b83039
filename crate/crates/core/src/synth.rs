//! Synthetic quad-camera ground truth: renders Bayer frame sets of textured
//! scenes at known disparity, with optional sensor noise and per-camera
//! Gaussian blur.
//!
//! Textures are finite sums of band-limited cosine components, so the world
//! is a closed-form function of continuous coordinates: every camera sample,
//! fractional shift, and blur is evaluated exactly rather than through a
//! resampling filter. Camera i observes `V(u + d * position_i)`, matching
//! the patch-offset convention `offset_i = -d * position_i`.

use crate::geometry::{CameraGeometry, SQUARE_POSITIONS};
use crate::mclt::{BayerPhase, Tile16, STRIDE, TILE};
use crate::pipeline::{BayerImage, QuadFrameSet};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("disparity {0} is negative")]
    NegativeDisparity(f64),
    #[error("cutoff {0} outside (0, 1]")]
    BadCutoff(f64),
    #[error("contrast {0} outside (0, 1]")]
    BadContrast(f64),
    #[error("texture needs at least one component")]
    NoComponents,
    #[error("noise sigma {0} is negative")]
    BadNoise(f64),
    #[error("blur sigma {0} is negative")]
    BadBlur(f64),
    #[error("image size {0}x{1} not divisible by the tile stride")]
    BadSize(usize, usize),
    #[error("geometry image size {0:?} does not match render size {1:?}")]
    GeometryMismatch((usize, usize), (usize, usize)),
    #[error("slanted plane reaches negative disparity {0} inside the frame")]
    SlantGoesNegative(f64),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
}

/// Axis a linear feature runs along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Scene layout and its disparity parameters, pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneKind {
    /// Constant disparity everywhere.
    FrontoPlane { disparity: f64 },
    /// Disparity linear in image position: value at the image center plus
    /// `slope` (px per px, x then y) times the centered coordinates.
    SlantedPlane { disparity: f64, slope: [f64; 2] },
    /// Step edge through the image center. The foreground (nearer, larger
    /// disparity) side is left of a vertical edge, above a horizontal one;
    /// the foreground paints over the background.
    TwoDepthEdge {
        orientation: Orientation,
        d_fg: f64,
        d_bg: f64,
    },
    /// Fronto-parallel plane textured with 1D stripes running along
    /// `orientation`, so only the perpendicular axis carries information.
    BarTarget {
        orientation: Orientation,
        disparity: f64,
    },
}

fn default_cutoff() -> f64 {
    0.5
}

fn default_components() -> usize {
    96
}

fn default_contrast() -> f64 {
    0.8
}

/// Band-limited random texture parameters. `cutoff` is the top spatial
/// frequency as a fraction of Nyquist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub seed: u64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        TextureSpec {
            seed: 1,
            cutoff: default_cutoff(),
            components: default_components(),
            contrast: default_contrast(),
        }
    }
}

/// Full scene description: layout, texture, and photometrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    #[serde(default)]
    pub texture: TextureSpec,
    /// Gaussian sensor noise, fraction of full scale.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Per-camera Gaussian blur sigma, pixels.
    #[serde(default)]
    pub blur_sigma: [f64; 4],
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let t = &self.texture;
        if !(t.cutoff > 0.0 && t.cutoff <= 1.0) {
            return Err(SynthError::BadCutoff(t.cutoff));
        }
        if !(t.contrast > 0.0 && t.contrast <= 1.0) {
            return Err(SynthError::BadContrast(t.contrast));
        }
        if t.components == 0 {
            return Err(SynthError::NoComponents);
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(SynthError::BadNoise(self.noise_sigma));
        }
        for &b in &self.blur_sigma {
            if !(b >= 0.0) {
                return Err(SynthError::BadBlur(b));
            }
        }
        let check = |d: f64| {
            if d >= 0.0 {
                Ok(())
            } else {
                Err(SynthError::NegativeDisparity(d))
            }
        };
        match self.kind {
            SceneKind::FrontoPlane { disparity } => check(disparity),
            SceneKind::SlantedPlane { disparity, .. } => check(disparity),
            SceneKind::TwoDepthEdge { d_fg, d_bg, .. } => check(d_fg).and(check(d_bg)),
            SceneKind::BarTarget { disparity, .. } => check(disparity),
        }
    }
}

/// One cosine component: amplitude, frequency (cycles per pixel), phase.
#[derive(Clone, Copy, Debug)]
struct Component {
    amp: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

/// Analytic band-limited world texture, mid-gray plus a cosine sum.
#[derive(Clone, Debug)]
pub struct Texture {
    components: Vec<Component>,
    offset: f64,
}

/// Lowest component frequency, cycles per pixel: keeps every component
/// visible within a single 16-pixel tile.
const MIN_FREQUENCY: f64 = 0.04;

impl Texture {
    /// Isotropic texture: component directions uniform, radii uniform in
    /// [MIN_FREQUENCY, cutoff * Nyquist], amplitudes normalized so values
    /// stay within `contrast` around mid-gray.
    pub fn band_limited(spec: &TextureSpec) -> Texture {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let top = (spec.cutoff * 0.5).max(MIN_FREQUENCY * 1.5);
        let mut components = Vec::with_capacity(spec.components);
        for _ in 0..spec.components {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let radius = rng.random_range(MIN_FREQUENCY..top);
            components.push(Component {
                amp: rng.random_range(0.5..1.0),
                fx: radius * angle.cos(),
                fy: radius * angle.sin(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            });
        }
        Texture::normalized(components, spec.contrast)
    }

    /// Stripes running along `orientation`: 1D components perpendicular
    /// to it, same band limits as [`Texture::band_limited`].
    pub fn bars(spec: &TextureSpec, orientation: Orientation) -> Texture {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let top = (spec.cutoff * 0.5).max(MIN_FREQUENCY * 1.5);
        let mut components = Vec::with_capacity(spec.components);
        for _ in 0..spec.components {
            let radius = rng.random_range(MIN_FREQUENCY..top);
            let (fx, fy) = match orientation {
                // Horizontal stripes vary along y only.
                Orientation::Horizontal => (0.0, radius),
                Orientation::Vertical => (radius, 0.0),
            };
            components.push(Component {
                amp: rng.random_range(0.5..1.0),
                fx,
                fy,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            });
        }
        Texture::normalized(components, spec.contrast)
    }

    fn normalized(mut components: Vec<Component>, contrast: f64) -> Texture {
        let total: f64 = components.iter().map(|c| c.amp).sum();
        let scale = 0.5 * contrast / total;
        for c in components.iter_mut() {
            c.amp *= scale;
        }
        Texture {
            components,
            offset: 0.5,
        }
    }

    /// Texture value at continuous coordinates.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.value_blurred(x, y, 0.0)
    }

    /// Texture convolved with an isotropic Gaussian of `sigma` pixels,
    /// evaluated exactly through each component's transfer factor.
    pub fn value_blurred(&self, x: f64, y: f64, sigma: f64) -> f64 {
        let two_pi = std::f64::consts::TAU;
        let mtf_scale = -2.0 * std::f64::consts::PI.powi(2) * sigma * sigma;
        let mut v = self.offset;
        for c in &self.components {
            let mtf = if sigma > 0.0 {
                (mtf_scale * (c.fx * c.fx + c.fy * c.fy)).exp()
            } else {
                1.0
            };
            v += c.amp * mtf * (two_pi * (c.fx * x + c.fy * y) + c.phase).cos();
        }
        v
    }
}

/// Samples a 16x16 tile whose content is the texture displaced by `delta`:
/// output pixel (r, c) reads the texture at `origin + (c, r) - delta`.
/// Analytic evaluation makes this exact for any displacement.
pub fn shift_reference(texture: &Texture, origin: (f64, f64), delta: (f64, f64)) -> Tile16 {
    let mut tile = [[0.0f64; TILE]; TILE];
    for (r, row) in tile.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = texture.value(
                origin.0 + c as f64 - delta.0,
                origin.1 + r as f64 - delta.1,
            );
        }
    }
    tile
}

/// Per-tile true disparity over the rendered grid. `lo`/`hi` carry the
/// extreme disparities inside each tile's 16x16 support; tiles whose support
/// mixes depths (hi - lo above a hundredth of a pixel) are flagged invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub rows: usize,
    pub cols: usize,
    pub disparity: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GroundTruth {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.disparity[row * self.cols + col]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.cols + col]
    }
}

/// Scene model: the world texture plus the disparity field.
struct Scene {
    texture: Texture,
    kind: SceneKind,
    center: (f64, f64),
}

impl Scene {
    fn build(spec: &SceneSpec, size: (usize, usize)) -> Result<Scene, SynthError> {
        let texture = match spec.kind {
            SceneKind::BarTarget { orientation, .. } => Texture::bars(&spec.texture, orientation),
            _ => Texture::band_limited(&spec.texture),
        };
        let center = (size.0 as f64 / 2.0, size.1 as f64 / 2.0);
        if let SceneKind::SlantedPlane { disparity, slope } = spec.kind {
            // Worst corner of the frame must stay non-negative.
            let reach = slope[0].abs() * center.0 + slope[1].abs() * center.1;
            if disparity - reach < 0.0 {
                return Err(SynthError::SlantGoesNegative(disparity - reach));
            }
        }
        Ok(Scene {
            texture,
            kind: spec.kind.clone(),
            center,
        })
    }

    /// True disparity at world position (x, y).
    fn disparity(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            SceneKind::FrontoPlane { disparity } => disparity,
            SceneKind::BarTarget { disparity, .. } => disparity,
            SceneKind::SlantedPlane { disparity, slope } => {
                disparity + slope[0] * (x - self.center.0) + slope[1] * (y - self.center.1)
            }
            SceneKind::TwoDepthEdge {
                orientation,
                d_fg,
                d_bg,
            } => {
                let fg = match orientation {
                    Orientation::Vertical => x < self.center.0,
                    Orientation::Horizontal => y < self.center.1,
                };
                if fg {
                    d_fg
                } else {
                    d_bg
                }
            }
        }
    }

    /// Camera sample at pixel u: the world point seen there, foreground
    /// painting over background at depth edges.
    fn sample(&self, ux: f64, uy: f64, position: [f64; 2], sigma: f64) -> f64 {
        match self.kind {
            SceneKind::FrontoPlane { disparity } | SceneKind::BarTarget { disparity, .. } => self
                .texture
                .value_blurred(ux + disparity * position[0], uy + disparity * position[1], sigma),
            SceneKind::SlantedPlane { .. } => {
                // World point v satisfies v = u + d(v) * position; the slope
                // is tiny so fixed-point iteration converges fast.
                let (mut vx, mut vy) = (ux, uy);
                for _ in 0..8 {
                    let d = self.disparity(vx, vy).max(0.0);
                    vx = ux + d * position[0];
                    vy = uy + d * position[1];
                }
                self.texture.value_blurred(vx, vy, sigma)
            }
            SceneKind::TwoDepthEdge {
                orientation,
                d_fg,
                d_bg,
            } => {
                let (fx, fy) = (ux + d_fg * position[0], uy + d_fg * position[1]);
                let fg_visible = match orientation {
                    Orientation::Vertical => fx < self.center.0,
                    Orientation::Horizontal => fy < self.center.1,
                };
                if fg_visible {
                    self.texture.value_blurred(fx, fy, sigma)
                } else {
                    self.texture.value_blurred(
                        ux + d_bg * position[0],
                        uy + d_bg * position[1],
                        sigma,
                    )
                }
            }
        }
    }
}

/// Distinct noise stream per camera, derived from the scene seed.
fn camera_rng(seed: u64, cam: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(cam as u64 + 1)))
}

/// Renders the four Bayer frames and the per-tile ground truth for `spec`.
/// The world is gray (equal color planes), sampled at integer pixel centers;
/// rendering is bit-reproducible for a fixed spec.
pub fn render(
    spec: &SceneSpec,
    geom: &CameraGeometry,
    size: (usize, usize),
) -> Result<(QuadFrameSet, GroundTruth), SynthError> {
    spec.validate()?;
    let (width, height) = size;
    if width % STRIDE != 0 || height % STRIDE != 0 || width == 0 || height == 0 {
        return Err(SynthError::BadSize(width, height));
    }
    if geom.image_size != size {
        return Err(SynthError::GeometryMismatch(geom.image_size, size));
    }
    let scene = Scene::build(spec, size)?;
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut images = Vec::with_capacity(4);
    for (cam, position) in SQUARE_POSITIONS.iter().enumerate() {
        let mut rng = camera_rng(spec.texture.seed, cam);
        let mut values = vec![0.0f64; width * height];
        for r in 0..height {
            for c in 0..width {
                let mut v = scene.sample(c as f64, r as f64, *position, spec.blur_sigma[cam]);
                if let Some(n) = &noise {
                    v += n.sample(&mut rng);
                }
                values[r * width + c] = v;
            }
        }
        images.push(BayerImage::from_float(
            width,
            height,
            BayerPhase::Rggb,
            &values,
        )?);
    }
    let images: [BayerImage; 4] = images.try_into().expect("four cameras");
    let frames = QuadFrameSet::with_identity_kernels(images, geom.clone())?;

    let (rows, cols) = (height / STRIDE, width / STRIDE);
    let mut gt = GroundTruth {
        rows,
        cols,
        disparity: Vec::with_capacity(rows * cols),
        lo: Vec::with_capacity(rows * cols),
        hi: Vec::with_capacity(rows * cols),
        valid: Vec::with_capacity(rows * cols),
    };
    for tr in 0..rows {
        for tc in 0..cols {
            let origin = (
                (STRIDE * tc) as f64 - (TILE / 4) as f64,
                (STRIDE * tr) as f64 - (TILE / 4) as f64,
            );
            let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
            for dr in 0..TILE {
                for dc in 0..TILE {
                    let d = scene.disparity(origin.0 + dc as f64, origin.1 + dr as f64);
                    sum += d;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            gt.disparity.push(sum / (TILE * TILE) as f64);
            gt.lo.push(lo);
            gt.hi.push(hi);
            gt.valid.push(hi - lo < 0.01);
        }
    }
    Ok((frames, gt))
}
