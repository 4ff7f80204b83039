//! Exact 8-point trigonometric transforms: DCT and DST of types II, III, IV.
//!
//! These are the primitives underneath the lapped tile transform. All public
//! transforms use the orthonormal convention, so every kind preserves the
//! Euclidean norm, [`dct4`]/[`dst4`] are involutions, and [`dct2`]/[`dct3`]
//! (likewise [`dst2`]/[`dst3`]) are mutually inverse pairs.
//!
//! Two paths are provided. The functions in this module are factorized fast
//! paths (recursive even/odd splits plus exact index identities). The
//! [`reference`] submodule contains the O(N^2) definition summations, which
//! are the normative definitions; the fast paths are tested for equivalence
//! against them to 1e-12.

use std::f64::consts::PI;

/// Transform length. Everything in this module is fixed to 8-point.
pub const N: usize = 8;

/// One row or column of samples / coefficients.
pub type Vec8 = [f64; 8];

/// Row-major 8x8 block; first index is the vertical (row) coordinate.
pub type Block8 = [[f64; 8]; 8];

/// Transform kind selector for the generic entry points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    Dct2,
    Dct3,
    Dct4,
    Dst2,
    Dst3,
    Dst4,
}

thread_local! {
    static DTT_2D_SETS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Running count of complete two-dimensional 8x8 transform sets (a row pass
/// plus a column pass over one block) performed by this thread. The
/// tile-transform code increments it so tests can verify the advertised
/// operation counts; thread-local so concurrent work elsewhere cannot skew a
/// measurement. Monotonic, never reset by the library.
pub fn transform_set_count() -> u64 {
    DTT_2D_SETS.with(|c| c.get())
}

pub(crate) fn count_2d_set() {
    DTT_2D_SETS.with(|c| c.set(c.get() + 1));
}

// --- unnormalized building blocks ---

/// Unnormalized DCT-II: out[k] = sum_n x[n] cos(pi (n+1/2) k / len).
/// Recursive even/odd factorization; len must be a power of two <= 8.
pub(crate) fn dct2_raw(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two() && n <= N && out.len() == n);
    if n == 1 {
        out[0] = x[0];
        return;
    }
    let h = n / 2;
    let mut even = [0.0f64; N];
    let mut odd = [0.0f64; N];
    for i in 0..h {
        let a = x[i];
        let b = x[n - 1 - i];
        even[i] = a + b;
        odd[i] = (a - b) * 2.0 * (PI * (i as f64 + 0.5) / n as f64).cos();
    }
    let mut te = [0.0f64; N];
    let mut to = [0.0f64; N];
    dct2_raw(&even[..h], &mut te[..h]);
    dct2_raw(&odd[..h], &mut to[..h]);
    for r in 0..h {
        out[2 * r] = te[r];
    }
    out[1] = to[0] / 2.0;
    for r in 1..h {
        out[2 * r + 1] = to[r] - out[2 * r - 1];
    }
}

/// Exact algebraic inverse of [`dct2_raw`] (same recursion run backwards).
fn idct2_raw(xf: &[f64], out: &mut [f64]) {
    let n = xf.len();
    debug_assert!(n.is_power_of_two() && n <= N && out.len() == n);
    if n == 1 {
        out[0] = xf[0];
        return;
    }
    let h = n / 2;
    let mut e = [0.0f64; N];
    let mut hh = [0.0f64; N];
    for r in 0..h {
        e[r] = xf[2 * r];
    }
    hh[0] = 2.0 * xf[1];
    for r in 1..h {
        hh[r] = xf[2 * r + 1] + xf[2 * r - 1];
    }
    let mut u = [0.0f64; N];
    let mut vt = [0.0f64; N];
    idct2_raw(&e[..h], &mut u[..h]);
    idct2_raw(&hh[..h], &mut vt[..h]);
    for i in 0..h {
        let v = vt[i] / (2.0 * (PI * (i as f64 + 0.5) / n as f64).cos());
        out[i] = (u[i] + v) / 2.0;
        out[n - 1 - i] = (u[i] - v) / 2.0;
    }
}

/// Unnormalized DST-II: out[k] = sum_n x[n] sin(pi (n+1/2) (k+1) / len).
/// Identity: DST-II(x)[k] = DCT-II(alt(x))[len-1-k] with alt(x)[n] = (-1)^n x[n].
pub(crate) fn dst2_raw(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut alt = [0.0f64; N];
    for (i, a) in alt[..n].iter_mut().enumerate() {
        *a = if i % 2 == 0 { x[i] } else { -x[i] };
    }
    let mut tmp = [0.0f64; N];
    dct2_raw(&alt[..n], &mut tmp[..n]);
    for k in 0..n {
        out[k] = tmp[n - 1 - k];
    }
}

/// Unnormalized DCT-IV: out[k] = sum_n x[n] cos(pi (n+1/2)(k+1/2) / len),
/// computed through DCT-II with cosine pre-weighting and an output recurrence.
fn dct4_raw(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut y = [0.0f64; N];
    for i in 0..n {
        y[i] = 2.0 * x[i] * (PI * (i as f64 + 0.5) / (2.0 * n as f64)).cos();
    }
    let mut c = [0.0f64; N];
    dct2_raw(&y[..n], &mut c[..n]);
    out[0] = c[0] / 2.0;
    for k in 1..n {
        out[k] = c[k] - out[k - 1];
    }
}

// --- orthonormal public transforms ---

/// Orthonormal DCT-II. `y[k] = s_k sqrt(2/N) sum_n x[n] cos(pi (n+1/2) k / N)`
/// with `s_0 = 1/sqrt(2)`, `s_k = 1` otherwise. Inverse of [`dct3`].
pub fn dct2(x: &Vec8) -> Vec8 {
    let mut raw = [0.0f64; N];
    dct2_raw(x, &mut raw);
    let mut out = [0.0f64; N];
    out[0] = raw[0] * (1.0 / N as f64).sqrt();
    let s = (2.0 / N as f64).sqrt();
    for k in 1..N {
        out[k] = raw[k] * s;
    }
    out
}

/// Orthonormal DCT-III, the transpose (and inverse) of [`dct2`].
pub fn dct3(x: &Vec8) -> Vec8 {
    // dct3(x) = idct2_raw(w) with w_0 = sqrt(N) x_0, w_k = (N/2) sqrt(2/N) x_k.
    let mut w = [0.0f64; N];
    w[0] = x[0] * (N as f64).sqrt();
    let s = (N as f64 / 2.0) * (2.0 / N as f64).sqrt();
    for k in 1..N {
        w[k] = x[k] * s;
    }
    let mut out = [0.0f64; N];
    idct2_raw(&w, &mut out);
    out
}

/// Orthonormal DCT-IV. Self-inverse (involution).
pub fn dct4(x: &Vec8) -> Vec8 {
    let mut raw = [0.0f64; N];
    dct4_raw(x, &mut raw);
    let s = (2.0 / N as f64).sqrt();
    let mut out = [0.0f64; N];
    for k in 0..N {
        out[k] = raw[k] * s;
    }
    out
}

/// Orthonormal DST-II. `y[k] = t_k sqrt(2/N) sum_n x[n] sin(pi (n+1/2)(k+1) / N)`
/// with `t_{N-1} = 1/sqrt(2)`, `t_k = 1` otherwise. Inverse of [`dst3`].
pub fn dst2(x: &Vec8) -> Vec8 {
    // DST-II(x)[k] = DCT-II(alt(x))[N-1-k]; the orthonormal scales line up
    // because t_k = s_{N-1-k}.
    let mut alt = *x;
    for (i, a) in alt.iter_mut().enumerate() {
        if i % 2 == 1 {
            *a = -*a;
        }
    }
    let c = dct2(&alt);
    let mut out = [0.0f64; N];
    for k in 0..N {
        out[k] = c[N - 1 - k];
    }
    out
}

/// Orthonormal DST-III, the transpose (and inverse) of [`dst2`].
pub fn dst3(x: &Vec8) -> Vec8 {
    let mut rev = *x;
    rev.reverse();
    let mut out = dct3(&rev);
    for (n, o) in out.iter_mut().enumerate() {
        if n % 2 == 1 {
            *o = -*o;
        }
    }
    out
}

/// Orthonormal DST-IV. Self-inverse (involution).
pub fn dst4(x: &Vec8) -> Vec8 {
    // DST-IV(x)[k] = (-1)^k DCT-IV(reverse(x))[k].
    let mut rev = *x;
    rev.reverse();
    let mut out = dct4(&rev);
    for (k, o) in out.iter_mut().enumerate() {
        if k % 2 == 1 {
            *o = -*o;
        }
    }
    out
}

/// Applies the selected transform kind to one vector.
pub fn apply(kind: Transform, x: &Vec8) -> Vec8 {
    match kind {
        Transform::Dct2 => dct2(x),
        Transform::Dct3 => dct3(x),
        Transform::Dct4 => dct4(x),
        Transform::Dst2 => dst2(x),
        Transform::Dst3 => dst3(x),
        Transform::Dst4 => dst4(x),
    }
}

/// Separable 2D transform of a block: `horizontal` along rows, `vertical`
/// along columns. The two passes commute.
pub fn apply_2d(block: &Block8, horizontal: Transform, vertical: Transform) -> Block8 {
    let mut rows = [[0.0f64; N]; N];
    for (r, row) in block.iter().enumerate() {
        rows[r] = apply(horizontal, row);
    }
    let mut out = [[0.0f64; N]; N];
    for c in 0..N {
        let mut col = [0.0f64; N];
        for r in 0..N {
            col[r] = rows[r][c];
        }
        let t = apply(vertical, &col);
        for r in 0..N {
            out[r][c] = t[r];
        }
    }
    out
}

pub mod reference {
    //! O(N^2) definition summations with on-the-fly trigonometry. These are
    //! the normative definitions of the six transforms; every optimized path
    //! must agree with them to 1e-12.

    use super::{Vec8, N};
    use std::f64::consts::PI;

    /// `y[k] = s_k sqrt(2/N) sum_n x[n] cos(pi (n+1/2) k / N)`, `s_0 = 1/sqrt(2)`.
    pub fn dct2_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &v) in x.iter().enumerate() {
                acc += v * (PI * (n as f64 + 0.5) * k as f64 / N as f64).cos();
            }
            let s = if k == 0 { (1.0f64 / 2.0).sqrt() } else { 1.0 };
            *o = acc * s * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// Transpose of [`dct2_naive`].
    pub fn dct3_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (n, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &v) in x.iter().enumerate() {
                let s = if k == 0 { (1.0f64 / 2.0).sqrt() } else { 1.0 };
                acc += v * s * (PI * (n as f64 + 0.5) * k as f64 / N as f64).cos();
            }
            *o = acc * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// `y[k] = sqrt(2/N) sum_n x[n] cos(pi (n+1/2)(k+1/2) / N)`.
    pub fn dct4_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &v) in x.iter().enumerate() {
                acc += v * (PI * (n as f64 + 0.5) * (k as f64 + 0.5) / N as f64).cos();
            }
            *o = acc * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// `y[k] = t_k sqrt(2/N) sum_n x[n] sin(pi (n+1/2)(k+1) / N)`, `t_{N-1} = 1/sqrt(2)`.
    pub fn dst2_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &v) in x.iter().enumerate() {
                acc += v * (PI * (n as f64 + 0.5) * (k as f64 + 1.0) / N as f64).sin();
            }
            let t = if k == N - 1 { (1.0f64 / 2.0).sqrt() } else { 1.0 };
            *o = acc * t * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// Transpose of [`dst2_naive`].
    pub fn dst3_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (n, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &v) in x.iter().enumerate() {
                let t = if k == N - 1 { (1.0f64 / 2.0).sqrt() } else { 1.0 };
                acc += v * t * (PI * (n as f64 + 0.5) * (k as f64 + 1.0) / N as f64).sin();
            }
            *o = acc * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// `y[k] = sqrt(2/N) sum_n x[n] sin(pi (n+1/2)(k+1/2) / N)`.
    pub fn dst4_naive(x: &Vec8) -> Vec8 {
        let mut out = [0.0f64; N];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (n, &v) in x.iter().enumerate() {
                acc += v * (PI * (n as f64 + 0.5) * (k as f64 + 0.5) / N as f64).sin();
            }
            *o = acc * (2.0 / N as f64).sqrt();
        }
        out
    }

    /// Naive counterpart of [`super::apply`].
    pub fn apply_naive(kind: super::Transform, x: &Vec8) -> Vec8 {
        match kind {
            super::Transform::Dct2 => dct2_naive(x),
            super::Transform::Dct3 => dct3_naive(x),
            super::Transform::Dct4 => dct4_naive(x),
            super::Transform::Dst2 => dst2_naive(x),
            super::Transform::Dst3 => dst3_naive(x),
            super::Transform::Dst4 => dst4_naive(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const KINDS: [Transform; 6] = [
        Transform::Dct2,
        Transform::Dct3,
        Transform::Dct4,
        Transform::Dst2,
        Transform::Dst3,
        Transform::Dst4,
    ];

    fn random_vec(rng: &mut StdRng) -> Vec8 {
        let mut v = [0.0f64; N];
        for x in &mut v {
            *x = rng.random_range(-1.0..1.0);
        }
        v
    }

    fn max_abs_diff(a: &Vec8, b: &Vec8) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn impulse_response_of_dct4_matches_definition() {
        let mut x = [0.0f64; N];
        x[0] = 1.0;
        let y = dct4(&x);
        for (k, &v) in y.iter().enumerate() {
            let expect =
                (2.0f64 / N as f64).sqrt() * (std::f64::consts::PI * (k as f64 + 0.5) / 16.0).cos();
            assert!(
                (v - expect).abs() < 1e-14,
                "k={k}: got {v}, expected {expect}"
            );
        }
    }

    #[test]
    fn dct2_of_constant_is_pure_dc() {
        let x = [1.0f64; N];
        let y = dct2(&x);
        assert!((y[0] - (N as f64).sqrt()).abs() < 1e-13);
        for &v in &y[1..] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn fast_paths_match_naive_summation() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        for _ in 0..200 {
            let x = random_vec(&mut rng);
            for kind in KINDS {
                let fast = apply(kind, &x);
                let naive = reference::apply_naive(kind, &x);
                assert!(
                    max_abs_diff(&fast, &naive) < 1e-12,
                    "{kind:?} disagrees with definition summation"
                );
            }
        }
    }

    #[test]
    fn type_iv_transforms_are_involutions() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0002);
        for _ in 0..50 {
            let x = random_vec(&mut rng);
            assert!(max_abs_diff(&dct4(&dct4(&x)), &x) < 1e-12);
            assert!(max_abs_diff(&dst4(&dst4(&x)), &x) < 1e-12);
        }
    }

    #[test]
    fn type_ii_and_iii_are_inverse_pairs() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0003);
        for _ in 0..50 {
            let x = random_vec(&mut rng);
            assert!(max_abs_diff(&dct3(&dct2(&x)), &x) < 1e-12);
            assert!(max_abs_diff(&dct2(&dct3(&x)), &x) < 1e-12);
            assert!(max_abs_diff(&dst3(&dst2(&x)), &x) < 1e-12);
            assert!(max_abs_diff(&dst2(&dst3(&x)), &x) < 1e-12);
        }
    }

    #[test]
    fn all_kinds_preserve_norm() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0004);
        for _ in 0..50 {
            let x = random_vec(&mut rng);
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for kind in KINDS {
                let y = apply(kind, &x);
                let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((nx - ny).abs() < 1e-12, "{kind:?} changed the norm");
            }
        }
    }

    #[test]
    fn two_dimensional_passes_commute() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0005);
        let mut block = [[0.0f64; N]; N];
        for row in &mut block {
            *row = random_vec(&mut rng);
        }
        // Columns first, then rows, must equal the row-first implementation.
        let ab = apply_2d(&block, Transform::Dct4, Transform::Dst4);
        let mut cols = [[0.0f64; N]; N];
        for c in 0..N {
            let mut col = [0.0f64; N];
            for r in 0..N {
                col[r] = block[r][c];
            }
            let t = apply(Transform::Dst4, &col);
            for r in 0..N {
                cols[r][c] = t[r];
            }
        }
        let mut ba = [[0.0f64; N]; N];
        for (r, row) in cols.iter().enumerate() {
            ba[r] = apply(Transform::Dct4, row);
        }
        for r in 0..N {
            assert!(max_abs_diff(&ab[r], &ba[r]) < 1e-12);
        }
    }
}
