//! Shared helpers for unit and integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::optim::WarpParams;
use crate::raster::{Image, Patch};
use crate::tracker::TrackBox;

/// Smooth low-frequency random field: a handful of long-wavelength plane
/// waves around mid-gray. The bilinear surface of such an image follows the
/// analytic surface closely, which keeps finite-difference oracles tight.
pub fn smooth_image(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = Vec::new();
    for _ in 0..4 {
        let omega = rng.random_range(0.01..0.04);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(0.05..0.12);
        waves.push((omega, theta.cos(), theta.sin(), phase, amp));
    }
    Image::from_fn(w, h, |x, y| {
        let mut v = 0.5;
        for &(omega, cx, cy, phase, amp) in &waves {
            v += amp * (omega * (cx * x as f64 + cy * y as f64) + phase).sin();
        }
        v
    })
}

/// Field family for the cost-gradient finite-difference oracle: very low
/// frequencies over a large window keep the mismatch between central
/// differences and the bilinear surface's exact in-cell slopes well under
/// the 1e-3 tolerance, while several wave directions keep the 2x2 geometry
/// non-degenerate. Returns the image and the box the oracle samples.
pub fn oracle_field(seed: u64) -> (Image, TrackBox) {
    let patch = 320usize;
    let margin = 8usize;
    let size = patch + 2 * margin;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = Vec::new();
    for _ in 0..6 {
        let omega = rng.random_range(0.010..0.020);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(0.04..0.08);
        waves.push((omega, theta.cos(), theta.sin(), phase, amp));
    }
    let img = Image::from_fn(size, size, |x, y| {
        let mut v = 0.5;
        for &(omega, cx, cy, phase, amp) in &waves {
            v += amp * (omega * (cx * x as f64 + cy * y as f64) + phase).sin();
        }
        v
    });
    let bbox = TrackBox::new(margin as i32, margin as i32, patch as i32, patch as i32);
    (img, bbox)
}

/// Fractional displacement for the oracle: maximally distant from the
/// bilinear kinks at integer coordinates.
pub fn oracle_offset(seed: u64) -> WarpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD_1234);
    WarpParams {
        tx: rng.random_range(0.45..0.55),
        ty: rng.random_range(0.45..0.55),
    }
}

/// Textured random field with energy across several scales; every window of
/// a dozen pixels carries usable gradients in both axes.
pub fn textured_image(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = Vec::new();
    for _ in 0..8 {
        let omega = rng.random_range(0.15..0.8);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(0.02..0.06);
        waves.push((omega, theta.cos(), theta.sin(), phase, amp));
    }
    Image::from_fn(w, h, |x, y| {
        let mut v = 0.5;
        for &(omega, cx, cy, phase, amp) in &waves {
            v += amp * (omega * (cx * x as f64 + cy * y as f64) + phase).sin();
        }
        v
    })
}

/// Bright square on a dark background.
pub fn square_image(w: usize, h: usize, ox: usize, oy: usize, side: usize) -> Image {
    Image::from_fn(w, h, |x, y| {
        if x >= ox && x < ox + side && y >= oy && y < oy + side {
            1.0
        } else {
            0.0
        }
    })
}

/// SSD between the template and the frame window warped by `p`.
pub fn ssd_cost(img: &Image, bbox: &TrackBox, template: &Patch, p: WarpParams) -> f64 {
    let warped = img.extract_warped_patch(bbox, p);
    template
        .values
        .iter()
        .zip(&warped.values)
        .map(|(t, w)| (w - t) * (w - t))
        .sum()
}

/// Exhaustive integer-displacement SSD search over `[-radius, radius]^2`.
pub fn brute_force_shift(
    template: &Patch,
    frame: &Image,
    bbox: &TrackBox,
    radius: i32,
) -> (i32, i32) {
    let mut best = (0, 0);
    let mut best_cost = f64::INFINITY;
    for sy in -radius..=radius {
        for sx in -radius..=radius {
            let p = WarpParams {
                tx: sx as f64,
                ty: sy as f64,
            };
            let cost = ssd_cost(frame, bbox, template, p);
            if cost < best_cost {
                best_cost = cost;
                best = (sx, sy);
            }
        }
    }
    best
}
