//! Seeded synthetic scenes for tests, examples and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::frame::{Frame, FrameSequence};

/// Independent uniform RGB noise in `[0, 1]`.
pub fn noise_frame(width: usize, height: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::from_fn(width, height, |_, _| {
        [rng.random(), rng.random(), rng.random()]
    })
    .expect("valid noise frame")
}

/// Noise squeezed into `[lo, hi]`, leaving headroom for brightness jitter.
pub fn texture_frame(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> Frame {
    let noise = noise_frame(width, height, seed);
    let data = noise.data().iter().map(|v| lo + (hi - lo) * v).collect();
    Frame::new(width, height, data).expect("valid texture")
}

/// Smooth value noise: a coarse random lattice with `cell`-pixel spacing,
/// bilinearly interpolated, plus a little fine grain so patches stay
/// distinguishable.
pub fn smooth_frame(width: usize, height: usize, cell: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let lattice: Vec<[f64; 3]> = (0..gw * gh)
        .map(|_| [rng.random(), rng.random(), rng.random()])
        .collect();
    let grain = noise_frame(width, height, seed ^ 0x5eed);
    Frame::from_fn(width, height, |x, y| {
        let fx = x as f64 / cell as f64;
        let fy = y as f64 / cell as f64;
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| lattice[j * gw + i];
        let g = grain.pixel(x, y);
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = at(ix, iy)[k] * (1.0 - tx) + at(ix + 1, iy)[k] * tx;
            let bottom = at(ix, iy + 1)[k] * (1.0 - tx) + at(ix + 1, iy + 1)[k] * tx;
            out[k] = 0.9 * (top * (1.0 - ty) + bottom * ty) + 0.1 * g[k];
        }
        out
    })
    .expect("valid smooth frame")
}

/// Cyclic translation: the result at `(x, y)` is `frame` at
/// `(x - dx, y - dy)` modulo the frame size.
pub fn shifted(frame: &Frame, dx: isize, dy: isize) -> Frame {
    let (w, h) = (frame.width() as isize, frame.height() as isize);
    Frame::from_fn(frame.width(), frame.height(), |x, y| {
        let sx = (x as isize - dx).rem_euclid(w) as usize;
        let sy = (y as isize - dy).rem_euclid(h) as usize;
        frame.pixel(sx, sy)
    })
    .expect("valid shifted frame")
}

/// `scene + offsets[i]` for each frame, clamped to `[0, 1]`.
pub fn with_offsets(scene: &Frame, offsets: &[f64]) -> FrameSequence {
    let frames = offsets
        .iter()
        .map(|o| {
            let data = scene.data().iter().map(|v| (v + o).clamp(0.0, 1.0)).collect();
            Frame::new(scene.width(), scene.height(), data).expect("valid frame")
        })
        .collect();
    FrameSequence::new(frames).expect("non-empty offsets")
}

/// Seeded per-frame brightness offsets drawn from `N(0, sigma^2)`.
pub fn jitter_offsets(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma >= 0");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// A static scene with per-frame brightness flicker, plus the clean static
/// guide sequence it was derived from.
pub struct JitterFixture {
    pub guides: FrameSequence,
    pub synth: FrameSequence,
}

pub fn static_jitter(width: usize, height: usize, n: usize, sigma: f64, seed: u64) -> JitterFixture {
    let scene = texture_frame(width, height, 0.25, 0.75, seed);
    let guides = FrameSequence::new(vec![scene.clone(); n]).expect("n >= 1");
    let synth = with_offsets(&scene, &jitter_offsets(n, sigma, seed.wrapping_add(1)));
    JitterFixture { guides, synth }
}
