//! Nearest-neighbor fields between guide frames and the remap operator.
//!
//! Patches are square, `patch_size` pixels wide, and are only ever placed
//! where they fit entirely inside the frame, so a frame of width `W` has
//! `W - patch_size + 1` valid patch centers per row. Every target pixel is
//! governed by the valid patch center nearest to it (its own position,
//! clamped). The field stores one source patch center per valid target
//! center together with the sum of squared RGB differences between the two
//! patches.
//!
//! Remapping is dense patch voting: each target patch pastes the whole
//! matched source patch, and every pixel takes the uniform mean of the
//! votes it received. The vote count at a pixel only depends on the frame
//! geometry, which makes remapping linear in the payload.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, PixelAccumulator, CHANNELS};

/// PatchMatch parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchConfig {
    /// Odd patch width in pixels, at least 3.
    pub patch_size: usize,
    /// Number of propagation + random-search rounds.
    pub iterations: usize,
    /// First random-search radius; `None` means the larger frame dimension.
    pub search_radius: Option<usize>,
    /// Multiplicative radius shrink per random-search sample, in (0, 1).
    pub radius_decay: f64,
    pub seed: u64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_size: 7,
            iterations: 6,
            search_radius: None,
            radius_decay: 0.5,
            seed: 0,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 || self.patch_size % 2 == 0 {
            return Err(Error::Config(format!(
                "patch_size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.search_radius == Some(0) {
            return Err(Error::Config("search_radius must be >= 1".into()));
        }
        if !(self.radius_decay > 0.0 && self.radius_decay < 1.0) {
            return Err(Error::Config(format!(
                "radius_decay must be in (0, 1), got {}",
                self.radius_decay
            )));
        }
        Ok(())
    }

    #[inline]
    fn half(&self) -> usize {
        self.patch_size / 2
    }
}

/// Correspondence of one target pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnfEntry {
    /// Source pixel corresponding to the target pixel under the governing
    /// patch match.
    pub sx: usize,
    pub sy: usize,
    /// SSD of the governing patch pair.
    pub cost: f64,
}

/// A nearest-neighbor field from a source frame onto a target frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Nnf {
    width: usize,
    height: usize,
    patch_size: usize,
    grid_w: usize,
    grid_h: usize,
    /// Source patch center for each valid target center, row-major over
    /// the center grid.
    sources: Vec<(u32, u32)>,
    costs: Vec<f64>,
}

impl Nnf {
    fn check_geometry(width: usize, height: usize, patch_size: usize) -> Result<()> {
        if width < patch_size || height < patch_size {
            return Err(Error::Shape(format!(
                "frame {width}x{height} is smaller than the {patch_size}px patch"
            )));
        }
        Ok(())
    }

    /// The identity field. Costs are left at zero, not measured.
    pub fn identity(width: usize, height: usize, patch_size: usize) -> Result<Self> {
        Self::check_geometry(width, height, patch_size)?;
        let h = patch_size / 2;
        let grid_w = width - 2 * h;
        let grid_h = height - 2 * h;
        let sources = (0..grid_h)
            .flat_map(|gy| (0..grid_w).map(move |gx| ((gx + h) as u32, (gy + h) as u32)))
            .collect();
        Ok(Self {
            width,
            height,
            patch_size,
            grid_w,
            grid_h,
            sources,
            costs: vec![0.0; grid_w * grid_h],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    #[inline]
    fn half(&self) -> usize {
        self.patch_size / 2
    }

    /// Valid patch-center range `[lo, hi]` along x and y.
    fn center_bounds(&self) -> ((usize, usize), (usize, usize)) {
        let h = self.half();
        ((h, self.width - 1 - h), (h, self.height - 1 - h))
    }

    /// Target patch center governing pixel `(x, y)`.
    #[inline]
    pub fn governing_center(&self, x: usize, y: usize) -> (usize, usize) {
        let ((x0, x1), (y0, y1)) = self.center_bounds();
        (x.clamp(x0, x1), y.clamp(y0, y1))
    }

    #[inline]
    fn cell(&self, cx: usize, cy: usize) -> usize {
        let h = self.half();
        (cy - h) * self.grid_w + (cx - h)
    }

    /// Matched source patch center and cost for the target patch centered
    /// at `(cx, cy)`, which must be a valid center.
    pub fn center_match(&self, cx: usize, cy: usize) -> (usize, usize, f64) {
        let c = self.cell(cx, cy);
        let (sx, sy) = self.sources[c];
        (sx as usize, sy as usize, self.costs[c])
    }

    /// Correspondence of target pixel `(x, y)`.
    pub fn entry(&self, x: usize, y: usize) -> NnfEntry {
        let (cx, cy) = self.governing_center(x, y);
        let (sx, sy, cost) = self.center_match(cx, cy);
        NnfEntry {
            sx: sx + x - cx,
            sy: sy + y - cy,
            cost,
        }
    }

    /// True when every source patch lies inside the source frame.
    pub fn is_valid(&self) -> bool {
        let ((x0, x1), (y0, y1)) = self.center_bounds();
        self.sources.iter().all(|&(sx, sy)| {
            (x0..=x1).contains(&(sx as usize)) && (y0..=y1).contains(&(sy as usize))
        }) && self.costs.iter().all(|&c| c >= 0.0 && c.is_finite())
    }

    pub fn is_identity(&self) -> bool {
        let h = self.half();
        self.sources.iter().enumerate().all(|(i, &(sx, sy))| {
            sx as usize == i % self.grid_w + h && sy as usize == i / self.grid_w + h
        })
    }

    /// Sum of stored costs over all target pixels, row-major.
    pub fn total_cost(&self) -> f64 {
        let mut total = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                total += self.entry(x, y).cost;
            }
        }
        total
    }

    /// Writes the text dump: `NNF <w> <h>` followed by one
    /// `x y sx sy cost` line per target pixel in row-major order.
    pub fn write_dump(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "NNF {} {}", self.width, self.height)?;
        for y in 0..self.height {
            for x in 0..self.width {
                let e = self.entry(x, y);
                writeln!(out, "{x} {y} {} {} {}", e.sx, e.sy, e.cost)?;
            }
        }
        Ok(())
    }

    /// Remaps `payload` from the source frame onto the target frame.
    pub fn remap<P: Remappable>(&self, payload: &P) -> Result<P> {
        payload.remap_with(self)
    }

    fn remap_buffer(&self, payload: &[f64]) -> Vec<f64> {
        // every vote for a pixel would carry that pixel's own value
        if self.is_identity() {
            return payload.to_vec();
        }
        let (w, h) = (self.width, self.height);
        let half = self.half();
        let span = self.patch_size * CHANNELS;
        let mut out = vec![0.0; payload.len()];
        for gy in 0..self.grid_h {
            for gx in 0..self.grid_w {
                let (sx, sy) = self.sources[gy * self.grid_w + gx];
                let (sx, sy) = (sx as usize - half, sy as usize - half);
                // the target patch top-left is (gx, gy)
                for dy in 0..self.patch_size {
                    let src = ((sy + dy) * w + sx) * CHANNELS;
                    let dst = ((gy + dy) * w + gx) * CHANNELS;
                    for (o, p) in out[dst..dst + span].iter_mut().zip(&payload[src..src + span]) {
                        *o += p;
                    }
                }
            }
        }
        let votes_x = vote_counts(w, self.patch_size);
        let votes_y = vote_counts(h, self.patch_size);
        for y in 0..h {
            for x in 0..w {
                let n = f64::from(votes_x[x] * votes_y[y]);
                let i = (y * w + x) * CHANNELS;
                for v in &mut out[i..i + CHANNELS] {
                    *v /= n;
                }
            }
        }
        out
    }
}

/// Number of valid patch positions along one axis that cover each pixel.
fn vote_counts(len: usize, patch: usize) -> Vec<u32> {
    let h = patch / 2;
    (0..len)
        .map(|x| {
            let lo = x.saturating_sub(h).max(h);
            let hi = (x + h).min(len - 1 - h);
            (hi + 1 - lo) as u32
        })
        .collect()
}

/// Payloads the remap operator can be applied to.
pub trait Remappable: Sized {
    fn remap_with(&self, nnf: &Nnf) -> Result<Self>;
}

impl Remappable for Frame {
    fn remap_with(&self, nnf: &Nnf) -> Result<Self> {
        if self.dims() != (nnf.width, nnf.height) {
            return Err(Error::Shape(format!(
                "payload {}x{} does not match field {}x{}",
                self.width(),
                self.height(),
                nnf.width,
                nnf.height
            )));
        }
        Frame::unbounded(self.width(), self.height(), nnf.remap_buffer(self.data()))
    }
}

impl Remappable for PixelAccumulator {
    fn remap_with(&self, nnf: &Nnf) -> Result<Self> {
        let (w, h) = self.dims();
        if (w, h) != (nnf.width, nnf.height) {
            return Err(Error::Shape(format!(
                "payload {w}x{h} does not match field {}x{}",
                nnf.width, nnf.height
            )));
        }
        Ok(PixelAccumulator::from_parts(
            w,
            h,
            nnf.remap_buffer(self.sum()),
            nnf.remap_buffer(self.compensation()),
            self.count(),
        ))
    }
}

/// SSD between the target patch centered at `t` and the source patch
/// centered at `s`. Stops early once the partial sum reaches `bound`; the
/// returned value is then `>= bound` but not the full distance.
#[inline]
fn patch_ssd(
    source: &Frame,
    target: &Frame,
    half: usize,
    t: (usize, usize),
    s: (usize, usize),
    bound: f64,
) -> f64 {
    let w = source.width();
    let span = (2 * half + 1) * CHANNELS;
    let (src, tgt) = (source.data(), target.data());
    let mut sum = 0.0;
    for dy in 0..=2 * half {
        let ti = ((t.1 + dy - half) * w + t.0 - half) * CHANNELS;
        let si = ((s.1 + dy - half) * w + s.0 - half) * CHANNELS;
        for (a, b) in tgt[ti..ti + span].iter().zip(&src[si..si + span]) {
            let d = a - b;
            sum += d * d;
        }
        if sum >= bound {
            return sum;
        }
    }
    sum
}

fn check_pair(source: &Frame, target: &Frame, cfg: &PatchConfig) -> Result<()> {
    cfg.validate()?;
    if source.dims() != target.dims() {
        return Err(Error::Shape(format!(
            "guide frames differ in size: {}x{} vs {}x{}",
            source.width(),
            source.height(),
            target.width(),
            target.height()
        )));
    }
    Nnf::check_geometry(source.width(), source.height(), cfg.patch_size)
}

/// Incremental PatchMatch from `source` onto `target`.
///
/// Starts from the identity field; each call to [`iterate`](Self::iterate)
/// runs one propagation sweep (alternating scan direction) with random
/// search. Candidates only replace the incumbent on strictly smaller cost.
pub struct PatchMatcher<'a> {
    source: &'a Frame,
    target: &'a Frame,
    cfg: PatchConfig,
    nnf: Nnf,
    iteration: usize,
    rng: ChaCha8Rng,
}

/// Words of the random stream reserved for each patch per iteration.
const WORDS_PER_CELL: u128 = 1 << 20;

impl<'a> PatchMatcher<'a> {
    pub fn new(source: &'a Frame, target: &'a Frame, cfg: PatchConfig) -> Result<Self> {
        check_pair(source, target, &cfg)?;
        let mut nnf = Nnf::identity(source.width(), source.height(), cfg.patch_size)?;
        let half = cfg.half();
        for gy in 0..nnf.grid_h {
            for gx in 0..nnf.grid_w {
                let c = (gx + half, gy + half);
                nnf.costs[gy * nnf.grid_w + gx] =
                    patch_ssd(source, target, half, c, c, f64::INFINITY);
            }
        }
        Ok(Self {
            source,
            target,
            cfg,
            nnf,
            iteration: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn nnf(&self) -> &Nnf {
        &self.nnf
    }

    pub fn into_nnf(self) -> Nnf {
        self.nnf
    }

    /// Runs the remaining configured iterations.
    pub fn run(mut self) -> Nnf {
        while self.iteration < self.cfg.iterations {
            self.iterate();
        }
        self.nnf
    }

    #[inline]
    fn try_candidate(&mut self, cell: usize, t: (usize, usize), s: (usize, usize)) {
        let best = self.nnf.costs[cell];
        let (bx, by) = self.nnf.sources[cell];
        if (bx as usize, by as usize) == s {
            return;
        }
        let cost = patch_ssd(self.source, self.target, self.cfg.half(), t, s, best);
        if cost < best {
            self.nnf.costs[cell] = cost;
            self.nnf.sources[cell] = (s.0 as u32, s.1 as u32);
        }
    }

    /// One propagation sweep plus random search.
    pub fn iterate(&mut self) {
        let (gw, gh) = (self.nnf.grid_w, self.nnf.grid_h);
        let half = self.cfg.half();
        let ((x0, x1), (y0, y1)) = self.nnf.center_bounds();
        let forward = self.iteration % 2 == 0;
        let max_radius = self
            .cfg
            .search_radius
            .unwrap_or_else(|| self.nnf.width.max(self.nnf.height)) as f64;

        for k in 0..gw * gh {
            let cell = if forward { k } else { gw * gh - 1 - k };
            let (gx, gy) = (cell % gw, cell / gw);
            let t = (gx + half, gy + half);

            // propagation from the already-visited neighbors
            let neighbors: [Option<(usize, (isize, isize))>; 2] = if forward {
                [
                    (gx > 0).then(|| (cell - 1, (1, 0))),
                    (gy > 0).then(|| (cell - gw, (0, 1))),
                ]
            } else {
                [
                    (gx + 1 < gw).then(|| (cell + 1, (-1, 0))),
                    (gy + 1 < gh).then(|| (cell + gw, (0, -1))),
                ]
            };
            for (nb, (dx, dy)) in neighbors.into_iter().flatten() {
                let (nx, ny) = self.nnf.sources[nb];
                let s = (
                    (nx as isize + dx).clamp(x0 as isize, x1 as isize) as usize,
                    (ny as isize + dy).clamp(y0 as isize, y1 as isize) as usize,
                );
                self.try_candidate(cell, t, s);
            }

            // random search around the post-propagation best
            let mut rng = self.rng.clone();
            rng.set_stream(self.iteration as u64);
            rng.set_word_pos(cell as u128 * WORDS_PER_CELL);
            let (cx, cy) = self.nnf.sources[cell];
            let (cx, cy) = (cx as usize, cy as usize);
            let mut radius = max_radius;
            while radius >= 1.0 {
                let r = radius as usize;
                let sx = rng.random_range(cx.saturating_sub(r).max(x0)..=(cx + r).min(x1));
                let sy = rng.random_range(cy.saturating_sub(r).max(y0)..=(cy + r).min(y1));
                self.try_candidate(cell, t, (sx, sy));
                radius *= self.cfg.radius_decay;
            }
        }
        self.iteration += 1;
    }
}

/// Approximate nearest-neighbor field by PatchMatch.
pub fn estimate_nnf(source_guide: &Frame, target_guide: &Frame, cfg: &PatchConfig) -> Result<Nnf> {
    Ok(PatchMatcher::new(source_guide, target_guide, *cfg)?.run())
}

/// Exact nearest-neighbor field by exhaustive search. Ties go to the
/// smallest `(sy, sx)`. Quadratic in the pixel count; meant for small
/// frames.
pub fn brute_force_nnf(
    source_guide: &Frame,
    target_guide: &Frame,
    cfg: &PatchConfig,
) -> Result<Nnf> {
    check_pair(source_guide, target_guide, cfg)?;
    let mut nnf = Nnf::identity(source_guide.width(), source_guide.height(), cfg.patch_size)?;
    let half = cfg.half();
    let ((x0, x1), (y0, y1)) = nnf.center_bounds();
    for gy in 0..nnf.grid_h {
        for gx in 0..nnf.grid_w {
            let t = (gx + half, gy + half);
            let mut best = (f64::INFINITY, (x0, y0));
            for sy in y0..=y1 {
                for sx in x0..=x1 {
                    let cost = patch_ssd(source_guide, target_guide, half, t, (sx, sy), best.0);
                    if cost < best.0 {
                        best = (cost, (sx, sy));
                    }
                }
            }
            let cell = gy * nnf.grid_w + gx;
            nnf.costs[cell] = best.0;
            nnf.sources[cell] = (best.1 .0 as u32, best.1 .1 as u32);
        }
    }
    Ok(nnf)
}

/// Recomputes the total SSD of `nnf` over all target pixels from the guide
/// frames, ignoring the stored costs.
pub fn nnf_cost(nnf: &Nnf, source_guide: &Frame, target_guide: &Frame) -> Result<f64> {
    for f in [source_guide, target_guide] {
        if f.dims() != (nnf.width, nnf.height) {
            return Err(Error::Shape(format!(
                "guide {}x{} does not match field {}x{}",
                f.width(),
                f.height(),
                nnf.width,
                nnf.height
            )));
        }
    }
    let half = nnf.half();
    let mut total = 0.0;
    for y in 0..nnf.height {
        for x in 0..nnf.width {
            let t = nnf.governing_center(x, y);
            let (sx, sy, _) = nnf.center_match(t.0, t.1);
            total += patch_ssd(source_guide, target_guide, half, t, (sx, sy), f64::INFINITY);
        }
    }
    Ok(total)
}
