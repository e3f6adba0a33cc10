//! Patch blending: remap neighboring frames onto each frame through the
//! guide correspondences and average them.
//!
//! Three strategies share the same remap operator:
//!
//! * [`blend_window`] blends each frame with its neighbors within a radius.
//! * [`blend_all_bruteforce`] remaps every frame onto every other frame
//!   directly, which needs `n (n - 1)` fields.
//! * [`blend_all`] approximates the full blend with a forward and a
//!   reversed [`RemapTable`], so each output needs `O(log n)` remaps and the
//!   whole sequence `O(n log n)`.
//!
//! The table and the full blend are generic over the payload so the same
//! traversal can run on pixels or on [`symbolic::Contributions`].

mod provider;
pub mod symbolic;
mod table;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use provider::{ProviderStats, RemapProvider, DEFAULT_CACHE_CAPACITY};
pub use table::{ceil_log2, top_level, Direction, RemapTable, TableEntry};

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, PixelAccumulator};

/// The blending operator `⊕`.
pub trait Blend: Clone {
    fn blend(&mut self, other: &Self) -> Result<()>;
    /// Number of frames blended in.
    fn count(&self) -> usize;
}

impl Blend for PixelAccumulator {
    fn blend(&mut self, other: &Self) -> Result<()> {
        self.accumulate(other)
    }

    fn count(&self) -> usize {
        PixelAccumulator::count(self)
    }
}

/// Applies the remap operator `[from -> to]` (1-based original frame
/// indices) to a payload.
pub trait Remapper<P>: Sync {
    fn remap(&self, payload: &P, from: usize, to: usize) -> Result<P>;
}

/// How many frames each output frame blends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum BlendMode {
    /// Frames within `radius` of each frame, truncated at the ends.
    Window { radius: usize },
    /// Every frame, through the remapping tables.
    Full,
}

impl BlendMode {
    /// Window mode from an odd window size (`7` means radius 3).
    pub fn window(size: usize) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::Config(format!(
                "window size must be odd, got {size}"
            )));
        }
        Ok(BlendMode::Window { radius: size / 2 })
    }
}

/// Blends with the strategy selected by `mode`.
pub fn deflicker(
    synth: &FrameSequence,
    mode: BlendMode,
    provider: &RemapProvider,
) -> Result<FrameSequence> {
    match mode {
        BlendMode::Window { radius } => blend_window(synth, radius, provider),
        BlendMode::Full => blend_all(synth, provider),
    }
}

/// Sliding-window blend: output `i` is the mean of frames
/// `max(1, i - r)..=min(n, i + r)`, each remapped onto frame `i` once.
pub fn blend_window(
    synth: &FrameSequence,
    radius: usize,
    provider: &RemapProvider,
) -> Result<FrameSequence> {
    provider.check_payload(synth)?;
    let n = synth.len();
    let frames = (1..=n)
        .into_par_iter()
        .map(|i| {
            let lo = i.saturating_sub(radius).max(1);
            let hi = (i + radius).min(n);
            let (w, h) = synth.dims();
            let mut acc = PixelAccumulator::empty(w, h);
            for j in lo..=hi {
                if j == i {
                    acc.accumulate_frame(synth.get(i))?;
                } else {
                    acc.accumulate(&provider.remap(&PixelAccumulator::from(synth.get(j)), j, i)?)?;
                }
            }
            acc.finalize()
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

/// Exact full blend: output `i` is the mean over all `j` of frame `j`
/// remapped directly onto frame `i`.
pub fn blend_all_bruteforce(
    synth: &FrameSequence,
    provider: &RemapProvider,
) -> Result<FrameSequence> {
    let n = synth.len();
    blend_window(synth, n.saturating_sub(1), provider)
}

/// Builds the forward or reversed remapping table over `synth`.
pub fn build_table(
    synth: &FrameSequence,
    provider: &RemapProvider,
    direction: Direction,
) -> Result<RemapTable<PixelAccumulator>> {
    provider.check_payload(synth)?;
    RemapTable::build(
        synth.len(),
        direction,
        |j| PixelAccumulator::from(synth.get(j)),
        provider,
    )
}

/// Approximate full blend through the remapping tables, generic over the
/// payload. Returns the un-normalized blend for every frame, 1..=n.
pub fn blend_all_with<P, R>(
    n: usize,
    frame: impl Fn(usize) -> P + Sync,
    remapper: &R,
) -> Result<Vec<P>>
where
    P: Blend + Send + Sync,
    R: Remapper<P> + ?Sized,
{
    let forward = RemapTable::build(n, Direction::Forward, &frame, remapper)?;
    let reversed = RemapTable::build(n, Direction::Reversed, &frame, remapper)?;
    (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut acc = forward.query_prefix(i, i, remapper)?;
            if i < n {
                acc.blend(&reversed.query_prefix(n - i, i, remapper)?)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Approximate full blend in `O(n log n)` remaps.
pub fn blend_all(synth: &FrameSequence, provider: &RemapProvider) -> Result<FrameSequence> {
    provider.check_payload(synth)?;
    let frames = blend_all_with(synth.len(), |j| PixelAccumulator::from(synth.get(j)), provider)?
        .iter()
        .map(PixelAccumulator::finalize)
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

/// Upper bound on remap applications (and so on field estimations) made by
/// [`blend_all`] over `n` frames: `2 (n - 1) + n (2 ceil(log2 n) + 2)`.
pub fn blend_all_remap_bound(n: usize) -> usize {
    2 * n.saturating_sub(1) + n * (2 * ceil_log2(n) + 2)
}
