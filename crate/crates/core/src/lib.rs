//! Temporal-consistency tools for per-frame synthesized video.
//!
//! The core operation remaps one frame onto another through a PatchMatch
//! nearest-neighbor field computed on guide frames, then averages the
//! remapped frames. [`blend`] builds sliding-window and full-sequence
//! deflickering on top of that, the full version in `O(n log n)` field
//! estimations through a pair of remapping tables. [`latent`] runs a DDIM
//! sampling loop that calls a deflicker method between steps, [`keypoints`]
//! smooths pose tracks, and [`metrics`] scores the result.
//!
//! Frames are RGB, row-major, channel-interleaved `f64` in `[0, 1]`.
//! Sequence indices are 1-based throughout.

pub mod binding;
pub mod blend;
pub mod cli;
pub mod error;
pub mod frame;
pub mod io;
pub mod keypoints;
pub mod latent;
pub mod metrics;
pub mod patchmatch;
pub mod synthetic;

pub use blend::{
    blend_all, blend_all_bruteforce, blend_window, deflicker, BlendMode, RemapProvider,
};
pub use error::{Error, Result};
pub use frame::{Frame, FrameSequence, PixelAccumulator};
pub use patchmatch::{estimate_nnf, Nnf, PatchConfig};
