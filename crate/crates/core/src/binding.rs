//! In-memory entry points for foreign callers (the Python wrapper builds
//! on these).
//!
//! Arrays are contiguous `f32` buffers shaped `(n, height, width, 3)`.
//! Inputs stay owned by the caller; results are freshly allocated. Errors
//! come back as a numeric code plus message and never unwind across the
//! boundary.

use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::Deserialize;

use crate::blend::{self, BlendMode, RemapProvider};
use crate::frame::{Frame, FrameSequence, CHANNELS};
use crate::latent::WindowSetting;
use crate::patchmatch::PatchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ErrorCode {
    Shape = 1,
    Config = 2,
    Value = 3,
    Internal = 4,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} (code {})", *code as i32)]
pub struct BindingError {
    pub code: ErrorCode,
    pub message: String,
}

impl BindingError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// Borrowed `(n, height, width, 3)` array.
#[derive(Debug, Clone, Copy)]
pub struct ArrayView<'a> {
    pub data: &'a [f32],
    pub shape: [usize; 4],
}

impl<'a> ArrayView<'a> {
    pub fn new(data: &'a [f32], shape: [usize; 4]) -> Self {
        Self { data, shape }
    }

    fn to_sequence(self, what: &str) -> Result<FrameSequence, BindingError> {
        let [n, h, w, c] = self.shape;
        if c != CHANNELS {
            return Err(BindingError::new(
                ErrorCode::Shape,
                format!("{what}: last dimension must be 3, got {c}"),
            ));
        }
        if n == 0 || h == 0 || w == 0 {
            return Err(BindingError::new(
                ErrorCode::Shape,
                format!("{what}: empty shape {:?}", self.shape),
            ));
        }
        let frame_len = h * w * c;
        if self.data.len() != n * frame_len {
            return Err(BindingError::new(
                ErrorCode::Shape,
                format!(
                    "{what}: shape {:?} needs {} values, buffer has {}",
                    self.shape,
                    n * frame_len,
                    self.data.len()
                ),
            ));
        }
        let frames = self
            .data
            .chunks_exact(frame_len)
            .enumerate()
            .map(|(i, chunk)| {
                Frame::new(w, h, chunk.iter().map(|&v| f64::from(v)).collect()).map_err(|e| {
                    BindingError::new(ErrorCode::Value, format!("{what} frame {i}: {e}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        FrameSequence::new(frames).map_err(|e| BindingError::new(ErrorCode::Shape, e.to_string()))
    }
}

/// Keys accepted in the JSON config string.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BindingConfig {
    pub mode: String,
    pub window: WindowSetting,
    pub patch_size: usize,
    pub pm_iters: usize,
    pub seed: u64,
}

impl Default for BindingConfig {
    fn default() -> Self {
        let pc = PatchConfig::default();
        Self {
            mode: "full".into(),
            window: WindowSetting::Full,
            patch_size: pc.patch_size,
            pm_iters: pc.iterations,
            seed: pc.seed,
        }
    }
}

impl BindingConfig {
    pub fn parse(json: &str) -> Result<Self, BindingError> {
        let json = if json.trim().is_empty() { "{}" } else { json };
        serde_json::from_str(json).map_err(|e| BindingError::new(ErrorCode::Config, e.to_string()))
    }

    pub fn blend_mode(&self) -> Result<BlendMode, BindingError> {
        let cfg_err = |e: crate::Error| BindingError::new(ErrorCode::Config, e.to_string());
        match self.mode.as_str() {
            "full" => Ok(BlendMode::Full),
            "window" => self.window.blend_mode().map_err(cfg_err),
            other => Err(BindingError::new(
                ErrorCode::Config,
                format!("mode must be \"window\" or \"full\", got {other:?}"),
            )),
        }
    }

    pub fn patch_config(&self) -> PatchConfig {
        PatchConfig {
            patch_size: self.patch_size,
            iterations: self.pm_iters,
            seed: self.seed,
            ..PatchConfig::default()
        }
    }
}

/// Deflickers `synth`. Without `guides` the synthesized frames guide
/// themselves.
pub fn deflicker(
    synth: ArrayView<'_>,
    guides: Option<ArrayView<'_>>,
    config_json: &str,
) -> Result<Vec<f32>, BindingError> {
    let outcome = catch_unwind(AssertUnwindSafe(|| deflicker_inner(synth, guides, config_json)));
    outcome.unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(BindingError::new(ErrorCode::Internal, msg))
    })
}

fn deflicker_inner(
    synth: ArrayView<'_>,
    guides: Option<ArrayView<'_>>,
    config_json: &str,
) -> Result<Vec<f32>, BindingError> {
    let cfg = BindingConfig::parse(config_json)?;
    let mode = cfg.blend_mode()?;
    let synth = synth.to_sequence("synth")?;
    let guides = match guides {
        Some(g) => g.to_sequence("guides")?,
        None => synth.clone(),
    };
    synth
        .check_compatible(&guides, "synth vs guides")
        .map_err(|e| BindingError::new(ErrorCode::Shape, e.to_string()))?;
    let provider = RemapProvider::new(guides, cfg.patch_config()).map_err(|e| match e {
        crate::Error::Config(_) => BindingError::new(ErrorCode::Config, e.to_string()),
        _ => BindingError::new(ErrorCode::Shape, e.to_string()),
    })?;
    let out = blend::deflicker(&synth, mode, &provider)
        .map_err(|e| BindingError::new(ErrorCode::Internal, e.to_string()))?;
    Ok(out
        .iter()
        .flat_map(|f| f.data().iter().map(|&v| v as f32))
        .collect())
}

/// Library version, `MAJOR.MINOR.PATCH`.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
