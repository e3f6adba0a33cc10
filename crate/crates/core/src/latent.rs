//! Deterministic DDIM sampling over a batch of per-frame latents, with an
//! optional video-level deflickering pass inside the denoising step.
//!
//! The deflickering step estimates the clean latent of every frame,
//! decodes the estimates, runs a sequence-level deflicker method on the
//! decoded frames, re-encodes them, and then rebuilds the noise prediction
//! that would have produced those re-encoded latents. With an identity
//! method and an exact codec this is the plain DDIM step again.
//!
//! Denoisers, codecs and deflicker methods are traits; the toy
//! implementations here are analytic so the whole loop can be tested
//! without trained models.

use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blend::{self, BlendMode, RemapProvider, DEFAULT_CACHE_CAPACITY};
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence, CHANNELS};
use crate::patchmatch::PatchConfig;

/// Cumulative signal coefficients `alpha[0..=T]`, strictly decreasing from
/// `alpha[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSchedule {
    alphas: Vec<f64>,
}

impl AlphaSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::Schedule("need at least one step".into()));
        }
        if alphas[0] != 1.0 {
            return Err(Error::Schedule(format!(
                "alpha[0] must be 1, got {}",
                alphas[0]
            )));
        }
        for (t, pair) in alphas.windows(2).enumerate() {
            if !(pair[1] < pair[0] && pair[1] > 0.0) {
                return Err(Error::Schedule(format!(
                    "alpha must decrease strictly within (0, 1]: alpha[{}] = {}, alpha[{}] = {}",
                    t,
                    pair[0],
                    t + 1,
                    pair[1]
                )));
            }
        }
        Ok(Self { alphas })
    }

    /// `alpha_t = prod_{s <= t} (1 - beta_s)` with `beta` linear from
    /// `1e-4 * scale` to `2e-2 * scale` over `steps` steps.
    pub fn linear(steps: usize, scale: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Schedule("need at least one step".into()));
        }
        let (lo, hi) = (1e-4 * scale, 2e-2 * scale);
        if !(lo > 0.0 && hi < 1.0) {
            return Err(Error::Schedule(format!(
                "beta range [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        let mut alphas = Vec::with_capacity(steps + 1);
        alphas.push(1.0);
        let mut acc = 1.0;
        for s in 0..steps {
            let frac = if steps == 1 {
                0.0
            } else {
                s as f64 / (steps - 1) as f64
            };
            acc *= 1.0 - (lo + (hi - lo) * frac);
            alphas.push(acc);
        }
        Self::new(alphas)
    }

    /// Number of denoising steps `T`.
    pub fn steps(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// Per-frame latents at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub t: usize,
    pub latents: Vec<Vec<f64>>,
}

impl LatentState {
    pub fn new(t: usize, latents: Vec<Vec<f64>>) -> Result<Self> {
        let dim = latents
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Shape("no latents".into()))?;
        if latents.iter().any(|l| l.len() != dim) {
            return Err(Error::Shape("latents differ in dimension".into()));
        }
        if latents.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Shape("latent contains a non-finite value".into()));
        }
        Ok(Self { t, latents })
    }

    pub fn frames(&self) -> usize {
        self.latents.len()
    }

    pub fn dim(&self) -> usize {
        self.latents[0].len()
    }
}

/// Noise predictor `eps(x, t)`. `frame` is the 1-based frame index, so
/// toy denoisers can behave differently per frame.
pub trait Denoiser: Sync {
    fn predict_noise(&self, frame: usize, latent: &[f64], t: usize) -> Vec<f64>;
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn predict_noise(&self, frame: usize, latent: &[f64], t: usize) -> Vec<f64> {
        (**self).predict_noise(frame, latent, t)
    }
}

/// Image <-> latent mapping. Encoding must be deterministic.
pub trait Codec: Sync {
    fn encode(&self, frame: &Frame) -> Result<Vec<f64>>;
    fn decode(&self, latent: &[f64]) -> Result<Frame>;
}

/// A video-level deflicker method applied to decoded frames.
pub trait DeflickerFn: Sync {
    fn deflicker(&self, frames: &FrameSequence, guides: Option<&FrameSequence>)
        -> Result<FrameSequence>;
}

impl<F> DeflickerFn for F
where
    F: Fn(&FrameSequence, Option<&FrameSequence>) -> Result<FrameSequence> + Sync,
{
    fn deflicker(
        &self,
        frames: &FrameSequence,
        guides: Option<&FrameSequence>,
    ) -> Result<FrameSequence> {
        self(frames, guides)
    }
}

/// Maps frame samples one to one onto latent components, without clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelCodec {
    pub width: usize,
    pub height: usize,
}

impl PixelCodec {
    pub fn latent_dim(&self) -> usize {
        self.width * self.height * CHANNELS
    }
}

impl Codec for PixelCodec {
    fn encode(&self, frame: &Frame) -> Result<Vec<f64>> {
        if frame.dims() != (self.width, self.height) {
            return Err(Error::Shape(format!(
                "codec expects {}x{}, got {}x{}",
                self.width,
                self.height,
                frame.width(),
                frame.height()
            )));
        }
        Ok(frame.data().to_vec())
    }

    fn decode(&self, latent: &[f64]) -> Result<Frame> {
        Frame::unbounded(self.width, self.height, latent.to_vec())
    }
}

/// Leaves frames untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDeflicker;

impl DeflickerFn for IdentityDeflicker {
    fn deflicker(&self, frames: &FrameSequence, _: Option<&FrameSequence>) -> Result<FrameSequence> {
        Ok(frames.clone())
    }
}

/// Patch blending as a deflicker method.
///
/// With guides, fields come from a provider cached across calls as long as
/// the same guides are passed. Without guides the decoded frames guide
/// themselves and a fresh provider is used per call.
pub struct PatchBlendDeflicker {
    mode: BlendMode,
    cfg: PatchConfig,
    cache_capacity: usize,
    provider: Mutex<Option<Arc<RemapProvider>>>,
}

impl PatchBlendDeflicker {
    pub fn new(mode: BlendMode, cfg: PatchConfig) -> Self {
        Self {
            mode,
            cfg,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            provider: Mutex::new(None),
        }
    }

    pub fn with_cache_capacity(mut self, capacity: usize) -> Self {
        self.cache_capacity = capacity;
        self
    }

    /// Provider used by the last guided call, if any.
    pub fn provider(&self) -> Option<Arc<RemapProvider>> {
        self.provider.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn provider_for(&self, guides: &FrameSequence) -> Result<Arc<RemapProvider>> {
        let mut slot = self.provider.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = slot.as_ref() {
            if p.guides() == guides {
                return Ok(p.clone());
            }
        }
        let p = Arc::new(RemapProvider::with_capacity(
            guides.clone(),
            self.cfg,
            self.cache_capacity,
        )?);
        *slot = Some(p.clone());
        Ok(p)
    }
}

impl DeflickerFn for PatchBlendDeflicker {
    fn deflicker(
        &self,
        frames: &FrameSequence,
        guides: Option<&FrameSequence>,
    ) -> Result<FrameSequence> {
        match guides {
            Some(g) => blend::deflicker(frames, self.mode, &*self.provider_for(g)?),
            None => {
                let p = RemapProvider::with_capacity(
                    frames.clone(),
                    self.cfg,
                    self.cache_capacity,
                )?;
                blend::deflicker(frames, self.mode, &p)
            }
        }
    }
}

fn check_step(state: &LatentState, schedule: &AlphaSchedule) -> Result<()> {
    if state.t == 0 {
        return Err(Error::CannotStep);
    }
    if state.t > schedule.steps() {
        return Err(Error::Schedule(format!(
            "state is at t = {} but the schedule has {} steps",
            state.t,
            schedule.steps()
        )));
    }
    Ok(())
}

fn predict_all(state: &LatentState, denoiser: &(impl Denoiser + ?Sized)) -> Result<Vec<Vec<f64>>> {
    let eps: Vec<Vec<f64>> = state
        .latents
        .par_iter()
        .enumerate()
        .map(|(i, x)| denoiser.predict_noise(i + 1, x, state.t))
        .collect();
    if eps.iter().any(|e| e.len() != state.dim()) {
        return Err(Error::Shape(
            "denoiser output dimension differs from the latent".into(),
        ));
    }
    Ok(eps)
}

/// `x0 = (x_t - sqrt(1 - a_t) eps) / sqrt(a_t)`.
fn clean_from_noise(x: &[f64], eps: &[f64], alpha: f64) -> Vec<f64> {
    let (sa, sn) = (alpha.sqrt(), (1.0 - alpha).sqrt());
    x.iter().zip(eps).map(|(x, e)| (x - sn * e) / sa).collect()
}

/// `x_{t-1} = sqrt(a_{t-1}) x0 + sqrt(1 - a_{t-1}) eps`.
fn next_latent(x0: &[f64], eps: &[f64], alpha_prev: f64) -> Vec<f64> {
    let (sa, sn) = (alpha_prev.sqrt(), (1.0 - alpha_prev).sqrt());
    x0.iter().zip(eps).map(|(c, e)| sa * c + sn * e).collect()
}

/// Clean-latent estimate for every frame at the current step.
pub fn estimate_clean(
    state: &LatentState,
    schedule: &AlphaSchedule,
    denoiser: &(impl Denoiser + ?Sized),
) -> Result<Vec<Vec<f64>>> {
    check_step(state, schedule)?;
    let alpha = schedule.alpha(state.t);
    let eps = predict_all(state, denoiser)?;
    Ok(state
        .latents
        .iter()
        .zip(&eps)
        .map(|(x, e)| clean_from_noise(x, e, alpha))
        .collect())
}

/// One deterministic DDIM step for every frame independently.
pub fn ddim_step(
    state: &LatentState,
    schedule: &AlphaSchedule,
    denoiser: &(impl Denoiser + ?Sized),
) -> Result<LatentState> {
    check_step(state, schedule)?;
    let (alpha, alpha_prev) = (schedule.alpha(state.t), schedule.alpha(state.t - 1));
    let eps = predict_all(state, denoiser)?;
    let latents = state
        .latents
        .iter()
        .zip(&eps)
        .map(|(x, e)| next_latent(&clean_from_noise(x, e, alpha), e, alpha_prev))
        .collect();
    LatentState::new(state.t - 1, latents)
}

/// One DDIM step with the deflicker method applied to the decoded clean
/// estimates before the update.
pub fn deflicker_step(
    state: &LatentState,
    schedule: &AlphaSchedule,
    denoiser: &(impl Denoiser + ?Sized),
    codec: &(impl Codec + ?Sized),
    method: &(impl DeflickerFn + ?Sized),
    guides: Option<&FrameSequence>,
) -> Result<LatentState> {
    check_step(state, schedule)?;
    if let Some(g) = guides {
        if g.len() != state.frames() {
            return Err(Error::Shape(format!(
                "{} guide frames for {} latents",
                g.len(),
                state.frames()
            )));
        }
    }
    let (alpha, alpha_prev) = (schedule.alpha(state.t), schedule.alpha(state.t - 1));
    let estimates = estimate_clean(state, schedule, denoiser)?;
    let decoded = FrameSequence::new(
        estimates
            .iter()
            .map(|x0| codec.decode(x0))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let processed = method.deflicker(&decoded, guides)?;
    decoded.check_compatible(&processed, "deflicker output")?;
    let (sa, sn) = (alpha.sqrt(), (1.0 - alpha).sqrt());
    let latents = state
        .latents
        .iter()
        .zip(processed.iter())
        .map(|(x, frame)| {
            let x0 = codec.encode(frame)?;
            if x0.len() != x.len() {
                return Err(Error::Shape("codec changed the latent dimension".into()));
            }
            let eps: Vec<f64> = x.iter().zip(&x0).map(|(x, c)| (x - sa * c) / sn).collect();
            Ok(next_latent(&x0, &eps, alpha_prev))
        })
        .collect::<Result<Vec<_>>>()?;
    LatentState::new(state.t - 1, latents)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    /// Start at `t = T` from pure noise.
    #[default]
    Noise,
    /// Noise the encoded guide frames up to `strength * T` and denoise
    /// from there.
    Img2img,
}

/// Window setting: an odd window size or the whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowSetting {
    Size(usize),
    #[default]
    Full,
}

impl WindowSetting {
    pub fn blend_mode(self) -> Result<BlendMode> {
        match self {
            WindowSetting::Size(s) => BlendMode::window(s),
            WindowSetting::Full => Ok(BlendMode::Full),
        }
    }
}

impl std::str::FromStr for WindowSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "inf" | "∞" => Ok(WindowSetting::Full),
            n => n
                .parse()
                .map(WindowSetting::Size)
                .map_err(|_| Error::Config(format!("window must be an odd size or \"full\", got {n:?}"))),
        }
    }
}

impl Serialize for WindowSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WindowSetting::Size(n) => s.serialize_u64(*n as u64),
            WindowSetting::Full => s.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for WindowSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Size(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Size(n) => Ok(WindowSetting::Size(n)),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Settings for [`run_generation`], read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    /// Latent dimension; `None` means `width * height * 3`.
    pub latent_dim: Option<usize>,
    pub steps: usize,
    pub deflicker_frequency: usize,
    pub window: WindowSetting,
    pub seed: u64,
    pub mode: StartMode,
    pub strength: f64,
    pub beta_scale: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            frames: 16,
            width: 32,
            height: 32,
            latent_dim: None,
            steps: 20,
            deflicker_frequency: 5,
            window: WindowSetting::Full,
            seed: 0,
            mode: StartMode::Noise,
            strength: 0.75,
            beta_scale: 25.0,
        }
    }
}

impl GenerationConfig {
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
            .unwrap_or(self.width * self.height * CHANNELS)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.frames == 0 {
            return bad("frames must be >= 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.deflicker_frequency == 0 {
            return bad("deflicker_frequency must be >= 1".into());
        }
        if self.latent_dim() == 0 {
            return bad("latent dimension must be >= 1".into());
        }
        if self.mode == StartMode::Img2img && !(self.strength > 0.0 && self.strength <= 1.0) {
            return bad(format!("strength must be in (0, 1], got {}", self.strength));
        }
        self.window.blend_mode()?;
        Ok(())
    }

    /// First timestep of the run.
    pub fn start_step(&self) -> usize {
        match self.mode {
            StartMode::Noise => self.steps,
            StartMode::Img2img => ((self.strength * self.steps as f64).ceil() as usize).max(1),
        }
    }

    /// 1-based step numbers (counted from the first step of the run) at
    /// which the deflicker method fires.
    pub fn deflicker_steps(&self) -> Vec<usize> {
        (1..=self.start_step())
            .filter(|k| (k - 1) % self.deflicker_frequency == 0)
            .collect()
    }

    /// The single Gaussian draw every frame starts from.
    pub fn shared_noise(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.latent_dim())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GenerationOutput {
    pub frames: FrameSequence,
    /// Steps at which the deflicker method ran, as in
    /// [`GenerationConfig::deflicker_steps`].
    pub deflicker_steps: Vec<usize>,
    pub final_state: LatentState,
}

/// Runs the whole sampling loop and decodes the final latents.
pub fn run_generation(
    config: &GenerationConfig,
    schedule: &AlphaSchedule,
    denoiser: &(impl Denoiser + ?Sized),
    codec: &(impl Codec + ?Sized),
    method: &(impl DeflickerFn + ?Sized),
    guides: Option<&FrameSequence>,
) -> Result<GenerationOutput> {
    config.validate()?;
    if schedule.steps() != config.steps {
        return Err(Error::Config(format!(
            "schedule has {} steps, config asks for {}",
            schedule.steps(),
            config.steps
        )));
    }
    let noise = config.shared_noise();
    let start = config.start_step();
    let latents = match config.mode {
        StartMode::Noise => vec![noise; config.frames],
        StartMode::Img2img => {
            let guides = guides
                .ok_or_else(|| Error::Config("img2img mode needs guide frames".into()))?;
            if guides.len() != config.frames {
                return Err(Error::Shape(format!(
                    "{} guide frames for {} requested frames",
                    guides.len(),
                    config.frames
                )));
            }
            let a = schedule.alpha(start);
            let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
            guides
                .iter()
                .map(|g| {
                    let z = codec.encode(g)?;
                    if z.len() != noise.len() {
                        return Err(Error::Shape("codec latent dimension differs from config".into()));
                    }
                    Ok(z.iter().zip(&noise).map(|(z, n)| sa * z + sn * n).collect())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut state = LatentState::new(start, latents)?;
    let fire = config.deflicker_steps();
    for k in 1..=start {
        state = if fire.binary_search(&k).is_ok() {
            deflicker_step(&state, schedule, denoiser, codec, method, guides)?
        } else {
            ddim_step(&state, schedule, denoiser)?
        };
    }
    let frames = FrameSequence::new(
        state
            .latents
            .iter()
            .map(|z| codec.decode(z))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(GenerationOutput {
        frames,
        deflicker_steps: fire,
        final_state: state,
    })
}

/// Denoiser that always points at a fixed clean latent `target`:
/// `eps(x, t) = (x - sqrt(a_t) target) / sqrt(1 - a_t)`.
#[derive(Debug, Clone)]
pub struct TargetDenoiser {
    pub schedule: AlphaSchedule,
    pub target: Vec<f64>,
}

impl Denoiser for TargetDenoiser {
    fn predict_noise(&self, _frame: usize, x: &[f64], t: usize) -> Vec<f64> {
        let a = self.schedule.alpha(t);
        let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
        x.iter().zip(&self.target).map(|(x, c)| (x - sa * c) / sn).collect()
    }
}

/// Denoiser whose clean estimate keeps most of the current content, pulls
/// the rest toward `target`, and adds a per-frame brightness bias that is
/// stronger at noisier steps. Run without deflickering, those biases
/// accumulate into flicker.
///
/// The current content is read off the latent assuming it was built from
/// `noise`, the shared starting draw.
#[derive(Debug, Clone)]
pub struct FlickerDenoiser {
    pub schedule: AlphaSchedule,
    pub target: Vec<f64>,
    pub noise: Vec<f64>,
    /// Fraction of the current content kept each step, in [0, 1].
    pub retain: f64,
    /// Per-frame bias, indexed by frame - 1.
    pub bias: Vec<f64>,
}

impl FlickerDenoiser {
    /// Biases drawn from `N(0, amplitude^2)` with `seed`.
    pub fn new(
        schedule: AlphaSchedule,
        target: Vec<f64>,
        noise: Vec<f64>,
        frames: usize,
        amplitude: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bias = (0..frames)
            .map(|_| amplitude * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        Self {
            schedule,
            target,
            noise,
            retain: 0.9,
            bias,
        }
    }
}

impl Denoiser for FlickerDenoiser {
    fn predict_noise(&self, frame: usize, x: &[f64], t: usize) -> Vec<f64> {
        let a = self.schedule.alpha(t);
        let (sa, sn) = (a.sqrt(), (1.0 - a).sqrt());
        let bias = self.bias[frame - 1] * sn;
        x.iter()
            .zip(&self.noise)
            .zip(&self.target)
            .map(|((x, n), c)| {
                let content = (x - sn * n) / sa;
                let x0 = c + self.retain * (content - c) + bias;
                (x - sa * x0) / sn
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> AlphaSchedule {
        AlphaSchedule::linear(10, 25.0).unwrap()
    }

    struct ConstNoise(f64);

    impl Denoiser for ConstNoise {
        fn predict_noise(&self, _: usize, x: &[f64], _: usize) -> Vec<f64> {
            vec![self.0; x.len()]
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AlphaSchedule::new(vec![1.0]).is_err());
        assert!(AlphaSchedule::new(vec![0.9, 0.5]).is_err());
        assert!(AlphaSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(AlphaSchedule::new(vec![1.0, 0.5, 0.6]).is_err());
        assert!(AlphaSchedule::new(vec![1.0, 0.5, 0.0]).is_err());
        assert!(AlphaSchedule::linear(20, 50.0).is_err());
        let s = AlphaSchedule::linear(20, 25.0).unwrap();
        assert_eq!(s.steps(), 20);
        assert_eq!(s.alpha(0), 1.0);
        assert!(s.alphas().windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn scalar_ddim_step() {
        // independent hand evaluation
        let s = AlphaSchedule::new(vec![1.0, 0.81, 0.25]).unwrap();
        let state = LatentState::new(2, vec![vec![1.0]]).unwrap();
        let x0 = (1.0 - 0.75f64.sqrt() * 0.6) / 0.5;
        let expected = 0.9 * x0 + 0.19f64.sqrt() * 0.6;
        let clean = estimate_clean(&state, &s, &ConstNoise(0.6)).unwrap();
        assert!((clean[0][0] - x0).abs() < 1e-12);
        let next = ddim_step(&state, &s, &ConstNoise(0.6)).unwrap();
        assert_eq!(next.t, 1);
        assert!((next.latents[0][0] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_scales_by_alpha() {
        let s = schedule();
        let state = LatentState::new(4, vec![vec![0.3, -0.2]]).unwrap();
        let clean = estimate_clean(&state, &s, &ConstNoise(0.0)).unwrap();
        let sa = s.alpha(4).sqrt();
        assert!((clean[0][0] - 0.3 / sa).abs() < 1e-12);
        assert!((clean[0][1] + 0.2 / sa).abs() < 1e-12);
    }

    #[test]
    fn final_step_returns_clean_estimate() {
        let s = schedule();
        let state = LatentState::new(1, vec![vec![0.7, 0.1, -0.4]]).unwrap();
        let d = ConstNoise(0.35);
        let clean = estimate_clean(&state, &s, &d).unwrap();
        let next = ddim_step(&state, &s, &d).unwrap();
        assert_eq!(next.latents[0], clean[0]);
    }

    #[test]
    fn target_denoiser_collapses_to_target() {
        let s = schedule();
        let target = vec![0.2, 0.5, 0.9];
        let d = TargetDenoiser {
            schedule: s.clone(),
            target: target.clone(),
        };
        let state = LatentState::new(7, vec![vec![1.3, -0.4, 0.8]]).unwrap();
        let clean = estimate_clean(&state, &s, &d).unwrap();
        for (c, t) in clean[0].iter().zip(&target) {
            assert!((c - t).abs() < 1e-12);
        }
    }

    #[test]
    fn cannot_step_past_zero() {
        let s = schedule();
        let state = LatentState::new(0, vec![vec![0.0]]).unwrap();
        assert!(matches!(ddim_step(&state, &s, &ConstNoise(0.0)), Err(Error::CannotStep)));
        let late = LatentState::new(11, vec![vec![0.0]]).unwrap();
        assert!(ddim_step(&late, &s, &ConstNoise(0.0)).is_err());
    }

    #[test]
    fn constant_method_equalizes_estimates() {
        let s = schedule();
        let codec = PixelCodec { width: 1, height: 1 };
        let first = |frames: &FrameSequence, _: Option<&FrameSequence>| {
            FrameSequence::new(vec![frames.get(1).clone(); frames.len()])
        };
        let state = LatentState::new(
            5,
            vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6], vec![0.7, 0.8, 0.9]],
        )
        .unwrap();
        let d = TargetDenoiser {
            schedule: s.clone(),
            target: vec![0.5; 3],
        };
        // every frame gets the same x0; x_{t-1} still differs through eps
        let next = deflicker_step(&state, &s, &d, &codec, &first, None).unwrap();
        let (a, ap) = (s.alpha(5), s.alpha(4));
        for (x, out) in state.latents.iter().zip(&next.latents) {
            for k in 0..3 {
                let x0 = 0.5;
                let eps = (x[k] - a.sqrt() * x0) / (1.0 - a).sqrt();
                let expected = ap.sqrt() * x0 + (1.0 - ap).sqrt() * eps;
                assert!((out[k] - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deflicker_frequency_schedule() {
        let cfg = GenerationConfig {
            steps: 20,
            deflicker_frequency: 5,
            ..GenerationConfig::default()
        };
        assert_eq!(cfg.deflicker_steps(), vec![1, 6, 11, 16]);
        let every = GenerationConfig {
            deflicker_frequency: 1,
            ..cfg.clone()
        };
        assert_eq!(every.deflicker_steps(), (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn config_json_round_trip() {
        let json = r#"{"frames": 4, "width": 8, "height": 8, "steps": 10,
            "deflicker_frequency": 2, "window": 7, "seed": 3, "mode": "img2img",
            "strength": 0.5}"#;
        let cfg: GenerationConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.window, WindowSetting::Size(7));
        assert_eq!(cfg.mode, StartMode::Img2img);
        assert_eq!(cfg.start_step(), 5);
        let back: GenerationConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let full: GenerationConfig = serde_json::from_str(r#"{"window": "full"}"#).unwrap();
        assert_eq!(full.window, WindowSetting::Full);
        assert!(serde_json::from_str::<GenerationConfig>(r#"{"bogus": 1}"#).is_err());
        let even = GenerationConfig {
            window: WindowSetting::Size(4),
            ..GenerationConfig::default()
        };
        assert!(even.validate().is_err());
    }
}
