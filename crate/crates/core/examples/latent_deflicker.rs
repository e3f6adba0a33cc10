//! Deflickering inside a DDIM sampling loop.
//!
//! A toy denoiser adds a different brightness bias to every frame. Left
//! alone that turns into flicker; blending the clean estimates every few
//! steps keeps the frames together. Any closure over frame sequences can
//! act as the deflicker method, as the last run shows.
//!
//! cargo run --example latent_deflicker

use patchblend::blend::BlendMode;
use patchblend::frame::FrameSequence;
use patchblend::latent::{
    run_generation, AlphaSchedule, FlickerDenoiser, GenerationConfig, IdentityDeflicker,
    PatchBlendDeflicker, PixelCodec,
};
use patchblend::metrics::pixel_mse;
use patchblend::patchmatch::PatchConfig;
use patchblend::synthetic::texture_frame;
use patchblend::PixelAccumulator;

fn main() -> patchblend::Result<()> {
    let config = GenerationConfig {
        frames: 12,
        width: 24,
        height: 24,
        ..GenerationConfig::default()
    };
    let schedule = AlphaSchedule::linear(config.steps, config.beta_scale)?;
    let scene = texture_frame(24, 24, 0.3, 0.7, 1);
    let guides = FrameSequence::new(vec![scene.clone(); config.frames])?;
    let denoiser = FlickerDenoiser::new(
        schedule.clone(),
        scene.data().to_vec(),
        config.shared_noise(),
        config.frames,
        0.03,
        2,
    );
    let codec = PixelCodec {
        width: 24,
        height: 24,
    };

    let off = run_generation(&config, &schedule, &denoiser, &codec, &IdentityDeflicker, Some(&guides))?;
    let blend = PatchBlendDeflicker::new(BlendMode::Full, PatchConfig::default());
    let on = run_generation(&config, &schedule, &denoiser, &codec, &blend, Some(&guides))?;

    // a plain per-pixel mean over the sequence, ignoring the guides. The
    // guides here are static, so every field is the identity and the patch
    // blend reduces to exactly this mean.
    let mean = |frames: &FrameSequence, _: Option<&FrameSequence>| {
        let (w, h) = frames.dims();
        let mut acc = PixelAccumulator::empty(w, h);
        for f in frames {
            acc.accumulate_frame(&f.clamped())?;
        }
        let avg = acc.finalize()?;
        FrameSequence::new(vec![avg; frames.len()])
    };
    let averaged = run_generation(&config, &schedule, &denoiser, &codec, &mean, Some(&guides))?;

    let score = |s: &FrameSequence| -> patchblend::Result<f64> {
        Ok(pixel_mse(&FrameSequence::new(s.iter().map(|f| f.clamped()).collect())?)?.mean)
    };
    println!("deflicker fired at steps {:?}", on.deflicker_steps);
    println!("Pixel-MSE without deflickering: {:.2}", score(&off.frames)?);
    println!("Pixel-MSE with patch blending:  {:.2}", score(&on.frames)?);
    println!("Pixel-MSE with a plain mean:    {:.2}", score(&averaged.frames)?);
    Ok(())
}
