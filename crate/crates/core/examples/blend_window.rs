//! Sliding-window deflickering of a flickering static scene, for a few
//! window sizes.
//!
//! cargo run --example blend_window

use patchblend::blend::{blend_window, RemapProvider};
use patchblend::metrics::pixel_mse;
use patchblend::patchmatch::PatchConfig;
use patchblend::synthetic::static_jitter;

fn main() -> patchblend::Result<()> {
    let fx = static_jitter(48, 48, 12, 0.08, 3);
    let provider = RemapProvider::new(fx.guides.clone(), PatchConfig::default())?;

    println!("window  Pixel-MSE");
    println!("{:>6}  {:>9.2}", 1, pixel_mse(&fx.synth)?.mean);
    for radius in [1, 2, 3, 5] {
        let out = blend_window(&fx.synth, radius, &provider)?;
        println!("{:>6}  {:>9.2}", 2 * radius + 1, pixel_mse(&out)?.mean);
    }
    let stats = provider.stats();
    println!(
        "{} fields estimated for {} remaps (cached across windows)",
        stats.nnf_estimations, stats.remap_applications
    );
    Ok(())
}
