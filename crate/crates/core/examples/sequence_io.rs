//! Write a frame sequence as PPM and PNG, read it back, and score its
//! temporal consistency.
//!
//! cargo run --example sequence_io [output-dir]

use patchblend::io::{load_sequence, save_sequence, ImageFormat};
use patchblend::metrics::pixel_mse;
use patchblend::synthetic::static_jitter;

fn main() -> patchblend::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("patchblend-sequence-io"));
    let seq = static_jitter(32, 24, 6, 0.05, 4).synth;

    for format in [ImageFormat::Ppm, ImageFormat::Png] {
        let dir = out.join(format.extension());
        let pattern = format.default_pattern();
        save_sequence(&seq, &dir, &pattern, format)?;
        let back = load_sequence(&dir, &pattern)?;
        let worst = seq
            .iter()
            .zip(&back)
            .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        println!(
            "{}: {} frames in {}, worst round-trip error {:.5} (8-bit step is {:.5})",
            format.extension(),
            back.len(),
            dir.display(),
            worst,
            1.0 / 255.0
        );
    }

    let report = pixel_mse(&seq)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
