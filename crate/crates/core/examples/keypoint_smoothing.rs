//! Savitzky-Golay smoothing of a jittery keypoint track, including a few
//! low-confidence detections that get interpolated over.
//!
//! cargo run --example keypoint_smoothing

use patchblend::keypoints::{
    sg_coefficients, smooth_track, KeypointSample, KeypointTrack, SmoothingConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> patchblend::Result<()> {
    println!("window 5, order 2 weights x 35: {:?}", {
        let w = sg_coefficients(5, 2)?;
        w.iter().map(|v| (v * 35.0).round()).collect::<Vec<_>>()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = |t: f64| (40.0 + 12.0 * (t / 9.0).sin(), 80.0 - 0.4 * t);
    let series: Vec<KeypointSample> = (0..60)
        .map(|i| {
            let (x, y) = truth(i as f64);
            KeypointSample {
                x: x + rng.random_range(-1.5..1.5),
                y: y + rng.random_range(-1.5..1.5),
                confidence: if i % 17 == 5 { 0.02 } else { 0.9 },
            }
        })
        .collect();
    let track = KeypointTrack {
        keypoint_id: 0,
        series,
    };
    let smoothed = smooth_track(&track, &SmoothingConfig::default())?;

    let residual = |s: &[KeypointSample]| {
        s.iter()
            .enumerate()
            .map(|(i, p)| {
                let (x, y) = truth(i as f64);
                (p.x - x).powi(2) + (p.y - y).powi(2)
            })
            .sum::<f64>()
            / s.len() as f64
    };
    println!("mean squared error before: {:.3}", residual(&track.series));
    println!("mean squared error after:  {:.3}", residual(&smoothed.series));
    let filled = smoothed.series.iter().filter(|p| p.confidence == 0.0).count();
    println!("{filled} low-confidence samples were interpolated");
    Ok(())
}
