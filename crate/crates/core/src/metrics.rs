//! Adjacent-frame Pixel-MSE.
//!
//! Differences are measured in 8-bit units (intensity * 255) and averaged
//! over every pixel and channel, so two frames that differ by 10/255
//! everywhere score exactly 100.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// MSE of frames `(i, i + 1)` at position `i - 1`.
    pub pairs: Vec<f64>,
    pub mean: f64,
    /// 1-based index `i` of the pair `(i, i + 1)` with the lowest MSE.
    pub min_pair: usize,
    pub max_pair: usize,
}

/// Mean squared difference of two frames in 8-bit units.
pub fn frame_mse(a: &Frame, b: &Frame) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "cannot compare {}x{} with {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = (x - y) * 255.0;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

pub fn pixel_mse(seq: &FrameSequence) -> Result<ConsistencyReport> {
    if seq.len() < 2 {
        return Err(Error::Shape(format!(
            "Pixel-MSE needs at least 2 frames, got {}",
            seq.len()
        )));
    }
    let pairs = seq
        .frames()
        .par_windows(2)
        .map(|w| frame_mse(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let mut min_pair = 0;
    let mut max_pair = 0;
    for (i, v) in pairs.iter().enumerate() {
        if *v < pairs[min_pair] {
            min_pair = i;
        }
        if *v > pairs[max_pair] {
            max_pair = i;
        }
    }
    Ok(ConsistencyReport {
        pairs,
        mean,
        min_pair: min_pair + 1,
        max_pair: max_pair + 1,
    })
}
