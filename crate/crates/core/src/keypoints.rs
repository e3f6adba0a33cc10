//! Savitzky-Golay smoothing of keypoint coordinate tracks.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 9;
pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeypointSample {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointTrack {
    pub keypoint_id: i64,
    pub series: Vec<KeypointSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub window: usize,
    pub order: usize,
    pub confidence_threshold: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            order: DEFAULT_ORDER,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

fn check_window(window: usize, order: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::Config(format!(
            "window must be odd and >= 3, got {window}"
        )));
    }
    if order >= window {
        return Err(Error::Config(format!(
            "order {order} must be below the window {window}"
        )));
    }
    Ok(())
}

/// Weights that evaluate, at offset 0, the degree-`order` least-squares
/// polynomial through samples at `offsets`.
fn fit_weights(offsets: &[f64], order: usize) -> Vec<f64> {
    let cols = order + 1;
    let vander = DMatrix::from_fn(offsets.len(), cols, |r, c| offsets[r].powi(c as i32));
    // first row of (A^T A)^-1 A^T
    let normal = vander.transpose() * &vander;
    let e0 = DVector::from_fn(cols, |r, _| if r == 0 { 1.0 } else { 0.0 });
    let row = normal
        .lu()
        .solve(&e0)
        .expect("distinct offsets give a full-rank fit");
    (&vander * row).iter().copied().collect()
}

/// Center-point smoothing weights for a symmetric window.
pub fn sg_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    check_window(window, order)?;
    let m = (window / 2) as f64;
    let offsets: Vec<f64> = (0..window).map(|k| k as f64 - m).collect();
    Ok(fit_weights(&offsets, order))
}

/// Smooths one series. Away from the ends each point uses the centered
/// window; near the ends the window slides inward and the polynomial is
/// evaluated off-center, so polynomials of degree <= `order` pass
/// through unchanged everywhere.
pub fn sg_smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    check_window(window, order)?;
    let n = series.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let width = window.min(n);
    let order = order.min(width - 1);
    let m = window / 2;
    let center = sg_coefficients(window, order.min(window - 1))?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = if n <= window {
            0
        } else {
            i.saturating_sub(m).min(n - window)
        };
        let weights = if width == window && start + m == i {
            center.clone()
        } else {
            let offsets: Vec<f64> = (start..start + width).map(|j| j as f64 - i as f64).collect();
            fit_weights(&offsets, order)
        };
        out.push(
            weights
                .iter()
                .zip(&series[start..start + width])
                .map(|(w, v)| w * v)
                .sum(),
        );
    }
    Ok(out)
}

/// Fills low-confidence points by linear interpolation between the
/// nearest confident neighbors; gaps at the ends hold the nearest value.
fn fill_gaps(values: &[f64], keep: &[bool]) -> Vec<f64> {
    let known: Vec<usize> = (0..values.len()).filter(|&i| keep[i]).collect();
    let mut out = values.to_vec();
    for i in 0..values.len() {
        if keep[i] {
            continue;
        }
        let after = known.partition_point(|&k| k < i);
        out[i] = match (after.checked_sub(1).map(|b| known[b]), known.get(after)) {
            (Some(a), Some(&b)) => {
                let t = (i - a) as f64 / (b - a) as f64;
                values[a] + t * (values[b] - values[a])
            }
            (Some(a), None) => values[a],
            (None, Some(&b)) => values[b],
            (None, None) => unreachable!("caller ensures one confident sample"),
        };
    }
    out
}

/// Smooths a track's coordinates. Samples below the confidence threshold
/// are interpolated before smoothing and come out with confidence 0.
pub fn smooth_track(track: &KeypointTrack, cfg: &SmoothingConfig) -> Result<KeypointTrack> {
    check_window(cfg.window, cfg.order)?;
    if !(0.0..=1.0).contains(&cfg.confidence_threshold) {
        return Err(Error::Config(format!(
            "confidence threshold {} outside [0, 1]",
            cfg.confidence_threshold
        )));
    }
    let keep: Vec<bool> = track
        .series
        .iter()
        .map(|s| s.confidence >= cfg.confidence_threshold)
        .collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::Untrackable(track.keypoint_id));
    }
    let xs: Vec<f64> = track.series.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = track.series.iter().map(|s| s.y).collect();
    let xs = sg_smooth(&fill_gaps(&xs, &keep), cfg.window, cfg.order)?;
    let ys = sg_smooth(&fill_gaps(&ys, &keep), cfg.window, cfg.order)?;
    let series = track
        .series
        .iter()
        .zip(keep)
        .zip(xs.into_iter().zip(ys))
        .map(|((s, kept), (x, y))| KeypointSample {
            x,
            y,
            confidence: if kept { s.confidence } else { 0.0 },
        })
        .collect();
    Ok(KeypointTrack {
        keypoint_id: track.keypoint_id,
        series,
    })
}

/// One CSV row: `frame,keypoint,x,y,confidence`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeypointRow {
    pub frame: i64,
    pub keypoint: i64,
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<KeypointRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(file)
}

pub fn read_rows(reader: impl std::io::Read) -> Result<Vec<KeypointRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["frame", "keypoint", "x", "y", "confidence"];
    if headers.iter().map(str::trim).ne(expected) {
        return Err(Error::Config(format!(
            "keypoint CSV header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<KeypointRow>, _>>()?;
    for r in &rows {
        if !(0.0..=1.0).contains(&r.confidence) || !r.x.is_finite() || !r.y.is_finite() {
            return Err(Error::Config(format!(
                "bad sample for keypoint {} at frame {}",
                r.keypoint, r.frame
            )));
        }
    }
    Ok(rows)
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[KeypointRow]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(file, rows)
}

pub fn write_rows(writer: impl std::io::Write, rows: &[KeypointRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Groups rows into per-keypoint tracks ordered by frame. Every keypoint
/// must have exactly one row for each frame that appears in the file.
pub fn tracks_from_rows(rows: &[KeypointRow]) -> Result<Vec<(Vec<i64>, KeypointTrack)>> {
    let mut frames: Vec<i64> = rows.iter().map(|r| r.frame).collect();
    frames.sort_unstable();
    frames.dedup();
    let mut by_id: BTreeMap<i64, BTreeMap<i64, KeypointSample>> = BTreeMap::new();
    for r in rows {
        let sample = KeypointSample {
            x: r.x,
            y: r.y,
            confidence: r.confidence,
        };
        if by_id.entry(r.keypoint).or_default().insert(r.frame, sample).is_some() {
            return Err(Error::Config(format!(
                "duplicate row for keypoint {} at frame {}",
                r.keypoint, r.frame
            )));
        }
    }
    by_id
        .into_iter()
        .map(|(id, samples)| {
            if samples.len() != frames.len() {
                return Err(Error::Shape(format!(
                    "keypoint {id} has {} samples for {} frames",
                    samples.len(),
                    frames.len()
                )));
            }
            Ok((
                frames.clone(),
                KeypointTrack {
                    keypoint_id: id,
                    series: samples.into_values().collect(),
                },
            ))
        })
        .collect()
}

/// Smooths every keypoint in `rows` and returns rows in the input order.
pub fn smooth_rows(rows: &[KeypointRow], cfg: &SmoothingConfig) -> Result<Vec<KeypointRow>> {
    let mut smoothed: BTreeMap<(i64, i64), KeypointSample> = BTreeMap::new();
    for (frames, track) in tracks_from_rows(rows)? {
        let out = smooth_track(&track, cfg)?;
        for (f, s) in frames.into_iter().zip(out.series) {
            smoothed.insert((track.keypoint_id, f), s);
        }
    }
    Ok(rows
        .iter()
        .map(|r| {
            let s = smoothed[&(r.keypoint, r.frame)];
            KeypointRow {
                frame: r.frame,
                keypoint: r.keypoint,
                x: s.x,
                y: s.y,
                confidence: s.confidence,
            }
        })
        .collect())
}
