//! Frames, frame sequences and the blending accumulator.
//!
//! Intensities are stored as `f64` in row-major RGB order. Frames that come
//! from disk or from [`PixelAccumulator::finalize`] are always inside
//! `[0, 1]`; frames built by codecs inside the latent harness may carry any
//! finite value until they are clamped or written out.

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// A dense RGB raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Builds a frame, checking that `data` has `width * height * 3` finite
    /// samples inside `[0, 1]`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let frame = Self::unbounded(width, height, data)?;
        if let Some(v) = frame.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Shape(format!(
                "frame intensity {v} outside [0, 1]"
            )));
        }
        Ok(frame)
    }

    /// Builds a frame whose samples only need to be finite. Used for decoded
    /// latents, which are not range-limited until they are clamped.
    pub fn unbounded(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty frame {width}x{height}")));
        }
        if data.len() != width * height * CHANNELS {
            return Err(Error::Shape(format!(
                "frame {width}x{height} needs {} samples, got {}",
                width * height * CHANNELS,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("frame contains a non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height * CHANNELS])
    }

    /// Builds a frame from a per-pixel closure returning RGB.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn clamped(&self) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    /// Rounds every sample to the nearest of the 256 8-bit levels, half up.
    pub fn quantized(&self) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self
                .to_bytes()
                .into_iter()
                .map(|b| f64::from(b) / 255.0)
                .collect(),
        }
    }

    /// 8-bit samples, clamped then rounded half up.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    pub(crate) fn same_shape(&self, other: &Frame) -> bool {
        self.dims() == other.dims()
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// A non-empty ordered list of equally sized frames. Public indices are
/// 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Shape("frame sequence is empty".into()))?;
        for (i, f) in frames.iter().enumerate() {
            if !f.same_shape(first) {
                return Err(Error::Shape(format!(
                    "frame {} is {}x{} but frame 1 is {}x{}",
                    i + 1,
                    f.width,
                    f.height,
                    first.width,
                    first.height
                )));
            }
        }
        Ok(Self { frames })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Frame `index`, 1-based.
    pub fn frame(&self, index: usize) -> Result<&Frame> {
        index
            .checked_sub(1)
            .and_then(|i| self.frames.get(i))
            .ok_or(Error::OutOfRange {
                index,
                len: self.len(),
            })
    }

    /// Frame `index` (1-based) without bounds reporting. Panics if out of range.
    #[inline]
    pub fn get(&self, index: usize) -> &Frame {
        &self.frames[index - 1]
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Frame> {
        self.frames.iter()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn reversed(&self) -> FrameSequence {
        FrameSequence {
            frames: self.frames.iter().rev().cloned().collect(),
        }
    }

    /// Fails unless `other` has the same length and frame size.
    pub fn check_compatible(&self, other: &FrameSequence, what: &str) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "{what}: sequence lengths differ ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        if self.dims() != other.dims() {
            let (a, b) = (self.dims(), other.dims());
            return Err(Error::Shape(format!(
                "{what}: frame sizes differ ({}x{} vs {}x{})",
                a.0, a.1, b.0, b.1
            )));
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a FrameSequence {
    type Item = &'a Frame;
    type IntoIter = std::slice::Iter<'a, Frame>;

    fn into_iter(self) -> Self::IntoIter {
        self.frames.iter()
    }
}

/// Un-normalized blend of `count` frames. Blending is plain addition; the
/// division by the number of contributing frames happens once, in
/// [`finalize`](Self::finalize).
///
/// Sums are compensated: each sample keeps the rounding error of its
/// running sum alongside it, so the result does not depend on the order
/// in which contributions were added.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelAccumulator {
    width: usize,
    height: usize,
    sum: Vec<f64>,
    compensation: Vec<f64>,
    count: usize,
}

/// Error-free addition: `a + b == s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl PixelAccumulator {
    pub fn empty(width: usize, height: usize) -> Self {
        let len = width * height * CHANNELS;
        Self {
            width,
            height,
            sum: vec![0.0; len],
            compensation: vec![0.0; len],
            count: 0,
        }
    }

    pub(crate) fn from_parts(
        width: usize,
        height: usize,
        sum: Vec<f64>,
        compensation: Vec<f64>,
        count: usize,
    ) -> Self {
        debug_assert_eq!(sum.len(), width * height * CHANNELS);
        debug_assert_eq!(compensation.len(), sum.len());
        Self {
            width,
            height,
            sum,
            compensation,
            count,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Leading part of the running sums.
    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    /// Accumulated rounding error of [`sum`](Self::sum).
    pub fn compensation(&self) -> &[f64] {
        &self.compensation
    }

    /// Best estimate of each sample's sum.
    pub fn total(&self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.compensation)
            .map(|(s, c)| s + c)
            .collect()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `self ⊕= other`.
    pub fn accumulate(&mut self, other: &PixelAccumulator) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "cannot blend {}x{} into {}x{}",
                other.width, other.height, self.width, self.height
            )));
        }
        for i in 0..self.sum.len() {
            let (s, e) = two_sum(self.sum[i], other.sum[i]);
            self.sum[i] = s;
            self.compensation[i] += e + other.compensation[i];
        }
        self.count += other.count;
        Ok(())
    }

    /// `self ⊕= frame`; a frame counts as one contribution.
    pub fn accumulate_frame(&mut self, frame: &Frame) -> Result<()> {
        if self.dims() != frame.dims() {
            return Err(Error::Shape(format!(
                "cannot blend {}x{} frame into {}x{}",
                frame.width, frame.height, self.width, self.height
            )));
        }
        for (i, b) in frame.data.iter().enumerate() {
            let (s, e) = two_sum(self.sum[i], *b);
            self.sum[i] = s;
            self.compensation[i] += e;
        }
        self.count += 1;
        Ok(())
    }

    /// Mean of the contributions, clamped to `[0, 1]`.
    pub fn finalize(&self) -> Result<Frame> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.count as f64;
        let data = self
            .total()
            .into_iter()
            .map(|s| (s / n).clamp(0.0, 1.0))
            .collect();
        Frame::new(self.width, self.height, data)
    }
}

impl From<&Frame> for PixelAccumulator {
    fn from(frame: &Frame) -> Self {
        Self::from(frame.clone())
    }
}

impl From<Frame> for PixelAccumulator {
    fn from(frame: Frame) -> Self {
        let len = frame.data.len();
        Self {
            width: frame.width,
            height: frame.height,
            sum: frame.data,
            compensation: vec![0.0; len],
            count: 1,
        }
    }
}
