//! Frame files: binary PPM (P6, maxval 255, bit exact) and 8-bit PNG.
//!
//! Sequences are addressed with a printf-style template such as
//! `frame_%05d.ppm`, numbered contiguously from 1.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameSequence};

pub const DEFAULT_PATTERN: &str = "frame_%05d.ppm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }

    /// Default template for this format, e.g. `frame_%05d.png`.
    pub fn default_pattern(self) -> String {
        format!("frame_%05d.{}", self.extension())
    }
}

impl std::str::FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppm" => Ok(ImageFormat::Ppm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// A parsed `prefix%0Nd suffix` filename template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilenameTemplate {
    prefix: String,
    width: usize,
    suffix: String,
}

impl FilenameTemplate {
    pub fn parse(pattern: &str) -> Result<Self> {
        let start = pattern
            .find('%')
            .ok_or_else(|| Error::Config(format!("template {pattern:?} has no %d field")))?;
        let rest = &pattern[start + 1..];
        let end = rest
            .find('d')
            .ok_or_else(|| Error::Config(format!("template {pattern:?} has no %d field")))?;
        let spec = &rest[..end];
        let width = if spec.is_empty() {
            0
        } else {
            spec.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad width in template {pattern:?}")))?
        };
        let suffix = &rest[end + 1..];
        if suffix.contains('%') {
            return Err(Error::Config(format!(
                "template {pattern:?} has more than one field"
            )));
        }
        Ok(Self {
            prefix: pattern[..start].to_string(),
            width,
            suffix: suffix.to_string(),
        })
    }

    pub fn render(&self, index: usize) -> String {
        format!(
            "{}{:0width$}{}",
            self.prefix,
            index,
            self.suffix,
            width = self.width
        )
    }

    /// Index encoded in `name`, if it matches the template.
    pub fn match_index(&self, name: &str) -> Option<usize> {
        let digits = name
            .strip_prefix(self.prefix.as_str())?
            .strip_suffix(self.suffix.as_str())?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() < self.width {
            return None;
        }
        digits.parse().ok()
    }
}

/// Loads `pattern`-numbered frames 1..=n from `dir`.
pub fn load_sequence(dir: impl AsRef<Path>, pattern: &str) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let template = FilenameTemplate::parse(pattern)?;
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indices = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(i) = entry.file_name().to_str().and_then(|n| template.match_index(n)) {
            indices.push(i);
        }
    }
    indices.sort_unstable();
    indices.dedup();
    if indices.is_empty() {
        return Err(Error::EmptySequence {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    for (expected, &found) in (1..).zip(&indices) {
        if found != expected {
            return Err(Error::Gap {
                dir: dir.to_path_buf(),
                index: expected,
            });
        }
    }

    let mut frames: Vec<Frame> = Vec::with_capacity(indices.len());
    let mut first_path = PathBuf::new();
    for &i in &indices {
        let path = dir.join(template.render(i));
        let frame = load_frame(&path)?;
        if let Some(first) = frames.first() {
            if first.dims() != frame.dims() {
                return Err(Error::Shape(format!(
                    "{} is {}x{} but {} is {}x{}",
                    path.display(),
                    frame.width(),
                    frame.height(),
                    first_path.display(),
                    first.width(),
                    first.height()
                )));
            }
        } else {
            first_path = path.clone();
        }
        frames.push(frame);
    }
    FrameSequence::new(frames)
}

/// Loads one PPM (P6/P5) or PNG file, detected from its magic bytes.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(&bytes).map_err(|reason| Error::format(path, reason))
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes).map_err(|reason| Error::format(path, reason))
    } else {
        Err(Error::format(path, "neither binary PPM nor PNG"))
    }
}

pub fn save_frame(frame: &Frame, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Ppm => encode_ppm(frame),
        ImageFormat::Png => encode_png(frame).map_err(|reason| Error::format(path, reason))?,
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Writes every frame of `seq` into `dir` using `pattern`, creating `dir`.
pub fn save_sequence(
    seq: &FrameSequence,
    dir: impl AsRef<Path>,
    pattern: &str,
    format: ImageFormat,
) -> Result<()> {
    let dir = dir.as_ref();
    let template = FilenameTemplate::parse(pattern)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in (1..).zip(seq) {
        save_frame(frame, dir.join(template.render(i)), format)?;
    }
    Ok(())
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.to_bytes());
    out
}

fn decode_pnm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let gray = &bytes[..2] == b"P5";
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("truncated PPM header")?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after PPM header".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(format!("maxval {maxval} is not supported (need 255)"));
    }
    let samples = width * height * if gray { 1 } else { 3 };
    let raster = bytes
        .get(pos..pos + samples)
        .ok_or_else(|| format!("raster truncated: need {samples} bytes"))?;
    let rgb: Vec<u8> = if gray {
        raster.iter().flat_map(|&g| [g, g, g]).collect()
    } else {
        raster.to_vec()
    };
    Frame::from_bytes(width, height, &rgb).map_err(|e| e.to_string())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<Frame, String> {
    use image::{DynamicImage, ImageFormat as Fmt};
    let img = image::load_from_memory_with_format(bytes, Fmt::Png).map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let rgb = match img {
        DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_) => img.into_rgb8(),
        other => return Err(format!("unsupported PNG color type {:?}", other.color())),
    };
    Frame::from_bytes(w, h, rgb.as_raw()).map_err(|e| e.to_string())
}

fn encode_png(frame: &Frame) -> std::result::Result<Vec<u8>, String> {
    let img = image::RgbImage::from_raw(
        frame.width() as u32,
        frame.height() as u32,
        frame.to_bytes(),
    )
    .ok_or("frame buffer size mismatch")?;
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(out.into_inner())
}
