//! The `patchblend` command line.
//!
//! Settings come from an optional JSON file (`--config`) with flags layered
//! on top. Commands that write a directory also drop the effective settings
//! there as `run_config.json`; paths and the thread count are left out of
//! that echo so two runs that differ only in where they write or how many
//! workers they use produce byte-identical directories.
//!
//! Exit codes: 0 success, 1 `blend-compare` difference above tolerance,
//! 2 configuration error, 3 I/O or format error, 4 shape mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::blend::{self, blend_all_remap_bound, BlendMode, RemapProvider};
use crate::error::{Error, Result};
use crate::frame::FrameSequence;
use crate::io::{self, ImageFormat, DEFAULT_PATTERN};
use crate::keypoints::{self, SmoothingConfig};
use crate::latent::{
    run_generation, AlphaSchedule, FlickerDenoiser, GenerationConfig, IdentityDeflicker,
    PatchBlendDeflicker, PixelCodec, StartMode, WindowSetting,
};
use crate::metrics::{pixel_mse, ConsistencyReport};
use crate::patchmatch::{estimate_nnf, PatchConfig};
use crate::synthetic::texture_frame;

pub const CONFIG_ECHO: &str = "run_config.json";

#[derive(Debug, Parser)]
#[command(name = "patchblend", version, about = "Patch-blending video deflicker toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the matching key of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Directory holding the input frame sequence (or CSV for `smooth`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory holding the guide sequence; defaults to the input.
    #[arg(long, global = true)]
    pub guide: Option<PathBuf>,
    /// Output directory or file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// `window` or `full`.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Odd window size or `full`. For `smooth` this is the filter window.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// PatchMatch patch side length (odd).
    #[arg(long, global = true)]
    pub patch_size: Option<usize>,
    /// PatchMatch iterations.
    #[arg(long, global = true)]
    pub pm_iters: Option<usize>,
    /// Run the deflicker step every this many sampling steps.
    #[arg(long, global = true)]
    pub freq: Option<usize>,
    /// Number of sampling steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output image format, `ppm` or `png`.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Largest accepted mean absolute difference in `blend-compare`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blend a synthesized sequence through its guide correspondences.
    Deflicker,
    /// Estimate and dump the nearest-neighbor field between two images.
    Nnf { source: PathBuf, target: PathBuf },
    /// Compare the table-based full blend against the direct one.
    BlendCompare,
    /// Run the toy latent generation with and without deflickering.
    LatentDemo {
        /// Deflicker method: `blend` or `identity`.
        #[arg(long)]
        method: Option<String>,
        /// Standard deviation of the toy denoiser's per-frame bias.
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Savitzky-Golay smoothing of a keypoint CSV.
    Smooth {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Adjacent-frame Pixel-MSE of a sequence, as JSON.
    Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Window,
    #[default]
    Full,
}

/// Every setting the commands read. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing)]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub guide: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    /// Input file template; `None` tries `.ppm` then `.png` frames.
    pub pattern: Option<String>,
    pub mode: ModeName,
    pub window: WindowSetting,
    pub patch_size: usize,
    pub pm_iters: usize,
    pub search_radius: Option<usize>,
    pub radius_decay: f64,
    pub seed: u64,
    pub format: ImageFormat,
    pub tolerance: f64,
    pub cache_capacity: usize,
    // latent-demo
    pub freq: usize,
    pub steps: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub start: StartMode,
    pub strength: f64,
    pub beta_scale: f64,
    pub jitter: f64,
    pub method: String,
    // smooth
    pub sg_window: usize,
    pub sg_order: usize,
    pub confidence_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pc = PatchConfig::default();
        let gc = GenerationConfig::default();
        let sc = SmoothingConfig::default();
        Self {
            input: None,
            guide: None,
            output: None,
            threads: None,
            pattern: None,
            mode: ModeName::Full,
            window: WindowSetting::Full,
            patch_size: pc.patch_size,
            pm_iters: pc.iterations,
            search_radius: pc.search_radius,
            radius_decay: pc.radius_decay,
            seed: 0,
            format: ImageFormat::Ppm,
            tolerance: 0.02,
            cache_capacity: blend::DEFAULT_CACHE_CAPACITY,
            freq: gc.deflicker_frequency,
            steps: gc.steps,
            frames: gc.frames,
            width: gc.width,
            height: gc.height,
            start: gc.mode,
            strength: gc.strength,
            beta_scale: gc.beta_scale,
            jitter: 0.03,
            method: "blend".into(),
            sg_window: sc.window,
            sg_order: sc.order,
            confidence_threshold: sc.confidence_threshold,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `--config` if given and applies the flag overrides. `smooth`
    /// reads `--window` as the filter window.
    pub fn resolve(flags: &Flags, smoothing: bool) -> Result<Self> {
        let mut c = match &flags.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($flag:ident => $key:ident),*) => {
                $(if let Some(v) = flags.$flag.clone() { c.$key = v.into(); })*
            };
        }
        set!(input => input, guide => guide, output => output, threads => threads,
             patch_size => patch_size, pm_iters => pm_iters, freq => freq, steps => steps,
             seed => seed, tolerance => tolerance);
        if let Some(m) = &flags.mode {
            c.mode = match m.as_str() {
                "window" => ModeName::Window,
                "full" => ModeName::Full,
                other => {
                    return Err(Error::Config(format!(
                        "--mode must be \"window\" or \"full\", got {other:?}"
                    )))
                }
            };
        }
        if let Some(w) = &flags.window {
            if smoothing {
                c.sg_window = w.parse().map_err(|_| {
                    Error::Config(format!("--window must be an odd integer for smooth, got {w:?}"))
                })?;
            } else {
                c.window = w.parse()?;
            }
        }
        if let Some(f) = &flags.format {
            c.format = f.parse()?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.patch_config().validate()?;
        self.blend_mode()?;
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        if self.cache_capacity == 0 {
            return Err(Error::Config("cache_capacity must be >= 1".into()));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::Config(format!("jitter must be >= 0, got {}", self.jitter)));
        }
        if !["blend", "identity"].contains(&self.method.as_str()) {
            return Err(Error::Config(format!(
                "method must be \"blend\" or \"identity\", got {:?}",
                self.method
            )));
        }
        if let Some(out) = &self.output {
            for (key, other) in [("input", &self.input), ("guide", &self.guide)] {
                if other.as_deref() == Some(out.as_path()) {
                    return Err(Error::Config(format!(
                        "output and {key} must be different paths, both are {}",
                        out.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn patch_config(&self) -> PatchConfig {
        PatchConfig {
            patch_size: self.patch_size,
            iterations: self.pm_iters,
            search_radius: self.search_radius,
            radius_decay: self.radius_decay,
            seed: self.seed,
        }
    }

    /// `full` mode ignores the window; `window` mode with window `full`
    /// also blends everything.
    pub fn blend_mode(&self) -> Result<BlendMode> {
        match self.mode {
            ModeName::Full => Ok(BlendMode::Full),
            ModeName::Window => self.window.blend_mode(),
        }
    }

    pub fn smoothing(&self) -> SmoothingConfig {
        SmoothingConfig {
            window: self.sg_window,
            order: self.sg_order,
            confidence_threshold: self.confidence_threshold,
        }
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            frames: self.frames,
            width: self.width,
            height: self.height,
            latent_dim: None,
            steps: self.steps,
            deflicker_frequency: self.freq,
            window: match self.mode {
                ModeName::Full => WindowSetting::Full,
                ModeName::Window => self.window,
            },
            seed: self.seed,
            mode: self.start,
            strength: self.strength,
            beta_scale: self.beta_scale,
        }
    }

    fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing --{flag}")))
    }

    fn echo_into(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CONFIG_ECHO);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, inside a dedicated worker pool when `--threads`
/// is set. Output is buffered and written once the command finishes.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&cli.flags, matches!(cli.command, Command::Smooth { .. }))?;
    let (mut out_buf, mut err_buf) = (Vec::new(), Vec::new());
    let result = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| dispatch(&cli.command, cfg.clone(), &mut out_buf, &mut err_buf)),
        None => dispatch(&cli.command, cfg, &mut out_buf, &mut err_buf),
    };
    out.write_all(&out_buf).map_err(|e| Error::io("<stdout>", e))?;
    err.write_all(&err_buf).map_err(|e| Error::io("<stderr>", e))?;
    result
}

fn dispatch(
    command: &Command,
    mut cfg: RunConfig,
    out: &mut Vec<u8>,
    err: &mut Vec<u8>,
) -> Result<i32> {
    match command {
        Command::Deflicker => cmd_deflicker(&cfg, out),
        Command::Nnf { source, target } => cmd_nnf(&cfg, source, target, out, err),
        Command::BlendCompare => cmd_blend_compare(&cfg, out),
        Command::LatentDemo { method, jitter } => {
            if let Some(m) = method {
                cfg.method = m.clone();
            }
            if let Some(j) = jitter {
                cfg.jitter = *j;
            }
            cfg.validate()?;
            cmd_latent_demo(&cfg, out)
        }
        Command::Smooth { order, threshold } => {
            if let Some(o) = order {
                cfg.sg_order = *o;
            }
            if let Some(t) = threshold {
                cfg.confidence_threshold = *t;
            }
            cmd_smooth(&cfg, out)
        }
        Command::Metrics => cmd_metrics(&cfg, out),
    }
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

/// Loads a frame directory with the configured pattern, or with the PPM
/// then PNG defaults.
pub fn load_frames(dir: &Path, pattern: Option<&str>) -> Result<FrameSequence> {
    match pattern {
        Some(p) => io::load_sequence(dir, p),
        None => match io::load_sequence(dir, DEFAULT_PATTERN) {
            Err(Error::EmptySequence { .. }) => {
                io::load_sequence(dir, &ImageFormat::Png.default_pattern())
            }
            other => other,
        },
    }
}

fn mse_or_none(seq: &FrameSequence) -> Result<Option<ConsistencyReport>> {
    if seq.len() < 2 {
        Ok(None)
    } else {
        pixel_mse(seq).map(Some)
    }
}

fn load_pair(cfg: &RunConfig) -> Result<(FrameSequence, FrameSequence)> {
    let input = cfg.require(&cfg.input, "input")?;
    let synth = load_frames(input, cfg.pattern.as_deref())?;
    let guides = match &cfg.guide {
        Some(g) => load_frames(g, cfg.pattern.as_deref())?,
        None => synth.clone(),
    };
    synth.check_compatible(&guides, "input vs guide")?;
    Ok((synth, guides))
}

pub fn cmd_deflicker(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let output = cfg.require(&cfg.output, "output")?;
    let (synth, guides) = load_pair(cfg)?;
    let provider = RemapProvider::with_capacity(guides, cfg.patch_config(), cfg.cache_capacity)?;
    let result = blend::deflicker(&synth, cfg.blend_mode()?, &provider)?;
    io::save_sequence(&result, output, &cfg.format.default_pattern(), cfg.format)?;
    cfg.echo_into(output)?;
    // measure what was written, not the unquantized blend
    let written = FrameSequence::new(result.iter().map(|f| f.quantized()).collect())?;
    let before = mse_or_none(&synth)?;
    let after = mse_or_none(&written)?;
    emit(
        out,
        &json!({
            "frames": synth.len(),
            "before_mse": before.map(|r| r.mean),
            "after_mse": after.map(|r| r.mean),
            "remap_applications": provider.stats().remap_applications,
        }),
    )?;
    Ok(0)
}

pub fn cmd_nnf(
    cfg: &RunConfig,
    source: &Path,
    target: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let src = io::load_frame(source)?;
    let dst = io::load_frame(target)?;
    if src.dims() != dst.dims() {
        return Err(Error::Shape(format!(
            "{} is {}x{} but {} is {}x{}",
            source.display(),
            src.width(),
            src.height(),
            target.display(),
            dst.width(),
            dst.height()
        )));
    }
    let nnf = estimate_nnf(&src, &dst, &cfg.patch_config())?;
    let cost = nnf.total_cost();
    match &cfg.output {
        Some(path) => {
            let mut buf = Vec::new();
            nnf.write_dump(&mut buf).map_err(|e| Error::io(path, e))?;
            fs::write(path, buf).map_err(|e| Error::io(path, e))?;
            writeln!(out, "total_cost {cost}").map_err(|e| Error::io("<stdout>", e))?;
        }
        None => {
            nnf.write_dump(&mut *out).map_err(|e| Error::io("<stdout>", e))?;
            writeln!(err, "total_cost {cost}").map_err(|e| Error::io("<stderr>", e))?;
        }
    }
    Ok(0)
}

pub fn cmd_blend_compare(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let (synth, guides) = load_pair(cfg)?;
    let n = synth.len();
    let fast_provider =
        RemapProvider::with_capacity(guides.clone(), cfg.patch_config(), cfg.cache_capacity)?;
    let fast = blend::blend_all(&synth, &fast_provider)?;
    // brute force touches each ordered pair once, so the cache never helps
    let brute_provider = RemapProvider::with_capacity(guides, cfg.patch_config(), 1)?;
    let brute = blend::blend_all_bruteforce(&synth, &brute_provider)?;
    let mut total = 0.0;
    let mut max: f64 = 0.0;
    let mut samples = 0usize;
    for (a, b) in fast.iter().zip(&brute) {
        for (x, y) in a.data().iter().zip(b.data()) {
            let d = (x - y).abs();
            total += d;
            max = max.max(d);
            samples += 1;
        }
    }
    let mean = total / samples as f64;
    let within = mean <= cfg.tolerance;
    let (fs_, bs) = (fast_provider.stats(), brute_provider.stats());
    let report = json!({
        "frames": n,
        "mean_abs_diff": mean,
        "max_abs_diff": max,
        "tolerance": cfg.tolerance,
        "within_tolerance": within,
        "fast": {
            "raw_estimations": fs_.remap_applications,
            "distinct_estimations": fs_.nnf_estimations,
            "bound": blend_all_remap_bound(n),
        },
        "bruteforce": {
            "raw_estimations": bs.remap_applications,
            "distinct_estimations": bs.nnf_estimations,
        },
    });
    if let Some(dir) = &cfg.output {
        cfg.echo_into(dir)?;
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
            .map_err(|e| Error::io(&path, e))?;
    }
    emit(out, &report)?;
    Ok(if within { 0 } else { 1 })
}

pub fn cmd_latent_demo(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let output = cfg.require(&cfg.output, "output")?;
    let gen = cfg.generation();
    gen.validate()?;
    let schedule = AlphaSchedule::linear(gen.steps, gen.beta_scale)?;
    let scene = texture_frame(gen.width, gen.height, 0.3, 0.7, cfg.seed);
    let guides = FrameSequence::new(vec![scene.clone(); gen.frames])?;
    let denoiser = FlickerDenoiser::new(
        schedule.clone(),
        scene.data().to_vec(),
        gen.shared_noise(),
        gen.frames,
        cfg.jitter,
        cfg.seed.wrapping_add(1),
    );
    let codec = PixelCodec {
        width: gen.width,
        height: gen.height,
    };
    let on = if cfg.method == "blend" {
        let method = PatchBlendDeflicker::new(gen.window.blend_mode()?, cfg.patch_config())
            .with_cache_capacity(cfg.cache_capacity);
        run_generation(&gen, &schedule, &denoiser, &codec, &method, Some(&guides))?
    } else {
        run_generation(&gen, &schedule, &denoiser, &codec, &IdentityDeflicker, Some(&guides))?
    };
    let off = run_generation(&gen, &schedule, &denoiser, &codec, &IdentityDeflicker, Some(&guides))?;

    let clamp = |s: &FrameSequence| FrameSequence::new(s.iter().map(|f| f.clamped()).collect());
    let (on_frames, off_frames) = (clamp(&on.frames)?, clamp(&off.frames)?);
    let pattern = cfg.format.default_pattern();
    io::save_sequence(&on_frames, output.join("on"), &pattern, cfg.format)?;
    io::save_sequence(&off_frames, output.join("off"), &pattern, cfg.format)?;
    cfg.echo_into(output)?;

    let on_mse = mse_or_none(&on_frames)?.map(|r| r.mean);
    let off_mse = mse_or_none(&off_frames)?.map(|r| r.mean);
    let ratio = match (on_mse, off_mse) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let report = json!({
        "method": cfg.method,
        "deflicker_steps": on.deflicker_steps,
        "on_pixel_mse": on_mse,
        "off_pixel_mse": off_mse,
        "ratio": ratio,
    });
    let path = output.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    emit(out, &report)?;
    Ok(0)
}

pub fn cmd_smooth(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let input = cfg.require(&cfg.input, "input")?;
    let output = cfg.require(&cfg.output, "output")?;
    let rows = keypoints::read_csv(input)?;
    let smoothed = keypoints::smooth_rows(&rows, &cfg.smoothing())?;
    keypoints::write_csv(output, &smoothed)?;
    let mut ids: Vec<i64> = rows.iter().map(|r| r.keypoint).collect();
    ids.sort_unstable();
    ids.dedup();
    emit(out, &json!({ "rows": rows.len(), "keypoints": ids.len() }))?;
    Ok(0)
}

pub fn cmd_metrics(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let input = cfg.require(&cfg.input, "input")?;
    let seq = load_frames(input, cfg.pattern.as_deref())?;
    let report = pixel_mse(&seq)?;
    let value = serde_json::to_value(&report)?;
    if let Some(path) = &cfg.output {
        fs::write(path, serde_json::to_string_pretty(&value)? + "\n")
            .map_err(|e| Error::io(path, e))?;
    }
    emit(out, &value)?;
    Ok(0)
}
