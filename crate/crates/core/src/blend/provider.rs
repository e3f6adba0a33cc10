use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use lru::LruCache;
use serde::Serialize;

use super::Remapper;
use crate::error::{Error, Result};
use crate::frame::FrameSequence;
use crate::patchmatch::{estimate_nnf, Nnf, PatchConfig, Remappable};

pub const DEFAULT_CACHE_CAPACITY: usize = 1024;

type Slot = Arc<OnceLock<Arc<Nnf>>>;

/// Counters kept by a [`RemapProvider`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ProviderStats {
    /// Distinct PatchMatch runs.
    pub nnf_estimations: usize,
    /// Remap operator applications, each of which needs one field.
    pub remap_applications: usize,
}

/// Supplies the remap operator `[j -> i]` for a fixed guide sequence.
///
/// Fields are estimated on the guide pair `(j, i)` and cached by ordered
/// pair, so `[j -> i]` and `[i -> j]` are separate entries. Concurrent
/// requests for the same pair run PatchMatch once.
pub struct RemapProvider {
    guides: Arc<FrameSequence>,
    cfg: PatchConfig,
    cache: Mutex<LruCache<(usize, usize), Slot>>,
    estimations: AtomicUsize,
    remaps: AtomicUsize,
}

impl RemapProvider {
    pub fn new(guides: impl Into<Arc<FrameSequence>>, cfg: PatchConfig) -> Result<Self> {
        Self::with_capacity(guides, cfg, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(
        guides: impl Into<Arc<FrameSequence>>,
        cfg: PatchConfig,
        capacity: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let guides = guides.into();
        let (w, h) = guides.dims();
        if w < cfg.patch_size || h < cfg.patch_size {
            return Err(Error::Shape(format!(
                "guide frames {w}x{h} are smaller than the {}px patch",
                cfg.patch_size
            )));
        }
        let capacity = NonZeroUsize::new(capacity)
            .ok_or_else(|| Error::Config("cache capacity must be >= 1".into()))?;
        Ok(Self {
            guides,
            cfg,
            cache: Mutex::new(LruCache::new(capacity)),
            estimations: AtomicUsize::new(0),
            remaps: AtomicUsize::new(0),
        })
    }

    pub fn guides(&self) -> &FrameSequence {
        &self.guides
    }

    pub fn shared_guides(&self) -> &Arc<FrameSequence> {
        &self.guides
    }

    pub fn config(&self) -> &PatchConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.guides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guides.is_empty()
    }

    pub fn stats(&self) -> ProviderStats {
        ProviderStats {
            nnf_estimations: self.estimations.load(Ordering::SeqCst),
            remap_applications: self.remaps.load(Ordering::SeqCst),
        }
    }

    /// Field mapping guide frame `from` onto guide frame `to` (1-based).
    pub fn nnf(&self, from: usize, to: usize) -> Result<Arc<Nnf>> {
        let source = self.guides.frame(from)?;
        let target = self.guides.frame(to)?;
        let slot = {
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            cache.get_or_insert((from, to), Slot::default).clone()
        };
        let nnf = slot.get_or_init(|| {
            self.estimations.fetch_add(1, Ordering::SeqCst);
            // shapes and config were checked in the constructor
            Arc::new(estimate_nnf(source, target, &self.cfg).expect("validated guide pair"))
        });
        Ok(nnf.clone())
    }

    /// Applies `[from -> to]` to `payload`.
    pub fn remap<P: Remappable>(&self, payload: &P, from: usize, to: usize) -> Result<P> {
        let nnf = self.nnf(from, to)?;
        self.remaps.fetch_add(1, Ordering::SeqCst);
        nnf.remap(payload)
    }

    /// Fails unless `synth` matches the guide sequence in length and size.
    pub fn check_payload(&self, synth: &FrameSequence) -> Result<()> {
        synth.check_compatible(&self.guides, "synthesized vs guide frames")
    }
}

impl<P: Remappable> Remapper<P> for RemapProvider {
    fn remap(&self, payload: &P, from: usize, to: usize) -> Result<P> {
        RemapProvider::remap(self, payload, from, to)
    }
}

impl std::fmt::Debug for RemapProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemapProvider")
            .field("frames", &self.guides.len())
            .field("cfg", &self.cfg)
            .field("stats", &self.stats())
            .finish()
    }
}
