//! Symbolic payloads: instead of pixels, track which frames went into a
//! blend and how many times each was remapped. Running the table and the
//! blend strategies over these gives the exact depth expansion of every
//! output frame.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{Blend, Remapper};
use crate::error::Result;

/// A multiset of `(frame, depth)` contributions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Contributions(Vec<(usize, usize)>);

impl Contributions {
    /// Frame `j` taken as is.
    pub fn frame(j: usize) -> Self {
        Self(vec![(j, 0)])
    }

    pub fn items(&self) -> &[(usize, usize)] {
        &self.0
    }

    /// Depths per frame, in frame order.
    pub fn by_frame(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(j, d) in &self.0 {
            map.entry(j).or_default().push(d);
        }
        map
    }

    /// Depth per frame, when every frame appears exactly once.
    pub fn depths(&self) -> Option<BTreeMap<usize, usize>> {
        let mut map = BTreeMap::new();
        for &(j, d) in &self.0 {
            if map.insert(j, d).is_some() {
                return None;
            }
        }
        Some(map)
    }

    pub fn max_depth(&self) -> usize {
        self.0.iter().map(|&(_, d)| d).max().unwrap_or(0)
    }

    /// Renders as `[X^{1->4}]_2 ⊕ [X^{2->4}]_1 ⊕ X^4`, highest depth first.
    pub fn render(&self, target: usize) -> String {
        let mut items = self.0.clone();
        items.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        items
            .iter()
            .map(|&(j, d)| {
                if d == 0 {
                    format!("X^{j}")
                } else {
                    format!("[X^{{{j}->{target}}}]_{d}")
                }
            })
            .collect::<Vec<_>>()
            .join(" ⊕ ")
    }
}

impl Blend for Contributions {
    fn blend(&mut self, other: &Self) -> Result<()> {
        self.0.extend_from_slice(&other.0);
        Ok(())
    }

    fn count(&self) -> usize {
        self.0.len()
    }
}

/// Remapper that only adds one to every contribution's depth and counts
/// how often it was asked.
#[derive(Debug, Default)]
pub struct SymbolicRemapper {
    remaps: AtomicUsize,
}

impl SymbolicRemapper {
    pub fn remaps(&self) -> usize {
        self.remaps.load(Ordering::SeqCst)
    }
}

impl Remapper<Contributions> for SymbolicRemapper {
    fn remap(&self, payload: &Contributions, _from: usize, _to: usize) -> Result<Contributions> {
        self.remaps.fetch_add(1, Ordering::SeqCst);
        Ok(Contributions(
            payload.0.iter().map(|&(j, d)| (j, d + 1)).collect(),
        ))
    }
}
