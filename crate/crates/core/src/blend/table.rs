//! The hierarchical remapping table.
//!
//! Row 0 holds the frames themselves. In row `k`, every column `c` that is
//! a multiple of `2^k` holds the column sum of column `c - 2^(k-1)` remapped
//! onto the frame at column `c`. The per-column sums then cover the dyadic
//! ranges `[c - lowbit(c) + 1, c]`, exactly like a Fenwick tree, which is
//! what lets a prefix of any length be assembled from at most
//! `floor(log2 n) + 1` stored sums.
//!
//! A reversed table runs the same construction over the index-reversed
//! sequence: column `c` then holds original frame `n + 1 - c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Blend, Remapper};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reversed,
}

/// One stored blend in the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry<P> {
    pub payload: P,
    /// Inclusive range of original frame indices blended into `payload`.
    pub frame_range: (usize, usize),
    /// Largest number of remaps applied to any constituent frame.
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct RemapTable<P> {
    direction: Direction,
    n: usize,
    /// `levels[k][c - 1]`, present when `2^k` divides `c`.
    levels: Vec<Vec<Option<TableEntry<P>>>>,
    column_sums: Vec<P>,
}

/// Lowest set bit of `c`.
#[inline]
pub(crate) fn lowbit(c: usize) -> usize {
    c & c.wrapping_neg()
}

/// Index of the highest level a table over `n` frames has.
pub fn top_level(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// `ceil(log2 n)`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

impl<P: Blend + Send + Sync> RemapTable<P> {
    /// Builds the table. `frame(j)` returns the payload of original frame
    /// `j` (1-based); `remapper` applies `[from -> to]` in original indices.
    pub fn build<R>(
        n: usize,
        direction: Direction,
        frame: impl Fn(usize) -> P + Sync,
        remapper: &R,
    ) -> Result<Self>
    where
        R: Remapper<P> + ?Sized,
    {
        if n == 0 {
            return Err(Error::Shape("cannot build a table over 0 frames".into()));
        }
        let home = |c: usize| home_of(direction, n, c);
        let top = top_level(n);

        let row0: Vec<Option<TableEntry<P>>> = (1..=n)
            .map(|c| {
                let j = home(c);
                Some(TableEntry {
                    payload: frame(j),
                    frame_range: (j, j),
                    depth: 0,
                })
            })
            .collect();
        let mut column_sums: Vec<P> = row0
            .iter()
            .map(|e| e.as_ref().map(|e| e.payload.clone()).expect("row 0 is full"))
            .collect();
        let mut levels = vec![row0];

        for k in 1..=top {
            let step = 1usize << k;
            let half = step >> 1;
            let sums = &column_sums;
            let computed: Vec<(usize, TableEntry<P>)> = (1..=n / step)
                .into_par_iter()
                .map(|i| {
                    let c = i * step;
                    let src = c - half;
                    let payload = remapper.remap(&sums[src - 1], home(src), home(c))?;
                    let (a, b) = (home(c - step + 1), home(src));
                    Ok((
                        c,
                        TableEntry {
                            payload,
                            frame_range: (a.min(b), a.max(b)),
                            depth: k,
                        },
                    ))
                })
                .collect::<Result<_>>()?;

            let mut row: Vec<Option<TableEntry<P>>> = (0..n).map(|_| None).collect();
            for (c, entry) in computed {
                column_sums[c - 1].blend(&entry.payload)?;
                row[c - 1] = Some(entry);
            }
            levels.push(row);
        }

        Ok(Self {
            direction,
            n,
            levels,
            column_sums,
        })
    }

    /// Blend of original frames covered by columns `1..=p`, expressed in
    /// frame `g`'s coordinates.
    ///
    /// Walks `c = p, p - lowbit(p), ...`. A chunk whose home frame is `g`
    /// is taken as is; every other chunk is remapped straight onto `g`.
    pub fn query_prefix<R>(&self, p: usize, g: usize, remapper: &R) -> Result<P>
    where
        R: Remapper<P> + ?Sized,
    {
        if p == 0 || p > self.n {
            return Err(Error::OutOfRange {
                index: p,
                len: self.n,
            });
        }
        if g == 0 || g > self.n {
            return Err(Error::OutOfRange {
                index: g,
                len: self.n,
            });
        }
        let mut acc: Option<P> = None;
        let mut c = p;
        while c > 0 {
            let chunk = &self.column_sums[c - 1];
            let home = self.home(c);
            let part = if home == g {
                chunk.clone()
            } else {
                remapper.remap(chunk, home, g)?
            };
            match acc.as_mut() {
                Some(a) => a.blend(&part)?,
                None => acc = Some(part),
            }
            c -= lowbit(c);
        }
        Ok(acc.expect("p >= 1 yields at least one chunk"))
    }
}

fn home_of(direction: Direction, n: usize, c: usize) -> usize {
    match direction {
        Direction::Forward => c,
        Direction::Reversed => n + 1 - c,
    }
}

impl<P> RemapTable<P> {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of levels, `floor(log2 n) + 1`.
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// Original frame index stored in row 0 of `column`.
    pub fn home(&self, column: usize) -> usize {
        home_of(self.direction, self.n, column)
    }

    /// Entry at `level` and 1-based `column`, if one exists there.
    pub fn entry(&self, level: usize, column: usize) -> Option<&TableEntry<P>> {
        self.levels
            .get(level)?
            .get(column.checked_sub(1)?)?
            .as_ref()
    }

    /// Blend of every entry in 1-based `column`.
    pub fn column_sum(&self, column: usize) -> Option<&P> {
        self.column_sums.get(column.checked_sub(1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_helpers() {
        assert_eq!(lowbit(6), 2);
        assert_eq!(lowbit(8), 8);
        assert_eq!(top_level(1), 0);
        assert_eq!(top_level(8), 3);
        assert_eq!(top_level(9), 3);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }
}
