//! Estimate a nearest-neighbor field between a frame and a translated copy,
//! then compare PatchMatch against the exhaustive search.
//!
//! cargo run --example nnf

use std::collections::BTreeMap;

use patchblend::patchmatch::{brute_force_nnf, estimate_nnf, PatchConfig};
use patchblend::synthetic::{shifted, smooth_frame};

fn main() -> patchblend::Result<()> {
    let source = smooth_frame(48, 32, 8, 1);
    let target = shifted(&source, 4, -2);
    let cfg = PatchConfig {
        patch_size: 5,
        iterations: 6,
        seed: 7,
        ..PatchConfig::default()
    };

    let nnf = estimate_nnf(&source, &target, &cfg)?;
    let mut offsets: BTreeMap<(isize, isize), usize> = BTreeMap::new();
    for y in 0..nnf.height() {
        for x in 0..nnf.width() {
            let e = nnf.entry(x, y);
            let d = (e.sx as isize - x as isize, e.sy as isize - y as isize);
            *offsets.entry(d).or_default() += 1;
        }
    }
    let mut ranked: Vec<_> = offsets.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    println!("most common source offsets (expect (-4, 2)):");
    for ((dx, dy), count) in ranked.iter().take(3) {
        println!("  ({dx:+}, {dy:+}): {count} pixels");
    }

    let exact = brute_force_nnf(&source, &target, &cfg)?;
    println!(
        "total cost: patchmatch {:.3}, exhaustive {:.3}",
        nnf.total_cost(),
        exact.total_cost()
    );

    // the field remaps any payload living on the source frame
    let rebuilt = nnf.remap(&source)?;
    let err: f64 = rebuilt
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / target.data().len() as f64;
    println!("mean abs error of the remapped source vs target: {err:.4}");
    Ok(())
}
