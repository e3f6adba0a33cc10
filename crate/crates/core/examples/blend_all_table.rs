//! The remapping table behind the O(n log n) full blend.
//!
//! First the table for eight frames is printed symbolically, showing which
//! frames each entry holds and how often each was remapped. Then the real
//! pixel blend is compared with the quadratic direct blend.
//!
//! cargo run --example blend_all_table

use patchblend::blend::symbolic::{Contributions, SymbolicRemapper};
use patchblend::blend::{
    blend_all, blend_all_bruteforce, blend_all_remap_bound, blend_all_with, Direction,
    RemapProvider, RemapTable,
};
use patchblend::frame::FrameSequence;
use patchblend::patchmatch::PatchConfig;
use patchblend::synthetic::{shifted, smooth_frame};

fn main() -> patchblend::Result<()> {
    let n = 8;
    let remapper = SymbolicRemapper::default();
    let table = RemapTable::build(n, Direction::Forward, Contributions::frame, &remapper)?;
    for level in 1..table.levels() {
        for column in 1..=n {
            if let Some(entry) = table.entry(level, column) {
                println!("row {level}, column {column}: {}", entry.payload.render(column));
            }
        }
    }
    let blended = blend_all_with(n, Contributions::frame, &remapper)?;
    println!("output 6 = {}", blended[5].render(6));

    // a slowly panning scene
    let scene = smooth_frame(64, 40, 10, 2);
    let guides = FrameSequence::new((0..16).map(|i| shifted(&scene, i / 2, 0)).collect())?;
    let cfg = PatchConfig::default();
    let fast = RemapProvider::new(guides.clone(), cfg)?;
    let brute = RemapProvider::new(guides.clone(), cfg)?;
    let a = blend_all(&guides, &fast)?;
    let b = blend_all_bruteforce(&guides, &brute)?;
    let diff: f64 = a
        .iter()
        .zip(&b)
        .flat_map(|(x, y)| x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()))
        .sum::<f64>()
        / (16 * 64 * 40 * 3) as f64;
    println!(
        "16 frames: table blend used {} fields (bound {}), direct blend {}; mean abs diff {diff:.4}",
        fast.stats().nnf_estimations,
        blend_all_remap_bound(16),
        brute.stats().nnf_estimations
    );
    Ok(())
}
