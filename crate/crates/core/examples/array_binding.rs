//! The in-memory entry point meant for foreign callers: flat `f32` arrays
//! shaped `(n, height, width, 3)` and a JSON config string.
//!
//! cargo run --example array_binding

use patchblend::binding::{deflicker, version, ArrayView};

fn main() {
    let (n, h, w) = (4, 10, 10);
    let data: Vec<f32> = (0..n * h * w * 3)
        .map(|i| {
            let frame = i / (h * w * 3);
            let base = ((i / 3) % 7) as f32 / 10.0;
            base + 0.05 * frame as f32
        })
        .collect();

    println!("library version {}", version());
    let config = r#"{"mode": "window", "window": 3, "patch_size": 3, "pm_iters": 4, "seed": 1}"#;
    match deflicker(ArrayView::new(&data, [n, h, w, 3]), None, config) {
        Ok(out) => {
            for f in 0..n {
                let slice = &out[f * h * w * 3..(f + 1) * h * w * 3];
                let mean = slice.iter().sum::<f32>() / slice.len() as f32;
                println!("frame {}: mean {mean:.4}", f + 1);
            }
        }
        Err(e) => eprintln!("deflicker failed: {e}"),
    }

    // errors are values, never panics
    let err = deflicker(ArrayView::new(&data, [n, h, w, 4]), None, config).unwrap_err();
    println!("bad shape -> code {:?}: {}", err.code, err.message);
    let err = deflicker(ArrayView::new(&data, [n, h, w, 3]), None, "{\"window\": 4, \"mode\": \"window\"}")
        .unwrap_err();
    println!("bad config -> code {:?}: {}", err.code, err.message);
}
