//! Generate a synthetic scene dataset on disk and inspect what was written.
//!
//! Run with: `cargo run --example generate_scene`

use strata::dataset::load_scene;
use strata::scenegen::{demo_spec, generate_scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("strata-example-scene");
    let spec = demo_spec();
    generate_scene(&spec, &out)?;
    println!("scene written to {}", out.display());

    // the generated dataset is immediately loadable and fully validated
    let dataset = load_scene(&out)?;
    println!("frames: {}", dataset.frames.len());
    println!("embedding dim: {}", dataset.embedding_dim);
    println!(
        "terrain classes: {:?}",
        dataset
            .terrain_classes
            .iter()
            .map(|c| (c.id, c.name.as_str()))
            .collect::<Vec<_>>()
    );
    for gt in &dataset.ground_truth {
        println!(
            "ground truth {:?}: center ({:.2}, {:.2}, {:.2}), query {:?}",
            gt.label, gt.obb.center.x, gt.obb.center.y, gt.obb.center.z, gt.query_embedding_id
        );
    }
    Ok(())
}
