//! Fuse a scene dataset into a metric-semantic global map and save it.
//!
//! Run with: `cargo run --example build_map`

use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::persist::save_map;
use strata::scenegen::{demo_spec, generate_scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("strata-example-map");
    let scene_dir = dir.join("scene");
    generate_scene(&demo_spec(), &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;

    let map = build_map(&dataset, &FusionConfig::default())?;
    println!("map points: {}", map.points.len());

    let labeled = map.points.iter().filter(|p| p.terrain.is_some()).count();
    println!("terrain-labeled points: {labeled}");
    let max_slots = map.points.iter().map(|p| p.slots.len()).max().unwrap_or(0);
    println!("largest per-point embedding slot set: {max_slots}");

    let map_path = dir.join("map.json");
    save_map(&map, &map_path)?;
    println!("saved to {}", map_path.display());
    Ok(())
}
