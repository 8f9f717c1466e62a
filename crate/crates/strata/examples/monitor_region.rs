//! Rank regions against a semantic query and list the member places worth
//! watching.
//!
//! Uses a campus-style scene with four well-separated zones so the region
//! layer actually partitions the map; each terrain query should pick out
//! the places of exactly one zone.
//!
//! Run with: `cargo run --example monitor_region`

use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::places::{build_places_layer, PlacesConfig};
use strata::query::{monitor_region, QueryConfig};
use strata::regions::{agglomerative_regions, RegionConfig};
use strata::scenegen::{demo_spec, generate_scene, PatchSpec, SceneSpec};

fn four_zone_spec() -> SceneSpec {
    let zone = |terrain: u32, name: &str, rect: (f64, f64, f64, f64)| PatchSpec {
        terrain,
        name: name.into(),
        rect,
    };
    SceneSpec {
        seed: 9,
        extent: (120.0, 120.0),
        terrain_patches: vec![
            zone(0, "plaza", (0.0, 0.0, 30.0, 30.0)),
            zone(1, "lawn", (84.0, 30.0, 120.0, 56.0)),
            zone(2, "lot", (92.0, 92.0, 120.0, 120.0)),
            zone(3, "trail", (0.0, 102.0, 30.0, 120.0)),
        ],
        objects: Vec::new(),
        trajectory: vec![
            (5.0, 5.0),
            (25.0, 25.0),
            (102.0, 43.0),
            (106.0, 106.0),
            (15.0, 111.0),
        ],
        ..demo_spec()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene_dir = std::env::temp_dir().join("strata-example-monitor");
    let spec = four_zone_spec();
    generate_scene(&spec, &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;
    let map = build_map(&dataset, &FusionConfig::default())?;
    let places = build_places_layer(&map, &dataset, &PlacesConfig::default())?;
    let hierarchy = agglomerative_regions(&places, &RegionConfig::default())?;
    println!(
        "hierarchy: {} levels, {} regions at the finest level",
        hierarchy.num_levels(),
        hierarchy.levels[0].len()
    );

    let cfg = QueryConfig {
        top_k_regions: 1,
        alpha: 0.25,
        ..Default::default()
    };
    for patch in &spec.terrain_patches {
        let query = dataset
            .terrain_embedding(patch.terrain)
            .expect("every terrain class has an embedding");
        let watched = monitor_region(&hierarchy, &places, query, &cfg)?;
        let in_zone = watched
            .iter()
            .filter(|&&id| {
                places
                    .node(id)
                    .is_some_and(|n| n.terrain == patch.terrain)
            })
            .count();
        println!(
            "query {:?}: watch {} place(s), {} on matching terrain: {:?}",
            patch.name,
            watched.len(),
            in_zone,
            watched
        );
    }
    Ok(())
}
