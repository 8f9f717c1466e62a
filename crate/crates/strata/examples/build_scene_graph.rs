//! Build the places layer and both region hierarchies from a fused map,
//! then persist the assembled scene graph.
//!
//! Run with: `cargo run --example build_scene_graph`

use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::graph::SceneGraph;
use strata::persist::save_graph;
use strata::places::{build_places_layer, PlacesConfig};
use strata::regions::{agglomerative_regions, spectral_regions, RegionConfig};
use strata::scenegen::{demo_spec, generate_scene};
use strata::svg::render_places_svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("strata-example-graph");
    let scene_dir = dir.join("scene");
    generate_scene(&demo_spec(), &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;
    let map = build_map(&dataset, &FusionConfig::default())?;

    let places = build_places_layer(&map, &dataset, &PlacesConfig::default())?;
    println!("place nodes: {}", places.nodes.len());
    println!("place edges: {}", places.edges.len());

    let region_cfg = RegionConfig::default();
    let agglomerative = agglomerative_regions(&places, &region_cfg)?;
    println!(
        "agglomerative hierarchy: {} levels, {} finest regions",
        agglomerative.num_levels(),
        agglomerative.levels[0].len()
    );
    let (spectral, stops) = spectral_regions(&places, &region_cfg)?;
    println!(
        "spectral hierarchy: {} levels, {} finest regions, stop reasons {:?}",
        spectral.num_levels(),
        spectral.levels[0].len(),
        stops
    );

    let graph = SceneGraph {
        places,
        agglomerative: Some(agglomerative),
        spectral: Some(spectral),
        spectral_stops: stops,
        objects: Vec::new(),
    };
    let graph_path = dir.join("graph.json");
    save_graph(&graph, &graph_path)?;
    println!("saved to {}", graph_path.display());

    let svg_path = dir.join("places.svg");
    std::fs::write(&svg_path, render_places_svg(&graph.places, None))?;
    println!("places rendering: {}", svg_path.display());
    Ok(())
}
