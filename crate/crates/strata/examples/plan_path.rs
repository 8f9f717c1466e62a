//! Terrain-aware path planning: pick a goal by semantic query, plan under a
//! terrain policy, and render the route over the places graph.
//!
//! Run with: `cargo run --example plan_path`

use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::places::{build_places_layer, PlacesConfig};
use strata::planner::{plan_path, select_goal_node, TerrainPolicy};
use strata::query::QueryConfig;
use strata::regions::{agglomerative_regions, RegionConfig};
use strata::scenegen::{demo_spec, generate_scene};
use strata::svg::render_places_svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("strata-example-plan");
    let scene_dir = dir.join("scene");
    generate_scene(&demo_spec(), &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;
    let map = build_map(&dataset, &FusionConfig::default())?;
    let places = build_places_layer(&map, &dataset, &PlacesConfig::default())?;
    let hierarchy = agglomerative_regions(&places, &RegionConfig::default())?;

    // goal: the place nearest the best "fountain" retrieval hit
    let query = dataset
        .embedding("query/fountain")
        .expect("demo scene defines a fountain");
    let goal = select_goal_node(&hierarchy, &places, &map, query, &QueryConfig::default())?;
    let start = 0;
    println!("start place {start}, goal place {goal}");

    // plain shortest path vs. one that makes grass (terrain 1) expensive
    let free = plan_path(&places, start, goal, &TerrainPolicy::default())?;
    println!(
        "unconstrained: {} hops, cost {:.2}, length {:.2} m",
        free.nodes.len() - 1,
        free.total_cost,
        free.total_length
    );

    let mut policy = TerrainPolicy::default();
    policy.multiplier.insert(1, 3.0);
    let averse = plan_path(&places, start, goal, &policy)?;
    println!(
        "grass-averse: {} hops, cost {:.2}, length {:.2} m",
        averse.nodes.len() - 1,
        averse.total_cost,
        averse.total_length
    );

    let svg_path = dir.join("overlay.svg");
    std::fs::write(&svg_path, render_places_svg(&places, Some(&averse.nodes)))?;
    println!("route rendering: {}", svg_path.display());
    Ok(())
}
