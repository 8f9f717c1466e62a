//! Open-vocabulary object retrieval with both strategies: a full map scan
//! and a scene-graph-guided search over a filtered point subset.
//!
//! Run with: `cargo run --example retrieve_objects`

use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::places::{build_places_layer, PlacesConfig};
use strata::query::{retrieve_objects_3dsg, retrieve_objects_ms, QueryConfig};
use strata::regions::{agglomerative_regions, RegionConfig};
use strata::scenegen::{demo_spec, generate_scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene_dir = std::env::temp_dir().join("strata-example-retrieve");
    generate_scene(&demo_spec(), &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;
    let map = build_map(&dataset, &FusionConfig::default())?;
    let places = build_places_layer(&map, &dataset, &PlacesConfig::default())?;
    let hierarchy = agglomerative_regions(&places, &RegionConfig::default())?;

    let cfg = QueryConfig::default();
    for gt in &dataset.ground_truth {
        let query = dataset
            .embedding(&gt.query_embedding_id)
            .expect("ground-truth queries are always present");

        let ms = retrieve_objects_ms(&map, Some(&places), query, &cfg)?;
        let sg = retrieve_objects_3dsg(&hierarchy, &places, &map, query, &cfg)?;
        println!("query {:?}", gt.query_embedding_id);
        for (name, result) in [("map-scan", &ms), ("scene-graph", &sg)] {
            match result.boxes.first() {
                Some(b) => println!(
                    "  {name}: {} box(es); best center ({:.2}, {:.2}, {:.2}) score {:.3} \
                     iou-vs-truth {:.3}",
                    result.boxes.len(),
                    b.bbox.center.x,
                    b.bbox.center.y,
                    b.bbox.center.z,
                    b.score,
                    b.bbox.iou(&gt.obb),
                ),
                None => println!("  {name}: no boxes"),
            }
        }
    }
    Ok(())
}
