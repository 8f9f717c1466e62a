//! Score retrieval against the generated ground truth: oriented-box IoU,
//! accuracy, precision, and F1.
//!
//! Run with: `cargo run --example evaluate_retrieval`

use std::collections::BTreeMap;
use strata::dataset::load_scene;
use strata::fusion::{build_map, FusionConfig};
use strata::query::{eval_retrieval, retrieve_objects_ms, QueryConfig, RetrievalResult};
use strata::scenegen::{demo_spec, generate_scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene_dir = std::env::temp_dir().join("strata-example-eval");
    generate_scene(&demo_spec(), &scene_dir)?;
    let dataset = load_scene(&scene_dir)?;
    let map = build_map(&dataset, &FusionConfig::default())?;

    let cfg = QueryConfig::default();
    let mut results: BTreeMap<String, RetrievalResult> = BTreeMap::new();
    for gt in &dataset.ground_truth {
        let query = dataset
            .embedding(&gt.query_embedding_id)
            .expect("ground-truth queries are always present");
        results.insert(
            gt.query_embedding_id.clone(),
            retrieve_objects_ms(&map, None, query, &cfg)?,
        );
    }

    let metrics = eval_retrieval(&dataset.ground_truth, &results, 0.25)?;
    println!("mean IoU:          {:.3}", metrics.mean_iou);
    println!("strict accuracy:   {:.3}", metrics.strict_accuracy);
    println!("relaxed accuracy:  {:.3}", metrics.relaxed_accuracy);
    println!("strict precision:  {:.3}", metrics.strict_precision);
    println!("relaxed precision: {:.3}", metrics.relaxed_precision);
    println!("F1:                {:.3}", metrics.f1);
    for o in &metrics.per_object {
        println!(
            "  {:<10} best IoU {:.3}, top-1 IoU {:.3}",
            o.label, o.best_iou, o.top1_iou
        );
    }
    Ok(())
}
