//! Retrieval evaluation metrics over oriented boxes.

use super::{QueryError, RetrievalResult};
use crate::dataset::GroundTruthObject;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-ground-truth-object scoring detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub label: String,
    pub query_embedding_id: String,
    /// Best IoU over the query's predicted boxes.
    pub best_iou: f64,
    /// IoU of the query's top-1 (highest-scored) box, 0 when none.
    pub top1_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mean_iou: f64,
    pub strict_accuracy: f64,
    pub relaxed_accuracy: f64,
    pub strict_precision: f64,
    pub relaxed_precision: f64,
    /// Harmonic mean of relaxed accuracy and relaxed precision.
    pub f1: f64,
    pub iou_threshold: f64,
    pub per_object: Vec<ObjectScore>,
}

/// Score predictions against ground truth.
///
/// Accuracy is per ground-truth object: strict counts an object when its
/// query's top-1 box reaches the IoU threshold, relaxed when any box does.
/// Precision is per predicted box: relaxed counts a box that reaches the
/// threshold against some ground-truth object of its query, strict
/// additionally requires the box to be its query's top-1. The query sets of
/// `gt` and `results` must match exactly.
pub fn eval_retrieval(
    gt: &[GroundTruthObject],
    results: &BTreeMap<String, RetrievalResult>,
    iou_threshold: f64,
) -> Result<EvalMetrics, QueryError> {
    let gt_queries: std::collections::BTreeSet<&str> =
        gt.iter().map(|o| o.query_embedding_id.as_str()).collect();
    let result_queries: std::collections::BTreeSet<&str> =
        results.keys().map(|k| k.as_str()).collect();
    if gt_queries != result_queries {
        let missing: Vec<&&str> = gt_queries.difference(&result_queries).collect();
        let extra: Vec<&&str> = result_queries.difference(&gt_queries).collect();
        return Err(QueryError::MismatchedQueries(format!(
            "missing {missing:?}, unexpected {extra:?}"
        )));
    }

    let mut per_object = Vec::with_capacity(gt.len());
    let mut strict_hits = 0usize;
    let mut relaxed_hits = 0usize;
    for obj in gt {
        let boxes = &results[&obj.query_embedding_id].boxes;
        let best_iou = boxes
            .iter()
            .map(|b| b.bbox.iou(&obj.obb))
            .fold(0.0f64, f64::max);
        let top1_iou = boxes.first().map_or(0.0, |b| b.bbox.iou(&obj.obb));
        if top1_iou >= iou_threshold {
            strict_hits += 1;
        }
        if best_iou >= iou_threshold {
            relaxed_hits += 1;
        }
        per_object.push(ObjectScore {
            label: obj.label.clone(),
            query_embedding_id: obj.query_embedding_id.clone(),
            best_iou,
            top1_iou,
        });
    }

    let mut total_boxes = 0usize;
    let mut strict_box_hits = 0usize;
    let mut relaxed_box_hits = 0usize;
    for (query, result) in results {
        let objects: Vec<&GroundTruthObject> = gt
            .iter()
            .filter(|o| &o.query_embedding_id == query)
            .collect();
        for (rank, b) in result.boxes.iter().enumerate() {
            total_boxes += 1;
            let matches = objects.iter().any(|o| b.bbox.iou(&o.obb) >= iou_threshold);
            if matches {
                relaxed_box_hits += 1;
                if rank == 0 {
                    strict_box_hits += 1;
                }
            }
        }
    }

    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mean_iou = if per_object.is_empty() {
        0.0
    } else {
        per_object.iter().map(|o| o.best_iou).sum::<f64>() / per_object.len() as f64
    };
    let relaxed_accuracy = frac(relaxed_hits, gt.len());
    let relaxed_precision = frac(relaxed_box_hits, total_boxes);
    let f1 = if relaxed_accuracy + relaxed_precision == 0.0 {
        0.0
    } else {
        2.0 * relaxed_accuracy * relaxed_precision / (relaxed_accuracy + relaxed_precision)
    };
    Ok(EvalMetrics {
        mean_iou,
        strict_accuracy: frac(strict_hits, gt.len()),
        relaxed_accuracy,
        strict_precision: frac(strict_box_hits, total_boxes),
        relaxed_precision,
        f1,
        iou_threshold,
        per_object,
    })
}
