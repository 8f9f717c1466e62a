//! SVG rendering of the places layer, with an optional path overlay.

use crate::places::PlacesLayer;
use std::fmt::Write as _;

/// Fill colors cycled per terrain class id.
const TERRAIN_COLORS: [&str; 8] = [
    "#4e79a7", "#59a14f", "#e0ac3c", "#b07aa1", "#76b7b2", "#9c755f", "#86bcb6", "#d4a6c8",
];

/// Stroke used for the path overlay; chosen to contrast with every entry in
/// [`TERRAIN_COLORS`].
const PATH_COLOR: &str = "#e15759";

const MARGIN: f64 = 2.0;
const SCALE: f64 = 10.0; // pixels per meter

/// Render the places graph as a standalone SVG document. Nodes are colored
/// by terrain class, edges drawn in light gray, and `path` (a sequence of
/// place node ids) overlaid as a thick contrasting polyline.
pub fn render_places_svg(layer: &PlacesLayer, path: Option<&[u32]>) -> String {
    let (min_x, min_y, max_x, max_y) = bounds(layer);
    let w = ((max_x - min_x) + 2.0 * MARGIN) * SCALE;
    let h = ((max_y - min_y) + 2.0 * MARGIN) * SCALE;
    // SVG y grows downward; flip so +y in the world points up on the page.
    let tx = |x: f64| (x - min_x + MARGIN) * SCALE;
    let ty = |y: f64| (max_y - y + MARGIN) * SCALE;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.1}\" height=\"{h:.1}\" \
         viewBox=\"0 0 {w:.1} {h:.1}\">"
    );
    let _ = writeln!(s, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for &(a, b, _) in &layer.edges {
        let (Some(pa), Some(pb)) = (layer.node(a), layer.node(b)) else {
            continue;
        };
        let _ = writeln!(
            s,
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"#c8c8c8\" stroke-width=\"1\"/>",
            tx(pa.position.0),
            ty(pa.position.1),
            tx(pb.position.0),
            ty(pb.position.1),
        );
    }

    if let Some(path) = path {
        let pts: Vec<String> = path
            .iter()
            .filter_map(|&id| layer.node(id))
            .map(|n| format!("{:.2},{:.2}", tx(n.position.0), ty(n.position.1)))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                s,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{PATH_COLOR}\" \
                 stroke-width=\"3\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>",
                pts.join(" ")
            );
        }
    }

    for n in &layer.nodes {
        let color = TERRAIN_COLORS[n.terrain as usize % TERRAIN_COLORS.len()];
        let on_path = path.is_some_and(|p| p.contains(&n.id));
        let r = if on_path { 5.0 } else { 3.5 };
        let stroke = if on_path { PATH_COLOR } else { "#333333" };
        let _ = writeln!(
            s,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r}\" fill=\"{color}\" \
             stroke=\"{stroke}\" stroke-width=\"1\"><title>place {} (terrain {})</title></circle>",
            tx(n.position.0),
            ty(n.position.1),
            n.id,
            n.terrain,
        );
    }

    s.push_str("</svg>\n");
    s
}

fn bounds(layer: &PlacesLayer) -> (f64, f64, f64, f64) {
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for n in &layer.nodes {
        min_x = min_x.min(n.position.0);
        min_y = min_y.min(n.position.1);
        max_x = max_x.max(n.position.0);
        max_y = max_y.max(n.position.1);
    }
    if layer.nodes.is_empty() {
        (0.0, 0.0, 1.0, 1.0)
    } else {
        (min_x, min_y, max_x, max_y)
    }
}
