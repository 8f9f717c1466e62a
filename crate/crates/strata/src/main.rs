//! Thin command-line front end over the `strata` library.
//!
//! Errors are emitted as a single JSON object on stderr; exit codes:
//! 0 success, 2 invalid arguments or configuration, 3 missing or malformed
//! input data, 4 domain failure (no retrieval hits, unreachable goal).

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use strata::config::RunConfig;
use strata::core::Embedding;
use strata::dataset::{load_scene, SceneDataset};
use strata::fusion::{build_map, ResolveMode};
use strata::graph::{HierarchyKind, SceneGraph};
use strata::persist::{load_graph, load_map, save_graph, save_map};
use strata::places::build_places_layer;
use strata::planner::{plan_path, select_goal_node, TerrainPolicy};
use strata::query::{
    eval_retrieval, monitor_region, retrieve_objects_3dsg, retrieve_objects_ms, QueryConfig,
    RetrievalResult,
};
use strata::regions::{agglomerative_regions, spectral_regions};
use strata::svg::render_places_svg;

#[derive(Parser)]
#[command(name = "strata", version, about = "Terrain-aware metric-semantic scene graphs")]
struct Cli {
    /// Optional TOML run configuration (see docs/FORMATS.md).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Embedding server base URL; enables `--text` queries via
    /// POST {"text": ...} -> {"embedding": [...]}.
    #[arg(long, global = true)]
    embed_server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene dataset from a TOML scene spec.
    GenScene {
        /// Scene spec file (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Output scene directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse a scene dataset into a metric-semantic global map.
    BuildMap {
        /// Scene dataset directory.
        #[arg(long)]
        scene: PathBuf,
        /// Output map JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the places layer and region hierarchies from a map.
    BuildGraph {
        #[arg(long)]
        map: PathBuf,
        /// Scene dataset directory (terrain table and view embeddings).
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Which region hierarchy to build.
        #[arg(long, value_enum, default_value_t = RegionsArg::Both)]
        regions: RegionsArg,
    },
    /// Open-vocabulary object retrieval.
    QueryObject {
        #[arg(long)]
        map: PathBuf,
        /// Scene graph JSON; required for the 3dsg strategy.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        query: QuerySource,
        #[arg(long, value_enum, default_value_t = StrategyArg::Ms)]
        strategy: StrategyArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank regions against a query and list their matching places.
    MonitorRegion {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        query: QuerySource,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value_t = KindArg::Agglomerative)]
        hierarchy: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Terrain-aware shortest path over the places graph.
    PlanPath {
        #[arg(long)]
        graph: PathBuf,
        /// Map JSON; required when the goal is selected by a task query.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        start: u32,
        /// Explicit goal place node id.
        #[arg(long)]
        goal: Option<u32>,
        /// Select the goal by retrieving this query instead.
        #[arg(long, conflicts_with = "goal")]
        task_query_id: Option<String>,
        /// Scene dataset directory used to resolve `--task-query-id`.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Terrain policy JSON file (multiplier map + prohibited list).
        #[arg(long)]
        terrain_policy: Option<PathBuf>,
        /// Directory receiving path.json and overlay.svg.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = KindArg::Agglomerative)]
        hierarchy: KindArg,
    },
    /// Retrieve every ground-truth query and score the results.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Ms)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0.25)]
        iou_threshold: f64,
        /// Directory receiving metrics.json and table.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Exactly one source for the query embedding.
#[derive(Args)]
struct QuerySource {
    /// Embedding id looked up in the scene dataset given by `--scene`.
    #[arg(long, group = "query_source", requires = "scene_for_query")]
    query_id: Option<String>,
    /// Free text resolved through `--embed-server`.
    #[arg(long, group = "query_source")]
    text: Option<String>,
    /// Scene dataset directory for `--query-id` lookups.
    #[arg(long = "scene", id = "scene_for_query")]
    scene: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionsArg {
    Agglo,
    Spectral,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ms,
    #[value(name = "3dsg")]
    ThreeDsg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Avg,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Agglomerative,
    Spectral,
}

impl From<KindArg> for HierarchyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Agglomerative => HierarchyKind::Agglomerative,
            KindArg::Spectral => HierarchyKind::Spectral,
        }
    }
}

struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    fn new(kind: &'static str, code: u8, message: impl ToString) -> Self {
        CliError {
            kind,
            message: message.to_string(),
            code,
        }
    }
    fn usage(message: impl ToString) -> Self {
        Self::new("usage", 2, message)
    }
    fn data(message: impl ToString) -> Self {
        Self::new("data", 3, message)
    }
    fn domain(message: impl ToString) -> Self {
        Self::new("domain", 4, message)
    }
}

macro_rules! impl_data_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::data(e)
            }
        }
    )*};
}
impl_data_error!(
    strata::dataset::DatasetError,
    strata::persist::PersistError,
    strata::fusion::FusionError,
    strata::places::PlacesError,
    std::io::Error
);

impl From<strata::config::ConfigError> for CliError {
    fn from(e: strata::config::ConfigError) -> Self {
        CliError::usage(e)
    }
}
impl From<strata::scenegen::SceneGenError> for CliError {
    fn from(e: strata::scenegen::SceneGenError) -> Self {
        match e {
            strata::scenegen::SceneGenError::BadSpec(_) => CliError::usage(e),
            _ => CliError::data(e),
        }
    }
}
impl From<strata::regions::RegionError> for CliError {
    fn from(e: strata::regions::RegionError) -> Self {
        match e {
            strata::regions::RegionError::BadConfig(_) => CliError::usage(e),
            _ => CliError::domain(e),
        }
    }
}
impl From<strata::query::QueryError> for CliError {
    fn from(e: strata::query::QueryError) -> Self {
        match e {
            strata::query::QueryError::BadConfig(_) => CliError::usage(e),
            _ => CliError::domain(e),
        }
    }
}
impl From<strata::planner::PlannerError> for CliError {
    fn from(e: strata::planner::PlannerError) -> Self {
        match e {
            strata::planner::PlannerError::BadPolicy(_) => CliError::usage(e),
            strata::planner::PlannerError::Query(q) => q.into(),
            _ => CliError::domain(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = json!({"error": {"kind": e.kind, "message": e.message}});
            eprintln!("{payload}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::GenScene { spec, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec: strata::scenegen::SceneSpec =
                toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", spec.display())))?;
            strata::scenegen::generate_scene(&spec, &out)?;
            println!("{}", json!({"scene": out}));
            Ok(())
        }
        Command::BuildMap { scene, out } => {
            let dataset = load_scene(&scene)?;
            let map = build_map(&dataset, &cfg.fusion)?;
            save_map(&map, &out)?;
            println!(
                "{}",
                json!({"map": out, "points": map.points.len()})
            );
            Ok(())
        }
        Command::BuildGraph {
            map,
            scene,
            out,
            regions,
        } => {
            let map = load_map(&map)?;
            let dataset = load_scene(&scene)?;
            let places = build_places_layer(&map, &dataset, &cfg.places)?;
            let mut graph = SceneGraph {
                places,
                ..Default::default()
            };
            if matches!(regions, RegionsArg::Agglo | RegionsArg::Both) {
                graph.agglomerative = Some(agglomerative_regions(&graph.places, &cfg.regions)?);
            }
            if matches!(regions, RegionsArg::Spectral | RegionsArg::Both) {
                let (h, stops) = spectral_regions(&graph.places, &cfg.regions)?;
                graph.spectral = Some(h);
                graph.spectral_stops = stops;
            }
            save_graph(&graph, &out)?;
            println!(
                "{}",
                json!({"graph": out, "places": graph.places.nodes.len()})
            );
            Ok(())
        }
        Command::QueryObject {
            map,
            graph,
            query,
            strategy,
            alpha,
            mode,
            out,
        } => {
            let map = load_map(&map)?;
            let query_emb = resolve_query(&query, cli.embed_server.as_deref())?;
            let qcfg = apply_overrides(cfg.query.clone(), alpha, mode, None);
            let result = match strategy {
                StrategyArg::Ms => {
                    let graph = graph.map(|p| load_graph(&p)).transpose()?;
                    retrieve_objects_ms(
                        &map,
                        graph.as_ref().map(|g| &g.places),
                        &query_emb,
                        &qcfg,
                    )?
                }
                StrategyArg::ThreeDsg => {
                    let graph_path = graph
                        .ok_or_else(|| CliError::usage("--graph is required for --strategy 3dsg"))?;
                    let graph = load_graph(&graph_path)?;
                    let hierarchy = graph
                        .default_hierarchy()
                        .ok_or_else(|| CliError::usage("graph has no region hierarchy"))?;
                    retrieve_objects_3dsg(hierarchy, &graph.places, &map, &query_emb, &qcfg)?
                }
            };
            emit_json(out.as_deref(), &result)
        }
        Command::MonitorRegion {
            graph,
            query,
            top_k,
            alpha,
            hierarchy,
            out,
        } => {
            let graph = load_graph(&graph)?;
            let h = graph
                .hierarchy(hierarchy.into())
                .ok_or_else(|| CliError::usage("graph lacks the requested hierarchy"))?;
            let query_emb = resolve_query(&query, cli.embed_server.as_deref())?;
            let qcfg = apply_overrides(cfg.query.clone(), alpha, None, top_k);
            let places = monitor_region(h, &graph.places, &query_emb, &qcfg)?;
            emit_json(out.as_deref(), &json!({"places": places}))
        }
        Command::PlanPath {
            graph,
            map,
            start,
            goal,
            task_query_id,
            scene,
            terrain_policy,
            out_dir,
            hierarchy,
        } => {
            let graph = load_graph(&graph)?;
            let policy = match terrain_policy {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    serde_json::from_str::<TerrainPolicy>(&text)
                        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
                }
                None => cfg.terrain_policy.clone(),
            };
            let goal = match (goal, task_query_id) {
                (Some(g), None) => g,
                (None, Some(qid)) => {
                    let map_path =
                        map.ok_or_else(|| CliError::usage("--map is required with --task-query-id"))?;
                    let scene_path = scene
                        .ok_or_else(|| CliError::usage("--scene is required with --task-query-id"))?;
                    let map = load_map(&map_path)?;
                    let dataset = load_scene(&scene_path)?;
                    let query_emb = lookup_embedding(&dataset, &qid)?;
                    let h = graph
                        .hierarchy(hierarchy.into())
                        .ok_or_else(|| CliError::usage("graph lacks the requested hierarchy"))?;
                    select_goal_node(h, &graph.places, &map, &query_emb, &cfg.query)?
                }
                _ => return Err(CliError::usage("provide exactly one of --goal / --task-query-id")),
            };
            let result = plan_path(&graph.places, start, goal, &policy)?;
            std::fs::create_dir_all(&out_dir)?;
            write_pretty_json(&out_dir.join("path.json"), &result)?;
            std::fs::write(
                out_dir.join("overlay.svg"),
                render_places_svg(&graph.places, Some(&result.nodes)),
            )?;
            println!(
                "{}",
                json!({"path": out_dir.join("path.json"), "overlay": out_dir.join("overlay.svg"),
                       "nodes": result.nodes.len(), "total_cost": result.total_cost})
            );
            Ok(())
        }
        Command::Eval {
            scene,
            map,
            graph,
            strategy,
            iou_threshold,
            out_dir,
        } => {
            let dataset = load_scene(&scene)?;
            let map = load_map(&map)?;
            let graph = graph.map(|p| load_graph(&p)).transpose()?;
            let mut results: BTreeMap<String, RetrievalResult> = BTreeMap::new();
            for gt in &dataset.ground_truth {
                if results.contains_key(&gt.query_embedding_id) {
                    continue;
                }
                let query_emb = lookup_embedding(&dataset, &gt.query_embedding_id)?;
                let result = match strategy {
                    StrategyArg::Ms => retrieve_objects_ms(
                        &map,
                        graph.as_ref().map(|g| &g.places),
                        &query_emb,
                        &cfg.query,
                    )?,
                    StrategyArg::ThreeDsg => {
                        let graph = graph
                            .as_ref()
                            .ok_or_else(|| CliError::usage("--graph is required for --strategy 3dsg"))?;
                        let hierarchy = graph
                            .default_hierarchy()
                            .ok_or_else(|| CliError::usage("graph has no region hierarchy"))?;
                        retrieve_objects_3dsg(hierarchy, &graph.places, &map, &query_emb, &cfg.query)?
                    }
                };
                results.insert(gt.query_embedding_id.clone(), result);
            }
            let metrics = eval_retrieval(&dataset.ground_truth, &results, iou_threshold)?;
            std::fs::create_dir_all(&out_dir)?;
            write_pretty_json(&out_dir.join("metrics.json"), &metrics)?;
            let mut csv = String::from("label,query_embedding_id,best_iou,top1_iou\n");
            for o in &metrics.per_object {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    o.label, o.query_embedding_id, o.best_iou, o.top1_iou
                ));
            }
            std::fs::write(out_dir.join("table.csv"), csv)?;
            println!(
                "{}",
                json!({"metrics": out_dir.join("metrics.json"), "table": out_dir.join("table.csv"),
                       "f1": metrics.f1, "mean_iou": metrics.mean_iou})
            );
            Ok(())
        }
    }
}

fn apply_overrides(
    mut qcfg: QueryConfig,
    alpha: Option<f64>,
    mode: Option<ModeArg>,
    top_k: Option<usize>,
) -> QueryConfig {
    if let Some(a) = alpha {
        qcfg.alpha = a;
    }
    if let Some(m) = mode {
        qcfg.mode = match m {
            ModeArg::Avg => ResolveMode::Avg,
            ModeArg::Max => ResolveMode::Max,
        };
    }
    if let Some(k) = top_k {
        qcfg.top_k_regions = k;
    }
    qcfg
}

fn lookup_embedding(dataset: &SceneDataset, id: &str) -> Result<Embedding, CliError> {
    dataset
        .embedding(id)
        .cloned()
        .ok_or_else(|| CliError::usage(format!("embedding id {id:?} not found in the scene dataset")))
}

fn resolve_query(source: &QuerySource, embed_server: Option<&str>) -> Result<Embedding, CliError> {
    if let Some(id) = &source.query_id {
        let scene = source
            .scene
            .as_ref()
            .ok_or_else(|| CliError::usage("--query-id requires --scene"))?;
        let dataset = load_scene(scene)?;
        return lookup_embedding(&dataset, id);
    }
    let text = source
        .text
        .as_ref()
        .ok_or_else(|| CliError::usage("provide --query-id or --text"))?;
    let base = embed_server
        .ok_or_else(|| CliError::usage("--text requires --embed-server"))?;
    fetch_embedding(base, text)
}

/// POST {"text": ...} to `<base>/embed` and read {"embedding": [...]}.
fn fetch_embedding(base: &str, text: &str) -> Result<Embedding, CliError> {
    #[derive(serde::Deserialize)]
    struct Reply {
        embedding: Vec<f64>,
    }
    let url = format!("{}/embed", base.trim_end_matches('/'));
    let reply: Reply = reqwest::blocking::Client::new()
        .post(&url)
        .json(&json!({"text": text}))
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.json())
        .map_err(|e| CliError::data(format!("embed server: {e}")))?;
    if reply.embedding.is_empty() {
        return Err(CliError::data("embed server returned an empty embedding"));
    }
    Ok(Embedding::new(reply.embedding))
}

fn write_pretty_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    match out {
        Some(path) => write_pretty_json(path, value),
        None => {
            let mut text = serde_json::to_string_pretty(value).expect("serializable value");
            text.push('\n');
            print!("{text}");
            Ok(())
        }
    }
}
