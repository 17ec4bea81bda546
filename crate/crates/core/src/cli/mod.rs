//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 invariant failure, 2 input error, 3 resource cap.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::covers::CoverError;
use crate::groups::GroupError;
use crate::hurewicz::HurewiczError;
use crate::metric::{FiniteMetricSpace, MetricError, PointSet, Provenance};
use crate::polyhedra::PolyhedronError;

mod commands;
mod suite;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CACHE_ENV: &str = "COARSEDIM_CACHE";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Input(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CoverError> for CliError {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::ExactCapExceeded { .. } => CliError::Cap(e.to_string()),
            CoverError::NegativeParameter { .. } | CoverError::SpaceMismatch => CliError::Input(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            GroupError::BadParameters(_)
            | GroupError::BadWord(_)
            | GroupError::BadRadius(_)
            | GroupError::LetterNorm { .. }
            | GroupError::EmptySeries
            | GroupError::UnknownLeaf(_)
            | GroupError::Metric(_) => CliError::Input(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<HurewiczError> for CliError {
    fn from(e: HurewiczError) -> Self {
        match e {
            HurewiczError::BadEpsilon(_)
            | HurewiczError::BadScale(_)
            | HurewiczError::MissingConstant(_)
            | HurewiczError::NotGeodesic { .. } => CliError::Input(e.to_string()),
            HurewiczError::Cover(c) => c.into(),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<PolyhedronError> for CliError {
    fn from(e: PolyhedronError) -> Self {
        CliError::Invariant(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "coarsedim", version, about = "Finite-scale witnesses for asymptotic dimension")]
pub struct Cli {
    /// Cache directory; defaults to $COARSEDIM_CACHE, caching is off when neither is set.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Ignore the cache entirely.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Recompute cached entries and fail if they differ.
    #[arg(long, global = true)]
    pub compare_cache: bool,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, check or describe finite metric spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Colored decompositions: solve, verify, profile.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Assemble the tower map into a polyhedron and measure it.
    #[command(subcommand)]
    Hurewicz(HurewiczCmd),
    /// Group spaces and dimension bounds.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Run the invariant suite of every module.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpaceCmd {
    /// `grid W H`, `path N`, `cycle N`, `matrix FILE` or `graph FILE`.
    Build {
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
    },
    /// Verify the metric axioms and print the report.
    Check {
        space: String,
        /// Check every triple even above the exhaustive limit.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Print size, diameter and related facts.
    Info { space: String },
}

#[derive(Debug, Subcommand)]
pub enum CoverCmd {
    Solve {
        #[arg(long)]
        space: String,
        #[arg(long = "D")]
        d: f64,
        #[arg(long = "B")]
        b: f64,
        /// `auto`, `exact` or `greedy`.
        #[arg(long, default_value = "auto")]
        mode: String,
    },
    Verify {
        #[arg(long)]
        space: String,
        /// Decomposition JSON, as written by `cover solve`.
        #[arg(long)]
        cover: PathBuf,
    },
    /// CSV of color counts with `B = multiplier * D`.
    Profile {
        #[arg(long)]
        space: String,
        #[arg(long = "Dlist", value_delimiter = ',', required = true)]
        d_list: Vec<f64>,
        #[arg(long, default_value_t = 3.0)]
        multiplier: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum HurewiczCmd {
    Run(HurewiczArgs),
}

#[derive(Debug, Args)]
pub struct HurewiczArgs {
    #[arg(long)]
    pub space: String,
    /// `projection` (grid onto its first coordinate), `constant`, or a JSON
    /// file `{"codomain": SPACE, "images": [...]}`.
    #[arg(long)]
    pub map: String,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// `auto` for the required scale, or a number.
    #[arg(long, default_value = "auto")]
    pub r: String,
    #[arg(long, default_value_t = 3.0)]
    pub mesh_multiplier: f64,
}

#[derive(Debug, Subcommand)]
pub enum GroupCmd {
    /// Ball of radius R in a Cayley graph.
    Ball {
        #[arg(long)]
        group: String,
        #[arg(long = "R")]
        r: usize,
        #[arg(long, default_value_t = crate::groups::cayley::BALL_CAP)]
        cap: usize,
    },
    /// Truncated free product of two pointed spaces.
    Freeprod(FreeprodArgs),
    /// Coset tree of a truncated free product and the projection onto it.
    Tree(FreeprodArgs),
    /// Normal forms and the coset projection of a cyclic amalgam.
    Amalgam {
        /// `z2-z3`, `z-2z-z` or `z4-z2-z6`.
        #[arg(long, default_value = "z2-z3")]
        which: String,
        #[arg(long = "R", default_value_t = 4)]
        r: usize,
    },
    /// `W_R(e) = N_R(K)` for Heisenberg onto Z^2 or Z onto Z/2.
    Extension {
        #[arg(long, default_value = "heisenberg-z2")]
        quotient: String,
        #[arg(long = "R")]
        r: usize,
        #[arg(long, default_value_t = 8)]
        ball: usize,
    },
    /// Space of balls over a base space.
    Hyperbolize {
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value_t = std::f64::consts::E)]
        q: f64,
    },
    /// Upper bound on asymptotic dimension: `polycyclic ZZZ`,
    /// `free-product A B`, `amalgam C A B`, `extension K Q`, or `json FILE`.
    Bound {
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
        /// Emit the JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct FreeprodArgs {
    #[arg(long, default_value = "path:4")]
    pub x: String,
    #[arg(long, default_value = "path:4")]
    pub y: String,
    #[arg(long, default_value_t = 0)]
    pub base_x: usize,
    #[arg(long, default_value_t = 0)]
    pub base_y: usize,
    #[arg(long, default_value_t = 4.0)]
    pub max_norm: f64,
    /// Scale both factors up when a letter has norm below 1.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long, default_value = "literal")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub json: bool,
    /// Run one check against a deliberately broken oracle.
    #[arg(long)]
    pub inject_fault: bool,
}

/// Content-hashed cache of expensive results; keys include the tool version.
pub struct Workspace {
    dir: Option<PathBuf>,
    compare: bool,
}

impl Workspace {
    pub fn new(dir: Option<PathBuf>, compare: bool) -> Self {
        Workspace { dir, compare }
    }

    pub fn key(kind: &str, params: &Value) -> String {
        let mut h = Sha256::new();
        h.update(VERSION.as_bytes());
        h.update(b"\n");
        h.update(kind.as_bytes());
        h.update(b"\n");
        h.update(params.to_string().as_bytes());
        hex::encode(h.finalize())
    }

    /// Returns the cached value when present, else computes and stores it.
    pub fn cached<T, F>(&self, kind: &str, params: &Value, compute: F) -> Result<(T, &'static str), CliError>
    where
        T: Serialize + DeserializeOwned,
        F: Fn() -> Result<T, CliError>,
    {
        let Some(dir) = &self.dir else {
            return Ok((compute()?, "disabled"));
        };
        let path = dir.join(format!("{kind}-{}.json", Self::key(kind, params)));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(value) = serde_json::from_str::<T>(&text) {
                if self.compare {
                    let fresh = compute()?;
                    if serde_json::to_value(&fresh)? != serde_json::to_value(&value)? {
                        return Err(CliError::Invariant(format!("cache entry {} differs from recomputation", path.display())));
                    }
                }
                return Ok((value, "hit"));
            }
        }
        let value = compute()?;
        fs::create_dir_all(dir)?;
        write_atomic(&path, serde_json::to_string(&value)?.as_bytes())?;
        Ok((value, "miss"))
    }
}

/// Writes to a sibling temporary file, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialized form of a space: full distance rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub provenance: Provenance,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
    pub distances: Vec<Vec<f64>>,
}

impl SpaceDoc {
    pub fn of(space: &FiniteMetricSpace) -> Self {
        SpaceDoc {
            provenance: space.provenance(),
            labels: space.labels().map(<[String]>::to_vec),
            distances: (0..space.len()).map(|i| space.row(i).to_vec()).collect(),
        }
    }

    pub fn build(self) -> Result<FiniteMetricSpace, CliError> {
        let n = self.distances.len();
        if let Some((row, r)) = self.distances.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n }.into());
        }
        Ok(FiniteMetricSpace::from_distances(n, self.distances.concat(), self.provenance, self.labels)?)
    }
}

#[derive(Debug, Deserialize)]
struct GraphInput {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpaceInput {
    Doc(SpaceDoc),
    Matrix { matrix: Vec<Vec<f64>> },
    Graph { graph: GraphInput },
}

fn parse_count(s: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::Input(format!("expected a count, got {s:?}")))
}

/// Grid dimensions when `spec` names a grid.
pub fn grid_dims(spec: &str) -> Option<(usize, usize)> {
    let rest = spec.strip_prefix("grid:")?;
    let (w, h) = rest.split_once('x')?;
    Some((w.parse().ok()?, h.parse().ok()?))
}

/// `grid:WxH`, `path:N`, `cycle:N`, or a JSON file holding a space document,
/// `{"matrix": [[...]]}` or `{"graph": {"n": N, "edges": [[a, b, w], ...]}}`.
pub fn load_space(spec: &str) -> Result<FiniteMetricSpace, CliError> {
    if let Some((w, h)) = grid_dims(spec) {
        return Ok(FiniteMetricSpace::grid(w, h)?);
    }
    if let Some(n) = spec.strip_prefix("path:") {
        return Ok(FiniteMetricSpace::path(parse_count(n)?)?);
    }
    if let Some(n) = spec.strip_prefix("cycle:") {
        return Ok(FiniteMetricSpace::cycle(parse_count(n)?)?);
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Input(format!("{spec}: {e}")))?;
    match serde_json::from_str::<SpaceInput>(&text)? {
        SpaceInput::Doc(doc) => doc.build(),
        SpaceInput::Matrix { matrix } => Ok(FiniteMetricSpace::from_matrix(&matrix)?),
        SpaceInput::Graph { graph } => Ok(FiniteMetricSpace::from_graph(graph.n, &graph.edges)?),
    }
}

/// Accepts either a bare document or a report envelope with a `result` field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    let inner = match value.get("result") {
        Some(r) if value.get("tool").is_some() => r.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(inner)?)
}

/// Standard report wrapper: version, seed, parameters and the rule applied.
pub fn envelope(command: &str, params: Value, seed: Option<u64>, rule: &str, result: Value) -> Value {
    json!({
        "tool": "coarsedim",
        "version": VERSION,
        "command": command,
        "seed": seed,
        "rule": rule,
        "params": params,
        "result": result,
    })
}

/// Where the main output goes.
pub struct Output {
    path: Option<PathBuf>,
}

impl Output {
    pub fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            Some(p) => write_atomic(p, text.as_bytes()),
            None => {
                use std::io::Write;
                match writeln!(std::io::stdout().lock(), "{text}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn json(&self, value: &Value) -> Result<(), CliError> {
        self.emit(&serde_json::to_string_pretty(value)?)
    }
}

/// Decomposition document read by `cover verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(default)]
    pub universe: Option<PointSet>,
    pub families: Vec<Vec<PointSet>>,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let dir = if cli.no_cache { None } else { cli.cache_dir.clone().or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from)) };
    let ws = Workspace::new(dir, cli.compare_cache);
    let out = Output { path: cli.out.clone() };
    let result = match &cli.command {
        Command::Space(c) => commands::space(c, &out),
        Command::Cover(c) => commands::cover(c, &out),
        Command::Hurewicz(HurewiczCmd::Run(a)) => commands::hurewicz(a, &ws, &out),
        Command::Group(c) => commands::group(c, &ws, &out),
        Command::Verify(a) => suite::verify(a, &out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("coarsedim: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn arc(space: FiniteMetricSpace) -> Arc<FiniteMetricSpace> {
    Arc::new(space)
}
