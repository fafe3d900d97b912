//! On-disk formats: JSON documents and CSV tables.
//!
//! Every JSON document carries a `schema_version`; readers reject
//! versions they do not understand. CSV files carry a header row and
//! render floats in shortest round-trip form, so rerunning a command on
//! identical inputs reproduces every output byte for byte. The manifest
//! is the one exception: its creation timestamp changes per run.
//!
//! Files written per command:
//!
//! * network JSON: `{schema_version, vertices: [{id, coords}], edges:
//!   [{id, u, v, length, polyline?}]}`.
//! * events CSV: `edge,offset`, one event per row.
//! * profile CSV: `method,edge,offset,density,stderr,regime`; the last
//!   two columns are empty for methods that do not provide them.
//! * histogram CSV: `edge,center,width,count,height`.
//! * vertex report JSON: per-vertex test records, see [`VertexResult`].
//! * benchmark CSV: `scenario,method,truth,mean,bias,sd,mse,reps`.
//! * power CSV: `beta_left,beta_right,accept_rate,type2_rate,truth,mean,
//!   bias,sd,mse,reps`; `type2_rate` is empty when the pair is equal.
//! * `manifest.json`: provenance of the run, see [`Manifest`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use netdens_core::binning::BinnedNetwork;
use netdens_core::kernels::Kernel;
use netdens_core::network::{
    build_network, Edge, EdgeId, LinearNetwork, NetworkPoint, Vertex, VertexId,
};
use netdens_core::simulate::{MetricRow, Type2Row};
use netdens_core::vertex_test::{VertexDecisions, VertexOutcome, VertexReport};

use crate::error::CliError;

/// Version stamped into every document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Serializes a document as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn check_schema(path: &Path, version: u32) -> Result<(), CliError> {
    if version != SCHEMA_VERSION {
        return Err(io_err(
            path,
            format!("unsupported schema_version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

/// JSON form of a vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexRecord {
    /// Vertex id, unique in the file.
    pub id: u64,
    /// Embedding coordinates, 2 or 3 entries.
    pub coords: Vec<f64>,
}

/// JSON form of an edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    /// Edge id, unique in the file.
    pub id: u64,
    /// First endpoint; offsets count from here.
    pub u: u64,
    /// Second endpoint.
    pub v: u64,
    /// Arc length, strictly positive.
    pub length: f64,
    /// Optional geometry; chord length must match `length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polyline: Option<Vec<Vec<f64>>>,
}

/// A network document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    /// Document version.
    pub schema_version: u32,
    /// All vertices.
    pub vertices: Vec<VertexRecord>,
    /// All edges.
    pub edges: Vec<EdgeRecord>,
}

impl NetworkFile {
    /// Document form of a validated network.
    pub fn from_network(net: &LinearNetwork) -> Self {
        NetworkFile {
            schema_version: SCHEMA_VERSION,
            vertices: net
                .vertices()
                .iter()
                .map(|v| VertexRecord { id: v.id.0, coords: v.coords.clone() })
                .collect(),
            edges: net
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.0,
                    u: e.u.0,
                    v: e.v.0,
                    length: e.length,
                    polyline: e.polyline.clone(),
                })
                .collect(),
        }
    }

    /// Validates and builds the network this document describes.
    pub fn into_network(self) -> Result<LinearNetwork, String> {
        let vertices = self
            .vertices
            .into_iter()
            .map(|v| Vertex { id: VertexId(v.id), coords: v.coords })
            .collect();
        let edges = self
            .edges
            .into_iter()
            .map(|e| Edge {
                id: EdgeId(e.id),
                u: VertexId(e.u),
                v: VertexId(e.v),
                length: e.length,
                polyline: e.polyline,
            })
            .collect();
        build_network(vertices, edges).map_err(|e| e.to_string())
    }
}

/// Reads and validates a network JSON file.
pub fn read_network(path: &Path) -> Result<LinearNetwork, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: NetworkFile = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    check_schema(path, file.schema_version)?;
    file.into_network().map_err(|m| io_err(path, m))
}

/// Writes a network JSON file.
pub fn write_network(path: &Path, net: &LinearNetwork) -> Result<(), CliError> {
    write_json(path, &NetworkFile::from_network(net))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct EventRecord {
    edge: u64,
    offset: f64,
}

/// Reads an events CSV with an `edge,offset` header.
pub fn read_events(path: &Path) -> Result<Vec<NetworkPoint>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let rec: EventRecord = row.map_err(|e| io_err(path, e))?;
        out.push(NetworkPoint { edge: EdgeId(rec.edge), offset: rec.offset });
    }
    Ok(out)
}

/// Writes an events CSV.
pub fn write_events(path: &Path, events: &[NetworkPoint]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for ev in events {
        w.serialize(EventRecord { edge: ev.edge.0, offset: ev.offset })
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One evaluation point of a density profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord {
    /// Method that produced the row.
    pub method: String,
    /// Edge being profiled.
    pub edge: u64,
    /// Offset of the evaluation point on that edge.
    pub offset: f64,
    /// Density estimate.
    pub density: f64,
    /// Standard error; absent for methods without a variance model.
    pub stderr: Option<f64>,
    /// Fit regime; absent for methods without one.
    pub regime: Option<String>,
}

/// Writes a profile CSV.
pub fn write_profile(path: &Path, rows: &[ProfileRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct HistogramRecord {
    edge: u64,
    center: f64,
    width: f64,
    count: u64,
    height: f64,
}

/// Writes the binned histogram behind a fit as a CSV.
pub fn write_histogram(path: &Path, binned: &BinnedNetwork) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for be in &binned.edges {
        for (i, &center) in be.centers.iter().enumerate() {
            w.serialize(HistogramRecord {
                edge: be.edge.0,
                center,
                width: be.actual_width,
                count: be.counts[i],
                height: be.heights[i],
            })
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One per-edge estimate inside a test record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// The incident edge.
    pub edge: u64,
    /// Estimated limit (density, or oriented slope).
    pub value: f64,
    /// Variance of the estimate.
    pub variance: f64,
}

/// One chi-square test at a vertex, intercept or slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRecord {
    /// Chi-square statistic of the full test.
    pub statistic: f64,
    /// Degrees of freedom.
    pub df: usize,
    /// Upper-tail p-value.
    pub p_value: f64,
    /// Significance level used.
    pub alpha: f64,
    /// Whether the full null was accepted.
    pub accepted: bool,
    /// Largest accepted edge group; empty when nothing passed.
    pub group: Vec<u64>,
    /// False when the degree exceeded the exhaustive-search guard.
    pub exhaustive: bool,
    /// Per-edge estimates entering the test, in incidence order.
    pub estimates: Vec<EstimateRecord>,
}

impl TestRecord {
    fn from_report(r: &VertexReport) -> Self {
        TestRecord {
            statistic: r.statistic,
            df: r.df,
            p_value: r.p_value,
            alpha: r.alpha,
            accepted: r.accepted,
            group: r.accepted_group.iter().map(|e| e.0).collect(),
            exhaustive: r.exhaustive,
            estimates: r
                .estimates
                .iter()
                .map(|e| EstimateRecord { edge: e.edge.0, value: e.m_hat, variance: e.var })
                .collect(),
        }
    }
}

/// Test results and pooling outcome at one vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexResult {
    /// The tested vertex.
    pub vertex: u64,
    /// Density-limit equality test.
    pub intercept: TestRecord,
    /// Smoothness test; only run when the full intercept test accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<TestRecord>,
    /// Edges the downstream fit treats as continuous here.
    pub pooled_group: Vec<u64>,
    /// The fit additionally constrains slopes across this vertex.
    pub slopes_equal: bool,
}

/// The vertex-test report document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexReportFile {
    /// Document version.
    pub schema_version: u32,
    /// Bandwidth used for the per-edge limits.
    pub h: f64,
    /// Histogram bin width.
    pub omega: f64,
    /// Significance level; 0 disables pooling.
    pub alpha: f64,
    /// Kernel name.
    pub kernel: String,
    /// One entry per tested vertex, in vertex order.
    pub vertices: Vec<VertexResult>,
}

/// Assembles the vertex report document from test decisions.
pub fn vertex_report_file(
    decisions: &VertexDecisions,
    outcomes: &BTreeMap<VertexId, VertexOutcome>,
    h: f64,
    omega: f64,
    alpha: f64,
    kernel: Kernel,
) -> VertexReportFile {
    let vertices = decisions
        .intercept
        .iter()
        .map(|r| {
            let slope = decisions
                .slope
                .iter()
                .find(|s| s.vertex == r.vertex)
                .map(TestRecord::from_report);
            let outcome = outcomes.get(&r.vertex);
            VertexResult {
                vertex: r.vertex.0,
                intercept: TestRecord::from_report(r),
                slope,
                pooled_group: outcome
                    .map(|o| o.group.iter().map(|e| e.0).collect())
                    .unwrap_or_default(),
                slopes_equal: outcome.map(|o| o.slopes_equal).unwrap_or(false),
            }
        })
        .collect();
    VertexReportFile {
        schema_version: SCHEMA_VERSION,
        h,
        omega,
        alpha,
        kernel: kernel.name().to_string(),
        vertices,
    }
}

#[derive(Debug, Clone, Serialize)]
struct BenchmarkRecord {
    scenario: &'static str,
    method: &'static str,
    truth: f64,
    mean: f64,
    bias: f64,
    sd: f64,
    mse: f64,
    reps: usize,
}

/// Writes a benchmark summary CSV, one row per method.
pub fn write_benchmark(path: &Path, rows: &[MetricRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(BenchmarkRecord {
            scenario: row.scenario.name(),
            method: row.method.name(),
            truth: row.truth,
            mean: row.mean,
            bias: row.bias,
            sd: row.sd,
            mse: row.mse,
            reps: row.reps,
        })
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize)]
struct PowerRecord {
    beta_left: f64,
    beta_right: f64,
    accept_rate: f64,
    type2_rate: Option<f64>,
    truth: f64,
    mean: f64,
    bias: f64,
    sd: f64,
    mse: f64,
    reps: usize,
}

/// Writes a pretest power study CSV, one row per exponent pair.
pub fn write_power(path: &Path, rows: &[Type2Row]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(PowerRecord {
            beta_left: row.beta_left,
            beta_right: row.beta_right,
            accept_rate: row.accept_rate,
            type2_rate: row.type2_rate,
            truth: row.truth,
            mean: row.mean,
            bias: row.bias,
            sd: row.sd,
            mse: row.mse,
            reps: row.reps,
        })
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Provenance of one command invocation.
///
/// The creation timestamp is the only field that varies between reruns
/// of the same command on the same inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Document version.
    pub schema_version: u32,
    /// Always `netdens`.
    pub tool: String,
    /// Crate version of the tool.
    pub tool_version: String,
    /// Subcommand that ran.
    pub command: String,
    /// Milliseconds since the Unix epoch at write time.
    pub created_unix_ms: u64,
    /// Fully resolved parameters, defaults applied.
    pub parameters: serde_json::Value,
    /// Input files read.
    pub inputs: Vec<String>,
    /// Output files written, relative to the manifest.
    pub outputs: Vec<String>,
}

/// Writes `manifest.json` into `dir`, returning its path.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    parameters: serde_json::Value,
    inputs: &[String],
    outputs: &[String],
) -> Result<std::path::PathBuf, CliError> {
    let created_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "netdens".to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        created_unix_ms,
        parameters,
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
