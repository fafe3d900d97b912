//! Command drivers shared by the binary and the integration tests.
//!
//! Each driver merges its options with an optional JSON config file
//! (explicit flags win), validates, computes, and writes its outputs
//! into the output directory, returning the paths written. Outputs are
//! deterministic: rerunning a command on identical inputs reproduces
//! every file byte for byte except the manifest timestamp.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use netdens_core::baselines::{esck, esdk, naive_kde, BaselineError};
use netdens_core::binning::{bin_events, BinConfig, BinError, BinnedNetwork};
use netdens_core::kernels::Kernel;
use netdens_core::network::{EdgeId, LinearNetwork, NetworkPoint};
use netdens_core::piecewise::{density_profile, profile_grid};
use netdens_core::simulate::{
    aggregate_metrics, replicate_estimate, sample_scenario, star_network, type2_study, Method,
    MetricRow, Scenario, ScenarioSpec, SimError, Type2Row, Type2Spec,
};
use netdens_core::vertex_test::{test_all_vertices, vertex_outcomes, VertexDecisions};

use crate::error::CliError;
use crate::formats::{
    read_events, read_network, vertex_report_file, write_benchmark, write_events,
    write_histogram, write_json, write_manifest, write_network, write_power, write_profile,
    ProfileRecord,
};

/// Environment variable that overrides any configured seed.
pub const SEED_ENV: &str = "NETDENS_SEED";

/// Options shared by every command.
#[derive(Debug, Clone, Default)]
pub struct CommonOpts {
    /// JSON config file; explicit flags win over its entries.
    pub config: Option<PathBuf>,
    /// Output directory, created if missing; defaults to the current one.
    pub out_dir: Option<PathBuf>,
    /// Base RNG seed; [`SEED_ENV`] overrides, 0 is the default.
    pub seed: Option<u64>,
    /// Worker threads for replicate loops; absent or 0 picks one per CPU.
    pub threads: Option<usize>,
}

/// Config-file counterpart of the command options.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    network: Option<PathBuf>,
    events: Option<PathBuf>,
    h: Option<f64>,
    omega: Option<f64>,
    alpha: Option<f64>,
    kernel: Option<String>,
    step: Option<f64>,
    method: Option<String>,
    methods: Option<String>,
    case: Option<String>,
    points: Option<usize>,
    reps: Option<usize>,
    rep: Option<u64>,
    pairs: Option<String>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn load_config(common: &CommonOpts) -> Result<FileConfig, CliError> {
    let Some(path) = &common.config else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required parameter: {what}")))
}

fn check_h(h: f64) -> Result<f64, CliError> {
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(CliError::Usage(format!("bandwidth must be positive, got {h}")))
    }
}

fn check_alpha(alpha: f64) -> Result<f64, CliError> {
    // 0 is allowed and switches vertex pooling off entirely.
    if alpha.is_finite() && (0.0..1.0).contains(&alpha) {
        Ok(alpha)
    } else {
        Err(CliError::Usage(format!("alpha must lie in [0, 1), got {alpha}")))
    }
}

fn check_positive(value: f64, what: &str) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("{what} must be positive, got {value}")))
    }
}

fn parse_kernel(name: Option<&str>) -> Result<Kernel, CliError> {
    match name {
        None => Ok(Kernel::default()),
        Some(n) => n.parse().map_err(|_| {
            CliError::Usage(format!(
                "unknown kernel {n:?} (expected epanechnikov, biweight, or triangular)"
            ))
        }),
    }
}

/// Parses a scenario selector: the numerals `I`/`II`/`III` or `1`/`2`/`3`
/// (case-insensitive), or a scenario name.
pub fn parse_case(name: &str) -> Result<Scenario, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "i" | "1" | "mixed-decay" => Ok(Scenario::MixedDecay),
        "ii" | "2" | "common-decay" => Ok(Scenario::CommonDecay),
        "iii" | "3" | "centered-bump" => Ok(Scenario::CenteredBump),
        "degenerate" => Ok(Scenario::Degenerate),
        _ => Err(CliError::Usage(format!(
            "unknown case {name:?} (expected I, II, III, or a scenario name)"
        ))),
    }
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "lplr" => Ok(Method::Lplr),
        "kde" => Ok(Method::Kde),
        "esdk" => Ok(Method::Esdk),
        "esck" => Ok(Method::Esck),
        _ => Err(CliError::Usage(format!(
            "unknown method {name:?} (expected lplr, kde, esdk, or esck)"
        ))),
    }
}

fn parse_methods(spec: Option<&str>) -> Result<Vec<Method>, CliError> {
    let Some(spec) = spec else {
        return Ok(Method::ALL.to_vec());
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let m = parse_method(part)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no methods given".to_string()));
    }
    Ok(out)
}

/// Parses comma-separated `left:right` exponent pairs, e.g. `3.5:4.5,4:4`.
pub fn parse_pairs(spec: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |part: &str| {
        CliError::Usage(format!("bad exponent pair {part:?} (expected left:right, e.g. 3.5:4.5)"))
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (l, r) = part.split_once(':').ok_or_else(|| bad(part))?;
        let l: f64 = l.trim().parse().map_err(|_| bad(part))?;
        let r: f64 = r.trim().parse().map_err(|_| bad(part))?;
        out.push((l, r));
    }
    if out.is_empty() {
        return Err(CliError::Usage("no exponent pairs given".to_string()));
    }
    Ok(out)
}

/// Ten exponent pairs centered on 4, gaps narrowing from 1.0 to 0.1.
pub fn default_power_pairs() -> Vec<(f64, f64)> {
    (0..10)
        .map(|i| {
            let gap = 1.0 - 0.1 * i as f64;
            (4.0 - gap / 2.0, 4.0 + gap / 2.0)
        })
        .collect()
}

fn resolve_seed(flag: Option<u64>, cfg: Option<u64>) -> Result<u64, CliError> {
    if let Ok(text) = std::env::var(SEED_ENV) {
        return text.trim().parse().map_err(|_| {
            CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))
        });
    }
    Ok(flag.or(cfg).unwrap_or(0))
}

fn ensure_out_dir(flag: &Option<PathBuf>, cfg: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag.clone().or(cfg).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    Ok(dir)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))
}

fn sim_err(e: SimError) -> CliError {
    match e {
        SimError::InvalidSpec { .. } => CliError::Usage(e.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

/// Bandwidth, bin width, level, and kernel shared by the fitting commands.
#[derive(Debug)]
struct FitParams {
    h: f64,
    omega: f64,
    alpha: f64,
    kernel: Kernel,
}

impl FitParams {
    fn resolve(
        h: Option<f64>,
        omega: Option<f64>,
        alpha: Option<f64>,
        kernel: Option<&str>,
    ) -> Result<Self, CliError> {
        let h = check_h(require(h, "h")?)?;
        let omega = match omega {
            Some(w) => check_positive(w, "bin width")?,
            None => BinConfig::for_bandwidth(h, h).expect("h is positive").target_width,
        };
        let alpha = check_alpha(alpha.unwrap_or(0.05))?;
        let kernel = parse_kernel(kernel)?;
        Ok(FitParams { h, omega, alpha, kernel })
    }
}

/// Inputs loaded and tested by both fitting commands.
struct FittedInputs {
    net: LinearNetwork,
    binned: BinnedNetwork,
    decisions: VertexDecisions,
}

fn load_and_test(
    network_path: &Path,
    events_path: &Path,
    params: &FitParams,
) -> Result<FittedInputs, CliError> {
    let net = read_network(network_path)?;
    let events = read_events(events_path)?;
    if events.is_empty() {
        return Err(CliError::Io {
            path: events_path.display().to_string(),
            message: "events file contains no events".to_string(),
        });
    }
    let cfg = BinConfig::new(params.omega).expect("omega is positive");
    let binned = bin_events(&net, &events, cfg).map_err(|e| match e {
        BinError::BadEvent(ne) => {
            CliError::Io { path: events_path.display().to_string(), message: ne.to_string() }
        }
        other => CliError::Numeric(other.to_string()),
    })?;
    let decisions = test_all_vertices(&net, &binned, params.h, params.alpha, params.kernel)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(FittedInputs { net, binned, decisions })
}

/// Options of the `estimate` command.
#[derive(Debug, Clone, Default)]
pub struct EstimateOpts {
    /// Network JSON file.
    pub network: Option<PathBuf>,
    /// Events CSV file.
    pub events: Option<PathBuf>,
    /// Kernel bandwidth along the network.
    pub h: Option<f64>,
    /// Histogram bin width; defaults to `h/4`.
    pub omega: Option<f64>,
    /// Pretest level; 0 disables vertex pooling. Defaults to 0.05.
    pub alpha: Option<f64>,
    /// Kernel name; defaults to `epanechnikov`.
    pub kernel: Option<String>,
    /// Profile grid step; defaults per edge to `min(h/4, length/20)`.
    pub step: Option<f64>,
    /// Estimator to profile; defaults to `lplr`.
    pub method: Option<String>,
    /// Shared options.
    pub common: CommonOpts,
}

/// Runs `estimate`: writes `profile.csv` plus, for the full pipeline,
/// `histogram.csv` and `vertices.json`, and always `manifest.json`.
pub fn cmd_estimate(opts: &EstimateOpts) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&opts.common)?;
    let network_path = require(opts.network.clone().or(cfg.network.clone()), "network")?;
    let events_path = require(opts.events.clone().or(cfg.events.clone()), "events")?;
    let params =
        FitParams::resolve(opts.h.or(cfg.h), opts.omega.or(cfg.omega), opts.alpha.or(cfg.alpha), opts.kernel.as_deref().or(cfg.kernel.as_deref()))?;
    let step = match opts.step.or(cfg.step) {
        Some(s) => Some(check_positive(s, "grid step")?),
        None => None,
    };
    let method = match opts.method.as_deref().or(cfg.method.as_deref()) {
        None => Method::Lplr,
        Some(m) => parse_method(m)?,
    };
    let out_dir = ensure_out_dir(&opts.common.out_dir, cfg.out_dir.clone())?;

    let mut written = Vec::new();
    match method {
        Method::Lplr => {
            let inputs = load_and_test(&network_path, &events_path, &params)?;
            let outcomes = vertex_outcomes(&inputs.decisions);
            let rows = density_profile(
                &inputs.net,
                &inputs.binned,
                params.h,
                params.kernel,
                &outcomes,
                step,
            )
            .map_err(|e| CliError::Numeric(e.to_string()))?;
            let records: Vec<ProfileRecord> = rows
                .iter()
                .map(|r| ProfileRecord {
                    method: method.name().to_string(),
                    edge: r.edge.0,
                    offset: r.offset,
                    density: r.density,
                    stderr: Some(r.stderr),
                    regime: Some(r.regime.as_str().to_string()),
                })
                .collect();
            let profile = out_dir.join("profile.csv");
            write_profile(&profile, &records)?;
            written.push(profile);

            let histogram = out_dir.join("histogram.csv");
            write_histogram(&histogram, &inputs.binned)?;
            written.push(histogram);

            let report = vertex_report_file(
                &inputs.decisions,
                &outcomes,
                params.h,
                params.omega,
                params.alpha,
                params.kernel,
            );
            let vertices = out_dir.join("vertices.json");
            write_json(&vertices, &report)?;
            written.push(vertices);
        }
        baseline => {
            let net = read_network(&network_path)?;
            let events = read_events(&events_path)?;
            if events.is_empty() {
                return Err(CliError::Io {
                    path: events_path.display().to_string(),
                    message: "events file contains no events".to_string(),
                });
            }
            let events_io = |ne: &dyn std::fmt::Display| CliError::Io {
                path: events_path.display().to_string(),
                message: ne.to_string(),
            };
            let mut records = Vec::new();
            for x in profile_grid(&net, params.h, step) {
                let density = match baseline {
                    Method::Kde => {
                        naive_kde(&net, &events, &x, params.h, params.kernel)
                            .map_err(|e| events_io(&e))?
                    }
                    Method::Esdk | Method::Esck => {
                        let run = if baseline == Method::Esdk { esdk } else { esck };
                        run(&net, &events, &x, params.h, params.kernel).map_err(|e| match e {
                            BaselineError::Network(ne) => events_io(&ne),
                            other => CliError::Numeric(other.to_string()),
                        })?
                    }
                    Method::Lplr => unreachable!("handled above"),
                };
                records.push(ProfileRecord {
                    method: baseline.name().to_string(),
                    edge: x.edge.0,
                    offset: x.offset,
                    density,
                    stderr: None,
                    regime: None,
                });
            }
            let profile = out_dir.join("profile.csv");
            write_profile(&profile, &records)?;
            written.push(profile);
        }
    }

    let parameters = serde_json::json!({
        "h": params.h,
        "omega": params.omega,
        "alpha": params.alpha,
        "kernel": params.kernel.name(),
        "step": step,
        "method": method.name(),
    });
    let inputs = vec![network_path.display().to_string(), events_path.display().to_string()];
    let outputs = file_names(&written);
    written.push(write_manifest(&out_dir, "estimate", parameters, &inputs, &outputs)?);
    Ok(written)
}

/// Options of the `test-vertices` command.
#[derive(Debug, Clone, Default)]
pub struct TestVerticesOpts {
    /// Network JSON file.
    pub network: Option<PathBuf>,
    /// Events CSV file.
    pub events: Option<PathBuf>,
    /// Kernel bandwidth along the network.
    pub h: Option<f64>,
    /// Histogram bin width; defaults to `h/4`.
    pub omega: Option<f64>,
    /// Pretest level; 0 disables vertex pooling. Defaults to 0.05.
    pub alpha: Option<f64>,
    /// Kernel name; defaults to `epanechnikov`.
    pub kernel: Option<String>,
    /// Shared options.
    pub common: CommonOpts,
}

/// Runs `test-vertices`: writes `vertices.json` and `manifest.json`.
pub fn cmd_test_vertices(opts: &TestVerticesOpts) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&opts.common)?;
    let network_path = require(opts.network.clone().or(cfg.network.clone()), "network")?;
    let events_path = require(opts.events.clone().or(cfg.events.clone()), "events")?;
    let params =
        FitParams::resolve(opts.h.or(cfg.h), opts.omega.or(cfg.omega), opts.alpha.or(cfg.alpha), opts.kernel.as_deref().or(cfg.kernel.as_deref()))?;
    let out_dir = ensure_out_dir(&opts.common.out_dir, cfg.out_dir.clone())?;

    let inputs = load_and_test(&network_path, &events_path, &params)?;
    let outcomes = vertex_outcomes(&inputs.decisions);
    let report = vertex_report_file(
        &inputs.decisions,
        &outcomes,
        params.h,
        params.omega,
        params.alpha,
        params.kernel,
    );
    let vertices = out_dir.join("vertices.json");
    write_json(&vertices, &report)?;

    let parameters = serde_json::json!({
        "h": params.h,
        "omega": params.omega,
        "alpha": params.alpha,
        "kernel": params.kernel.name(),
    });
    let manifest = write_manifest(
        &out_dir,
        "test-vertices",
        parameters,
        &[network_path.display().to_string(), events_path.display().to_string()],
        &file_names(std::slice::from_ref(&vertices)),
    )?;
    Ok(vec![vertices, manifest])
}

/// Options of the `simulate` command.
#[derive(Debug, Clone, Default)]
pub struct SimulateOpts {
    /// Scenario selector (`I`, `II`, `III`, or a scenario name).
    pub case: Option<String>,
    /// Events per edge; defaults to 1000.
    pub points: Option<usize>,
    /// Replicate index within the seed's stream; defaults to 0.
    pub rep: Option<u64>,
    /// Shared options.
    pub common: CommonOpts,
}

/// Runs `simulate`: draws one synthetic replicate and writes it as
/// `network.json` and `events.csv` ready for `estimate`.
pub fn cmd_simulate(opts: &SimulateOpts) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&opts.common)?;
    let scenario = parse_case(&require(opts.case.clone().or(cfg.case.clone()), "case")?)?;
    let points = opts.points.or(cfg.points).unwrap_or(1000);
    if points == 0 {
        return Err(CliError::Usage("points must be at least 1".to_string()));
    }
    let rep = opts.rep.or(cfg.rep).unwrap_or(0);
    let seed = resolve_seed(opts.common.seed, cfg.seed)?;
    let out_dir = ensure_out_dir(&opts.common.out_dir, cfg.out_dir.clone())?;

    let net = star_network();
    let events = sample_scenario(scenario, points, seed, rep);

    let network = out_dir.join("network.json");
    write_network(&network, &net)?;
    let events_path = out_dir.join("events.csv");
    write_events(&events_path, &events)?;

    let parameters = serde_json::json!({
        "case": scenario.name(),
        "points": points,
        "rep": rep,
        "seed": seed,
        "suggested_h": scenario.default_h(),
    });
    let written = vec![network, events_path];
    let outputs = file_names(&written);
    let manifest = write_manifest(&out_dir, "simulate", parameters, &[], &outputs)?;
    Ok(written.into_iter().chain([manifest]).collect())
}

/// Options of the `benchmark` command.
#[derive(Debug, Clone, Default)]
pub struct BenchmarkOpts {
    /// Scenario selector; required unless `power_study` is set.
    pub case: Option<String>,
    /// Events per edge; defaults to 1000.
    pub points: Option<usize>,
    /// Replicates; defaults to 100 (500 for the power study).
    pub reps: Option<usize>,
    /// Bandwidth; defaults to the scenario's pilot value (0.45 for the
    /// power study).
    pub h: Option<f64>,
    /// Histogram bin width; defaults to the harness value.
    pub omega: Option<f64>,
    /// Pretest level; defaults to 0.05.
    pub alpha: Option<f64>,
    /// Kernel name; defaults to `epanechnikov`.
    pub kernel: Option<String>,
    /// Comma-separated methods; defaults to all four.
    pub methods: Option<String>,
    /// Run the pretest power study instead of the method comparison.
    pub power_study: bool,
    /// Exponent pairs for the power study, `left:right` comma-separated.
    pub pairs: Option<String>,
    /// Shared options.
    pub common: CommonOpts,
}

/// Runs `benchmark`: writes `benchmark.csv` (method comparison) or
/// `power.csv` (pretest power study), plus `manifest.json`.
pub fn cmd_benchmark(opts: &BenchmarkOpts) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&opts.common)?;
    let points = opts.points.or(cfg.points).unwrap_or(1000);
    let alpha = opts.alpha.or(cfg.alpha).unwrap_or(0.05);
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "alpha must lie in (0, 1) for benchmarks, got {alpha}"
        )));
    }
    let kernel = parse_kernel(opts.kernel.as_deref().or(cfg.kernel.as_deref()))?;
    let omega = match opts.omega.or(cfg.omega) {
        Some(w) => Some(check_positive(w, "bin width")?),
        None => None,
    };
    let seed = resolve_seed(opts.common.seed, cfg.seed)?;
    let threads = opts.common.threads.or(cfg.threads);
    let out_dir = ensure_out_dir(&opts.common.out_dir, cfg.out_dir.clone())?;
    let pool = thread_pool(threads)?;

    if opts.power_study {
        let pairs = match opts.pairs.as_deref().or(cfg.pairs.as_deref()) {
            None => default_power_pairs(),
            Some(s) => parse_pairs(s)?,
        };
        let reps = opts.reps.or(cfg.reps).unwrap_or(500);
        let h = check_h(opts.h.or(cfg.h).unwrap_or(0.45))?;
        let rows: Vec<Type2Row> = pool
            .install(|| {
                pairs
                    .par_iter()
                    .enumerate()
                    .map(|(i, &pair)| {
                        // One pair per spec, seed shifted by the pair index,
                        // matches a single sequential run over all pairs.
                        let spec = Type2Spec {
                            pairs: vec![pair],
                            points_per_edge: points,
                            reps,
                            h,
                            omega,
                            alpha,
                            kernel,
                            seed: seed.wrapping_add(i as u64),
                        };
                        type2_study(&spec).map(|mut rows| rows.pop().expect("one pair, one row"))
                    })
                    .collect::<Result<Vec<_>, SimError>>()
            })
            .map_err(sim_err)?;
        let power = out_dir.join("power.csv");
        write_power(&power, &rows)?;

        let parameters = serde_json::json!({
            "pairs": rows.iter().map(|r| [r.beta_left, r.beta_right]).collect::<Vec<_>>(),
            "points": points,
            "reps": reps,
            "h": h,
            "omega": omega,
            "alpha": alpha,
            "kernel": kernel.name(),
            "seed": seed,
            "threads": threads,
        });
        let outputs = file_names(std::slice::from_ref(&power));
        let manifest = write_manifest(&out_dir, "benchmark", parameters, &[], &outputs)?;
        return Ok(vec![power, manifest]);
    }

    if opts.pairs.is_some() {
        return Err(CliError::Usage("pairs requires --power-study".to_string()));
    }
    let scenario = parse_case(&require(opts.case.clone().or(cfg.case.clone()), "case")?)?;
    let reps = opts.reps.or(cfg.reps).unwrap_or(100);
    let h = check_h(opts.h.or(cfg.h).unwrap_or_else(|| scenario.default_h()))?;
    let methods = parse_methods(opts.methods.as_deref().or(cfg.methods.as_deref()))?;
    let spec = ScenarioSpec { scenario, points_per_edge: points, reps, h, omega, alpha, kernel, seed };
    spec.validate().map_err(sim_err)?;

    let net = star_network();
    let eval = NetworkPoint { edge: EdgeId(2), offset: 0.0 };
    let truth = scenario.true_hub_value();
    let rows: Vec<MetricRow> = pool
        .install(|| {
            methods
                .iter()
                .map(|&method| {
                    // Replicates are independent streams, so a parallel
                    // collect in rep order matches the sequential run.
                    let estimates = (0..reps)
                        .into_par_iter()
                        .map(|rep| replicate_estimate(&net, &spec, rep as u64, method, &eval))
                        .collect::<Result<Vec<f64>, SimError>>()?;
                    Ok(aggregate_metrics(scenario, method, truth, &estimates))
                })
                .collect::<Result<Vec<_>, SimError>>()
        })
        .map_err(sim_err)?;
    let benchmark = out_dir.join("benchmark.csv");
    write_benchmark(&benchmark, &rows)?;

    let parameters = serde_json::json!({
        "case": scenario.name(),
        "points": points,
        "reps": reps,
        "h": h,
        "omega": spec.bin_width(),
        "alpha": alpha,
        "kernel": kernel.name(),
        "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "seed": seed,
        "threads": threads,
    });
    let outputs = file_names(std::slice::from_ref(&benchmark));
    let manifest = write_manifest(&out_dir, "benchmark", parameters, &[], &outputs)?;
    Ok(vec![benchmark, manifest])
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_selectors_cover_numerals_and_names() {
        assert_eq!(parse_case("I").unwrap(), Scenario::MixedDecay);
        assert_eq!(parse_case("ii").unwrap(), Scenario::CommonDecay);
        assert_eq!(parse_case("3").unwrap(), Scenario::CenteredBump);
        assert_eq!(parse_case("common-decay").unwrap(), Scenario::CommonDecay);
        assert_eq!(parse_case("degenerate").unwrap(), Scenario::Degenerate);
        assert_eq!(parse_case("IV").unwrap_err().kind(), "usage");
    }

    #[test]
    fn method_lists_parse_and_dedupe() {
        assert_eq!(parse_methods(None).unwrap(), Method::ALL.to_vec());
        assert_eq!(
            parse_methods(Some("LPLR, esdk,lplr")).unwrap(),
            vec![Method::Lplr, Method::Esdk]
        );
        assert_eq!(parse_methods(Some("spline")).unwrap_err().kind(), "usage");
        assert_eq!(parse_methods(Some(",")).unwrap_err().kind(), "usage");
    }

    #[test]
    fn pair_lists_parse_or_reject() {
        assert_eq!(parse_pairs("3.5:4.5, 4:4").unwrap(), vec![(3.5, 4.5), (4.0, 4.0)]);
        assert_eq!(parse_pairs("3.5-4.5").unwrap_err().kind(), "usage");
        assert_eq!(parse_pairs("a:b").unwrap_err().kind(), "usage");
    }

    #[test]
    fn default_power_grid_narrows_toward_equality() {
        let pairs = default_power_pairs();
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs[0], (3.5, 4.5));
        let last = pairs[9];
        assert!((last.0 - 3.95).abs() < 1e-12 && (last.1 - 4.05).abs() < 1e-12);
        for w in pairs.windows(2) {
            assert!(w[1].1 - w[1].0 < w[0].1 - w[0].0);
        }
    }

    #[test]
    fn fit_params_default_omega_to_quarter_bandwidth() {
        let p = FitParams::resolve(Some(0.4), None, None, None).unwrap();
        assert!((p.omega - 0.1).abs() < 1e-15);
        assert_eq!(p.alpha, 0.05);
        assert_eq!(p.kernel, Kernel::Epanechnikov);
        assert_eq!(FitParams::resolve(None, None, None, None).unwrap_err().kind(), "usage");
        assert_eq!(
            FitParams::resolve(Some(-1.0), None, None, None).unwrap_err().kind(),
            "usage"
        );
        // Zero alpha is the pooling kill switch, not an error.
        assert_eq!(FitParams::resolve(Some(0.4), None, Some(0.0), None).unwrap().alpha, 0.0);
        assert_eq!(
            FitParams::resolve(Some(0.4), None, Some(1.0), None).unwrap_err().kind(),
            "usage"
        );
    }
}
