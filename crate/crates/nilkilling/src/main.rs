use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nilkilling::analysis::{csi_check, transitivity_check, vsi_check, CSI_TOL, VSI_TOL};
use nilkilling::catalog;
use nilkilling::document::MetricDocument;
use nilkilling::flow::{ipd_check, IPD_TOL};
use nilkilling::geometry::MetricSpec;
use nilkilling::sample::sample_points;
use nilkilling::symmetry::{
    algebra_check, classify_field, VectorFieldSpec, Verdict, ALGEBRA_TOL, KILLING_TOL,
    NILPOTENCY_TOL,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const FLOW_TIMES: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

#[derive(Parser)]
#[command(name = "nilkilling", version, about = "metric symmetry and curvature-invariant checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Metric definition file (JSON)
    #[arg(long, conflicts_with = "entry")]
    metric: Option<PathBuf>,
    /// Built-in catalog entry id
    #[arg(long)]
    entry: Option<String>,
    /// Vector field name (repeatable; default: all fields of the source)
    #[arg(long = "field")]
    fields: Vec<String>,
    /// Number of sample points
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Sampling seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the check's main tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Taylor order for curvature evaluation
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=4))]
    jet_order: u8,
    /// Compact JSON output (default)
    #[arg(long)]
    json: bool,
    /// Indented JSON output
    #[arg(long, conflicts_with = "json")]
    pretty: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// List built-in catalog entries
    Catalog {
        #[arg(long)]
        pretty: bool,
    },
    /// Classify vector fields as KILLING / NIL_KILLING_PROPER / GENERIC
    Classify(Common),
    /// Evaluate the curvature invariant list at sampled points
    Invariants(Common),
    /// Check that every curvature invariant is constant
    CheckCsi(Common),
    /// Check that every curvature invariant vanishes
    CheckVsi(Common),
    /// Fit structure constants and check Lie-algebra closure
    Algebra(Common),
    /// Check that the fields span the tangent space at sampled points
    Span(Common),
    /// Check invariants along each field's flow orbits
    FlowCheck(Common),
    /// Validate a metric definition file without computing
    Validate(Common),
}

struct Source {
    id: String,
    metric: MetricSpec,
    fields: Vec<VectorFieldSpec>,
    expected: Vec<Option<Verdict>>,
    seed: u64,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_source(common: &Common) -> Result<Source, String> {
    match (&common.entry, &common.metric) {
        (Some(id), None) => {
            let entry = catalog::get(id).map_err(|e| e.to_string())?;
            let expected = entry.expected.iter().map(|v| Some(*v)).collect();
            Ok(Source {
                id: entry.id.to_string(),
                metric: entry.metric,
                fields: entry.fields,
                expected,
                seed: common.seed.unwrap_or(42),
            })
        }
        (None, Some(path)) => {
            let doc = MetricDocument::from_path(path).map_err(|e| e.to_string())?;
            let loaded = doc.build().map_err(|e| e.to_string())?;
            let expected = vec![None; loaded.fields.len()];
            Ok(Source {
                id: path.display().to_string(),
                metric: loaded.metric,
                fields: loaded.fields,
                expected,
                seed: common.seed.unwrap_or(loaded.seed),
            })
        }
        _ => Err("exactly one of --entry or --metric is required".into()),
    }
}

fn select_fields<'a>(
    src: &'a Source,
    names: &[String],
) -> Result<Vec<(usize, &'a VectorFieldSpec)>, String> {
    if names.is_empty() {
        return Ok(src.fields.iter().enumerate().collect());
    }
    names
        .iter()
        .map(|n| {
            src.fields
                .iter()
                .position(|f| &f.name == n)
                .map(|i| (i, &src.fields[i]))
                .ok_or_else(|| format!("no field named `{n}` in {}", src.id))
        })
        .collect()
}

fn emit(common: &Common, report: &Value) {
    let text = if common.pretty {
        serde_json::to_string_pretty(report).expect("serialize report")
    } else {
        serde_json::to_string(report).expect("serialize report")
    };
    println!("{text}");
}

fn envelope(
    command: &str,
    src: &Source,
    common: &Common,
    tolerances: BTreeMap<String, f64>,
    verdict: Value,
    diagnostics: Value,
) -> Value {
    json!({
        "version": VERSION,
        "command": command,
        "inputs": {
            "source": src.id,
            "fields": common.fields,
            "points": common.points,
            "jet_order": common.jet_order,
        },
        "tolerances": tolerances,
        "seed": src.seed,
        "verdict": verdict,
        "diagnostics": diagnostics,
    })
}

fn run_command(cmd: &Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Catalog { pretty } => {
            let entries: Vec<Value> = catalog::list()
                .into_iter()
                .map(|id| {
                    let e = catalog::get(id).expect("listed entry");
                    json!({
                        "id": e.id,
                        "description": e.description,
                        "dimension": e.metric.dim(),
                        "fields": e.fields.iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let report = json!({ "version": VERSION, "command": "catalog", "entries": entries });
            let text = if *pretty {
                serde_json::to_string_pretty(&report)
            } else {
                serde_json::to_string(&report)
            }
            .expect("serialize report");
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Validate(common) => {
            let path = common
                .metric
                .as_ref()
                .ok_or("validate requires --metric <file>")?;
            let doc = MetricDocument::from_path(path).map_err(|e| e.to_string())?;
            doc.build().map_err(|e| e.to_string())?;
            emit(
                common,
                &json!({
                    "version": VERSION,
                    "command": "validate",
                    "inputs": { "source": path.display().to_string() },
                    "verdict": true,
                    "diagnostics": Value::Array(vec![]),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Classify(common) => {
            let src = load_source(common)?;
            let selected = select_fields(&src, &common.fields)?;
            let killing_tol = common.tol.unwrap_or(KILLING_TOL);
            let pts = sample_points(&src.metric, common.points, src.seed)
                .map_err(|e| e.to_string())?;
            let mut diags = Vec::new();
            let mut all_ok = true;
            for (i, f) in selected {
                let report = classify_field(&src.metric, f, &pts.points, killing_tol, NILPOTENCY_TOL)
                    .map_err(|e| e.to_string())?;
                let as_expected = match src.expected[i] {
                    Some(v) => v == report.verdict,
                    None => true,
                };
                all_ok &= as_expected;
                diags.push(json!({
                    "field": report.field,
                    "verdict": report.verdict,
                    "as_expected": as_expected,
                    "points_checked": report.diagnostics.len(),
                    "max_lie_norm": report.diagnostics.iter()
                        .map(|d| d.lie_norm).fold(0.0f64, f64::max),
                    "max_trace_residual": report.diagnostics.iter()
                        .flat_map(|d| d.trace_residuals.iter().copied())
                        .fold(0.0f64, f64::max),
                }));
            }
            let tols = BTreeMap::from([
                ("killing".to_string(), killing_tol),
                ("nilpotency".to_string(), NILPOTENCY_TOL),
            ]);
            let report = envelope("classify", &src, common, tols, json!(all_ok), json!(diags));
            emit(common, &report);
            Ok(exit_verdict(all_ok))
        }
        Cmd::Invariants(common) => {
            let src = load_source(common)?;
            let pts = sample_points(&src.metric, common.points, src.seed)
                .map_err(|e| e.to_string())?;
            let mut diags = Vec::new();
            for p in &pts.points {
                let inv =
                    nilkilling::geometry::invariant_vector(&src.metric, p, common.jet_order as usize)
                        .map_err(|e| e.to_string())?;
                diags.push(json!({ "point": p, "invariants": inv.values }));
            }
            let report = envelope(
                "invariants",
                &src,
                common,
                BTreeMap::new(),
                json!(true),
                json!({
                    "names": nilkilling::geometry::INVARIANT_NAMES,
                    "points": diags,
                }),
            );
            emit(common, &report);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CheckCsi(common) | Cmd::CheckVsi(common) => {
            let csi = matches!(cmd, Cmd::CheckCsi(_));
            let src = load_source(common)?;
            let tol = common.tol.unwrap_or(if csi { CSI_TOL } else { VSI_TOL });
            let pts = sample_points(&src.metric, common.points, src.seed)
                .map_err(|e| e.to_string())?;
            let report = if csi {
                csi_check(&src.metric, &pts.points, common.jet_order as usize, tol)
            } else {
                vsi_check(&src.metric, &pts.points, common.jet_order as usize, tol)
            }
            .map_err(|e| e.to_string())?;
            let name = if csi { "check-csi" } else { "check-vsi" };
            let verdict = report.verdict;
            let out = envelope(
                name,
                &src,
                common,
                BTreeMap::from([("invariant".to_string(), tol)]),
                json!(verdict),
                json!({
                    "invariant_names": report.invariant_names,
                    "statistics": report.statistics,
                    "note": report.note,
                }),
            );
            emit(common, &out);
            Ok(exit_verdict(verdict))
        }
        Cmd::Algebra(common) => {
            let src = load_source(common)?;
            let selected = select_fields(&src, &common.fields)?;
            let fields: Vec<VectorFieldSpec> =
                selected.iter().map(|(_, f)| (*f).clone()).collect();
            let tol = common.tol.unwrap_or(ALGEBRA_TOL);
            let pts = sample_points(&src.metric, common.points, src.seed)
                .map_err(|e| e.to_string())?;
            let report =
                algebra_check(&fields, &src.metric, &pts.points, tol).map_err(|e| e.to_string())?;
            let ok = report.closed && !report.inconclusive;
            let out = envelope(
                "algebra",
                &src,
                common,
                BTreeMap::from([("closure".to_string(), tol)]),
                json!(ok),
                serde_json::to_value(&report).expect("serialize algebra report"),
            );
            emit(common, &out);
            Ok(exit_verdict(ok))
        }
        Cmd::Span(common) => {
            let src = load_source(common)?;
            let selected = select_fields(&src, &common.fields)?;
            let fields: Vec<VectorFieldSpec> =
                selected.iter().map(|(_, f)| (*f).clone()).collect();
            let pts = sample_points(&src.metric, common.points, src.seed)
                .map_err(|e| e.to_string())?;
            let report = transitivity_check(&src.metric, &fields, &pts.points)
                .map_err(|e| e.to_string())?;
            let verdict = report.verdict;
            let out = envelope(
                "span",
                &src,
                common,
                BTreeMap::new(),
                json!(verdict),
                serde_json::to_value(&report).expect("serialize span report"),
            );
            emit(common, &out);
            Ok(exit_verdict(verdict))
        }
        Cmd::FlowCheck(common) => {
            let src = load_source(common)?;
            let selected = select_fields(&src, &common.fields)?;
            let tol = common.tol.unwrap_or(IPD_TOL);
            let pts = sample_points(&src.metric, common.points.clamp(1, 5), src.seed)
                .map_err(|e| e.to_string())?;
            let mut diags = Vec::new();
            let mut all_ok = true;
            for (_, f) in selected {
                for p in &pts.points {
                    let report = ipd_check(
                        &src.metric,
                        f,
                        p,
                        &FLOW_TIMES,
                        common.jet_order as usize,
                        tol,
                    )
                    .map_err(|e| e.to_string())?;
                    all_ok &= report.ipd_on_orbit || report.truncated_at.is_some();
                    diags.push(json!({
                        "field": report.field,
                        "start": report.start,
                        "ipd_on_orbit": report.ipd_on_orbit,
                        "max_relative_deviation": report.max_relative_deviation,
                        "truncated_at": report.truncated_at,
                    }));
                }
            }
            let out = envelope(
                "flow-check",
                &src,
                common,
                BTreeMap::from([("ipd".to_string(), tol)]),
                json!(all_ok),
                json!(diags),
            );
            emit(common, &out);
            Ok(exit_verdict(all_ok))
        }
    }
}

fn exit_verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli.cmd) {
        Ok(code) => code,
        Err(msg) => usage_error(&msg),
    }
}
