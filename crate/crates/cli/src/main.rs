//! `ruinlab`: analyze, stress and cross-verify a two-line discrete-time
//! risk model with common shocks.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input,
//! 3 internal numeric failure.

mod args;
mod manifest;
mod verify;

use std::fmt::Write as _;

use ruinlab_core::aggregate;
use ruinlab_core::counting;
use ruinlab_core::model::{self, ModelSpec};
use ruinlab_core::ruin::{self, RuinError};
use ruinlab_core::simulate::{self, SimConfig, SimSummary};

use args::{Args, UsageError};
use manifest::Manifest;

const USAGE: &str = "\
usage: ruinlab <subcommand> [flags]

subcommands:
  analyze   --model m.json --t T [--claims] [--echo] [--format csv|json] [--out FILE]
  ruin      --model m.json --u-max U [--eps E] [--format csv|json] [--out FILE]
  deficit   --model m.json --r-max R [--format json] [--out FILE]
  simulate  --model m.json --paths N --horizon T --seed S [--u U]
            [--experiment counts|claims|equivalence|ruin|thinning]
            [--pg P --c C] [--threads K] [--format json|csv] [--out FILE]
  verify    --model m.json [--seed S] [--paths N] [--threads K] [--out FILE]

RUINLAB_THREADS caps simulation parallelism.
";

enum CliError {
    Usage(String),
    Input(String),
    Numeric(String),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> CliError {
        CliError::Usage(e.0)
    }
}

impl From<RuinError> for CliError {
    fn from(e: RuinError) -> CliError {
        match e {
            RuinError::NumericFailure(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run(&argv));
}

fn run(argv: &[String]) -> i32 {
    let Some(subcommand) = argv.first() else {
        eprint!("{USAGE}");
        return 2;
    };
    let result = match subcommand.as_str() {
        "analyze" => dispatch(subcommand, &argv[1..], cmd_analyze),
        "ruin" => dispatch(subcommand, &argv[1..], cmd_ruin),
        "deficit" => dispatch(subcommand, &argv[1..], cmd_deficit),
        "simulate" => dispatch(subcommand, &argv[1..], cmd_simulate),
        "verify" => return run_verify(&argv[1..]),
        other => {
            eprintln!("unknown subcommand {other:?}");
            eprint!("{USAGE}");
            return 2;
        }
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            2
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            3
        }
    }
}

fn dispatch(
    subcommand: &str,
    raw: &[String],
    command: fn(&Args, Manifest, &ModelSpec) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let args = Args::parse(raw)?;
    let (model, contents, path) = load_model(&args)?;
    let manifest =
        Manifest::new(subcommand, args.manifest_params()).with_model(&path, contents.as_bytes());
    command(&args, manifest, &model)
}

fn load_model(args: &Args) -> Result<(ModelSpec, String, String), CliError> {
    let path = args.required("--model")?.to_string();
    let contents = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("cannot read model file {path:?}: {e}")))?;
    let model = model::parse_model(&contents).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((model, contents, path))
}

fn write_output(args: &Args, body: &str) -> Result<(), CliError> {
    match args.get("--out") {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Input(format!("cannot write {path:?}: {e}"))),
    }
}

fn threads_setting(args: &Args) -> Result<usize, CliError> {
    let requested: usize = args.parse_value("--threads")?.unwrap_or(0);
    let cap = match std::env::var("RUINLAB_THREADS") {
        Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
            CliError::Input(format!("RUINLAB_THREADS: cannot parse {raw:?}"))
        })?),
        Err(_) => None,
    };
    Ok(match (requested, cap) {
        (0, Some(cap)) if cap > 0 => cap,
        (r, Some(cap)) if cap > 0 => r.min(cap),
        (r, _) => r,
    })
}

// ── analyze ─────────────────────────────────────────────────────────────────

fn cmd_analyze(args: &Args, manifest: Manifest, model: &ModelSpec) -> Result<(), CliError> {
    if args.switch("--echo") {
        let mut body = model::model_to_canonical_json(model);
        body.push('\n');
        return write_output(args, &body);
    }
    let t: usize = args.required_value("--t")?;
    let format = args.format(&["csv", "json"], "json")?;
    let summary = model.summary();

    if args.switch("--claims") {
        let law = aggregate::total_claim_pmf(model, t).map_err(|e| CliError::Input(e.to_string()))?;
        let moments = aggregate::claims_moments(model, t);
        let body = match format.as_str() {
            "csv" => {
                let mut out = String::new();
                writeln!(out, "{}", manifest.comment_line()).unwrap();
                writeln!(out, "# moments: {}", serde_json::to_string(&moments).unwrap()).unwrap();
                writeln!(out, "k,prob").unwrap();
                for (k, w) in law.iter() {
                    writeln!(out, "{k},{w}").unwrap();
                }
                out
            }
            _ => {
                let pmf: Vec<serde_json::Value> = law
                    .iter()
                    .map(|(k, w)| serde_json::json!({"k": k, "prob": w}))
                    .collect();
                let doc = serde_json::json!({
                    "manifest": manifest.to_json(),
                    "model_summary": summary,
                    "claims": {"t": t, "moments": moments, "pmf": pmf},
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
            }
        };
        return write_output(args, &body);
    }

    let law = counting::joint_pmf(model, t).map_err(|e| CliError::Input(e.to_string()))?;
    let moments = counting::moments(model, t);
    let body = match format.as_str() {
        "csv" => {
            let mut out = String::new();
            writeln!(out, "{}", manifest.comment_line()).unwrap();
            writeln!(out, "# moments: {}", serde_json::to_string(&moments).unwrap()).unwrap();
            writeln!(out, "m1,m2,prob").unwrap();
            for m1 in 0..=t {
                for m2 in 0..=t {
                    writeln!(out, "{m1},{m2},{}", law.prob(m1, m2)).unwrap();
                }
            }
            out
        }
        _ => {
            let table: Vec<serde_json::Value> = (0..=t)
                .flat_map(|m1| (0..=t).map(move |m2| (m1, m2)))
                .map(|(m1, m2)| serde_json::json!({"m1": m1, "m2": m2, "prob": law.prob(m1, m2)}))
                .collect();
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "model_summary": summary,
                "counts": {"t": t, "moments": moments, "table": table},
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
    };
    write_output(args, &body)
}

// ── ruin ────────────────────────────────────────────────────────────────────

fn cmd_ruin(args: &Args, manifest: Manifest, model: &ModelSpec) -> Result<(), CliError> {
    let u_max: u64 = args.required_value("--u-max")?;
    let eps: f64 = args.parse_value("--eps")?.unwrap_or(1e-10);
    let format = args.format(&["csv", "json"], "csv")?;
    let curve = ruin::beekman_survival(model, u_max, eps)?;
    let body = match format.as_str() {
        "json" => {
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "curve": curve,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
        _ => {
            let mut out = String::new();
            writeln!(out, "{}", manifest.comment_line()).unwrap();
            writeln!(out, "u,delta,psi,lundberg_bound,series_tail_bound").unwrap();
            for point in &curve.points {
                let bound = point.lundberg_bound.map(|b| b.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    point.u, point.delta, point.psi, bound, point.series_tail_bound
                )
                .unwrap();
            }
            out
        }
    };
    write_output(args, &body)
}

// ── deficit ─────────────────────────────────────────────────────────────────

fn cmd_deficit(args: &Args, manifest: Manifest, model: &ModelSpec) -> Result<(), CliError> {
    let r_max: u64 = args.required_value("--r-max")?;
    args.format(&["json"], "json")?;
    let report = ruin::deficit_laws(model, r_max)?;
    let doc = serde_json::json!({
        "manifest": manifest.to_json(),
        "report": report,
    });
    write_output(args, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

// ── simulate ────────────────────────────────────────────────────────────────

fn summary_to_csv(manifest: &Manifest, summary: &SimSummary) -> String {
    let mut out = String::new();
    writeln!(out, "{}", manifest.comment_line()).unwrap();
    for hist in &summary.histograms {
        writeln!(out, "# histogram: {} (n={}, overflow={})", hist.name, hist.n, hist.overflow)
            .unwrap();
        writeln!(out, "value,count").unwrap();
        for (i, &count) in hist.counts.iter().enumerate() {
            writeln!(out, "{},{count}", hist.offset + i as i64).unwrap();
        }
    }
    out
}

fn cmd_simulate(args: &Args, manifest: Manifest, model: &ModelSpec) -> Result<(), CliError> {
    let seed: u64 = args.required_value("--seed")?;
    let paths: u64 = args.required_value("--paths")?;
    let horizon: u32 = args.required_value("--horizon")?;
    let u: u64 = args.parse_value("--u")?.unwrap_or(0);
    let experiment = args.get("--experiment").unwrap_or("counts");
    let format = args.format(&["json", "csv"], "json")?;
    let threads = threads_setting(args)?;
    let cfg = SimConfig::new(seed, paths, horizon, u)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let summary = match experiment {
        "counts" | "claims" => {
            let mut s = simulate::sample_paths(model, &cfg, threads);
            s.experiment = experiment.to_string();
            s
        }
        "equivalence" => {
            let include_independent = model.shock_joint().is_product_law(1e-12);
            simulate::equivalence_report(model, horizon as usize, &cfg, include_independent, threads)
                .map_err(|e| CliError::Input(e.to_string()))?
        }
        "ruin" => simulate::estimate_ruin(model, &cfg, threads)
            .map_err(|e| CliError::Input(e.to_string()))?,
        "thinning" => {
            let p_g: f64 = args.parse_value("--pg")?.unwrap_or(0.5);
            let c: f64 = args.parse_value("--c")?.unwrap_or(1.5);
            let event = model.per_event_claim_law();
            let (summary, _) = simulate::thinning_mc_check(&event, p_g, c, &cfg, threads)
                .map_err(|e| CliError::Input(e.to_string()))?;
            summary
        }
        other => {
            return Err(CliError::Usage(format!(
                "flag --experiment: expected counts|claims|equivalence|ruin|thinning, got {other:?}"
            )))
        }
    };

    let body = match format.as_str() {
        "csv" => summary_to_csv(&manifest, &summary),
        _ => {
            let doc = serde_json::json!({
                "manifest": manifest.to_json(),
                "summary": summary,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
        }
    };
    write_output(args, &body)
}

// ── verify ──────────────────────────────────────────────────────────────────

fn run_verify(raw: &[String]) -> i32 {
    let inner = || -> Result<(String, bool), CliError> {
        let args = Args::parse(raw)?;
        let (model, contents, path) = load_model(&args)?;
        let manifest =
            Manifest::new("verify", args.manifest_params()).with_model(&path, contents.as_bytes());
        let seed: u64 = args.parse_value("--seed")?.unwrap_or(42);
        let paths: u64 = args.parse_value("--paths")?.unwrap_or(100_000);
        let threads = threads_setting(&args)?;

        let checks = verify::run_suite(&model, seed, paths, threads);
        let mut out = String::new();
        writeln!(out, "{}", manifest.comment_line()).unwrap();
        let (mut passed, mut failed, mut skipped) = (0, 0, 0);
        for check in &checks {
            let tag = match check.outcome {
                verify::Outcome::Pass => {
                    passed += 1;
                    "PASS"
                }
                verify::Outcome::Fail => {
                    failed += 1;
                    "FAIL"
                }
                verify::Outcome::Skip => {
                    skipped += 1;
                    "SKIP"
                }
            };
            writeln!(out, "{tag} {} {}", check.name, check.detail).unwrap();
        }
        writeln!(out, "VERIFY: {passed} passed, {failed} failed, {skipped} skipped").unwrap();
        write_output(&args, &out)?;
        Ok((out, failed == 0))
    };
    match inner() {
        Ok((_, true)) => 0,
        Ok((_, false)) => 1,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            2
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            3
        }
    }
}
