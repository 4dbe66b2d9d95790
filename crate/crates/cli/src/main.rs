//! `fss`: scenario runs, fits and closed-form calculators.

mod calc;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fss_core::fitting::{
    fit, fit_rabi_master_equation, model_by_name, read_xy_csv, FitOptions, FitResult, RabiPriors, MODEL_NAMES,
};
use fss_core::scenario::{write_manifest, Manifest, Scenario};
use fss_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "fss", version, about = "Faraday-geometry spin simulator")]
struct Cli {
    /// Worker threads for scan points (default: logical cores).
    #[arg(long, global = true, env = "FSS_THREADS")]
    threads: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    #[arg(long = "config", value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(value_name = "SCENARIO", conflicts_with = "config")]
    path: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn scenario_path(&self) -> Result<&Path, Failure> {
        self.config
            .as_deref()
            .or(self.path.as_deref())
            .ok_or_else(|| Failure::usage("a scenario path is required (--config PATH)"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its CSV and manifest.
    Simulate(RunArgs),
    /// Run a two-axis scenario; also writes the per-column peak summary.
    Scan2d(RunArgs),
    /// Fit a library model to (x, y[, yerr]) CSV data.
    Fit {
        model: String,
        data: PathBuf,
        /// Initial values as name=value pairs, comma separated.
        #[arg(long, value_delimiter = ',')]
        init: Vec<String>,
        /// Fixed quantities for rabi_master_equation: t2star (ns),
        /// gamma1 (MHz), gamma2 (MHz, fixes it), detuning (MHz).
        #[arg(long, value_delimiter = ',')]
        prior: Vec<String>,
        /// Iteration cap for library models.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Write the result record here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a closed-form relation.
    Calc(calc::CalcArgs),
    /// List the fit models and their parameters.
    ListModels,
    /// Check a scenario file without running it.
    Validate {
        #[arg(long = "config", value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(value_name = "SCENARIO", conflicts_with = "config")]
        path: Option<PathBuf>,
    },
}

/// Exit codes.
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_NO_CONVERGENCE: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_numerical() => EXIT_NUMERICAL,
            Error::Data { .. } => EXIT_DATA,
            Error::Io(_) => 1,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn run_scenario(args: &RunArgs, two_axes: bool, json_out: bool) -> Result<(), Failure> {
    let path = args.scenario_path()?;
    let start = Instant::now();
    let mut scenario = Scenario::from_path(path)?;
    if two_axes {
        scenario.require_axes(2)?;
    }
    if let Some(seed) = args.seed {
        scenario.seed = Some(seed);
    }
    let mut product = scenario.run()?;
    if !two_axes {
        product.summary = None;
    }
    let written = product.write(&args.out)?;
    let names: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = Manifest {
        scenario: scenario.name.clone(),
        kind: scenario.kind.name().to_string(),
        inputs_sha256: scenario.inputs_sha256().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: scenario.seed,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: names,
    };
    let mpath = write_manifest(&args.out, &manifest)?;
    if json_out {
        let slope = product.summary.as_ref().and_then(|s| s.slope);
        println!(
            "{}",
            json!({
                "scenario": manifest.scenario,
                "rows": product.rows.len(),
                "outputs": written,
                "manifest": mpath,
                "slope": slope,
            })
        );
    } else {
        for p in &written {
            println!("wrote {}", p.display());
        }
        if let Some(s) = product.summary.as_ref().and_then(|s| s.slope) {
            println!("peak slope {s}");
        }
        println!("wrote {}", mpath.display());
    }
    Ok(())
}

fn parse_pairs(items: &[String], what: &str) -> Result<Vec<(String, f64)>, Failure> {
    items
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("{what} '{s}' is not name=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("{what} '{s}' has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn lookup(pairs: &[(String, f64)], name: &str) -> Option<f64> {
    pairs.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
}

fn report_fit(result: &FitResult, extra: serde_json::Value, json_out: bool, out: Option<&Path>) -> Result<(), Failure> {
    let record = result.to_record();
    if let Some(path) = out {
        std::fs::write(path, &record).map_err(Error::from)?;
        std::fs::write(path.with_extension("json"), result.to_json()).map_err(Error::from)?;
    }
    if json_out {
        let mut v: serde_json::Value = serde_json::to_value(result).expect("fit result serializes");
        if let (Some(obj), Some(more)) = (v.as_object_mut(), extra.as_object()) {
            obj.extend(more.clone());
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("{:<14} {:>18} {:>12}", "parameter", "value", "stderr");
        for ((n, v), e) in result.names.iter().zip(&result.params).zip(&result.stderr) {
            println!("{n:<14} {v:>18.10} {e:>12.4e}");
        }
        println!("status {:?}, {} iterations, chi2 {:e}", result.status, result.iterations, result.chi2);
        if let Some(obj) = extra.as_object() {
            for (k, v) in obj {
                println!("{k} {v}");
            }
        }
    }
    if !result.converged() {
        return Err(Failure {
            code: EXIT_NO_CONVERGENCE,
            message: format!("fit did not converge: status {:?}", result.status),
        });
    }
    Ok(())
}

struct FitArgs<'a> {
    model: &'a str,
    data: &'a Path,
    init: &'a [String],
    prior: &'a [String],
    max_iterations: Option<usize>,
    out: Option<&'a Path>,
}

fn run_fit(a: FitArgs<'_>, json_out: bool) -> Result<(), Failure> {
    let FitArgs {
        model,
        data,
        init,
        prior,
        max_iterations,
        out,
    } = a;
    let library = if model == "rabi_master_equation" {
        None
    } else {
        Some(model_by_name(model)?)
    };
    let d = read_xy_csv(data).map_err(|e| match e {
        Error::Io(io) => Failure {
            code: EXIT_DATA,
            message: format!("{}: {io}", data.display()),
        },
        other => other.into(),
    })?;
    let init = parse_pairs(init, "initial value")?;
    let Some(m) = library else {
        let prior = parse_pairs(prior, "prior")?;
        let mut priors = RabiPriors::new(
            lookup(&prior, "t2star").unwrap_or(f64::INFINITY),
            lookup(&prior, "gamma1").unwrap_or(0.0),
        );
        priors.gamma2_mhz = lookup(&prior, "gamma2");
        priors.detuning_mhz = lookup(&prior, "detuning").unwrap_or(0.0);
        let start = [
            lookup(&init, "rabi").ok_or_else(|| Failure::usage("--init needs rabi=<MHz>"))?,
            lookup(&init, "gamma2").unwrap_or(1.0),
            lookup(&init, "scale").unwrap_or(1.0),
            lookup(&init, "offset").unwrap_or(0.0),
        ];
        let r = fit_rabi_master_equation(&d.x, &d.y, &priors, start)?;
        let extra = json!({
            "f_pi": r.f_pi,
            "f_pi_err": r.f_pi_err,
            "q": r.q,
            "q_err": r.q_err,
            "q_status": format!("{:?}", r.q_status).to_lowercase(),
        });
        return report_fit(&r.fit, extra, json_out, out);
    };
    let mut start = Vec::with_capacity(m.params.len());
    for spec in &m.params {
        start.push(lookup(&init, &spec.name).ok_or_else(|| {
            Failure::usage(format!(
                "--init needs a value for every parameter of {model}: {}",
                m.param_names().join(", ")
            ))
        })?);
    }
    let mut opts = FitOptions::default();
    if let Some(n) = max_iterations {
        opts.max_iterations = n;
    }
    let r = fit(&m, &d.x, &d.y, d.yerr.as_deref(), &start, &opts)?;
    report_fit(&r, json!({}), json_out, out)
}

fn list_models(json_out: bool) {
    let mut rows: Vec<(String, Vec<String>)> = MODEL_NAMES
        .iter()
        .map(|n| {
            let probe = n.replace("<N>", "2");
            let params = model_by_name(&probe)
                .map(|m| m.param_names().iter().map(|s| s.to_string()).collect())
                .unwrap_or_default();
            (n.to_string(), params)
        })
        .collect();
    rows.push((
        "rabi_master_equation".into(),
        ["rabi", "gamma2", "scale", "offset"].map(String::from).to_vec(),
    ));
    if json_out {
        let v: Vec<_> = rows.iter().map(|(n, p)| json!({ "name": n, "params": p })).collect();
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for (n, p) in rows {
            println!("{n:<22} {}", p.join(", "));
        }
    }
}

fn validate(path: &Path, json_out: bool) -> Result<(), Failure> {
    let s = Scenario::from_path(path)?;
    let points: usize = s.axes.iter().map(|a| a.values.len()).product();
    if json_out {
        println!(
            "{}",
            json!({ "scenario": s.name, "kind": s.kind.name(), "axes": s.axes.len(), "points": points })
        );
    } else {
        println!("ok: {} ({}, {} points)", s.name, s.kind.name(), points);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Simulate(a) => run_scenario(a, false, cli.json),
        Command::Scan2d(a) => run_scenario(a, true, cli.json),
        Command::Fit {
            model,
            data,
            init,
            prior,
            max_iterations,
            out,
        } => run_fit(
            FitArgs {
                model,
                data,
                init,
                prior,
                max_iterations: *max_iterations,
                out: out.as_deref(),
            },
            cli.json,
        ),
        Command::Calc(args) => calc::run(args, cli.json),
        Command::ListModels => {
            list_models(cli.json);
            Ok(())
        }
        Command::Validate { config, path } => {
            let p = config
                .as_deref()
                .or(path.as_deref())
                .ok_or_else(|| Failure::usage("a scenario path is required (--config PATH)"))?;
            validate(p, cli.json)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Usage("x".into())), EXIT_CONFIG);
        assert_eq!(code(Error::Domain("x".into())), EXIT_CONFIG);
        assert_eq!(code(Error::Data { row: 3, message: "x".into() }), EXIT_DATA);
        let numerical = Error::Numerical {
            time: 1.0,
            reason: "step underflow".into(),
        };
        assert_eq!(code(numerical), EXIT_NUMERICAL);
        let inner = Error::AmbiguousSteadyState { null_dim: 2 };
        let point = Error::ScanPoint {
            index: 4,
            coords: "tau = 2".into(),
            source: Box::new(inner),
        };
        assert_eq!(code(point), EXIT_NUMERICAL);
    }

    #[test]
    fn pairs_parse() {
        let p = parse_pairs(&["rabi=220".into(), " gamma2 = 3.5".into()], "x").unwrap();
        assert_eq!(lookup(&p, "gamma2"), Some(3.5));
        assert!(parse_pairs(&["rabi".into()], "x").is_err());
        assert!(parse_pairs(&["rabi=fast".into()], "x").is_err());
    }
}
