mod commands;
mod json;
mod problem;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qpolar::acceptance::DEFAULT_SEED;
use qpolar::{ErrorKind, TolerancePolicy};
use serde_json::{json, Value};

use commands::{Ctx, COMMANDS};
use json::num;
use problem::{ProblemFile, FORMAT_VERSION};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Core(qpolar::Error),
    Io(String),
}

impl From<qpolar::Error> for CliError {
    fn from(e: qpolar::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Precondition => 2,
                ErrorKind::Verification => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "validation",
            2 => "precondition",
            _ => "verification",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

/// Batch front-end: reads a JSON problem file and writes a JSON report.
#[derive(Debug, Parser)]
#[command(name = "qpolar", version)]
struct Cli {
    /// One of: dual, pair-check, williamson, project, reconstruct, capacity,
    /// evolve, mahler, hardy, donoho-stark, selftest
    command: String,
    /// Problem file (not needed for selftest)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report destination; `-` for stdout
    #[arg(long, default_value = "-")]
    output: String,
    /// Overrides params.tolerance_rel and the default 1e-9
    #[arg(long)]
    tolerance_rel: Option<f64>,
    /// Overrides params.seed
    #[arg(long)]
    seed: Option<u64>,
}

fn load(cli: &Cli) -> Result<ProblemFile, CliError> {
    match &cli.input {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ProblemFile::parse(&text)
        }
        None if cli.command == "selftest" => Ok(ProblemFile {
            version: FORMAT_VERSION.to_string(),
            hbar: 1.0,
            n: 1,
            matrices: Default::default(),
            params: Default::default(),
        }),
        None => Err(CliError::Validation(format!("{} needs --input", cli.command))),
    }
}

fn tolerance(cli: &Cli, pf: &ProblemFile) -> Result<TolerancePolicy, CliError> {
    match cli.tolerance_rel.or(pf.params.tolerance_rel) {
        Some(r) => Ok(TolerancePolicy::default().with_rel_eq(r)?),
        None => Ok(TolerancePolicy::default()),
    }
}

fn build_report(cli: &Cli) -> (Value, u8) {
    let mut report = json!({
        "command": cli.command,
        "version": env!("CARGO_PKG_VERSION"),
        "format_version": FORMAT_VERSION,
    });
    let outcome = (|| {
        if !COMMANDS.contains(&cli.command.as_str()) {
            return Err(CliError::Validation(format!(
                "unknown command {:?}; expected one of {}",
                cli.command,
                COMMANDS.join(", ")
            )));
        }
        let pf = load(cli)?;
        let tol = tolerance(cli, &pf)?;
        let seed = cli.seed.or(pf.params.seed).unwrap_or(DEFAULT_SEED);
        report["hbar"] = num(pf.hbar);
        report["n"] = json!(pf.n);
        report["input"] = serde_json::to_value(&pf).unwrap_or(Value::Null);
        report["tolerance"] = json!({
            "rel_eq": num(tol.rel_eq),
            "psd_slack": num(tol.psd_slack),
            "strict_pd_floor": num(tol.strict_pd_floor),
        });
        report["seed"] = json!(seed);
        let ctx = Ctx { pf: &pf, tol, seed };
        commands::run(&cli.command, &ctx)
    })();
    match outcome {
        Ok(o) => {
            report["result"] = o.result;
            report["certificates"] = o.certificates;
            report["flags"] = Value::Array(o.flags);
            report["status"] = json!(o.status);
            (report, o.exit as u8)
        }
        Err(e) => {
            eprintln!("qpolar {}: {} error: {e}", cli.command, e.kind());
            report["error"] = json!({ "kind": e.kind(), "message": e.to_string() });
            report["status"] = json!("error");
            (report, e.exit_code())
        }
    }
}

fn write_report(dest: &str, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    if dest == "-" {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))
    } else {
        fs::write(dest, text).map_err(|e| CliError::Io(format!("{dest}: {e}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (report, code) = build_report(&cli);
    if let Err(e) = write_report(&cli.output, &report) {
        eprintln!("qpolar: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
