use crate::{commands, Cli};
use popdiff::Error;
use serde_json::{json, Value};
use std::io::Write;
use std::time::Instant;

/// A command's result and whether the mathematics it asserts held.
pub struct Outcome {
    pub name: String,
    pub result: Value,
    pub ok: bool,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::TooLarge { .. } => "guard_exceeded",
        Error::Io(_) => "io",
        Error::Json(_) => "parse",
        Error::BadMagic | Error::VersionMismatch(_) | Error::CorruptLength => "file_format",
        _ => "invalid_input",
    }
}

/// Runs the command and writes one JSON line. Exit codes: 0 success,
/// 1 usage or IO error, 2 a checked assertion failed.
pub fn run(cli: &Cli, args: &[String]) -> u8 {
    let start = Instant::now();
    let outcome = commands::dispatch(cli);
    let wall = start.elapsed().as_millis() as u64;
    let g = &cli.global;
    let backend = match g.backend {
        crate::BackendArg::Exact => "exact",
        crate::BackendArg::Float => "float",
    };
    match outcome {
        Ok(o) => {
            let line = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": o.name,
                "config": {
                    "args": args,
                    "seed": g.seed,
                    "guard": g.guard,
                    "backend": backend,
                },
                "backend": backend,
                "seed": g.seed,
                "ok": o.ok,
                "result": o.result,
                "wall_time_ms": wall,
            });
            if let Err(e) = emit(&line, g.json.as_deref()) {
                eprintln!("error: {e}");
                return 1;
            }
            if o.ok {
                0
            } else {
                2
            }
        }
        Err(e) => {
            let line = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "error": e.to_string(),
                "kind": error_kind(&e),
                "seed": g.seed,
            });
            eprintln!("{line}");
            1
        }
    }
}

fn emit(line: &Value, path: Option<&std::path::Path>) -> std::io::Result<()> {
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)?;
            writeln!(f, "{line}")
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{line}")
        }
    }
}
