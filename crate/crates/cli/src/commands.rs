//! The `check` and `fmt` verbs. Both write to caller-supplied streams so they
//! can be driven from tests without spawning a process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vinculum_core::{check_document, parse_document, serialize_document, CheckConfig, CheckOptions, Status};

use crate::report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCOMPLETE: i32 = 1;
pub const EXIT_UNREADABLE: i32 = 2;

#[derive(Clone, Debug)]
pub struct CheckArgs {
    pub paths: Vec<PathBuf>,
    pub json: bool,
    pub fuel: usize,
    pub strict_unused_unifvars: bool,
}

fn worst(a: i32, b: i32) -> i32 {
    a.max(b)
}

pub fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = CheckConfig { fuel: args.fuel, options: CheckOptions { strict_unifvars: args.strict_unused_unifvars } };
    let mut code = EXIT_OK;
    let mut files = Vec::new();
    for path in &args.paths {
        let (file_code, value) = check_file(path, &config, args.json, out, err);
        code = worst(code, file_code);
        files.push(value);
    }
    if args.json {
        let value = json!({"files": files, "complete": code == EXIT_OK});
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("serializable"));
    }
    code
}

fn check_file(path: &Path, config: &CheckConfig, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> (i32, Value) {
    let shown = path.display();
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{shown}: {e}");
            return (EXIT_UNREADABLE, json!({"path": shown.to_string(), "error": {"code": "io", "message": e.to_string()}}));
        }
    };
    let doc = match parse_document(&src) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "{shown}: {e}");
            let code = if report::is_unreadable(&e) { EXIT_UNREADABLE } else { EXIT_INCOMPLETE };
            return (code, json!({"path": shown.to_string(), "error": report::document_error(&e)}));
        }
    };
    let rep = check_document(&doc, config);
    if !json {
        for t in &rep.theorems {
            if t.status == Status::Complete {
                if !t.unresolved.is_empty() {
                    let vars: Vec<String> = t.unresolved.iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(err, "{shown}: warning: theorem `{}` leaves {} unresolved", t.name, vars.join(", "));
                }
                continue;
            }
            let _ = writeln!(out, "{shown}: theorem `{}` is {}", t.name, t.status);
            for e in &t.errors {
                let _ = writeln!(out, "  step {} at {:?}: {} ({})", e.step, e.path, e.message, e.code);
            }
            for p in &t.unsolved {
                let _ = writeln!(out, "  unsolved goal at {p:?}");
            }
            for v in &t.unresolved {
                let _ = writeln!(out, "  unresolved unification variable {v}");
            }
        }
        let _ = writeln!(out, "{shown}: {}", rep.summary());
    }
    let mut value = report::document(&rep);
    value["path"] = json!(shown.to_string());
    (if rep.all_complete() { EXIT_OK } else { EXIT_INCOMPLETE }, value)
}

/// Rewrites each file in canonical form. Files that fail to parse are left
/// untouched.
pub fn fmt(paths: &[PathBuf], err: &mut dyn Write) -> i32 {
    let mut code = EXIT_OK;
    for path in paths {
        let shown = path.display();
        let result = fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|src| {
            let doc = parse_document(&src).map_err(|e| e.to_string())?;
            let canonical = serialize_document(&doc);
            if canonical != src {
                fs::write(path, canonical).map_err(|e| e.to_string())?;
            }
            Ok(())
        });
        if let Err(e) = result {
            let _ = writeln!(err, "{shown}: {e}");
            code = EXIT_UNREADABLE;
        }
    }
    code
}
