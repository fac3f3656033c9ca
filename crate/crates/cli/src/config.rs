//! `--config <file>` layering: each `[subcommand]` table supplies defaults
//! for that subcommand's long flags. Anything given on the command line wins.
//!
//! ```toml
//! [solve]
//! tol = 1e-10
//! require-converged = true
//!
//! [bench]
//! trials = 20
//! shapes = ["(3,20)", "(3,50)"]
//! ```

use std::fs;

use toml::{Table, Value};

/// Pulls `--config PATH` / `--config=PATH` out of `args`.
fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>, String> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--" {
            break;
        }
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file argument".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(path)
}

fn given(args: &[String], flag: &str) -> bool {
    let long = format!("--{flag}");
    let with_eq = format!("--{flag}=");
    args.iter().any(|a| *a == long || a.starts_with(&with_eq))
}

fn scalar(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(format!("{f:e}")),
        other => Err(format!("config key `{key}`: unsupported value {other}")),
    }
}

/// Returns `args` with defaults from the config file (if any) spliced in
/// after the subcommand name.
pub fn apply(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = take_config_path(&mut args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(1);
        format!("{path}:{line}: {}", e.message())
    })?;

    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let sub = args[sub_pos].clone();
    for key in table.keys() {
        if !matches!(table[key], Value::Table(_)) {
            return Err(format!("{path}: top-level key `{key}` must be a [subcommand] table"));
        }
    }
    let Some(Value::Table(section)) = table.get(&sub) else {
        return Ok(args);
    };

    let mut extra = Vec::new();
    for (key, value) in section {
        if given(&args, key) {
            continue;
        }
        match value {
            Value::Boolean(true) => extra.push(format!("--{key}")),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                for item in items {
                    extra.push(format!("--{key}"));
                    extra.push(scalar(key, item)?);
                }
            }
            v => {
                extra.push(format!("--{key}"));
                extra.push(scalar(key, v)?);
            }
        }
    }
    args.splice(sub_pos + 1..sub_pos + 1, extra);
    Ok(args)
}
