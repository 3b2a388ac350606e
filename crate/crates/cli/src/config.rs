//! `--config` files: a JSON object whose keys mirror the command-line flags.
//! The file is expanded into flags placed before the ones typed by the user,
//! so the command line wins on conflicts.

use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;

use crate::args::COMMANDS;

fn config_path(args: &[OsString]) -> Result<Option<OsString>, String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned().map(Some).ok_or_else(|| "--config needs a path".to_string());
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Ok(Some(rest.into()));
        }
    }
    Ok(None)
}

fn scalar(key: &str, v: &Value) -> Result<Option<String>, String> {
    Ok(match v {
        Value::Null => None,
        Value::Bool(_) => return Err(format!("config key `{key}`: booleans are not accepted")),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Result<Vec<String>, String> = items
                .iter()
                .map(|i| match i {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(format!("config key `{key}`: lists hold numbers or strings")),
                })
                .collect();
            Some(parts?.join(";"))
        }
        // nested documents are passed through as JSON text (covering profiles)
        Value::Object(_) => Some(v.to_string()),
    })
}

/// Flags generated from a config document, and the command it names.
pub fn expand(doc: &Value) -> Result<(Option<String>, Vec<OsString>), String> {
    let obj = doc.as_object().ok_or("config must be a JSON object")?;
    let mut command = None;
    let mut flags = Vec::new();
    for (key, value) in obj {
        if key == "command" {
            let c = value.as_str().ok_or("`command` must be a string")?;
            if !COMMANDS.contains(&c) {
                return Err(format!("unknown command `{c}` in config"));
            }
            command = Some(c.to_string());
            continue;
        }
        if key == "config" {
            return Err("config files cannot include other config files".into());
        }
        if let Some(v) = scalar(key, value)? {
            let flag = if key == "C" { "--C".to_string() } else { format!("--{}", key.replace('_', "-")) };
            flags.push(flag.into());
            flags.push(v.into());
        }
    }
    Ok((command, flags))
}

/// Rewrite the raw arguments so that config flags precede user flags.
pub fn merge_args(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("bad config JSON: {e}"))?;
    let (from_file, flags) = expand(&doc)?;

    let mut rest: Vec<OsString> = args.iter().skip(1).cloned().collect();
    let cli_command = rest.iter().position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()));
    let command = match (cli_command, from_file) {
        (Some(i), file) => {
            let c = rest.remove(i);
            if let Some(f) = file {
                if c.to_string_lossy() != f {
                    return Err(format!("config names command `{f}` but `{}` was given", c.to_string_lossy()));
                }
            }
            c
        }
        (None, Some(f)) => f.into(),
        (None, None) => return Ok(args),
    };
    let mut out = vec![args[0].clone(), command];
    out.extend(flags);
    out.extend(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn expands_scalars_lists_and_command() {
        let doc: Value = serde_json::from_str(r#"{"command":"bound","model":"tensor","dims":[4,4,4],"m_grid":"1:5","C":2}"#).unwrap();
        let (cmd, flags) = expand(&doc).unwrap();
        assert_eq!(cmd.as_deref(), Some("bound"));
        assert_eq!(flags, os(&["--C", "2", "--dims", "4;4;4", "--m-grid", "1:5", "--model", "tensor"]));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(expand(&Value::from(3)).is_err());
        assert!(expand(&serde_json::from_str(r#"{"command":"plot"}"#).unwrap()).is_err());
        assert!(expand(&serde_json::from_str(r#"{"trace":true}"#).unwrap()).is_err());
    }

    #[test]
    fn no_config_leaves_arguments_alone() {
        let a = os(&["sketchlab", "bound", "--model", "jl_finite"]);
        assert_eq!(merge_args(a.clone()).unwrap(), a);
    }
}
