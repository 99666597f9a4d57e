//! Plain-text `key=value` configuration files and provenance sidecars.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Syntax { path: PathBuf, line: usize, text: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            ConfigError::Syntax { path, line, text } => {
                write!(f, "{}:{line}: expected key=value, got {text:?}", path.display())
            }
        }
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(path: &Path, text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = || ConfigError::Syntax { path: path.to_path_buf(), line: i + 1, text: raw.to_string() };
        let (k, v) = line.split_once('=').ok_or_else(syntax)?;
        let k = k.trim();
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(syntax());
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts the config file entries as flags directly after the subcommand,
/// so that flags given on the command line take precedence.
pub fn inject(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&argv) else { return Ok(argv) };
    if argv.len() < 2 || argv[1].to_string_lossy().starts_with('-') {
        return Ok(argv);
    }
    let text = fs::read_to_string(&path).map_err(|e| ConfigError::Io(path.clone(), e))?;
    let entries = parse(&path, &text)?;
    let mut out = argv[..2].to_vec();
    out.extend(entries.into_iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(if prefix.is_empty() { k } else { prefix }, v, out);
            }
        }
        Value::Null => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Effective configuration as `key=value` text, readable back by `--config`.
pub fn render<T: Serialize>(command: &str, args: &T) -> String {
    let mut pairs = Vec::new();
    if let Ok(v) = serde_json::to_value(args) {
        flatten("", &v, &mut pairs);
    }
    let mut s = format!("# platonic {command} {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".config");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let p = Path::new("x.cfg");
        let v = parse(p, "# c\n\nkmax = 9\nrho_sq=9/4\n").unwrap();
        assert_eq!(v, vec![("kmax".into(), "9".into()), ("rho-sq".into(), "9/4".into())]);
        assert!(parse(p, "kmax 9").is_err());
        assert!(parse(p, "k max=9").is_err());
    }

    #[test]
    fn injected_before_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cfg");
        fs::write(&path, "kmax=9\n").unwrap();
        let argv: Vec<OsString> =
            ["platonic", "triples", "--config", path.to_str().unwrap(), "--kmax", "7"].iter().map(OsString::from).collect();
        let out = inject(argv).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(s[2], "--kmax=9");
        assert_eq!(s.last().unwrap(), "7");
    }
}
