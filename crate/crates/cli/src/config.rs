//! `key = value` run configs. Keys mirror the long flags; `command` names the subcommand.
//!
//! ```text
//! # comment
//! command = eigen-min
//! domain = disc
//! p = 2
//! q = 2
//! grid = N=64,beta=1
//! ```

use std::collections::BTreeSet;

/// Subcommand names accepted by `command =`, with their argv words.
pub const COMMANDS: &[(&str, &[&str])] = &[
    ("maps-eval", &["maps", "eval"]),
    ("maps-classify", &["maps", "classify"]),
    ("distortion-kpq", &["distortion", "kpq"]),
    ("alpha-range", &["alpha-range"]),
    ("extend-verify", &["extend", "verify"]),
    ("eigen-min", &["eigen", "min"]),
    ("eigen-bound", &["eigen", "bound"]),
    ("paper-reproduce", &["paper-reproduce"]),
];

/// Flags that take no value; `true` adds them, `false` leaves them out.
const SWITCHES: &[&str] = &["require-convergence", "require-pass"];

/// Turn a config text into argv words (without the program name).
pub fn parse_config(text: &str) -> Result<Vec<String>, String> {
    let mut command: Option<&'static [&'static str]> = None;
    let mut seen = BTreeSet::new();
    let mut flags: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-') {
            return Err(format!("line {}: invalid key '{key}'", lineno + 1));
        }
        if !seen.insert(key.to_string()) {
            return Err(format!("line {}: duplicate key '{key}'", lineno + 1));
        }
        if key == "command" {
            let words = COMMANDS
                .iter()
                .find(|(name, _)| *name == value)
                .map(|(_, w)| *w)
                .ok_or_else(|| format!("line {}: unknown command '{value}'", lineno + 1))?;
            command = Some(words);
        } else if key == "config" {
            return Err(format!("line {}: '{key}' cannot be set here", lineno + 1));
        } else if SWITCHES.contains(&key) {
            match value {
                "true" => flags.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("line {}: '{key}' expects true or false", lineno + 1)),
            }
        } else {
            if value.is_empty() {
                return Err(format!("line {}: '{key}' has an empty value", lineno + 1));
            }
            flags.push(format!("--{key}"));
            flags.push(value.to_string());
        }
    }
    let words = command.ok_or("config has no 'command' entry")?;
    let mut argv: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    argv.extend(flags);
    Ok(argv)
}
