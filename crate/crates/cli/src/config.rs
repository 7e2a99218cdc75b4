//! `key = value` files supplying defaults for a subcommand's options.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Arguments equivalent to `text`, checked against the options of
/// `subcommand`. Blank lines and lines starting with `#` are ignored.
pub fn config_args(
    text: &str,
    source: &str,
    cmd: &Command,
    subcommand: &str,
) -> Result<Vec<OsString>, ConfigError> {
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| ConfigError(format!("unknown subcommand '{subcommand}'")))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("{source}:{}", i + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{at}: expected key = value, got '{line}'")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && a.get_long() != Some("config"))
            .ok_or_else(|| {
                ConfigError(format!("{at}: '{key}' is not an option of '{subcommand}'"))
            })?;
        let is_flag = !arg.get_action().takes_values();
        if is_flag {
            match value {
                "true" => out.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => {
                    return Err(ConfigError(format!(
                        "{at}: '{key}' takes true or false, got '{other}'"
                    )))
                }
            }
            continue;
        }
        Command::new("config")
            .no_binary_name(true)
            .arg(arg.clone().required(false))
            .try_get_matches_from([OsString::from(format!("--{key}")), OsString::from(value)])
            .map_err(|e| {
                let msg = e.to_string();
                let first = msg
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim_start_matches("error: ")
                    .to_string();
                ConfigError(format!("{at}: {first}"))
            })?;
        out.push(OsString::from(format!("--{key}")));
        out.push(OsString::from(value));
    }
    Ok(out)
}

pub fn read_config(
    path: &Path,
    cmd: &Command,
    subcommand: &str,
) -> Result<Vec<OsString>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    config_args(&text, &path.display().to_string(), cmd, subcommand)
}

/// Splices the config file named by `--config` into `argv` just after the
/// subcommand, so explicit options override it.
pub fn expand(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, ConfigError> {
    let pos = argv.iter().position(|a| a == "--config");
    let inline = argv
        .iter()
        .position(|a| a.to_string_lossy().starts_with("--config="));
    let (idx, path, width) = match (pos, inline) {
        (Some(i), _) => match argv.get(i + 1) {
            Some(p) => (i, OsString::from(p), 2),
            None => return Err(ConfigError("--config needs a file path".into())),
        },
        (None, Some(i)) => {
            let s = argv[i].to_string_lossy();
            (i, OsString::from(&s["--config=".len()..]), 1)
        }
        (None, None) => return Ok(argv),
    };
    let sub_idx = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|(i, _)| i)
        .ok_or_else(|| ConfigError("--config needs a subcommand".into()))?;
    let subcommand = argv[sub_idx].to_string_lossy().into_owned();
    let extra = read_config(Path::new(&path), cmd, &subcommand)?;
    let mut out: Vec<OsString> = Vec::with_capacity(argv.len() + extra.len());
    for (i, a) in argv.into_iter().enumerate() {
        if i >= idx && i < idx + width {
            continue;
        }
        out.push(a);
        if i == sub_idx {
            out.extend(extra.iter().cloned());
        }
    }
    Ok(out)
}
