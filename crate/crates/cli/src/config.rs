use std::fmt;
use std::process::ExitCode;

use clap::CommandFactory;

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Runtime(String),
    Config(String),
    Io(String),
}

impl CliError {
    pub fn report(&self) -> ExitCode {
        eprintln!("error: {self}");
        ExitCode::from(match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Runtime(m) | CliError::Config(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<lonestar::Error> for CliError {
    fn from(e: lonestar::Error) -> Self {
        match e {
            lonestar::Error::InvalidInput(_) | lonestar::Error::Dimension(_) => CliError::Config(e.to_string()),
            lonestar::Error::Io(_) | lonestar::Error::Format(_) => CliError::Io(e.to_string()),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn io_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Splices `--key=value` flags from the `--config` file right after the
/// subcommand, so flags given on the command line override them.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(sub) = argv.get(1).filter(|s| !s.starts_with('-')).cloned() else {
        return Ok(argv);
    };
    let mut path = None;
    let mut i = 2;
    while i < argv.len() {
        if argv[i] == "--config" {
            path = argv.get(i + 1).cloned();
            i += 1;
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let cmd = crate::Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(&sub) else {
        // Let clap report the unknown subcommand.
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(std::path::Path::new(&path), e))?;
    let table: toml::Table = text.parse().map_err(|e| config_err(format!("{path}: {e}")))?;

    let mut extra = Vec::new();
    for (key, value) in &table {
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config" && key != "help")
            .ok_or_else(|| config_err(format!("{path}: unknown key '{key}' for '{sub}'")))?;
        if !arg.get_action().takes_values() {
            match value {
                toml::Value::Boolean(true) => extra.push(format!("--{key}")),
                toml::Value::Boolean(false) => {}
                _ => return Err(config_err(format!("{path}: key '{key}' must be true or false"))),
            }
            continue;
        }
        extra.push(format!("--{key}={}", scalar(value).ok_or_else(|| config_err(format!("{path}: key '{key}' has an unsupported value")))?));
    }
    let mut out = argv[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}

fn scalar(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        toml::Value::Array(a) => a.iter().map(scalar).collect::<Option<Vec<_>>>().map(|v| v.join(",")),
        _ => None,
    }
}
