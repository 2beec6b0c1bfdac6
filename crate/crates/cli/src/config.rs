//! `run-config` files: one JSON object whose `command` key selects the
//! subcommand and whose other keys are that subcommand's arguments.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::args::Command;
use crate::error::CliError;

/// Parses JSON, reporting the line, column and field path of the first error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let location = format!("line {} column {}", inner.line(), inner.column());
        if path == "." {
            format!("{location}: {inner}")
        } else {
            format!("{location}, field '{path}': {inner}")
        }
    })
}

#[derive(Deserialize)]
struct Tag {
    command: String,
}

/// Selects the subcommand from the `command` key, then parses the whole
/// object as that subcommand's arguments.
pub fn parse_command(text: &str) -> Result<Command, String> {
    let tag: Tag = parse_json(text)?;
    Ok(match tag.command.as_str() {
        "ball-spectrum" => Command::BallSpectrum(parse_json(text)?),
        "solve" => Command::Solve(parse_json(text)?),
        "shape-derivative" => Command::ShapeDerivative(parse_json(text)?),
        "criticality" => Command::Criticality(parse_json(text)?),
        "concentration" => Command::Concentration(parse_json(text)?),
        "iso-scan" => Command::IsoScan(parse_json(text)?),
        "inverse-sum" => Command::InverseSum(parse_json(text)?),
        other => {
            return Err(format!(
                "field 'command': unknown command '{other}', expected one of ball-spectrum, solve, \
                 shape-derivative, criticality, concentration, iso-scan, inverse-sum"
            ))
        }
    })
}

/// Reads and validates a config. The caller resolves relative paths against
/// the config's directory.
pub fn load(path: &Path) -> Result<Command, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_command(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
