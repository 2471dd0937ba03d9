use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;
use thiserror::Error;

use super::{validate_game, EdgeDescription, GameDescription, NetworkGame, Violation};

/// A validation failure together with the 1-based line of the offending edge object.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedViolation {
    pub line: Option<usize>,
    pub violation: Violation,
}

impl fmt::Display for LocatedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.violation),
            None => write!(f, "{}", self.violation),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid game:\n  {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<LocatedViolation>),
}

#[derive(Deserialize)]
struct RawGameFile<'a> {
    num_agents: usize,
    action_counts: Vec<usize>,
    #[serde(borrow)]
    edges: Vec<&'a RawValue>,
    #[serde(default)]
    adjacency: Option<Vec<Vec<u8>>>,
}

fn syntax(e: serde_json::Error, line_base: usize) -> LoadError {
    LoadError::Syntax {
        line: e.line() + line_base,
        column: e.column(),
        message: e.to_string(),
    }
}

fn line_of(text: &str, byte_offset: usize) -> usize {
    text.as_bytes()[..byte_offset]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

/// Parses and validates a game from its JSON text.
pub fn parse_game(text: &str) -> Result<NetworkGame, LoadError> {
    let raw: RawGameFile<'_> = serde_json::from_str(text).map_err(|e| syntax(e, 0))?;
    let base = text.as_ptr() as usize;
    let mut edge_lines = Vec::with_capacity(raw.edges.len());
    let mut edges = Vec::with_capacity(raw.edges.len());
    for value in &raw.edges {
        let json = value.get();
        let line = line_of(text, json.as_ptr() as usize - base);
        let edge: EdgeDescription = serde_json::from_str(json).map_err(|e| syntax(e, line - 1))?;
        edge_lines.push(line);
        edges.push(edge);
    }
    let desc = GameDescription {
        num_agents: raw.num_agents,
        action_counts: raw.action_counts,
        edges,
        adjacency: raw.adjacency,
    };
    let violations = validate_game(&desc);
    if !violations.is_empty() {
        return Err(LoadError::Invalid(
            violations
                .into_iter()
                .map(|violation| LocatedViolation {
                    line: violation.edge().map(|e| edge_lines[e]),
                    violation,
                })
                .collect(),
        ));
    }
    Ok(NetworkGame::from_description(&desc).expect("validated description builds"))
}

pub fn load_game(path: impl AsRef<Path>) -> Result<NetworkGame, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_game(&text)
}
