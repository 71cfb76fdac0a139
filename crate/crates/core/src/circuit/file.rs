//! Plain-text circuit definition files.
//!
//! ```text
//! # comments run to end of line
//! label  = wire3
//! n      = 3
//! edges  = 0-1, 1-2
//! source = 0
//! sink   = 2
//! ```
//!
//! Keys may appear in any order. Whitespace is insignificant, and a line
//! without `=` continues the value of the previous key, so long edge lists
//! can be wrapped. Edges may be separated by commas, whitespace or both.

use std::fmt::Write as _;

use super::{Circuit, Graph};
use crate::{Error, Result};

/// A parsed file: the circuit plus its comment lines (without the `#`).
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitFile {
    pub circuit: Circuit,
    pub comments: Vec<String>,
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    parse_circuit_file(text).map(|f| f.circuit)
}

pub fn parse_circuit_file(text: &str) -> Result<CircuitFile> {
    let mut comments = Vec::new();
    let mut fields: Vec<(String, String, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => {
                comments.push(raw[pos + 1..].trim().to_string());
                &raw[..pos]
            }
            None => raw,
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        match body.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_ascii_lowercase();
                if fields.iter().any(|(k, _, _)| *k == key) {
                    return Err(parse_err(line_no, format!("duplicate key '{key}'")));
                }
                fields.push((key, value.trim().to_string(), line_no));
            }
            None => match fields.last_mut() {
                Some((_, value, _)) => {
                    value.push(' ');
                    value.push_str(body);
                }
                None => return Err(parse_err(line_no, "expected 'key = value'".into())),
            },
        }
    }

    let get = |key: &str| fields.iter().find(|(k, _, _)| k == key);
    for (key, _, line) in &fields {
        if !matches!(key.as_str(), "n" | "edges" | "source" | "sink" | "label") {
            return Err(parse_err(*line, format!("unknown key '{key}'")));
        }
    }

    let n = parse_index(get("n"), "n")?;
    let source = parse_index(get("source"), "source")?;
    let sink = parse_index(get("sink"), "sink")?;
    let edges = match get("edges") {
        Some((_, value, line)) => parse_edges(value, *line)?,
        None => Vec::new(),
    };
    let label = get("label").map(|(_, v, _)| v.clone()).filter(|v| !v.is_empty());

    let graph = Graph::new(n, &edges)?;
    let mut circuit = Circuit::new(graph, source, sink)?;
    if let Some(label) = label {
        circuit = circuit.with_label(label);
    }
    Ok(CircuitFile { circuit, comments })
}

fn parse_err(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

fn parse_index(field: Option<&(String, String, usize)>, key: &str) -> Result<usize> {
    let (_, value, line) =
        field.ok_or_else(|| parse_err(0, format!("missing required key '{key}'")))?;
    value
        .parse()
        .map_err(|_| parse_err(*line, format!("'{key}' must be a non-negative integer, got '{value}'")))
}

fn parse_edges(value: &str, line: usize) -> Result<Vec<(usize, usize)>> {
    let cleaned = value.trim().trim_start_matches('[').trim_end_matches(']');
    cleaned
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            let (a, b) = tok
                .split_once('-')
                .ok_or_else(|| parse_err(line, format!("edge '{tok}' is not of the form i-j")))?;
            let a = a.parse().map_err(|_| parse_err(line, format!("bad edge '{tok}'")))?;
            let b = b.parse().map_err(|_| parse_err(line, format!("bad edge '{tok}'")))?;
            Ok((a, b))
        })
        .collect()
}

/// Serializes a circuit; `comments` are written as leading `#` lines.
pub fn write_circuit(circuit: &Circuit, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    if let Some(label) = circuit.label() {
        let _ = writeln!(out, "label = {label}");
    }
    let _ = writeln!(out, "n = {}", circuit.n());
    let edges: Vec<String> = circuit
        .graph()
        .edges()
        .iter()
        .map(|(i, j)| format!("{i}-{j}"))
        .collect();
    let _ = writeln!(out, "edges = {}", edges.join(", "));
    let _ = writeln!(out, "source = {}", circuit.source());
    let _ = writeln!(out, "sink = {}", circuit.sink());
    out
}
