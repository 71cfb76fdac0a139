//! Named builtin circuits.
//!
//! Parametric families (`wire3`, `parallel-m4`, `pentagon-k1`, ...) are built
//! on demand. Calibrated topologies ship as circuit files whose leading
//! comments record how they were selected; a file without a `calibrated:`
//! comment is refused.

use super::file::{parse_circuit_file, write_circuit, CircuitFile};
use super::{make_parallel_circuit, make_pentagon, make_wire, reverse_circuit, Circuit};
use super::DEFAULT_BRANCH_LENGTH;
use crate::{Error, Result};

/// Marker that a definition file came out of a calibration run.
pub const PROVENANCE_MARKER: &str = "calibrated:";

const CALIBRATED: &[(&str, &str)] = &[
    ("additivity-a", include_str!("../../circuits/additivity-a.circuit")),
    ("additivity-b", include_str!("../../circuits/additivity-b.circuit")),
    ("pentagon", include_str!("../../circuits/pentagon.circuit")),
    ("triangle", include_str!("../../circuits/triangle.circuit")),
];

/// Parses a calibrated definition, refusing files without provenance.
pub fn load_calibrated(name: &'static str, text: &str) -> Result<CircuitFile> {
    let file = parse_circuit_file(text)?;
    if !file.comments.iter().any(|c| c.starts_with(PROVENANCE_MARKER)) {
        return Err(Error::CalibrationNotRun(name));
    }
    Ok(file)
}

fn calibrated_file(name: &str) -> Result<CircuitFile> {
    let (key, text) = CALIBRATED
        .iter()
        .find(|(k, _)| *k == name)
        .ok_or_else(|| Error::UnknownCircuit(name.to_string()))?;
    load_calibrated(key, text)
}

/// One of the frozen calibrated circuits.
pub fn calibrated(name: &str) -> Result<Circuit> {
    calibrated_file(name).map(|f| f.circuit)
}

/// Names of the frozen calibrated circuits.
pub fn calibrated_names() -> Vec<&'static str> {
    CALIBRATED.iter().map(|(k, _)| *k).collect()
}

/// Representative builtin names, for help text.
pub fn builtin_names() -> Vec<String> {
    let mut names = vec![
        "wire<N>".to_string(),
        "parallel-m<M>".to_string(),
        "parallel-m<M>-l<L>".to_string(),
        "pentagon-k<1..4>".to_string(),
        "triangle-reverse".to_string(),
    ];
    names.extend(calibrated_names().into_iter().map(String::from));
    names.sort();
    names
}

fn number(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Resolves a builtin name to a circuit.
pub fn builtin(name: &str) -> Result<Circuit> {
    let unknown = || Error::UnknownCircuit(name.to_string());
    if name == "triangle-reverse" {
        return Ok(reverse_circuit(&calibrated("triangle")?).with_label("triangle-reverse"));
    }
    if CALIBRATED.iter().any(|(k, _)| *k == name) {
        return calibrated(name);
    }
    if let Some(len) = name.strip_prefix("wire") {
        let len = number(len).ok_or_else(unknown)?;
        return if len == 0 { Err(unknown()) } else { make_wire(len) };
    }
    if let Some(k) = name.strip_prefix("pentagon-k") {
        return make_pentagon(number(k).ok_or_else(unknown)?);
    }
    if let Some(rest) = name.strip_prefix("parallel-m") {
        let (m, l) = match rest.split_once("-l") {
            Some((m, l)) => (number(m), number(l)),
            None => (number(rest), Some(DEFAULT_BRANCH_LENGTH)),
        };
        return match (m, l) {
            (Some(m), Some(l)) if m >= 1 && l >= 1 => make_parallel_circuit(m, l),
            _ => Err(unknown()),
        };
    }
    Err(unknown())
}

/// Circuit-file text for a builtin, carrying any calibration provenance.
pub fn export(name: &str) -> Result<String> {
    if CALIBRATED.iter().any(|(k, _)| *k == name) {
        let file = calibrated_file(name)?;
        return Ok(write_circuit(&file.circuit, &file.comments));
    }
    let c = builtin(name)?;
    Ok(write_circuit(&c, &[]))
}
