use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// One externally produced yes/no prediction and its gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryPrediction {
    pub prediction: u8,
    pub label: u8,
}

/// Accuracy of binary predictions and its margin over the 50% coin flip.
pub fn binary_accuracy(predictions: &[u8], labels: &[u8]) -> Result<(f64, f64), EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            what: "predictions vs labels",
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let acc = hits as f64 / labels.len() as f64;
    Ok((acc, acc - 0.5))
}

/// Reads `{"prediction": 0|1, "label": 0|1}` lines.
pub fn parse_binary_predictions<R: BufRead>(reader: R) -> Result<Vec<BinaryPrediction>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Parse { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BinaryPrediction =
            serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: i + 1, reason: e.to_string() })?;
        if rec.prediction > 1 || rec.label > 1 {
            return Err(EvalError::Parse { line: i + 1, reason: "prediction and label must be 0 or 1".into() });
        }
        out.push(rec);
    }
    Ok(out)
}
