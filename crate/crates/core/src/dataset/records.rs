//! Line-delimited JSON grounding records.

use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{Map, Value};

use super::DatasetError;
use crate::geometry::{BoundingBox, Grounding};
use crate::instance::ClauseInstance;
use crate::Scalar;

/// One input line before filtering and merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord<T = f64> {
    pub line: usize,
    pub image_id: String,
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub label: u8,
    pub subject_grounding: Option<Grounding<T>>,
    pub object_grounding: Option<Grounding<T>>,
}

/// Reads every non-blank line as one record. The first malformed line
/// aborts parsing; line numbers are 1-based.
pub fn parse_records<T: Scalar, R: BufRead>(reader: R) -> Result<Vec<RawRecord<T>>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Parse { line: line_no, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, line_no)?);
    }
    Ok(out)
}

/// Parses a single JSON object in the record format.
pub fn parse_line<T: Scalar>(text: &str, line: usize) -> Result<RawRecord<T>, DatasetError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| DatasetError::Parse { line, reason: e.to_string() })?;
    let obj = value.as_object().ok_or_else(|| DatasetError::Parse {
        line,
        reason: "record is not a JSON object".into(),
    })?;

    let image_id = match obj.get("image_id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(invalid(line, "image_id", "expected string")),
        None => return Err(DatasetError::MissingField { line, field: "image_id" }),
    };
    let subject = string_field(obj, line, "subject")?;
    let object = string_field(obj, line, "object")?;
    let relation = string_field(obj, line, "relation")?;
    let label = match obj.get("label") {
        None => return Err(DatasetError::MissingField { line, field: "label" }),
        Some(v) => match v.as_u64() {
            Some(0) => 0,
            Some(1) => 1,
            _ => return Err(invalid(line, "label", &format!("must be 0 or 1, got {v}"))),
        },
    };

    Ok(RawRecord {
        line,
        image_id,
        subject,
        relation,
        object,
        label,
        subject_grounding: grounding(obj, line, "subject_box", "subject_conf")?,
        object_grounding: grounding(obj, line, "object_box", "object_conf")?,
    })
}

fn invalid(line: usize, field: &'static str, reason: &str) -> DatasetError {
    DatasetError::InvalidField { line, field, reason: reason.to_string() }
}

fn string_field(obj: &Map<String, Value>, line: usize, field: &'static str) -> Result<String, DatasetError> {
    match obj.get(field) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(invalid(line, field, "must be non-empty")),
        Some(_) => Err(invalid(line, field, "expected string")),
        None => Err(DatasetError::MissingField { line, field }),
    }
}

fn grounding<T: Scalar>(
    obj: &Map<String, Value>,
    line: usize,
    box_field: &'static str,
    conf_field: &'static str,
) -> Result<Option<Grounding<T>>, DatasetError> {
    let raw_box = match obj.get(box_field) {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::Array(a)) if a.len() == 4 => a,
        Some(_) => return Err(invalid(line, box_field, "expected [x, y, h, w]")),
    };
    let mut coords = [T::zero(); 4];
    for (slot, v) in coords.iter_mut().zip(raw_box) {
        let f = v.as_f64().ok_or_else(|| invalid(line, box_field, "non-numeric coordinate"))?;
        *slot = T::lit(f);
    }
    let bbox = BoundingBox::from_xyhw(coords).map_err(|e| invalid(line, box_field, &e.to_string()))?;
    let conf = match obj.get(conf_field) {
        None | Some(Value::Null) => return Err(DatasetError::MissingField { line, field: conf_field }),
        Some(v) => v.as_f64().ok_or_else(|| invalid(line, conf_field, "expected number"))?,
    };
    Grounding::new(bbox, T::lit(conf))
        .map(Some)
        .map_err(|e| invalid(line, conf_field, &e.to_string()))
}

#[derive(Serialize)]
struct RecordOut<'a, T: Scalar> {
    image_id: &'a str,
    subject: &'a str,
    object: &'a str,
    relation: &'a str,
    label: u8,
    subject_box: [T; 4],
    subject_conf: T,
    object_box: [T; 4],
    object_conf: T,
}

/// Serializes a prepared instance as one record line (without newline).
/// Relations are written in caption form so the line re-parses and merges
/// to the same class.
pub fn instance_to_line<T: Scalar>(inst: &ClauseInstance<T>) -> String {
    let rec = RecordOut {
        image_id: &inst.image_id,
        subject: &inst.subject_name,
        object: &inst.object_name,
        relation: inst.relation.phrase(),
        label: 1,
        subject_box: inst.subject.bbox.to_xyhw(),
        subject_conf: inst.subject.confidence(),
        object_box: inst.object.bbox.to_xyhw(),
        object_conf: inst.object.confidence(),
    };
    serde_json::to_string(&rec).expect("record serialization cannot fail")
}

pub fn write_instances<T: Scalar, W: Write>(mut w: W, instances: &[ClauseInstance<T>]) -> std::io::Result<()> {
    for inst in instances {
        writeln!(w, "{}", instance_to_line(inst))?;
    }
    w.flush()
}
