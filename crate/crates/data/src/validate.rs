//! Triplet parsing and validation.

use serde_json::{Map, Value};

use crate::error::{DataError, Result};
use crate::records::{QATriplet, Split};
use crate::registry::DimensionRegistry;

const FIELDS: [&str; 7] = ["image_id", "question", "answer_score", "answer_text", "dimension", "split", "augmented"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Unknown fields are errors.
    Strict,
    /// Unknown fields are reported and ignored.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub triplet: QATriplet,
    pub unknown_fields: Vec<String>,
}

fn string_field(obj: &Map<String, Value>, field: &str) -> Result<String> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(DataError::Missing(field.into())),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(DataError::Invalid { field: field.into(), reason: format!("expected a string, got {other}") }),
    }
}

fn score_field(obj: &Map<String, Value>) -> Result<Option<f64>> {
    let invalid = |reason: String| DataError::Invalid { field: "answer_score".into(), reason };
    match obj.get("answer_score") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n.as_f64().map(Some).ok_or_else(|| invalid(format!("{n} is not representable"))),
        Some(Value::String(s)) => {
            let v: f64 = s.trim().parse().map_err(|_| invalid(format!("{s:?} is not a number")))?;
            if v.is_finite() {
                Ok(Some(v))
            } else {
                Err(invalid(format!("{s:?} is not finite")))
            }
        }
        Some(other) => Err(invalid(format!("expected a number, got {other}"))),
    }
}

/// Parses one JSON triplet and checks it against the registry.
pub fn parse_triplet(text: &str, registry: &DimensionRegistry, mode: Mode) -> Result<Parsed> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| DataError::Invalid { field: "<record>".into(), reason: "expected a JSON object".into() })?;
    let unknown_fields: Vec<String> = obj.keys().filter(|k| !FIELDS.contains(&k.as_str())).cloned().collect();
    if mode == Mode::Strict {
        if let Some(f) = unknown_fields.first() {
            return Err(DataError::Unknown(f.clone()));
        }
    }
    let image_id = string_field(obj, "image_id")?;
    if image_id.trim().is_empty() {
        return Err(DataError::Invalid { field: "image_id".into(), reason: "empty".into() });
    }
    let question = string_field(obj, "question")?;
    let answer_text = string_field(obj, "answer_text")?;
    let dimension = string_field(obj, "dimension")?;
    let split_text = string_field(obj, "split")?;
    let split = Split::parse(&split_text).ok_or_else(|| DataError::Invalid {
        field: "split".into(),
        reason: format!("{split_text:?} is not one of train, val, reserve"),
    })?;
    let augmented = match obj.get("augmented") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(other) => {
            return Err(DataError::Invalid { field: "augmented".into(), reason: format!("expected a boolean, got {other}") })
        }
    };
    let answer_score = score_field(obj)?;
    let triplet = QATriplet { image_id, question, answer_score, answer_text, dimension, split, augmented };
    check_triplet(&triplet, registry)?;
    Ok(Parsed { triplet, unknown_fields })
}

/// Registry and range checks shared by parsing and generation.
pub fn check_triplet(t: &QATriplet, registry: &DimensionRegistry) -> Result<()> {
    let dim = registry.get(&t.dimension).ok_or_else(|| DataError::Invalid {
        field: "dimension".into(),
        reason: format!("{:?} is not a registered dimension", t.dimension),
    })?;
    match t.answer_score {
        None if dim.scored => Err(DataError::Missing("answer_score".into())),
        Some(s) if !dim.contains(s) => {
            Err(DataError::Range { dimension: dim.key.clone(), score: s, lo: dim.lo, hi: dim.hi })
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> DimensionRegistry {
        DimensionRegistry::default()
    }

    const FULL: &str = r#"{"image_id":"c000-i0000","question":"how safe is this street","answer_score":4,"answer_text":"the street feels safe","dimension":"perceived_safety","split":"train","augmented":false}"#;

    #[test]
    fn full_record_round_trips() {
        let p = parse_triplet(FULL, &reg(), Mode::Strict).unwrap();
        assert_eq!(p.triplet.answer_score, Some(4.0));
        let again = serde_json::to_string(&p.triplet).unwrap();
        assert_eq!(parse_triplet(&again, &reg(), Mode::Strict).unwrap().triplet, p.triplet);
    }

    #[test]
    fn missing_score_on_scored_dimension() {
        let text = FULL.replace(r#""answer_score":4,"#, "");
        match parse_triplet(&text, &reg(), Mode::Strict) {
            Err(DataError::Missing(f)) => assert_eq!(f, "answer_score"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn string_score_out_of_range() {
        let text = FULL.replace(r#""answer_score":4"#, r#""answer_score":"6""#);
        assert!(matches!(parse_triplet(&text, &reg(), Mode::Strict), Err(DataError::Range { .. })));
    }

    #[test]
    fn unknown_fields_by_mode() {
        let text = FULL.replace('}', r#","source":"survey"}"#);
        assert!(matches!(parse_triplet(&text, &reg(), Mode::Strict), Err(DataError::Unknown(_))));
        let p = parse_triplet(&text, &reg(), Mode::Lenient).unwrap();
        assert_eq!(p.unknown_fields, vec!["source".to_string()]);
    }

    #[test]
    fn missing_field_is_named() {
        let text = FULL.replace(r#""question":"how safe is this street","#, "");
        match parse_triplet(&text, &reg(), Mode::Strict) {
            Err(DataError::Missing(f)) => assert_eq!(f, "question"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
