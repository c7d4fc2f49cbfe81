//! Answer normalization and mean relative accuracy.

use std::fmt;

use serde_json::Value as Json;

use super::AnswerType;

/// Confidence thresholds for MRA.
pub const MRA_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("MRA is undefined for a zero ground truth")]
    ZeroGroundTruth,
    #[error("unparseable answer: {0}")]
    Unparseable(String),
}

/// Mean over the thresholds of `|pred - gt| / |gt| < 1 - θ`.
pub fn mra(pred: f64, gt: f64) -> Result<f64, MetricError> {
    if gt == 0.0 || !gt.is_finite() {
        return Err(MetricError::ZeroGroundTruth);
    }
    if !pred.is_finite() {
        return Ok(0.0);
    }
    let rel = (pred - gt).abs() / gt.abs();
    let hits = MRA_THRESHOLDS.iter().filter(|t| rel < 1.0 - **t).count();
    Ok(hits as f64 / MRA_THRESHOLDS.len() as f64)
}

/// A canonical answer.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Text(String),
    Number(f64),
}

impl Normalized {
    pub fn to_json(&self) -> Json {
        match self {
            Normalized::Text(s) => Json::String(s.clone()),
            Normalized::Number(n) => serde_json::Number::from_f64(*n)
                .map(Json::Number)
                .expect("normalized numbers are finite"),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Normalized::Number(n) => Some(*n),
            Normalized::Text(_) => None,
        }
    }
}

impl fmt::Display for Normalized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalized::Text(s) => f.write_str(s),
            Normalized::Number(n) => write!(f, "{n}"),
        }
    }
}

const NUMBER_WORDS: [&str; 11] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

fn canonical_word(word: &str) -> &str {
    match word {
        "true" => "yes",
        "false" => "no",
        "square" | "squares" | "cubes" | "block" | "blocks" => "cube",
        "ball" | "balls" | "spheres" => "sphere",
        "cylinders" => "cylinder",
        "grey" => "gray",
        "rubbery" | "matte" => "rubber",
        "metallic" | "shiny" => "metal",
        other => other,
    }
}

fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim().trim_end_matches('.');
    let t = t.trim_matches(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '.'));
    if let Some(i) = NUMBER_WORDS.iter().position(|w| *w == t.to_ascii_lowercase()) {
        return Some(i as f64);
    }
    t.parse::<f64>().ok().filter(|n| n.is_finite())
}

fn clean_text(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    stripped
        .split_whitespace()
        .map(canonical_word)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical form for scoring: numbers for numeric types, cleaned lowercase
/// words otherwise.
pub fn normalize_answer(raw: &Json, ty: AnswerType) -> Result<Normalized, MetricError> {
    let numeric = matches!(ty, AnswerType::NumericCount | AnswerType::NumericOther);
    let unparseable = || MetricError::Unparseable(raw.to_string());
    match raw {
        Json::Null | Json::Object(_) => Err(unparseable()),
        Json::Array(items) if items.len() == 1 => normalize_answer(&items[0], ty),
        Json::Array(_) => Err(unparseable()),
        Json::Bool(b) => {
            if numeric {
                Err(unparseable())
            } else {
                Ok(Normalized::Text(if *b { "yes" } else { "no" }.into()))
            }
        }
        Json::Number(n) => {
            let v = n.as_f64().filter(|v| v.is_finite()).ok_or_else(unparseable)?;
            if numeric {
                Ok(Normalized::Number(v))
            } else {
                Ok(Normalized::Text(clean_text(&n.to_string())))
            }
        }
        Json::String(s) => {
            if numeric {
                parse_number(s).map(Normalized::Number).ok_or_else(unparseable)
            } else {
                let t = clean_text(s);
                if t.is_empty() {
                    Err(unparseable())
                } else {
                    Ok(Normalized::Text(t))
                }
            }
        }
    }
}

pub fn normalize_text(raw: &str, ty: AnswerType) -> Result<Normalized, MetricError> {
    normalize_answer(&Json::String(raw.to_string()), ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn mra_examples() {
        assert_eq!(mra(3.0, 3.0).unwrap(), 1.0);
        assert!((mra(1.1, 1.0).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(mra(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(mra(1.0, 0.0), Err(MetricError::ZeroGroundTruth));
        assert_eq!(mra(f64::NAN, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_text("Yes.", AnswerType::YesNo).unwrap(), Normalized::Text("yes".into()));
        assert_eq!(normalize_answer(&json!(true), AnswerType::YesNo).unwrap(), Normalized::Text("yes".into()));
        assert_eq!(normalize_text("3.00", AnswerType::NumericCount).unwrap(), Normalized::Number(3.0));
        assert_eq!(normalize_text("three", AnswerType::NumericCount).unwrap(), Normalized::Number(3.0));
        assert_eq!(normalize_text("Square", AnswerType::MultiChoice).unwrap(), Normalized::Text("cube".into()));
        assert_eq!(normalize_answer(&json!(["red"]), AnswerType::MultiChoice).unwrap(), Normalized::Text("red".into()));
        assert!(normalize_text("lots", AnswerType::NumericCount).is_err());
        assert!(normalize_text("inf", AnswerType::NumericOther).is_err());
        assert!(normalize_answer(&json!(null), AnswerType::YesNo).is_err());
        assert!(normalize_answer(&json!([1, 2]), AnswerType::NumericCount).is_err());
    }
}
