//! Benchmark items, question generation, normalization and scoring.

mod generate;
mod metrics;
mod score;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scene::{Color, Material, Shape, SizeClass};

pub use generate::{
    generate_items, helper_signatures, oracle_execute, scripted_rules, Filter, QuestionKind,
    QuestionSpec, Referent, Relation, HELPER_FILTER, HELPER_KEEP,
};
pub use metrics::{mra, normalize_answer, normalize_text, MetricError, Normalized, MRA_THRESHOLDS};
pub use score::{score, ScoreError, ScoreReport, TypeScore, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    NumericCount,
    NumericOther,
    YesNo,
    MultiChoice,
}

impl AnswerType {
    pub const ALL: [AnswerType; 4] = [
        AnswerType::NumericCount,
        AnswerType::NumericOther,
        AnswerType::YesNo,
        AnswerType::MultiChoice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::NumericCount => "numeric_count",
            AnswerType::NumericOther => "numeric_other",
            AnswerType::YesNo => "yes_no",
            AnswerType::MultiChoice => "multi_choice",
        }
    }

    /// Column label in the report table.
    pub fn label(self) -> &'static str {
        match self {
            AnswerType::NumericCount => "numeric (ct)",
            AnswerType::NumericOther => "numeric (other)",
            AnswerType::YesNo => "y/n",
            AnswerType::MultiChoice => "multi-choice",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_attribute_word(word: &str) -> bool {
    Shape::from_str(word).is_ok()
        || Color::from_str(word).is_ok()
        || Material::from_str(word).is_ok()
        || SizeClass::from_str(word).is_ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    /// Scene file, relative to the scenes directory.
    pub scene: String,
    pub question: String,
    pub answer: String,
    pub answer_type: AnswerType,
}

impl BenchmarkItem {
    /// Checks the answer against its declared type.
    pub fn validate(&self) -> Result<(), String> {
        let a = self.answer.as_str();
        let ok = match self.answer_type {
            AnswerType::NumericCount => a.parse::<u64>().is_ok(),
            AnswerType::NumericOther => a.parse::<f64>().is_ok_and(|v| v.is_finite() && v != 0.0),
            AnswerType::YesNo => a == "yes" || a == "no",
            AnswerType::MultiChoice => is_attribute_word(a),
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "item {}: answer '{}' does not fit type {}",
                self.id, self.answer, self.answer_type
            ))
        }
    }
}

pub fn read_items(path: impl AsRef<Path>) -> Result<Vec<BenchmarkItem>, BenchError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: display.clone(),
        source,
    })?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| BenchError::Format {
            path: display.clone(),
            line: i + 1,
            message,
        };
        let item: BenchmarkItem = serde_json::from_str(line).map_err(|e| format(e.to_string()))?;
        item.validate().map_err(format)?;
        items.push(item);
    }
    Ok(items)
}

pub fn items_to_jsonl(items: &[BenchmarkItem]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("item serializes") + "\n")
        .collect()
}

pub fn write_items(path: impl AsRef<Path>, items: &[BenchmarkItem]) -> Result<(), BenchError> {
    let path = path.as_ref();
    std::fs::write(path, items_to_jsonl(items)).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}
