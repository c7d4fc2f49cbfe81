//! Scoring result records against benchmark items.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::{mra, normalize_answer, normalize_text, Normalized};
use super::{AnswerType, BenchmarkItem};
use crate::synthesis::ResultRecord;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("IdMismatch: {0}")]
    IdMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub answer_type: AnswerType,
    /// In [0, 1]. MRA for `numeric_other`, 0 or 1 otherwise.
    pub score: f64,
    pub expected: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeScore {
    pub items: usize,
    pub sum: f64,
    /// Percent, or `None` when there are no items of this type.
    pub accuracy: Option<f64>,
}

impl TypeScore {
    fn new(items: usize, sum: f64) -> Self {
        TypeScore {
            items,
            sum,
            accuracy: (items > 0).then(|| 100.0 * sum / items as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub by_type: BTreeMap<AnswerType, TypeScore>,
    pub total: TypeScore,
    pub verdicts: Vec<Verdict>,
}

impl ScoreReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn total_accuracy(&self) -> f64 {
        self.total.accuracy.unwrap_or(0.0)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>6} {:>9}", "answer type", "items", "accuracy");
        let row = |out: &mut String, label: &str, s: &TypeScore| {
            let acc = s.accuracy.map_or("-".to_string(), |a| format!("{a:.1}"));
            let _ = writeln!(out, "{:<16} {:>6} {:>9}", label, s.items, acc);
        };
        for ty in AnswerType::ALL {
            if let Some(s) = self.by_type.get(&ty) {
                row(&mut out, ty.label(), s);
            }
        }
        row(&mut out, "total", &self.total);
        out
    }
}

fn verdict(record: &ResultRecord, item: &BenchmarkItem) -> Verdict {
    let mut v = Verdict {
        id: item.id.clone(),
        answer_type: item.answer_type,
        score: 0.0,
        expected: item.answer.clone(),
        predicted: record.answer.clone(),
        note: None,
    };
    let Some(raw) = &record.answer else {
        v.note = Some(record.error.clone().unwrap_or_else(|| "no answer".into()));
        return v;
    };
    let expected = match normalize_text(&item.answer, item.answer_type) {
        Ok(e) => e,
        Err(e) => {
            v.note = Some(format!("ground truth: {e}"));
            return v;
        }
    };
    let predicted = match normalize_answer(raw, item.answer_type) {
        Ok(p) => p,
        Err(e) => {
            v.note = Some(e.to_string());
            return v;
        }
    };
    match (item.answer_type, &predicted, &expected) {
        (AnswerType::NumericOther, Normalized::Number(p), Normalized::Number(g)) => match mra(*p, *g) {
            Ok(s) => v.score = s,
            Err(e) => v.note = Some(e.to_string()),
        },
        _ => {
            if predicted == expected {
                v.score = 1.0;
            }
        }
    }
    v
}

/// Scores records against items. Both sides must carry the same set of ids,
/// each exactly once; order does not matter.
pub fn score(records: &[ResultRecord], items: &[BenchmarkItem]) -> Result<ScoreReport, ScoreError> {
    let mut by_id: BTreeMap<&str, &BenchmarkItem> = BTreeMap::new();
    for item in items {
        if by_id.insert(&item.id, item).is_some() {
            return Err(ScoreError::IdMismatch(format!("duplicate item id '{}'", item.id)));
        }
    }
    let mut paired: BTreeMap<&str, (&ResultRecord, &BenchmarkItem)> = BTreeMap::new();
    for r in records {
        let item = by_id
            .get(r.id.as_str())
            .ok_or_else(|| ScoreError::IdMismatch(format!("record '{}' has no item", r.id)))?;
        if paired.insert(&r.id, (r, item)).is_some() {
            return Err(ScoreError::IdMismatch(format!("duplicate record id '{}'", r.id)));
        }
    }
    if let Some(missing) = by_id.keys().find(|id| !paired.contains_key(*id)) {
        return Err(ScoreError::IdMismatch(format!("item '{missing}' has no record")));
    }

    let verdicts: Vec<Verdict> = paired.values().map(|(r, i)| verdict(r, i)).collect();
    let mut sums: BTreeMap<AnswerType, (usize, f64)> = BTreeMap::new();
    let mut total = (0usize, 0.0f64);
    for v in &verdicts {
        let e = sums.entry(v.answer_type).or_default();
        e.0 += 1;
        e.1 += v.score;
        total.0 += 1;
        total.1 += v.score;
    }
    Ok(ScoreReport {
        by_type: sums.into_iter().map(|(t, (n, s))| (t, TypeScore::new(n, s))).collect(),
        total: TypeScore::new(total.0, total.1),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn item(id: &str, answer: &str, ty: AnswerType) -> BenchmarkItem {
        BenchmarkItem {
            id: id.into(),
            scene: "s.json".into(),
            question: "q".into(),
            answer: answer.into(),
            answer_type: ty,
        }
    }

    fn record(id: &str, answer: Option<serde_json::Value>) -> ResultRecord {
        let mut r: ResultRecord = serde_json::from_value(json!({
            "id": id, "attempts": 1, "programs": [], "plan": "",
            "trace_lengths": [], "trace": []
        }))
        .unwrap();
        if answer.is_none() {
            r.error = Some("NameError at line 1: x".into());
        }
        r.answer = answer;
        r
    }

    #[test]
    fn all_correct_yes_no() {
        let items = vec![item("a", "yes", AnswerType::YesNo), item("b", "no", AnswerType::YesNo)];
        let recs = vec![record("a", Some(json!(true))), record("b", Some(json!("No.")))];
        let rep = score(&recs, &items).unwrap();
        assert_eq!(rep.total_accuracy(), 100.0);
    }

    #[test]
    fn numeric_other_uses_mra() {
        let items = vec![item("a", "1", AnswerType::NumericOther)];
        let rep = score(&[record("a", Some(json!(1.1)))], &items).unwrap();
        assert!((rep.verdicts[0].score - 0.8).abs() < 1e-12);
        assert!((rep.total_accuracy() - 80.0).abs() < 1e-9);
    }

    #[test]
    fn execution_error_scores_zero() {
        let items = vec![item("a", "2", AnswerType::NumericCount), item("b", "cube", AnswerType::MultiChoice)];
        let recs = vec![record("a", None), record("b", Some(json!("square")))];
        let rep = score(&recs, &items).unwrap();
        assert_eq!(rep.verdicts[0].score, 0.0);
        assert!(rep.verdicts[0].note.as_deref().unwrap().starts_with("NameError"));
        assert_eq!(rep.verdicts[1].score, 1.0);
        assert_eq!(rep.total_accuracy(), 50.0);
        assert_eq!(rep.by_type[&AnswerType::NumericCount].accuracy, Some(0.0));
    }

    #[test]
    fn unparseable_scores_zero() {
        let items = vec![item("a", "2", AnswerType::NumericCount)];
        let rep = score(&[record("a", Some(json!("several")))], &items).unwrap();
        assert_eq!(rep.verdicts[0].score, 0.0);
    }

    #[test]
    fn ids_must_align() {
        let items = vec![item("a", "2", AnswerType::NumericCount)];
        assert!(score(&[record("b", Some(json!(2)))], &items).is_err());
        assert!(score(&[], &items).is_err());
        assert!(score(&[record("a", Some(json!(2))), record("a", Some(json!(2)))], &items).is_err());
    }

    #[test]
    fn table_lists_present_types() {
        let items = vec![item("a", "2", AnswerType::NumericCount)];
        let t = score(&[record("a", Some(json!(2)))], &items).unwrap().table();
        assert!(t.contains("numeric (ct)"));
        assert!(t.contains("100.0"));
        assert!(!t.contains("y/n"));
    }
}
