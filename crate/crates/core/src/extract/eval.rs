use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{decode_mentions, label_tokens, EntityLabel, EntityMention, ExtractError, Gazetteer};
use crate::corpus::{AnnotatedDocument, Document, Source};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl LabelCounts {
    /// 1.0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// 1.0 when there was nothing to find.
    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorEval {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_label: BTreeMap<EntityLabel, LabelCounts>,
}

/// Exact span and exact label matching over code-point offsets.
///
/// `predicted[i]` holds the mentions predicted for `gold[i]`; every mention in
/// one list must carry the same document id.
pub fn evaluate(gold: &[AnnotatedDocument], predicted: &[Vec<EntityMention>]) -> Result<ExtractorEval, ExtractError> {
    if gold.len() != predicted.len() {
        return Err(ExtractError::DocumentMismatch(format!(
            "{} gold documents, {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    let mut total = LabelCounts::default();
    let mut per_label: BTreeMap<EntityLabel, LabelCounts> = BTreeMap::new();
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if let Some(first) = p.first() {
            if let Some(other) = p.iter().find(|m| m.doc_id != first.doc_id) {
                return Err(ExtractError::DocumentMismatch(format!(
                    "document {i} mixes predictions for `{}` and `{}`",
                    first.doc_id, other.doc_id
                )));
            }
        }
        let gold_set: HashSet<(usize, usize, EntityLabel)> = g.labels.iter().copied().collect();
        let pred_set: HashSet<(usize, usize, EntityLabel)> =
            p.iter().map(|m| (m.char_span.0, m.char_span.1, m.label)).collect();
        for span in &pred_set {
            let c = per_label.entry(span.2).or_default();
            if gold_set.contains(span) {
                c.tp += 1;
                total.tp += 1;
            } else {
                c.fp += 1;
                total.fp += 1;
            }
        }
        for span in gold_set.difference(&pred_set) {
            per_label.entry(span.2).or_default().fn_ += 1;
            total.fn_ += 1;
        }
    }
    Ok(ExtractorEval {
        precision: total.precision(),
        recall: total.recall(),
        f1: total.f1(),
        tp: total.tp,
        fp: total.fp,
        fn_: total.fn_,
        per_label,
    })
}

/// Baseline-tagger mentions for each gold text, with document ids
/// `gold-0`, `gold-1`, ...
pub fn predict_baseline(gold: &[AnnotatedDocument], gazetteer: &Gazetteer) -> Result<Vec<Vec<EntityMention>>, ExtractError> {
    gold.iter()
        .enumerate()
        .map(|(i, g)| {
            let doc = Document::new(format!("gold-{i}"), Source::Fixture, g.text.clone());
            let tokens = tokenize(&doc.body);
            let tags = label_tokens(&doc, &tokens, gazetteer)?;
            decode_mentions(&tags, &tokens, &doc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntityLabel::*;

    fn gold() -> AnnotatedDocument {
        AnnotatedDocument {
            text: "Acme hired Jane".into(),
            labels: vec![(0, 4, Org), (11, 15, Per)],
        }
    }

    fn pred(spans: &[(usize, usize, EntityLabel)]) -> Vec<EntityMention> {
        spans
            .iter()
            .map(|&(s, e, l)| EntityMention {
                surface: String::new(),
                label: l,
                doc_id: "g0".into(),
                token_span: (0, 1),
                char_span: (s, e),
            })
            .collect()
    }

    #[test]
    fn identity_is_perfect() {
        let r = evaluate(&[gold()], &[pred(&[(0, 4, Org), (11, 15, Per)])]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!((r.tp, r.fp, r.fn_), (2, 0, 0));
    }

    #[test]
    fn half_match() {
        let r = evaluate(&[gold()], &[pred(&[(0, 4, Org), (11, 15, Org)])]).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 1, 1));
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
        assert_eq!(r.per_label[&Org], LabelCounts { tp: 1, fp: 1, fn_: 0 });
        assert_eq!(r.per_label[&Per], LabelCounts { tp: 0, fp: 0, fn_: 1 });
    }

    #[test]
    fn empty_prediction_is_vacuously_precise() {
        let r = evaluate(&[gold()], &[vec![]]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn empty_gold_set() {
        let r = evaluate(&[], &[]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn subset_prediction_has_full_precision() {
        let r = evaluate(&[gold()], &[pred(&[(11, 15, Per)])]).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
    }

    #[test]
    fn mismatched_documents() {
        assert!(evaluate(&[gold()], &[]).is_err());
        let mut p = pred(&[(0, 4, Org), (11, 15, Per)]);
        p[1].doc_id = "other".into();
        assert!(matches!(evaluate(&[gold()], &[p]), Err(ExtractError::DocumentMismatch(_))));
    }
}
