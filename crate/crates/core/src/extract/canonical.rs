use std::collections::{BTreeMap, BTreeSet};

use super::{Entity, EntityKey, EntityMention};

/// Groups mentions by (normalized lowercase surface, label).
///
/// Mentions inside an entity are ordered by (doc id, token span). The display
/// form is the most frequent original surface; ties go to the surface seen
/// first in that order. Entities come out sorted by key.
pub fn canonicalize(mentions: &[EntityMention]) -> Vec<Entity> {
    let mut groups: BTreeMap<EntityKey, Vec<EntityMention>> = BTreeMap::new();
    for m in mentions {
        let key = EntityKey::from_surface(&m.surface, m.label);
        if key.surface.is_empty() {
            continue;
        }
        groups.entry(key).or_default().push(m.clone());
    }
    groups
        .into_iter()
        .map(|(key, mut mentions)| {
            mentions.sort_by(|a, b| {
                (a.doc_id.as_str(), a.token_span, a.char_span, a.surface.as_str()).cmp(&(
                    b.doc_id.as_str(),
                    b.token_span,
                    b.char_span,
                    b.surface.as_str(),
                ))
            });
            mentions.dedup();
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for m in &mentions {
                match counts.iter_mut().find(|(s, _)| *s == m.surface) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((&m.surface, 1)),
                }
            }
            // max_by_key keeps the last maximum; scan in reverse to keep the first
            let display = counts
                .iter()
                .rev()
                .max_by_key(|(_, c)| *c)
                .map(|(s, _)| s.to_string())
                .unwrap_or_default();
            let doc_ids: BTreeSet<String> = mentions.iter().map(|m| m.doc_id.clone()).collect();
            Entity {
                label: key.label,
                key,
                display,
                mentions,
                doc_ids,
                score: 0.0,
            }
        })
        .collect()
}
