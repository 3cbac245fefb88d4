use std::collections::HashMap;
use std::path::Path;

use super::{BioTag, EntityLabel, ExtractError};
use crate::corpus::Document;
use crate::text::Token;

/// Known phrases (lowercase token sequences) with their labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    phrases: HashMap<Vec<String>, EntityLabel>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, phrase: &str, label: EntityLabel) {
        let tokens: Vec<String> = phrase.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(tokens.len());
        self.phrases.insert(tokens, label);
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, EntityLabel)>) -> Self {
        let mut g = Self::new();
        for (phrase, label) in pairs {
            g.insert(phrase, label);
        }
        g
    }

    /// Reads `phrase<TAB>label` lines. Blank lines and `#` comments are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExtractError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ExtractError::Gazetteer {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|(line, message)| ExtractError::Gazetteer {
            path: display,
            line,
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut g = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (phrase, label) = line
                .split_once('\t')
                .ok_or_else(|| (i + 1, "expected `phrase<TAB>label`".to_string()))?;
            let label: EntityLabel = label
                .trim()
                .parse()
                .map_err(|_| (i + 1, format!("unknown label `{}`", label.trim())))?;
            if phrase.chars().any(char::is_uppercase) {
                return Err((i + 1, format!("phrase `{phrase}` is not lowercased")));
            }
            g.insert(phrase, label);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn contains(&self, phrase: &[String]) -> Option<EntityLabel> {
        self.phrases.get(phrase).copied()
    }

    /// Longest phrase starting at `start`, as (length, label).
    fn longest_match(&self, tokens: &[Token], start: usize) -> Option<(usize, EntityLabel)> {
        let limit = self.max_len.min(tokens.len() - start);
        let mut key: Vec<String> = tokens[start..start + limit].iter().map(|t| t.text.clone()).collect();
        while !key.is_empty() {
            if let Some(&label) = self.phrases.get(&key) {
                return Some((key.len(), label));
            }
            key.pop();
        }
        None
    }
}

pub(crate) fn check_tokens(doc: &Document, tokens: &[Token], chars: &[char]) -> Result<(), ExtractError> {
    for (i, tok) in tokens.iter().enumerate() {
        let ok = tok.position == i
            && tok.char_start < tok.char_end
            && tok.char_end <= chars.len()
            && chars[tok.char_start..tok.char_end].iter().collect::<String>().to_lowercase() == tok.text;
        if !ok {
            return Err(ExtractError::TokenMismatch {
                doc_id: doc.id.clone(),
                position: i,
            });
        }
    }
    Ok(())
}

fn is_capitalized(chars: &[char], tok: &Token) -> bool {
    chars[tok.char_start].is_uppercase()
}

/// First token, or preceded by `.`, `!` or `?` followed by whitespace.
fn is_sentence_initial(chars: &[char], tokens: &[Token], i: usize) -> bool {
    if i == 0 {
        return true;
    }
    let gap = &chars[tokens[i - 1].char_end..tokens[i].char_start];
    gap.windows(2)
        .any(|w| matches!(w[0], '.' | '!' | '?') && w[1].is_whitespace())
}

/// Only whitespace between consecutive tokens.
fn adjacent(chars: &[char], tokens: &[Token], i: usize) -> bool {
    chars[tokens[i - 1].char_end..tokens[i].char_start]
        .iter()
        .all(|c| c.is_whitespace())
}

/// Deterministic baseline tagger.
///
/// Pass one marks the longest gazetteer phrase at each position. Pass two
/// tags remaining runs of capitalized, whitespace-separated tokens as MISC.
/// A sentence-initial capitalized token only starts a run when the next token
/// continues it, so a lone "The" stays `O` while "Acme Corp" is kept.
pub fn label_tokens(doc: &Document, tokens: &[Token], gazetteer: &Gazetteer) -> Result<Vec<BioTag>, ExtractError> {
    let chars: Vec<char> = doc.body.chars().collect();
    check_tokens(doc, tokens, &chars)?;
    let n = tokens.len();
    let mut tags = vec![BioTag::O; n];

    let mut i = 0;
    while i < n {
        match gazetteer.longest_match(tokens, i) {
            Some((len, label)) => {
                tags[i] = BioTag::B(label);
                for t in &mut tags[i + 1..i + len] {
                    *t = BioTag::I(label);
                }
                i += len;
            }
            None => i += 1,
        }
    }

    let free_cap = |j: usize| tags[j] == BioTag::O && is_capitalized(&chars, &tokens[j]);
    let continues = |j: usize| {
        j < n && free_cap(j) && adjacent(&chars, tokens, j) && !is_sentence_initial(&chars, tokens, j)
    };
    let mut run_starts = Vec::new();
    let mut i = 0;
    while i < n {
        if !free_cap(i) || (is_sentence_initial(&chars, tokens, i) && !continues(i + 1)) {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        while continues(end) {
            end += 1;
        }
        run_starts.push((i, end));
        i = end;
    }
    for (start, end) in run_starts {
        tags[start] = BioTag::B(EntityLabel::Misc);
        for t in &mut tags[start + 1..end] {
            *t = BioTag::I(EntityLabel::Misc);
        }
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::extract::is_valid_bio;
    use crate::text::tokenize;
    use BioTag::*;
    use EntityLabel::*;

    fn gaz() -> Gazetteer {
        Gazetteer::from_pairs([("acme corp", Org), ("jane doe", Per), ("london", Loc)])
    }

    fn run(text: &str, g: &Gazetteer) -> Vec<BioTag> {
        let doc = Document::new("d", Source::Fixture, text);
        label_tokens(&doc, &tokenize(text), g).unwrap()
    }

    #[test]
    fn gazetteer_pass() {
        assert_eq!(
            run("Acme Corp hired Jane Doe in London", &gaz()),
            [B(Org), I(Org), O, B(Per), I(Per), O, B(Loc)]
        );
    }

    #[test]
    fn capitalization_pass() {
        assert_eq!(
            run("Acme Corp hired Jane Doe in London", &Gazetteer::new()),
            [B(Misc), I(Misc), O, B(Misc), I(Misc), O, B(Misc)]
        );
    }

    #[test]
    fn all_lowercase_is_outside() {
        assert!(run("nothing to see here at all", &Gazetteer::new()).iter().all(|t| *t == O));
    }

    #[test]
    fn lone_sentence_initial_word_is_dropped() {
        assert_eq!(
            run("The board met. Acme left! Paris reacted. Officials in Rome agreed.", &Gazetteer::new()),
            [O, O, O, O, O, O, O, O, O, B(Misc), O]
        );
        assert_eq!(run("Then Acme left.", &Gazetteer::new()), [B(Misc), I(Misc), O]);
    }

    #[test]
    fn runs_break_at_punctuation_and_sentences() {
        assert_eq!(
            run("we saw Paris, London and Rome. New York too", &Gazetteer::new()),
            [O, O, B(Misc), B(Misc), O, B(Misc), B(Misc), I(Misc), O]
        );
    }

    #[test]
    fn longest_gazetteer_match_wins() {
        let g = Gazetteer::from_pairs([("new", Misc), ("new york", Loc), ("new york times", Org)]);
        assert_eq!(run("the new york times and new york", &g), [O, B(Org), I(Org), I(Org), O, B(Loc), I(Loc)]);
    }

    #[test]
    fn gazetteer_and_capital_runs_do_not_merge() {
        let tags = run("yesterday Acme Corp Chairman Smith spoke", &gaz());
        assert_eq!(tags, [O, B(Org), I(Org), B(Misc), I(Misc), O]);
        assert!(is_valid_bio(&tags));
    }

    #[test]
    fn token_mismatch_is_reported() {
        let doc = Document::new("d", Source::Fixture, "alpha beta");
        let toks = tokenize("gamma delta");
        assert!(matches!(
            label_tokens(&doc, &toks, &Gazetteer::new()),
            Err(ExtractError::TokenMismatch { position: 0, .. })
        ));
    }

    #[test]
    fn parse_gazetteer_file() {
        let g = Gazetteer::parse("# comment\nacme corp\tORG\n\nlondon\tLOC\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.contains(&["acme".into(), "corp".into()]), Some(Org));
        assert_eq!(Gazetteer::parse("acme corp ORG").unwrap_err().0, 1);
        assert_eq!(Gazetteer::parse("x\tFOO").unwrap_err().0, 1);
        assert_eq!(Gazetteer::parse("ok\tPER\nAcme\tORG").unwrap_err().0, 2);
    }
}
