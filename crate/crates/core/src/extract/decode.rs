use super::{BioTag, EntityLabel, EntityMention, ExtractError};
use crate::corpus::Document;
use crate::text::Token;

/// An `I-L` tag is valid only right after `B-L` or `I-L`.
pub fn is_valid_bio(tags: &[BioTag]) -> bool {
    let mut prev = BioTag::O;
    for &tag in tags {
        if let BioTag::I(l) = tag {
            if prev.label() != Some(l) {
                return false;
            }
        }
        prev = tag;
    }
    true
}

/// Rewrites each orphan `I-L` as `B-L`.
pub fn repair_bio(tags: &mut [BioTag]) {
    let mut prev = BioTag::O;
    for tag in tags.iter_mut() {
        if let BioTag::I(l) = *tag {
            if prev.label() != Some(l) {
                *tag = BioTag::B(l);
            }
        }
        prev = *tag;
    }
}

/// One mention per `B (I)*` run. Orphan `I-` tags are repaired first.
pub fn decode_mentions(tags: &[BioTag], tokens: &[Token], doc: &Document) -> Result<Vec<EntityMention>, ExtractError> {
    if tags.len() != tokens.len() {
        return Err(ExtractError::LengthMismatch {
            tags: tags.len(),
            tokens: tokens.len(),
        });
    }
    let mut tags = tags.to_vec();
    repair_bio(&mut tags);
    let chars: Vec<char> = doc.body.chars().collect();
    super::baseline::check_tokens(doc, tokens, &chars)?;

    let mut mentions = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let BioTag::B(label) = tags[i] else {
            i += 1;
            continue;
        };
        let mut end = i + 1;
        while end < tags.len() && tags[end] == BioTag::I(label) {
            end += 1;
        }
        let (cs, ce) = (tokens[i].char_start, tokens[end - 1].char_end);
        mentions.push(EntityMention {
            surface: chars[cs..ce].iter().collect(),
            label,
            doc_id: doc.id.clone(),
            token_span: (i, end),
            char_span: (cs, ce),
        });
        i = end;
    }
    Ok(mentions)
}

/// Inverse of decoding: token spans back to a BIO sequence of length `len`.
pub fn encode_spans(spans: &[((usize, usize), EntityLabel)], len: usize) -> Vec<BioTag> {
    let mut tags = vec![BioTag::O; len];
    for &((start, end), label) in spans {
        tags[start] = BioTag::B(label);
        for t in &mut tags[start + 1..end] {
            *t = BioTag::I(label);
        }
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use crate::extract::{label_tokens, Gazetteer};
    use crate::text::tokenize;
    use proptest::prelude::*;
    use BioTag::*;
    use EntityLabel::*;

    #[test]
    fn decodes_fixture_with_char_spans() {
        let text = "Acme Corp hired Jane Doe in London";
        let doc = Document::new("d1", Source::Fixture, text);
        let toks = tokenize(text);
        let tags = [B(Org), I(Org), O, B(Per), I(Per), O, B(Loc)];
        let m = decode_mentions(&tags, &toks, &doc).unwrap();
        let got: Vec<_> = m.iter().map(|m| (m.surface.as_str(), m.label, m.token_span, m.char_span)).collect();
        assert_eq!(
            got,
            [
                ("Acme Corp", Org, (0, 2), (0, 9)),
                ("Jane Doe", Per, (3, 5), (16, 24)),
                ("London", Loc, (6, 7), (28, 34)),
            ]
        );
    }

    #[test]
    fn all_outside_is_empty() {
        let doc = Document::new("d", Source::Fixture, "a b c");
        assert!(decode_mentions(&[O, O, O], &tokenize("a b c"), &doc).unwrap().is_empty());
    }

    #[test]
    fn orphan_inside_is_repaired() {
        let doc = Document::new("d", Source::Fixture, "Jane runs");
        let m = decode_mentions(&[I(Per), O], &tokenize("Jane runs"), &doc).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].label, m[0].token_span), (Per, (0, 1)));

        let mut tags = vec![B(Per), I(Org), I(Org), O, I(Loc)];
        assert!(!is_valid_bio(&tags));
        repair_bio(&mut tags);
        assert_eq!(tags, [B(Per), B(Org), I(Org), O, B(Loc)]);
        assert!(is_valid_bio(&tags));
    }

    #[test]
    fn length_mismatch() {
        let doc = Document::new("d", Source::Fixture, "a b");
        assert!(matches!(
            decode_mentions(&[O], &tokenize("a b"), &doc),
            Err(ExtractError::LengthMismatch { tags: 1, tokens: 2 })
        ));
    }

    #[test]
    fn tag_strings() {
        for s in ["O", "B-PER", "I-ORG", "B-LOC", "I-MISC"] {
            assert_eq!(s.parse::<BioTag>().unwrap().to_string(), s);
        }
        for s in ["", "B", "B-", "X-PER", "B-FOO", "o"] {
            assert!(s.parse::<BioTag>().is_err(), "{s}");
        }
    }

    fn any_tag() -> impl Strategy<Value = BioTag> {
        let label = prop::sample::select(EntityLabel::ALL.to_vec());
        prop_oneof![
            2 => Just(O),
            1 => label.clone().prop_map(B),
            1 => label.prop_map(I),
        ]
    }

    proptest! {
        #[test]
        fn repair_yields_valid_bio(mut tags in prop::collection::vec(any_tag(), 0..40)) {
            repair_bio(&mut tags);
            prop_assert!(is_valid_bio(&tags));
        }

        #[test]
        fn decode_then_encode_is_identity_on_valid_bio(mut tags in prop::collection::vec(any_tag(), 0..40)) {
            repair_bio(&mut tags);
            let text: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
            let text = text.join(" ");
            let doc = Document::new("p", Source::Fixture, text.as_str());
            let toks = tokenize(&text);
            let mentions = decode_mentions(&tags, &toks, &doc).unwrap();
            let spans: Vec<_> = mentions.iter().map(|m| (m.token_span, m.label)).collect();
            prop_assert_eq!(encode_spans(&spans, tags.len()), tags);
        }

        #[test]
        fn baseline_output_is_valid(words in prop::collection::vec("[A-Za-z]{1,6}[.,!]?", 0..30)) {
            let text = words.join(" ");
            let doc = Document::new("p", Source::Fixture, text.as_str());
            let toks = tokenize(&text);
            let g = Gazetteer::from_pairs([("ab", Org), ("ab cd", Per)]);
            let tags = label_tokens(&doc, &toks, &g).unwrap();
            prop_assert_eq!(tags.len(), toks.len());
            prop_assert!(is_valid_bio(&tags));
            let mentions = decode_mentions(&tags, &toks, &doc).unwrap();
            let spans: Vec<_> = mentions.iter().map(|m| (m.token_span, m.label)).collect();
            prop_assert_eq!(encode_spans(&spans, tags.len()), tags);
        }
    }
}
