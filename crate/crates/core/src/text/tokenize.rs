use serde::{Deserialize, Serialize};

/// A lowercased word with its location in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Code-point offset of the first character.
    pub char_start: usize,
    /// Code-point offset one past the last character.
    pub char_end: usize,
    pub position: usize,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '\u{2010}' | '\u{2011}')
}

/// Splits `text` into maximal alphanumeric runs. An apostrophe or hyphen is
/// kept when it sits between two alphanumeric characters, so
/// `state-of-the-art` and `O'Neill` stay whole. Everything else separates.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        loop {
            if i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            } else if i + 1 < chars.len() && is_joiner(chars[i]) && chars[i + 1].is_alphanumeric() {
                i += 2;
            } else {
                break;
            }
        }
        let surface: String = chars[start..i].iter().collect();
        tokens.push(Token {
            text: surface.to_lowercase(),
            char_start: start,
            char_end: i,
            position: tokens.len(),
        });
    }
    tokens
}

/// Lowercased token texts only.
pub fn terms(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}
