use std::ops::Range;

/// Tokens of a text together with their byte ranges in the source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub offsets: Vec<Range<usize>>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of the first token starting at or after `byte`.
    pub fn token_at_or_after(&self, byte: usize) -> usize {
        self.offsets.partition_point(|r| r.start < byte)
    }

    /// Token range whose tokens lie inside the byte range `bytes`.
    pub fn tokens_within(&self, bytes: Range<usize>) -> Range<usize> {
        let start = self.token_at_or_after(bytes.start);
        let end = self.offsets.partition_point(|r| r.end <= bytes.end);
        start..end.max(start)
    }

    pub fn lowercase(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.to_lowercase()).collect()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Deterministic word tokenizer shared by transforms, probes and exporters.
///
/// Runs of alphanumeric characters form one token. Any other non-whitespace
/// character is a token of its own, except that an apostrophe absorbs the
/// letters that follow it (`Frigo's` gives `Frigo`, `'s`).
pub fn tokenize(text: &str) -> TokenizedText {
    let mut out = TokenizedText::default();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let mut end = start + c.len_utf8();
        if c.is_alphanumeric() {
            while let Some(&(i, next)) = chars.peek() {
                if !next.is_alphanumeric() {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
        } else if is_apostrophe(c) {
            while let Some(&(i, next)) = chars.peek() {
                if !next.is_alphabetic() {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
        }
        out.tokens.push(text[start..end].to_string());
        out.offsets.push(start..end);
    }
    out
}

/// Case-insensitive equality of two token sequences.
pub fn tokens_match<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.as_ref().to_lowercase() == y.as_ref().to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(tokenize("The cat sat.").tokens, ["The", "cat", "sat", "."]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \n\t").is_empty());
    }

    #[test]
    fn apostrophe_starts_a_token() {
        assert_eq!(
            tokenize("Frigo's is an Italian restaurant").tokens,
            ["Frigo", "'s", "is", "an", "Italian", "restaurant"]
        );
        assert_eq!(tokenize("didn't").tokens, ["didn", "'t"]);
        assert_eq!(tokenize("' x").tokens, ["'", "x"]);
        assert_eq!(
            tokenize("rock \u{2019}n roll").tokens,
            ["rock", "\u{2019}n", "roll"]
        );
    }

    #[test]
    fn symbols_and_numbers() {
        assert_eq!(tokenize("$4.75").tokens, ["$", "4", ".", "75"]);
        assert_eq!(tokenize("_ _").tokens, ["_", "_"]);
        assert_eq!(tokenize("__").tokens, ["_", "_"]);
    }

    #[test]
    fn offsets_are_byte_ranges() {
        let t = tokenize("héllo, wörld");
        assert_eq!(t.tokens, ["héllo", ",", "wörld"]);
        for (tok, r) in t.tokens.iter().zip(&t.offsets) {
            assert_eq!(&"héllo, wörld"[r.clone()], tok);
        }
    }

    #[test]
    fn token_lookup_by_byte_range() {
        let text = "ab cd. ef";
        let t = tokenize(text);
        assert_eq!(t.tokens_within(3..6), 1..3);
        assert_eq!(t.token_at_or_after(7), 3);
    }

    #[test]
    fn case_insensitive_match() {
        assert!(tokens_match(&["The", "CAT"], &["the", "cat"]));
        assert!(!tokens_match(&["the"], &["the", "cat"]));
    }

    proptest! {
        #[test]
        fn concatenation_recovers_non_whitespace(text in "\\PC{0,80}") {
            let t = tokenize(&text);
            let joined: String = t.tokens.concat();
            let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, stripped);
        }

        #[test]
        fn offsets_increase_and_match_source(text in "[a-zA-Z0-9 ,.'!?_$\u{e9}\u{2019}-]{0,60}") {
            let t = tokenize(&text);
            let mut prev_end = 0;
            for (tok, r) in t.tokens.iter().zip(&t.offsets) {
                prop_assert!(r.start >= prev_end);
                prop_assert!(r.start < r.end);
                prop_assert_eq!(&text[r.clone()], tok.as_str());
                prev_end = r.end;
            }
            prop_assert_eq!(tokenize(&text), t);
        }
    }
}
