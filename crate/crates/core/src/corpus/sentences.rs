use std::ops::Range;

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}' | '`')
}

/// Byte ranges of the sentences of `text`.
///
/// A sentence ends at `.`, `!` or `?` followed by end of text, or by whitespace
/// and then an uppercase letter or an opening quote. There is no abbreviation
/// list, so `Mr. Smith` splits after `Mr.`. Each range starts at a non-whitespace
/// character and the ranges jointly cover every non-whitespace character.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if c.is_whitespace() {
            continue;
        }
        let begin = *start.get_or_insert(i);
        if !is_terminator(c) {
            continue;
        }
        let rest = &chars[k + 1..];
        let boundary = match rest.first() {
            None => true,
            Some(&(_, next)) if next.is_whitespace() => rest
                .iter()
                .find(|(_, ch)| !ch.is_whitespace())
                .is_none_or(|&(_, ch)| opens_sentence(ch)),
            Some(_) => false,
        };
        if boundary {
            spans.push(begin..i + c.len_utf8());
            start = None;
        }
    }
    if let Some(begin) = start {
        let end = text.trim_end().len();
        spans.push(begin..end);
    }
    spans
}
