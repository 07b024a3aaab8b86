use std::ops::Range;

use super::{DeclarativeResult, Method, ParseTree};

const WH_WORDS: [&str; 9] = [
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how",
];
const FALLBACK_AUX: [&str; 12] = [
    "is", "are", "was", "were", "do", "does", "did", "can", "could", "will", "would", "should",
];
const AUX: [&str; 23] = [
    "is", "are", "was", "were", "am", "be", "been", "do", "does", "did", "has", "have", "had",
    "can", "could", "will", "would", "shall", "should", "may", "might", "must", "'s",
];
const WH_LABELS: [&str; 4] = ["WHNP", "WHADVP", "WHADJP", "WHPP"];

/// Past tense of irregular verbs likely to follow `did`.
const IRREGULAR_PAST: [(&str, &str); 48] = [
    ("be", "was"),
    ("become", "became"),
    ("begin", "began"),
    ("break", "broke"),
    ("bring", "brought"),
    ("build", "built"),
    ("buy", "bought"),
    ("catch", "caught"),
    ("choose", "chose"),
    ("come", "came"),
    ("do", "did"),
    ("drink", "drank"),
    ("drive", "drove"),
    ("eat", "ate"),
    ("fall", "fell"),
    ("feel", "felt"),
    ("find", "found"),
    ("fly", "flew"),
    ("forget", "forgot"),
    ("get", "got"),
    ("give", "gave"),
    ("go", "went"),
    ("grow", "grew"),
    ("have", "had"),
    ("hear", "heard"),
    ("keep", "kept"),
    ("know", "knew"),
    ("leave", "left"),
    ("lose", "lost"),
    ("make", "made"),
    ("mean", "meant"),
    ("meet", "met"),
    ("pay", "paid"),
    ("put", "put"),
    ("read", "read"),
    ("run", "ran"),
    ("say", "said"),
    ("see", "saw"),
    ("sell", "sold"),
    ("send", "sent"),
    ("sing", "sang"),
    ("sit", "sat"),
    ("speak", "spoke"),
    ("spend", "spent"),
    ("take", "took"),
    ("teach", "taught"),
    ("tell", "told"),
    ("think", "thought"),
];
const MORE_PAST: [(&str, &str); 6] = [
    ("understand", "understood"),
    ("wear", "wore"),
    ("win", "won"),
    ("write", "wrote"),
    ("swim", "swam"),
    ("stand", "stood"),
];

/// Sentence under construction plus the byte range of the inserted answer.
pub(super) struct Built {
    text: String,
    answer: Range<usize>,
    method: Method,
    warning: bool,
    capitalize: bool,
}

impl Built {
    pub(super) fn finish(mut self) -> DeclarativeResult {
        if self.capitalize && self.answer.start > 0 {
            if let Some(first) = self.text.chars().next() {
                let upper: String = first.to_uppercase().collect();
                let delta = upper.len() as isize - first.len_utf8() as isize;
                self.text.replace_range(..first.len_utf8(), &upper);
                self.answer = shift(&self.answer, delta);
            }
        }
        let mut text = self.text.trim_end().to_string();
        while let Some(last) = text.chars().last() {
            if !is_terminator(last) {
                text.push('.');
                break;
            }
            let body = text[..text.len() - 1].trim_end();
            if body.chars().last().is_some_and(is_terminator) {
                text.truncate(body.len());
                continue;
            }
            if last == '?' {
                text.truncate(text.len() - 1);
                text.push('.');
            }
            break;
        }
        let intact = self.answer.end <= text.len()
            && text.get(self.answer.clone()) == self.text.get(self.answer.clone());
        DeclarativeResult {
            answer_range: intact.then_some(self.answer),
            sentence: text,
            method: self.method,
            warning: self.warning,
        }
    }
}

fn shift(r: &Range<usize>, delta: isize) -> Range<usize> {
    let f = |x: usize| (x as isize + delta) as usize;
    f(r.start)..f(r.end)
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn collapse_spaces(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev_space = false;
    for c in s.chars() {
        if c == ' ' {
            if !prev_space {
                out.push(c);
            }
            prev_space = true;
        } else {
            out.push(c);
            prev_space = false;
        }
    }
    out
}

/// Byte range of the first blank run (`_`, `___`, `_ _ _`) at or after `from`.
fn blank_run(s: &str, from: usize) -> Option<Range<usize>> {
    let bytes = s.as_bytes();
    let start = from + s[from..].find('_')?;
    let mut end = start;
    loop {
        while end < bytes.len() && bytes[end] == b'_' {
            end += 1;
        }
        if end + 1 < bytes.len() && bytes[end] == b' ' && bytes[end + 1] == b'_' {
            end += 1;
            continue;
        }
        break;
    }
    Some(start..end)
}

pub(super) fn substitute_blank(query: &str, answer: &str) -> Built {
    let first = blank_run(query, 0).expect("caller checked for a blank");
    let mut rest = String::new();
    let mut pos = first.end;
    while let Some(run) = blank_run(query, pos) {
        rest.push_str(&query[pos..run.start]);
        pos = run.end;
    }
    rest.push_str(&query[pos..]);

    let prefix = collapse_spaces(&query[..first.start]);
    let suffix = collapse_spaces(&rest);
    let mut text = prefix;
    let start = text.len();
    text.push_str(answer);
    let end = text.len();
    let suffix = if text.ends_with(' ') {
        suffix.trim_start_matches(' ')
    } else {
        &suffix
    };
    text.push_str(suffix);
    Built {
        text: text.trim_start().to_string(),
        answer: {
            let lead = text.len() - text.trim_start().len();
            start - lead..end - lead
        },
        method: Method::BlankSubstitution,
        warning: false,
        capitalize: false,
    }
}

fn is_verb_like(word: &str) -> bool {
    let w = word.to_lowercase();
    if AUX.contains(&w.as_str()) {
        return true;
    }
    if IRREGULAR_PAST
        .iter()
        .chain(&MORE_PAST)
        .any(|(base, past)| *base == w || *past == w)
    {
        return true;
    }
    w.len() > 4 && (w.ends_with("ing") || w.ends_with("ed"))
}

pub(super) fn fallback(query: &str, answer: &str) -> Built {
    let trimmed = query.trim().trim_end_matches('?').trim_end();
    let words: Vec<(usize, &str)> = word_starts(trimmed);
    let is_wh = words
        .first()
        .is_some_and(|(_, w)| WH_WORDS.contains(&w.to_lowercase().as_str()));

    let (rest, warning, needs_copula) = if is_wh {
        let mut skip = 1;
        let mut stripped_aux = None;
        if let Some((_, w)) = words.get(1) {
            let lw = w.to_lowercase();
            if FALLBACK_AUX.contains(&lw.as_str()) {
                skip = 2;
                stripped_aux = Some(lw);
            }
        }
        let rest = words.get(skip).map(|(i, _)| &trimmed[*i..]).unwrap_or("");
        let modal_or_do = stripped_aux
            .as_deref()
            .is_some_and(|a| !matches!(a, "is" | "are" | "was" | "were"));
        let has_verb = modal_or_do
            || words[skip.min(words.len())..]
                .iter()
                .any(|(_, w)| is_verb_like(w));
        (rest, false, !has_verb)
    } else {
        (trimmed, true, false)
    };

    let mut text = rest.to_string();
    if !text.is_empty() {
        text.push_str(if needs_copula { " is " } else { " " });
    }
    let start = text.len();
    text.push_str(answer);
    Built {
        answer: start..text.len(),
        text,
        method: Method::HeuristicFallback,
        warning,
        capitalize: false,
    }
}

fn word_starts(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                out.push((st, &s[st..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((st, &s[st..]));
    }
    out
}

/// Parse tree flattened to leaves, with every node's leaf range.
struct Indexed<'a> {
    node: &'a ParseTree,
    leaves: Range<usize>,
    children: Vec<Indexed<'a>>,
}

fn index<'a>(tree: &'a ParseTree, next: &mut usize) -> Indexed<'a> {
    let start = *next;
    let children = match tree {
        ParseTree::Leaf { .. } => {
            *next += 1;
            Vec::new()
        }
        ParseTree::Node { children, .. } => children.iter().map(|c| index(c, next)).collect(),
    };
    Indexed {
        node: tree,
        leaves: start..*next,
        children,
    }
}

impl<'a> Indexed<'a> {
    fn label(&self) -> &str {
        self.node.label()
    }

    fn token(&self) -> Option<&str> {
        match self.node {
            ParseTree::Leaf { token, .. } => Some(token),
            _ => None,
        }
    }

    /// Parent of the first wh-phrase in preorder, and the phrase's child index.
    fn find_wh(&self) -> Option<(&Indexed<'a>, usize)> {
        for (i, child) in self.children.iter().enumerate() {
            if WH_LABELS.contains(&child.label()) {
                return Some((self, i));
            }
            if let Some(found) = child.find_wh() {
                return Some(found);
            }
        }
        None
    }
}

fn is_punct(node: &Indexed) -> bool {
    matches!(node.label(), "." | "," | ":") || node.token().is_some_and(|t| t == "?")
}

fn leaf_surfaces(token: &str) -> Vec<&str> {
    match token {
        "``" | "''" => vec![token, "\"", "\u{201C}", "\u{201D}"],
        "`" => vec!["`", "'", "\u{2018}"],
        "'" => vec!["'", "\u{2019}"],
        other => vec![other],
    }
}

/// Byte range of each leaf in the query, when the leaves line up with it.
fn align(query: &str, leaves: &[&str]) -> Option<Vec<Range<usize>>> {
    let mut out = Vec::with_capacity(leaves.len());
    let mut cursor = 0;
    for leaf in leaves {
        cursor += query[cursor..].len() - query[cursor..].trim_start().len();
        let surface = leaf_surfaces(leaf)
            .into_iter()
            .find(|s| query[cursor..].starts_with(s))?;
        out.push(cursor..cursor + surface.len());
        cursor += surface.len();
    }
    Some(out)
}

struct Surface<'q> {
    query: &'q str,
    leaves: Vec<String>,
    offsets: Option<Vec<Range<usize>>>,
}

impl Surface<'_> {
    fn text(&self, leaves: Range<usize>) -> String {
        if leaves.is_empty() {
            return String::new();
        }
        match &self.offsets {
            Some(off) => self.query[off[leaves.start].start..off[leaves.end - 1].end].to_string(),
            None => self.leaves[leaves]
                .iter()
                .map(|l| {
                    if l == "``" || l == "''" {
                        "\""
                    } else {
                        l.as_str()
                    }
                })
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

fn third_person(verb: &str) -> String {
    let lower = verb.to_lowercase();
    match lower.as_str() {
        "have" => return "has".into(),
        "do" => return "does".into(),
        "go" => return "goes".into(),
        "be" => return "is".into(),
        _ => {}
    }
    if ["s", "sh", "ch", "x", "z", "o"]
        .iter()
        .any(|e| lower.ends_with(e))
    {
        format!("{verb}es")
    } else if ends_consonant_y(&lower) {
        format!("{}ies", &verb[..verb.len() - 1])
    } else {
        format!("{verb}s")
    }
}

fn past(verb: &str) -> String {
    let lower = verb.to_lowercase();
    if let Some((_, p)) = IRREGULAR_PAST
        .iter()
        .chain(&MORE_PAST)
        .find(|(b, _)| *b == lower)
    {
        return p.to_string();
    }
    if lower.ends_with('e') {
        format!("{verb}d")
    } else if ends_consonant_y(&lower) {
        format!("{}ied", &verb[..verb.len() - 1])
    } else {
        format!("{verb}ed")
    }
}

fn ends_consonant_y(w: &str) -> bool {
    let b = w.as_bytes();
    b.len() >= 2 && b[b.len() - 1] == b'y' && !b"aeiou".contains(&b[b.len() - 2])
}

enum Piece {
    Text(String),
    Answer,
}

pub(super) fn apply_parse(query: &str, answer: &str, tree: &ParseTree) -> Option<Built> {
    let mut counter = 0;
    let root = index(tree, &mut counter);
    let (parent, wh_idx) = root.find_wh()?;
    let wh = &parent.children[wh_idx];
    let leaves: Vec<String> = tree.leaves().into_iter().map(str::to_string).collect();
    let leaf_refs: Vec<&str> = leaves.iter().map(String::as_str).collect();
    let surface = Surface {
        query,
        offsets: align(query, &leaf_refs),
        leaves,
    };
    let adverbial = matches!(wh.label(), "WHADVP" | "WHADJP");

    let mut pieces = Vec::new();
    if wh.leaves.start > 0 {
        pieces.push(Piece::Text(surface.text(0..wh.leaves.start)));
    }

    let clause = parent.children[wh_idx + 1..]
        .iter()
        .find(|c| c.label() == "SQ");
    match clause {
        None => {
            // Substitute in place: WH-phrase becomes the answer.
            pieces.push(Piece::Answer);
            let tail_end = trim_punct(&root, wh.leaves.end, root.leaves.end);
            pieces.push(Piece::Text(surface.text(wh.leaves.end..tail_end)));
        }
        Some(sq) => build_clause(sq, &surface, adverbial, &mut pieces),
    }

    let mut text = String::new();
    let mut answer_range = 0..0;
    for piece in pieces {
        let s = match &piece {
            Piece::Text(t) if t.trim().is_empty() => continue,
            Piece::Text(t) => t.trim(),
            Piece::Answer => answer,
        };
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(s);
        if matches!(piece, Piece::Answer) {
            answer_range = start..text.len();
        }
    }
    Some(Built {
        text,
        answer: answer_range,
        method: Method::ParseRule,
        warning: false,
        capitalize: true,
    })
}

/// End of `lo..hi` with trailing punctuation leaves removed.
fn trim_punct(root: &Indexed, lo: usize, mut hi: usize) -> usize {
    while hi > lo {
        match leaf_at(root, hi - 1) {
            Some(l) if is_punct(l) => hi -= 1,
            _ => break,
        }
    }
    hi
}

fn leaf_at<'b, 'a>(node: &'b Indexed<'a>, i: usize) -> Option<&'b Indexed<'a>> {
    if node.children.is_empty() {
        return (node.leaves.start == i).then_some(node);
    }
    node.children
        .iter()
        .find(|c| c.leaves.contains(&i))
        .and_then(|c| leaf_at(c, i))
}

fn build_clause(sq: &Indexed, surface: &Surface, adverbial: bool, pieces: &mut Vec<Piece>) {
    let kids: Vec<&Indexed> = sq.children.iter().filter(|c| !is_punct(c)).collect();
    let aux_pos = kids.first().and_then(|k| {
        let tok = k.token()?.to_lowercase();
        (k.label().starts_with("VB") || k.label() == "MD")
            .then_some(())
            .filter(|_| AUX.contains(&tok.as_str()))
            .map(|_| (0usize, tok))
    });
    let subject = aux_pos.as_ref().and_then(|_| {
        kids.iter()
            .skip(1)
            .position(|k| k.label() == "NP")
            .map(|p| p + 1)
    });
    let end = sq.leaves.end;
    let end = kids.last().map(|k| k.leaves.end).unwrap_or(end);

    let (Some((aux_i, aux_word)), Some(subj_i)) = (aux_pos, subject) else {
        // The wh-phrase is the subject: no inversion to undo.
        pieces.push(Piece::Answer);
        pieces.push(Piece::Text(surface.text(sq.leaves.start..end)));
        return;
    };
    let aux = kids[aux_i];
    let subj = kids[subj_i];
    pieces.push(Piece::Text(surface.text(subj.leaves.clone())));

    let rest = &kids[subj_i + 1..];
    let vp = rest.first().filter(|k| k.label() == "VP");
    let head = vp
        .and_then(|vp| vp.children.first())
        .filter(|h| h.label().starts_with("VB") && h.token().is_some());

    let do_support = matches!(aux_word.as_str(), "do" | "does" | "did");
    let rest_start = subj.leaves.end;
    let (verb_piece, after_verb) = match (do_support, head) {
        (true, Some(h)) => {
            let base = h.token().unwrap_or_default();
            let verb = match aux_word.as_str() {
                "does" => third_person(base),
                "did" => past(base),
                _ => base.to_string(),
            };
            (Some(verb), h.leaves.end)
        }
        _ => {
            pieces.push(Piece::Text(surface.text(aux.leaves.clone())));
            (None, rest_start)
        }
    };

    let gap = if adverbial {
        end
    } else if let (Some(vp), Some(h)) = (vp, head) {
        let mut gap = h.leaves.end;
        for child in vp.children.iter().skip(1) {
            if matches!(child.label(), "PRT" | "NP") && child.leaves.start == gap {
                gap = child.leaves.end;
            } else {
                break;
            }
        }
        gap
    } else if rest.is_empty() {
        rest_start
    } else {
        end
    };

    if let Some(verb) = verb_piece {
        pieces.push(Piece::Text(verb));
    }
    pieces.push(Piece::Text(surface.text(after_verb..gap.max(after_verb))));
    pieces.push(Piece::Answer);
    pieces.push(Piece::Text(surface.text(gap.max(after_verb)..end)));
}
