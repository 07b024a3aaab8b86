//! Reader for Penn Treebank style bracketed trees, as printed by CoreNLP.

use crate::{Error, Result};

/// Constituency tree. Pre-terminals are stored as leaves carrying their tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseTree {
    Node {
        label: String,
        children: Vec<ParseTree>,
    },
    Leaf {
        label: String,
        token: String,
    },
}

impl ParseTree {
    pub fn label(&self) -> &str {
        match self {
            ParseTree::Node { label, .. } | ParseTree::Leaf { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[ParseTree] {
        match self {
            ParseTree::Node { children, .. } => children,
            ParseTree::Leaf { .. } => &[],
        }
    }

    /// Leaf tokens in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ParseTree::Leaf { token, .. } => out.push(token),
            ParseTree::Node { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ParseTree::Leaf { .. } => 1,
            ParseTree::Node { children, .. } => children.iter().map(ParseTree::leaf_count).sum(),
        }
    }
}

fn decode(token: &str) -> String {
    match token {
        "-LRB-" => "(",
        "-RRB-" => ")",
        "-LSB-" => "[",
        "-RSB-" => "]",
        "-LCB-" => "{",
        "-RCB-" => "}",
        other => other,
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

fn lex(input: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let mut atom = String::new();
    let mut atom_start = 0;
    for (pos, c) in input.chars().enumerate() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if !atom.is_empty() {
                out.push((atom_start, Tok::Atom(std::mem::take(&mut atom))));
            }
            match c {
                '(' => out.push((pos, Tok::Open)),
                ')' => out.push((pos, Tok::Close)),
                _ => {}
            }
        } else {
            if atom.is_empty() {
                atom_start = pos;
            }
            atom.push(c);
        }
    }
    if !atom.is_empty() {
        out.push((atom_start, Tok::Atom(atom)));
    }
    out
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn unbalanced(&self, at: usize) -> Error {
        Error::Parse(format!("unbalanced bracket at char {at}"))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn node(&mut self) -> Result<ParseTree> {
        let open_at = self.here();
        if self.peek() != Some(&Tok::Open) {
            return Err(Error::Parse(format!("expected '(' at char {open_at}")));
        }
        self.pos += 1;
        let label = match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = a.clone();
                self.pos += 1;
                a
            }
            _ => String::new(),
        };
        // (TAG token)
        if let (Some(Tok::Atom(tok)), Some(Tok::Close)) = (
            self.toks.get(self.pos).map(|(_, t)| t),
            self.toks.get(self.pos + 1).map(|(_, t)| t),
        ) {
            let token = decode(tok);
            self.pos += 2;
            return Ok(ParseTree::Leaf { label, token });
        }
        let mut children = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.unbalanced(self.end)),
                Some(Tok::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Open) => children.push(self.node()?),
                Some(Tok::Atom(a)) => {
                    children.push(ParseTree::Leaf {
                        label: String::new(),
                        token: decode(a),
                    });
                    self.pos += 1;
                }
            }
        }
        if children.is_empty() {
            return Err(Error::Parse(format!("empty constituent at char {open_at}")));
        }
        Ok(ParseTree::Node { label, children })
    }
}

/// Parse a single bracketed tree. `-LRB-`/`-RRB-` style escapes are decoded in
/// tokens. Errors carry the 0-based character position.
pub fn parse_ptb(bracketed: &str) -> Result<ParseTree> {
    let toks = lex(bracketed);
    if toks.is_empty() {
        return Err(Error::Parse("empty input".to_string()));
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: bracketed.chars().count(),
    };
    let mut tree = parser.node()?;
    if let Some((at, tok)) = parser.toks.get(parser.pos) {
        return Err(match tok {
            Tok::Close => parser.unbalanced(*at),
            _ => Error::Parse(format!("trailing input at char {at}")),
        });
    }
    // CoreNLP sometimes wraps the tree in an unlabeled outer bracket.
    if let ParseTree::Node { label, children } = &tree {
        if label.is_empty() && children.len() == 1 {
            tree = children[0].clone();
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tree() {
        let t = parse_ptb("(ROOT (NP (DT the) (NN cat)))").unwrap();
        assert_eq!(t.label(), "ROOT");
        assert_eq!(t.leaves(), ["the", "cat"]);
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn unbalanced_reports_position() {
        let err = parse_ptb("(ROOT (NP").unwrap_err().to_string();
        assert!(err.contains("unbalanced bracket at char 9"), "{err}");
        let err = parse_ptb("(NP (DT a)))").unwrap_err().to_string();
        assert!(err.contains("unbalanced bracket at char 11"), "{err}");
    }

    #[test]
    fn empty_input() {
        assert!(parse_ptb("").is_err());
        assert!(parse_ptb("   ").is_err());
    }

    #[test]
    fn escapes_decoded() {
        let t = parse_ptb("(ROOT (NP (-LRB- -LRB-) (NN x)))").unwrap();
        assert_eq!(t.leaves(), ["(", "x"]);
    }

    #[test]
    fn unlabeled_wrapper_removed() {
        let t = parse_ptb("( (S (NP (PRP I)) (VP (VBD ran))) )").unwrap();
        assert_eq!(t.label(), "S");
        assert_eq!(t.leaves(), ["I", "ran"]);
    }

    #[test]
    fn multiline_input() {
        let t = parse_ptb("(ROOT\n  (S\n    (NP (PRP I))\n    (VP (VBD ran))))").unwrap();
        assert_eq!(t.leaves(), ["I", "ran"]);
    }
}
