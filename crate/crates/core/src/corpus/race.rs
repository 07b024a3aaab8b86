use std::collections::HashSet;
use std::path::Path;

use serde_json::Value;
use walkdir::WalkDir;

use super::{Dataset, Example};
use crate::{Error, Result};

const FIELDS: [&str; 5] = ["article", "questions", "options", "answers", "id"];

/// Load a RACE distribution directory (searched recursively).
///
/// Every regular, non-hidden file is one article document. Files are visited in
/// path order and each question becomes an example with id
/// `<document id>:<question ordinal>`.
pub fn load_race_dir(path: &Path) -> Result<Dataset> {
    if !path.is_dir() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(path).to_path_buf();
            Error::io(p, e.into())
        })?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if entry.file_type().is_file() && !hidden {
            files.push(entry.into_path());
        }
    }

    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let name = file.display().to_string();
        for example in parse_document(&name, &text)? {
            if !seen.insert(example.id.clone()) {
                return Err(load_error(&name, format!("duplicate id {}", example.id)));
            }
            examples.push(example);
        }
    }
    let tag = path
        .file_name()
        .map(|n| format!("RACE-{}", n.to_string_lossy()))
        .unwrap_or_else(|| "RACE".to_string());
    Dataset::new(examples, tag)
}

fn load_error(file: &str, message: impl Into<String>) -> Error {
    Error::Load {
        file: file.to_string(),
        message: message.into(),
    }
}

fn parse_document(name: &str, text: &str) -> Result<Vec<Example>> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| load_error(name, format!("invalid JSON: {e}")))?;
    for field in FIELDS {
        if doc.get(field).is_none() {
            return Err(load_error(name, format!("missing field {field}")));
        }
    }
    let str_field = |v: &Value, field: &str| -> Result<String> {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| load_error(name, format!("field {field} must be a string")))
    };
    let list_field = |field: &str| -> Result<&Vec<Value>> {
        doc[field]
            .as_array()
            .ok_or_else(|| load_error(name, format!("field {field} must be a list")))
    };

    let article = str_field(&doc["article"], "article")?;
    let doc_id = str_field(&doc["id"], "id")?;
    let questions = list_field("questions")?;
    let options = list_field("options")?;
    let answers = list_field("answers")?;
    if questions.len() != options.len() || questions.len() != answers.len() {
        return Err(load_error(
            name,
            format!(
                "questions/options/answers lengths differ ({}/{}/{})",
                questions.len(),
                options.len(),
                answers.len()
            ),
        ));
    }

    let mut out = Vec::with_capacity(questions.len());
    for (ordinal, ((question, opts), answer)) in
        questions.iter().zip(options).zip(answers).enumerate()
    {
        let query = str_field(question, "questions")?;
        let opts: Vec<String> = opts
            .as_array()
            .ok_or_else(|| load_error(name, "field options must be a list of lists"))?
            .iter()
            .map(|o| str_field(o, "options"))
            .collect::<Result<_>>()?;
        let letter = str_field(answer, "answers")?;
        let answer_index = letter_index(&letter, opts.len())
            .ok_or_else(|| load_error(name, format!("answer letter out of range: {letter:?}")))?;
        let example = Example {
            id: format!("{doc_id}:{ordinal}"),
            passage: article.clone(),
            query,
            options: opts,
            answer_index,
            provenance: None,
        };
        example
            .validate()
            .map_err(|e| load_error(name, e.to_string()))?;
        out.push(example);
    }
    Ok(out)
}

fn letter_index(letter: &str, n_options: usize) -> Option<usize> {
    let mut chars = letter.trim().chars();
    let c = chars.next()?;
    if chars.next().is_some() || !c.is_ascii_uppercase() {
        return None;
    }
    let index = (c as u8 - b'A') as usize;
    (index < n_options).then_some(index)
}
