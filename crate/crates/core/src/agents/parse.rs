//! Extraction of tagged payloads from agent replies.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TagError {
    #[error("MissingTag: the reply contains no <{0}></{0}> block")]
    MissingTag(String),
    #[error("UnbalancedTags: unmatched <{0}> tag in the reply")]
    UnbalancedTags(String),
}

/// A tagged payload and the byte span of the whole `<tag>...</tag>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedBlock {
    pub start: usize,
    pub end: usize,
    pub payload: String,
}

pub fn find_tagged_blocks(text: &str, tag: &str) -> Result<Vec<TaggedBlock>, TagError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let unbalanced = || TagError::UnbalancedTags(tag.to_string());
    let mut out = Vec::new();
    let mut pos = 0;
    loop {
        let next_open = text[pos..].find(&open).map(|i| i + pos);
        let next_close = text[pos..].find(&close).map(|i| i + pos);
        match (next_open, next_close) {
            (None, None) => break,
            (None, Some(_)) => return Err(unbalanced()),
            (Some(o), Some(c)) if c < o => return Err(unbalanced()),
            (Some(o), _) => {
                let inner_start = o + open.len();
                let c = text[inner_start..]
                    .find(&close)
                    .map(|i| i + inner_start)
                    .ok_or_else(unbalanced)?;
                if text[inner_start..c].contains(&open) {
                    return Err(unbalanced());
                }
                out.push(TaggedBlock {
                    start: o,
                    end: c + close.len(),
                    payload: text[inner_start..c].trim().to_string(),
                });
                pos = c + close.len();
            }
        }
    }
    if out.is_empty() {
        return Err(TagError::MissingTag(tag.to_string()));
    }
    Ok(out)
}

/// All `<tag>` payloads in order, whitespace-trimmed.
pub fn parse_tagged_blocks(text: &str, tag: &str) -> Result<Vec<String>, TagError> {
    Ok(find_tagged_blocks(text, tag)?
        .into_iter()
        .map(|b| b.payload)
        .collect())
}

/// Docstring blocks each immediately followed by a signature block.
/// Unpaired blocks are ignored.
pub fn parse_signature_pairs(text: &str) -> Result<Vec<(String, String)>, TagError> {
    let docs = find_tagged_blocks(text, "docstring")?;
    let sigs = find_tagged_blocks(text, "signature")?;
    let mut pairs = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let limit = docs.get(i + 1).map_or(usize::MAX, |n| n.start);
        if let Some(s) = sigs.iter().find(|s| s.start >= d.end && s.start < limit) {
            pairs.push((d.payload.clone(), s.payload.clone()));
        }
    }
    Ok(pairs)
}

/// Removes code fences and a repeated `def` line, then dedents.
pub fn clean_code(payload: &str) -> String {
    let mut lines: Vec<&str> = payload.lines().collect();
    while lines.first().is_some_and(|l| l.trim().is_empty()) {
        lines.remove(0);
    }
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.first().is_some_and(|l| l.trim_start().starts_with("```")) {
        lines.remove(0);
        if lines.last().is_some_and(|l| l.trim() == "```") {
            lines.pop();
        }
    }
    if lines
        .first()
        .is_some_and(|l| l.trim_start().starts_with("def ") && l.trim_end().ends_with(':'))
    {
        lines.remove(0);
    }
    let indent = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start_matches([' ', '\t']).len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| if l.len() >= indent { l[indent..].trim_end() } else { l.trim_end() })
        .collect::<Vec<_>>()
        .join("\n")
}
