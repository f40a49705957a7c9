//! Proxy tokenization shared by retrieval, prompting, and metrics.
//!
//! Tokens are the unit of BM25 term matching, ROUGE overlap, and prompt
//! budgets. The rule is fixed: Unicode-lowercase the text, then split on
//! maximal runs of non-alphanumeric characters. Model-specific subword
//! tokenizers are a provider concern and never enter the core.

/// Lowercase and split `text` into tokens. Empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token count without allocating the token vector.
pub fn count_tokens(text: &str) -> usize {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .count()
}

/// Byte ranges of the alphanumeric runs in the *original* (uncased) text.
/// Used to truncate a field while keeping its original spelling.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push((s, i));
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Keep the prefix of `text` covering its first `max_tokens` tokens
/// (original bytes up to the end of the last kept token). Returns the
/// text unchanged when it already fits.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let spans = token_spans(text);
    if spans.len() <= max_tokens {
        return text;
    }
    if max_tokens == 0 {
        return "";
    }
    &text[..spans[max_tokens - 1].1]
}
