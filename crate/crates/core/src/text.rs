//! Text utilities shared by ingest, indexing, and scoring: the harness
//! tokenizer, reference-title normalization, and token-bounded truncation.

/// Tokenize text with the harness tokenizer: split on any non-alphanumeric
/// Unicode character, lowercase, drop empty units.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

/// Number of tokens under the harness tokenizer, without allocating them.
pub fn count_tokens(text: &str) -> usize {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .count()
}

const DASHES: [char; 7] = [
    '-', '\u{2010}', '\u{2011}', '\u{2012}', '\u{2013}', '\u{2014}', '\u{2015}',
];

/// Normalize a reference title into a matching key: lowercase, hyphens and
/// dashes become spaces, all other punctuation is removed, whitespace runs
/// collapse to single spaces, and the result is trimmed.
pub fn normalize_ref_key(raw_title: &str) -> String {
    let mut out = String::with_capacity(raw_title.len());
    let mut pending_space = false;
    for c in raw_title.chars() {
        let c = if DASHES.contains(&c) { ' ' } else { c };
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else if c.is_whitespace() {
            pending_space = true;
        }
        // remaining punctuation is dropped outright
    }
    out
}

/// Return the prefix of `text` containing at most `limit` tokens under the
/// harness tokenizer. Idempotent: truncating a truncated text is a no-op.
pub fn truncate_tokens(text: &str, limit: usize) -> &str {
    if limit == 0 {
        return "";
    }
    let mut count = 0usize;
    let mut in_token = false;
    let mut end = 0usize;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if !in_token {
                count += 1;
                in_token = true;
                if count > limit {
                    return &text[..end];
                }
            }
            end = i + c.len_utf8();
        } else {
            in_token = false;
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_and_lowercases() {
        assert_eq!(tokenize("Hello, World-2024!"), vec!["hello", "world", "2024"]);
        assert!(tokenize("...").is_empty());
    }

    #[test]
    fn normalize_hyphen_becomes_space() {
        // Hand-applied normalization of a bibliography title.
        assert_eq!(
            normalize_ref_key("Movement Pruning: Adaptive Sparsity by Fine-Tuning"),
            "movement pruning adaptive sparsity by fine tuning"
        );
    }

    #[test]
    fn normalize_trims_and_lowercases() {
        assert_eq!(normalize_ref_key("  ABC  "), "abc");
    }

    #[test]
    fn normalize_empty_is_empty() {
        assert_eq!(normalize_ref_key(""), "");
        assert_eq!(normalize_ref_key("!!!"), "");
    }

    #[test]
    fn truncate_under_limit_is_identity() {
        let text = "one two three four five six seven eight nine ten";
        assert_eq!(truncate_tokens(text, 32_000), text);
    }

    #[test]
    fn truncate_cuts_at_token_boundary() {
        let text = "alpha beta gamma delta";
        assert_eq!(truncate_tokens(text, 2), "alpha beta");
        assert_eq!(count_tokens(truncate_tokens(text, 3)), 3);
    }

    #[test]
    fn truncate_zero_is_empty() {
        assert_eq!(truncate_tokens("anything at all", 0), "");
    }

    #[test]
    fn truncate_is_idempotent() {
        let text = "a b c d e f g h";
        let once = truncate_tokens(text, 3);
        assert_eq!(truncate_tokens(once, 3), once);
    }
}
