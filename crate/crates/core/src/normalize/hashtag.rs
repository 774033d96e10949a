//! Unigram word-break segmentation for hashtag bodies.
//!
//! A body is split into lexicon words maximising the sum of log relative
//! frequencies. When no full segmentation exists, a greedy longest-prefix
//! scan is used and runs of uncovered characters are kept as single tokens.

use std::collections::HashMap;
use std::path::Path;

use super::tables::{parse_tsv_pairs, read_file, BUILTIN_LEXICON};
use super::NormalizerError;

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    counts: HashMap<String, u64>,
    log_prob: HashMap<String, f64>,
    max_word_chars: usize,
}

impl Lexicon {
    pub fn new<I, K>(entries: I) -> Result<Self, NormalizerError>
    where
        I: IntoIterator<Item = (K, u64)>,
        K: AsRef<str>,
    {
        let mut counts = HashMap::new();
        for (word, count) in entries {
            let word = word.as_ref().to_lowercase();
            if count == 0 || word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(NormalizerError::InvalidLexiconEntry(word));
            }
            *counts.entry(word).or_insert(0) += count;
        }
        if counts.is_empty() {
            return Err(NormalizerError::EmptyTable("hashtag lexicon"));
        }
        let total: f64 = counts.values().map(|&c| c as f64).sum();
        let log_prob = counts
            .iter()
            .map(|(w, &c)| (w.clone(), (c as f64 / total).ln()))
            .collect();
        let max_word_chars = counts.keys().map(|w| w.chars().count()).max().unwrap_or(0);
        Ok(Lexicon {
            counts,
            log_prob,
            max_word_chars,
        })
    }

    pub fn parse(source: &str) -> Result<Self, NormalizerError> {
        let rows = parse_tsv_pairs(source, "hashtag lexicon")?;
        let mut entries = Vec::with_capacity(rows.len());
        for (word, count) in rows {
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| NormalizerError::InvalidLexiconEntry(word.clone()))?;
            entries.push((word, count));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, NormalizerError> {
        Self::parse(&read_file(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// ln(count / total) of a lexicon word.
    pub fn log_prob(&self, word: &str) -> Option<f64> {
        self.log_prob.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Splits a hashtag body (without `#`) into words. The body is lowercased;
/// the concatenation of the returned tokens always equals it.
///
/// An empty body yields a single empty token.
pub fn split_hashtag(tag: &str, lexicon: &Lexicon) -> Vec<String> {
    let chars: Vec<char> = tag.to_lowercase().chars().collect();
    if chars.is_empty() {
        return vec![String::new()];
    }
    best_segmentation(&chars, lexicon).unwrap_or_else(|| greedy_segmentation(&chars, lexicon))
}

fn best_segmentation(chars: &[char], lexicon: &Lexicon) -> Option<Vec<String>> {
    let n = chars.len();
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut back = vec![0usize; n + 1];
    best[0] = 0.0;
    let mut word = String::new();
    for end in 1..=n {
        let start_min = end.saturating_sub(lexicon.max_word_chars);
        // Ascending start: on equal scores the longer final word wins.
        for start in start_min..end {
            if best[start] == f64::NEG_INFINITY {
                continue;
            }
            word.clear();
            word.extend(&chars[start..end]);
            if let Some(lp) = lexicon.log_prob(&word) {
                let score = best[start] + lp;
                if score > best[end] {
                    best[end] = score;
                    back[end] = start;
                }
            }
        }
    }
    if best[n] == f64::NEG_INFINITY {
        return None;
    }
    let mut tokens = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = back[end];
        tokens.push(chars[start..end].iter().collect());
        end = start;
    }
    tokens.reverse();
    Some(tokens)
}

fn greedy_segmentation(chars: &[char], lexicon: &Lexicon) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut residue = String::new();
    let mut pos = 0;
    while pos < chars.len() {
        let longest = (1..=lexicon.max_word_chars.min(chars.len() - pos))
            .rev()
            .find_map(|len| {
                let candidate: String = chars[pos..pos + len].iter().collect();
                lexicon.contains(&candidate).then_some((len, candidate))
            });
        match longest {
            Some((len, word)) => {
                if !residue.is_empty() {
                    tokens.push(std::mem::take(&mut residue));
                }
                tokens.push(word);
                pos += len;
            }
            None => {
                residue.push(chars[pos]);
                pos += 1;
            }
        }
    }
    if !residue.is_empty() {
        tokens.push(residue);
    }
    tokens
}
