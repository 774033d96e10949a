use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::NormalizerError;

/// Apostrophe-less spellings accepted as contraction keys.
pub const KNOWN_BARE_CONTRACTIONS: &[&str] = &[
    "aint", "arent", "cant", "couldnt", "didnt", "doesnt", "dont", "gonna", "gotta", "hasnt",
    "havent", "im", "isnt", "ive", "shouldnt", "theyre", "wanna", "wasnt", "werent", "wont",
    "wouldnt", "youre",
];

pub(crate) const BUILTIN_CONTRACTIONS: &str = include_str!("../../data/contractions.tsv");
pub(crate) const BUILTIN_EMOJI: &str = include_str!("../../data/emoji.tsv");
pub(crate) const BUILTIN_LEXICON: &str = include_str!("../../data/hashtag_lexicon.tsv");

/// Two-column TSV rows; blank lines and `#` comment lines are skipped.
pub(crate) fn parse_tsv_pairs(
    source: &str,
    name: &str,
) -> Result<Vec<(String, String)>, NormalizerError> {
    let mut rows = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(k), Some(v), None) if !k.is_empty() => rows.push((k.to_string(), v.to_string())),
            _ => {
                return Err(NormalizerError::Parse {
                    table: name.to_string(),
                    line: i + 1,
                    message: "expected exactly two tab-separated columns".into(),
                })
            }
        }
    }
    Ok(rows)
}

pub(crate) fn read_file(path: &Path) -> Result<String, NormalizerError> {
    fs::read_to_string(path).map_err(|source| NormalizerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn canonical_apostrophes(s: &str) -> String {
    s.replace(['\u{2019}', '\u{2018}'], "'")
}

/// Lowercase contraction -> multi-word expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionTable {
    entries: HashMap<String, String>,
}

impl ContractionTable {
    pub fn new<I, K, V>(entries: I) -> Result<Self, NormalizerError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (k, v) in entries {
            let key = canonical_apostrophes(&k.as_ref().to_lowercase());
            let expansion = v.as_ref().trim().to_string();
            let bare_ok = KNOWN_BARE_CONTRACTIONS.contains(&key.as_str());
            if !(key.contains('\'') || bare_ok) || expansion.split_whitespace().count() < 2 {
                return Err(NormalizerError::InvalidContraction(key));
            }
            map.insert(key, expansion);
        }
        if map.is_empty() {
            return Err(NormalizerError::EmptyTable("contraction"));
        }
        Ok(ContractionTable { entries: map })
    }

    pub fn parse(source: &str) -> Result<Self, NormalizerError> {
        Self::new(parse_tsv_pairs(source, "contraction")?)
    }

    pub fn load(path: &Path) -> Result<Self, NormalizerError> {
        Self::parse(&read_file(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_CONTRACTIONS).expect("shipped contraction table is valid")
    }

    /// `key` must already be lowercase with straight apostrophes.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Emoji or emoticon literal -> replacement words, matched longest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiTable {
    // (literal chars, replacement), sorted by literal length descending.
    entries: Vec<(Vec<char>, String)>,
}

impl EmojiTable {
    pub fn new<I, K, V>(entries: I) -> Result<Self, NormalizerError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            let literal = k.as_ref().to_string();
            let words = v.as_ref().split_whitespace().collect::<Vec<_>>().join(" ");
            if literal.trim().is_empty()
                || literal.chars().any(char::is_whitespace)
                || words.is_empty()
                || words.contains(['#', '<', '>'])
            {
                return Err(NormalizerError::InvalidEmoji(literal));
            }
            map.insert(literal, words);
        }
        for (literal, words) in &map {
            if map.keys().any(|k| words.contains(k.as_str())) {
                return Err(NormalizerError::InvalidEmoji(literal.clone()));
            }
        }
        let mut entries: Vec<(Vec<char>, String)> = map
            .into_iter()
            .map(|(k, v)| (k.chars().collect(), v))
            .collect();
        // Stable sort keeps lexicographic order among equal lengths.
        entries.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        Ok(EmojiTable { entries })
    }

    pub fn parse(source: &str) -> Result<Self, NormalizerError> {
        Self::new(parse_tsv_pairs(source, "emoji")?)
    }

    pub fn load(path: &Path) -> Result<Self, NormalizerError> {
        Self::parse(&read_file(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_EMOJI).expect("shipped emoji table is valid")
    }

    /// Longest literal matching `text` at its start, with its char length.
    pub(crate) fn longest_match(&self, text: &[char]) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(lit, _)| text.starts_with(lit))
            .map(|(lit, words)| (lit.len(), words.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
