//! Ordered tweet normalization.
//!
//! [`normalize`] applies, in this order: [`strip_html`],
//! [`collapse_user_runs`], [`expand_contractions`], hashtag splitting
//! (via [`split_hashtag`]), [`replace_emojis`], [`fold_accents`] and a final
//! whitespace collapse. Every stage is a pure function.

mod hashtag;
mod tables;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub use hashtag::{split_hashtag, Lexicon};
pub use tables::{ContractionTable, EmojiTable, KNOWN_BARE_CONTRACTIONS};

use crate::types::{ExampleId, Tweet};

#[derive(Debug, Error)]
pub enum NormalizerError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{table} table, line {line}: {message}")]
    Parse {
        table: String,
        line: usize,
        message: String,
    },
    #[error("{0} table is empty")]
    EmptyTable(&'static str),
    #[error("invalid contraction entry `{0}`")]
    InvalidContraction(String),
    #[error("invalid emoji entry `{0}`")]
    InvalidEmoji(String),
    #[error("invalid hashtag lexicon entry `{0}`")]
    InvalidLexiconEntry(String),
    #[error("max_user_run must be at least 1")]
    InvalidMaxUserRun,
    #[error("hashtag lexicon word `{0}` is also a contraction key")]
    LexiconContractionOverlap(String),
    #[error("invalid normalizer config: {0}")]
    Config(String),
}

/// Parameters of every normalization rule.
#[derive(Debug, Clone)]
pub struct NormalizerConfig {
    contractions: ContractionTable,
    emojis: EmojiTable,
    lexicon: Lexicon,
    max_user_run: usize,
}

pub const DEFAULT_MAX_USER_RUN: usize = 3;

impl NormalizerConfig {
    /// Lexicon words may not be contraction keys: a split hashtag would
    /// otherwise be expanded on a second pass.
    pub fn new(
        contractions: ContractionTable,
        emojis: EmojiTable,
        lexicon: Lexicon,
        max_user_run: usize,
    ) -> Result<Self, NormalizerError> {
        if max_user_run == 0 {
            return Err(NormalizerError::InvalidMaxUserRun);
        }
        let mut overlap: Vec<&str> = lexicon
            .words()
            .filter(|w| contractions.contains(w))
            .collect();
        overlap.sort_unstable();
        if let Some(word) = overlap.first() {
            return Err(NormalizerError::LexiconContractionOverlap(word.to_string()));
        }
        Ok(NormalizerConfig {
            contractions,
            emojis,
            lexicon,
            max_user_run,
        })
    }

    /// Shipped tables with `max_user_run = 3`.
    pub fn builtin() -> Self {
        Self::new(
            ContractionTable::builtin(),
            EmojiTable::builtin(),
            Lexicon::builtin(),
            DEFAULT_MAX_USER_RUN,
        )
        .expect("shipped normalizer tables are consistent")
    }

    /// Loads a JSON config file. Table paths are relative to the file;
    /// missing entries fall back to the shipped tables.
    pub fn from_json_file(path: &Path) -> Result<Self, NormalizerError> {
        let text = tables::read_file(path)?;
        let file: NormalizerConfigFile =
            serde_json::from_str(&text).map_err(|e| NormalizerError::Config(e.to_string()))?;
        file.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn contractions(&self) -> &ContractionTable {
        &self.contractions
    }

    pub fn emojis(&self) -> &EmojiTable {
        &self.emojis
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn max_user_run(&self) -> usize {
        self.max_user_run
    }
}

/// On-disk form of [`NormalizerConfig`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizerConfigFile {
    pub contractions: Option<PathBuf>,
    pub emojis: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub max_user_run: Option<usize>,
}

impl NormalizerConfigFile {
    pub fn resolve(&self, base: &Path) -> Result<NormalizerConfig, NormalizerError> {
        let contractions = match &self.contractions {
            Some(p) => ContractionTable::load(&base.join(p))?,
            None => ContractionTable::builtin(),
        };
        let emojis = match &self.emojis {
            Some(p) => EmojiTable::load(&base.join(p))?,
            None => EmojiTable::builtin(),
        };
        let lexicon = match &self.lexicon {
            Some(p) => Lexicon::load(&base.join(p))?,
            None => Lexicon::builtin(),
        };
        NormalizerConfig::new(
            contractions,
            emojis,
            lexicon,
            self.max_user_run.unwrap_or(DEFAULT_MAX_USER_RUN),
        )
    }
}

/// Pipeline output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedTweet {
    pub id: ExampleId,
    pub text: String,
}

impl NormalizedTweet {
    /// Checks the output invariants: no `#`, no `<...>` tag, trimmed,
    /// single-spaced.
    pub fn is_well_formed(&self) -> bool {
        let t = &self.text;
        let tag_free = match t.find('<') {
            Some(open) => !t[open..].contains('>'),
            None => true,
        };
        let spacing = t.trim() == t
            && !t
                .chars()
                .zip(t.chars().skip(1))
                .any(|(a, b)| a.is_whitespace() && b.is_whitespace());
        !t.contains('#') && tag_free && spacing
    }
}

fn decode_entities_fixpoint(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let decoded = html_escape::decode_html_entities(&current).into_owned();
        if decoded == current {
            return current;
        }
        current = decoded;
    }
}

fn remove_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        match rest[open..].find('>') {
            Some(close) => {
                out.push_str(&rest[..open]);
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// Deletes every `<...>` span (an unmatched `<` is kept) and decodes HTML
/// entity references. Decoding and tag removal repeat until neither changes
/// the text, so entity-escaped tags are removed too and the function is
/// idempotent.
pub fn strip_html(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = remove_tags(&decode_entities_fixpoint(&current));
        if next == current {
            return next;
        }
        current = next;
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}' || c == '\u{2018}'
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}')
}

fn with_case_of(source_first: char, expansion: &str) -> String {
    if source_first.is_uppercase() {
        let mut chars = expansion.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        expansion.to_string()
    }
}

fn expand_token(token: &str, table: &ContractionTable) -> Option<String> {
    let lookup = |s: &str| {
        table
            .get(&tables::canonical_apostrophes(&s.to_lowercase()))
            .map(str::to_string)
    };
    let first = token.chars().next()?;
    if let Some(expansion) = lookup(token) {
        return Some(with_case_of(first, &expansion));
    }
    // Quoted tokens: 'isn't' -> 'is not'
    let core = token.trim_matches(is_apostrophe);
    if core.is_empty() || core.len() == token.len() {
        return None;
    }
    let expansion = lookup(core)?;
    let lead = &token[..token.find(core).unwrap_or(0)];
    let trail = &token[lead.len() + core.len()..];
    Some(format!(
        "{lead}{}{trail}",
        with_case_of(core.chars().next()?, &expansion)
    ))
}

/// Replaces every word token whose lowercase form is a table key by its
/// expansion. Word tokens are maximal runs of alphanumerics and apostrophes
/// (a hashtag body stops at its first apostrophe); the first character's case carries over to the expansion.
pub fn expand_contractions(text: &str, table: &ContractionTable) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut String| {
        if !token.is_empty() {
            match expand_token(token, table) {
                Some(expanded) => out.push_str(&expanded),
                None => out.push_str(token),
            }
            token.clear();
        }
    };
    // Inside a hashtag body an apostrophe ends the token, matching where
    // hashtag splitting later cuts the body off.
    let mut in_hashtag = false;
    for c in text.chars() {
        if in_hashtag && is_apostrophe(c) {
            flush(&mut token, &mut out);
            in_hashtag = false;
            token.push(c);
        } else if is_word_char(c) {
            token.push(c);
        } else {
            flush(&mut token, &mut out);
            in_hashtag = c == '#' || (in_hashtag && c == '_');
            out.push(c);
        }
    }
    flush(&mut token, &mut out);
    out
}

/// Replaces emoji and emoticon literals by their words, longest match first,
/// inserting spaces so replacements never fuse with neighbouring text.
pub fn replace_emojis(text: &str, table: &EmojiTable) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    while pos < chars.len() {
        match table.longest_match(&chars[pos..]) {
            Some((len, words)) => {
                if out.chars().last().is_some_and(|c| !c.is_whitespace()) {
                    out.push(' ');
                }
                out.push_str(words);
                pos += len;
                if chars.get(pos).is_some_and(|c| !c.is_whitespace()) {
                    out.push(' ');
                }
            }
            None => {
                out.push(chars[pos]);
                pos += 1;
            }
        }
    }
    out
}

/// NFKD decomposition followed by removal of combining marks.
pub fn fold_accents(text: &str) -> String {
    text.nfkd().filter(|&c| !is_combining_mark(c)).collect()
}

/// Truncates every run of consecutive `@user` tokens (case-insensitive,
/// whitespace separated) to `max_run` tokens.
pub fn collapse_user_runs(text: &str, max_run: usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut run = 0usize;
    let mut rest = text;
    while !rest.is_empty() {
        let ws_len = rest
            .find(|c: char| !c.is_whitespace())
            .unwrap_or(rest.len());
        let (ws, after) = rest.split_at(ws_len);
        let tok_len = after.find(char::is_whitespace).unwrap_or(after.len());
        let (token, tail) = after.split_at(tok_len);
        if token.is_empty() {
            out.push_str(ws);
        } else if token.eq_ignore_ascii_case("@user") {
            run += 1;
            if run <= max_run {
                out.push_str(ws);
                out.push_str(token);
            }
        } else {
            run = 0;
            out.push_str(ws);
            out.push_str(token);
        }
        rest = tail;
    }
    out
}

/// Replaces each `#body` by the body's segmentation (underscores separate
/// pieces); a `#` without a body is dropped.
pub fn split_hashtags(text: &str, lexicon: &Lexicon) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '#' {
            out.push(c);
            continue;
        }
        let mut body = String::new();
        while let Some(&next) = chars.peek() {
            if next.is_alphanumeric() || next == '_' {
                body.push(next);
                chars.next();
            } else {
                break;
            }
        }
        out.push(' ');
        let words: Vec<String> = body
            .split('_')
            .filter(|piece| !piece.is_empty())
            .flat_map(|piece| split_hashtag(piece, lexicon))
            .collect();
        if !words.is_empty() {
            out.push_str(&words.join(" "));
            out.push(' ');
        }
    }
    out
}

pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Upper bound on pipeline passes in [`normalize_text`]. Real text settles
/// in two or three.
pub const MAX_PASSES: usize = 16;

/// Runs the pipeline until a pass no longer changes the text.
///
/// One pass can expose new work for an earlier stage: hashtag splitting
/// and emoji replacement create token boundaries that contraction expansion
/// never saw, and accent folding can turn `＃` or `cán't` into input the
/// hashtag or contraction stages act on. Repeating makes the result a fixed
/// point of [`normalize_once`], so normalizing twice changes nothing.
pub fn normalize_text(text: &str, config: &NormalizerConfig) -> String {
    let mut current = normalize_once(text, config);
    for _ in 1..MAX_PASSES {
        let next = normalize_once(&current, config);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// A single pass of the stages in order.
pub fn normalize_once(text: &str, config: &NormalizerConfig) -> String {
    let text = strip_html(text);
    let text = collapse_user_runs(&text, config.max_user_run);
    let text = expand_contractions(&text, &config.contractions);
    let text = split_hashtags(&text, &config.lexicon);
    let text = replace_emojis(&text, &config.emojis);
    let text = fold_accents(&text);
    collapse_whitespace(&text)
}

pub fn normalize(tweet: &Tweet, config: &NormalizerConfig) -> NormalizedTweet {
    NormalizedTweet {
        id: tweet.id,
        text: normalize_text(&tweet.text, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NormalizerConfig {
        NormalizerConfig::builtin()
    }

    #[test]
    fn html_tags_and_entities() {
        assert_eq!(strip_html("<b>you</b> suck"), "you suck");
        assert_eq!(strip_html(""), "");
        assert_eq!(strip_html("a &amp; b < c"), "a & b < c");
        assert_eq!(strip_html("&lt;i&gt;x&lt;/i&gt;"), "x");
        assert_eq!(strip_html("5 &#62; 3 &quot;ok&quot;"), "5 > 3 \"ok\"");
        assert_eq!(strip_html("a < b > c"), "a  c");
    }

    #[test]
    fn contractions() {
        let t = ContractionTable::builtin();
        assert_eq!(expand_contractions("isn't", &t), "is not");
        assert_eq!(expand_contractions("banana", &t), "banana");
        assert_eq!(
            expand_contractions("You're sure they'd've left", &t),
            "You are sure they would have left"
        );
        assert_eq!(expand_contractions("isn\u{2019}t it", &t), "is not it");
        assert_eq!(
            expand_contractions("'can't', he said", &t),
            "'can not', he said"
        );
        assert_eq!(expand_contractions("Don't!", &t), "Do not!");
    }

    #[test]
    fn emojis() {
        let t = EmojiTable::builtin();
        assert_eq!(replace_emojis("great :)", &t), "great smile");
        assert_eq!(replace_emojis("no emoji here", &t), "no emoji here");
        assert_eq!(
            replace_emojis("lol\u{1F602}\u{1F602}", &t),
            "lol laugh laugh"
        );

        let toy = EmojiTable::new([(":))", "smile smile"), (":(", "frown")]).unwrap();
        assert_eq!(replace_emojis("ok :)):(", &toy), "ok smile smile frown");
    }

    #[test]
    fn accents() {
        assert_eq!(fold_accents("café"), "cafe");
        assert_eq!(fold_accents("cafe"), "cafe");
        assert_eq!(fold_accents("naïve Zoë"), "naive Zoe");
        assert_eq!(fold_accents("snow \u{2603}"), "snow \u{2603}");
    }

    #[test]
    fn user_runs() {
        assert_eq!(
            collapse_user_runs("@user @user @user @user hi", 3),
            "@user @user @user hi"
        );
        assert_eq!(collapse_user_runs("@user hi", 3), "@user hi");
        assert_eq!(
            collapse_user_runs("@user @user x @user @user @user @user", 2),
            "@user @user x @user @user"
        );
        assert_eq!(collapse_user_runs("@USER @user @User", 1), "@USER");
    }

    #[test]
    fn hashtags_lose_their_hash() {
        let lex = Lexicon::builtin();
        assert_eq!(
            collapse_whitespace(&split_hashtags("#dinnertime now", &lex)),
            "dinner time now"
        );
        assert_eq!(
            collapse_whitespace(&split_hashtags("a # b ##", &lex)),
            "a b"
        );
    }

    #[test]
    fn full_pipeline() {
        let c = cfg();
        assert_eq!(
            normalize_text("<i>WOW</i>  #dinnertime :) @user @user @user @user", &c),
            "WOW dinner time smile @user @user @user"
        );
        assert_eq!(normalize_text("plain text", &c), "plain text");
        assert_eq!(
            normalize_text("I can't wait for café", &c),
            "I can not wait for cafe"
        );
    }

    #[test]
    fn config_rejects_bad_parameters() {
        let err = NormalizerConfig::new(
            ContractionTable::builtin(),
            EmojiTable::builtin(),
            Lexicon::builtin(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, NormalizerError::InvalidMaxUserRun));

        let overlap = NormalizerConfig::new(
            ContractionTable::builtin(),
            EmojiTable::builtin(),
            Lexicon::new([("cant", 5u64)]).unwrap(),
            3,
        );
        assert!(matches!(
            overlap,
            Err(NormalizerError::LexiconContractionOverlap(_))
        ));
    }
}
