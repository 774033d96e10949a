//! tf-idf features with a multinomial naive Bayes classifier.
//!
//! Tokens are the whitespace-separated, lowercased words of already
//! normalized text. `tf` is the raw count, `idf = ln((1 + n) / (1 + df)) + 1`,
//! and each row is scaled to unit L2 norm.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::binio::{self, CheckpointError};

pub const MAGIC: &[u8; 8] = b"OFSNB001";
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NbError {
    #[error("corpus has no tokens")]
    EmptyVocabulary,
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("class {0} has no training documents")]
    EmptyClass(usize),
    #[error("row refers to feature {index}, vocabulary has {vocab}")]
    FeatureOutOfRange { index: usize, vocab: usize },
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(str::to_lowercase)
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocabulary.get(token).copied()
    }

    /// Unknown tokens are ignored; text with none left gives an empty row.
    pub fn transform(&self, text: &str) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for tok in tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&tok) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut row = SparseRow {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(&i, &tf)| tf * self.idf[i]).collect(),
        };
        let norm = row.norm();
        if norm > 0.0 {
            row.values.iter_mut().for_each(|v| *v /= norm);
        }
        row
    }
}

/// Fit the vocabulary (indices in sorted token order) and idf, then
/// transform every document.
pub fn tfidf_fit_transform<S: AsRef<str>>(
    corpus: &[S],
) -> Result<(TfidfModel, Vec<SparseRow>), NbError> {
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<String> = tokenize(doc.as_ref()).collect();
        seen.sort();
        seen.dedup();
        for tok in seen {
            *df.entry(tok).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(NbError::EmptyVocabulary);
    }
    let n = corpus.len() as f64;
    let idf = df
        .values()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let vocabulary = df.into_keys().enumerate().map(|(i, t)| (t, i)).collect();
    let model = TfidfModel { vocabulary, idf };
    let rows = corpus.iter().map(|d| model.transform(d.as_ref())).collect();
    Ok((model, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    alpha: f64,
    log_prior: Vec<f64>,
    /// `classes x vocab`, row-major.
    log_likelihood: Vec<f64>,
    vocab: usize,
}

impl NaiveBayesModel {
    pub fn num_classes(&self) -> usize {
        self.log_prior.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn class_log_likelihood(&self, class: usize) -> &[f64] {
        &self.log_likelihood[class * self.vocab..(class + 1) * self.vocab]
    }

    /// `log P(c) + sum_t x_t log P(t | c)` per class; unknown features are
    /// skipped.
    pub fn joint_log_likelihood(&self, row: &SparseRow) -> Vec<f64> {
        (0..self.num_classes())
            .map(|c| {
                let ll = self.class_log_likelihood(c);
                self.log_prior[c]
                    + row
                        .iter()
                        .filter(|(i, _)| *i < self.vocab)
                        .map(|(i, x)| x * ll[i])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Multinomial NB over (tf-idf weighted) counts with additive smoothing.
pub fn nb_train(
    rows: &[SparseRow],
    labels: &[usize],
    num_classes: usize,
    vocab: usize,
    alpha: f64,
) -> Result<NaiveBayesModel, NbError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(NbError::InvalidAlpha(alpha));
    }
    if rows.len() != labels.len() {
        return Err(NbError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    if vocab == 0 {
        return Err(NbError::EmptyVocabulary);
    }
    let mut docs = vec![0u64; num_classes];
    let mut feature_count = vec![0.0; num_classes * vocab];
    for (row, &label) in rows.iter().zip(labels) {
        if label >= num_classes {
            return Err(NbError::LabelOutOfRange { label, num_classes });
        }
        docs[label] += 1;
        for (i, x) in row.iter() {
            if i >= vocab {
                return Err(NbError::FeatureOutOfRange { index: i, vocab });
            }
            feature_count[label * vocab + i] += x;
        }
    }
    if let Some(c) = docs.iter().position(|&d| d == 0) {
        return Err(NbError::EmptyClass(c));
    }
    let n = rows.len() as f64;
    let log_prior = docs.iter().map(|&d| (d as f64 / n).ln()).collect();
    let mut log_likelihood = Vec::with_capacity(num_classes * vocab);
    for counts in feature_count.chunks_exact(vocab) {
        let denom = (counts.iter().sum::<f64>() + alpha * vocab as f64).ln();
        log_likelihood.extend(counts.iter().map(|&c| (c + alpha).ln() - denom));
    }
    Ok(NaiveBayesModel {
        alpha,
        log_prior,
        log_likelihood,
        vocab,
    })
}

/// Argmax of the joint log likelihood, lowest index on ties. An empty row
/// falls back to the priors.
pub fn nb_predict(model: &NaiveBayesModel, row: &SparseRow) -> usize {
    crate::neural::argmax(&model.joint_log_likelihood(row))
}

/// Vectorizer and classifier fitted together.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesBaseline {
    pub tfidf: TfidfModel,
    pub nb: NaiveBayesModel,
}

impl NaiveBayesBaseline {
    pub fn fit<S: AsRef<str>>(
        texts: &[S],
        labels: &[usize],
        num_classes: usize,
        alpha: f64,
    ) -> Result<Self, NbError> {
        let (tfidf, rows) = tfidf_fit_transform(texts)?;
        let nb = nb_train(&rows, labels, num_classes, tfidf.len(), alpha)?;
        Ok(NaiveBayesBaseline { tfidf, nb })
    }

    pub fn predict(&self, text: &str) -> usize {
        nb_predict(&self.nb, &self.tfidf.transform(text))
    }

    /// `OFSNB001`: magic, u32 vocab, vocab x (u32 len + UTF-8 token) in
    /// index order, vocab x f64 idf, u32 classes, f64 alpha,
    /// classes x f64 log-prior, classes x vocab x f64 log-likelihood.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CheckpointError> {
        w.write_all(MAGIC)?;
        binio::write_u32(w, self.tfidf.len() as u32)?;
        // BTreeMap order is index order by construction.
        for token in self.tfidf.vocabulary.keys() {
            binio::write_str(w, token)?;
        }
        binio::write_f64s(w, &self.tfidf.idf)?;
        binio::write_u32(w, self.nb.num_classes() as u32)?;
        binio::write_f64(w, self.nb.alpha)?;
        binio::write_f64s(w, &self.nb.log_prior)?;
        binio::write_f64s(w, &self.nb.log_likelihood)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CheckpointError> {
        let rd = CheckpointError::from_read;
        binio::expect_magic(r, MAGIC)?;
        let vocab = binio::read_u32(r).map_err(rd)? as usize;
        if vocab == 0 {
            return Err(CheckpointError::Invalid("empty vocabulary".into()));
        }
        let mut vocabulary = BTreeMap::new();
        let mut previous: Option<String> = None;
        for i in 0..vocab {
            let tok = binio::read_string(r, 1 << 16).map_err(rd)?;
            if previous.as_ref().is_some_and(|p| *p >= tok) {
                return Err(CheckpointError::Invalid(
                    "vocabulary is not strictly sorted".into(),
                ));
            }
            previous = Some(tok.clone());
            vocabulary.insert(tok, i);
        }
        let idf = binio::read_f64s(r, vocab).map_err(rd)?;
        let classes = binio::read_u32(r).map_err(rd)? as usize;
        if !(2..=16).contains(&classes) {
            return Err(CheckpointError::Invalid(format!("{classes} classes")));
        }
        let alpha = binio::read_f64(r).map_err(rd)?;
        let log_prior = binio::read_f64s(r, classes).map_err(rd)?;
        let log_likelihood = binio::read_f64s(r, classes * vocab).map_err(rd)?;
        if !binio::at_eof(r)? {
            return Err(CheckpointError::TrailingBytes);
        }
        let finite = idf
            .iter()
            .chain(&log_prior)
            .chain(&log_likelihood)
            .all(|v| v.is_finite());
        if !finite || !alpha.is_finite() || alpha <= 0.0 {
            return Err(CheckpointError::Invalid(
                "non-finite or invalid model values".into(),
            ));
        }
        Ok(NaiveBayesBaseline {
            tfidf: TfidfModel { vocabulary, idf },
            nb: NaiveBayesModel {
                alpha,
                log_prior,
                log_likelihood,
                vocab,
            },
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
