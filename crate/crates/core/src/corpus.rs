//! Dataset ingestion, AVG_CONF thresholding, seeded splits and
//! cost-sensitive class weights.
//!
//! Readers work line by line; [`ConfidenceReader`] is an iterator so very
//! large confidence-scored files can be thresholded and counted in a single
//! pass without holding them in memory.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::types::{ExampleId, Label, Subtask, Tweet};

/// Threshold on AVG_CONF used to derive subtask A labels.
pub const DEFAULT_CONF_THRESHOLD: f64 = 0.4;

const OLID_HEADER: [&str; 5] = ["id", "tweet", "subtask_a", "subtask_b", "subtask_c"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} columns, found {found}")]
    MalformedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown label `{token}` for subtask {subtask}")]
    UnknownLabel {
        line: usize,
        token: String,
        subtask: Subtask,
    },
    #[error("line {line}: invalid example id `{token}`")]
    BadId { line: usize, token: String },
    #[error("line {line}: invalid confidence `{token}`")]
    BadConfidence { line: usize, token: String },
    #[error("line {line}: confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { line: usize, value: f64 },
    #[error("missing header row")]
    MissingHeader,
    #[error("header has no `{0}` column")]
    MissingColumn(String),
    #[error("class {0} has no examples; class weights are undefined")]
    EmptyClass(Label),
    #[error("label {label} does not belong to subtask {subtask}")]
    WrongSubtask { label: Label, subtask: Subtask },
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("dataset is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Gold,
    Thresholded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: ExampleId,
    pub text: String,
    pub label: Label,
    pub source: LabelSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRecord {
    pub id: ExampleId,
    pub text: String,
    pub avg_conf: f64,
}

/// One row of an OLID-style file. Subtask B is carried through verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OlidRow {
    pub id: ExampleId,
    pub tweet: String,
    pub subtask_a: Option<Label>,
    pub subtask_b: Option<String>,
    pub subtask_c: Option<Label>,
}

fn trim_eol(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

fn parse_id(token: &str, line: usize) -> Result<ExampleId, CorpusError> {
    token.trim().parse().map_err(|_| CorpusError::BadId {
        line,
        token: token.to_string(),
    })
}

fn is_null(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || t.eq_ignore_ascii_case("null")
}

fn parse_label(token: &str, subtask: Subtask, line: usize) -> Result<Option<Label>, CorpusError> {
    if is_null(token) {
        return Ok(None);
    }
    let unknown = || CorpusError::UnknownLabel {
        line,
        token: token.to_string(),
        subtask,
    };
    let label: Label = token.parse().map_err(|_| unknown())?;
    if label.subtask() != subtask {
        return Err(unknown());
    }
    Ok(Some(label))
}

/// Reads every row of an OLID-style TSV (header row required).
pub fn read_olid<R: BufRead>(reader: R) -> Result<Vec<OlidRow>, CorpusError> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(CorpusError::MissingHeader)??;
    let columns: Vec<&str> = trim_eol(&header).split('\t').collect();
    if columns.len() != OLID_HEADER.len() {
        return Err(CorpusError::MalformedRow {
            line: 1,
            expected: OLID_HEADER.len(),
            found: columns.len(),
        });
    }
    if !columns[0].trim().eq_ignore_ascii_case("id") {
        return Err(CorpusError::MissingHeader);
    }

    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = trim_eol(&line);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != OLID_HEADER.len() {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                expected: OLID_HEADER.len(),
                found: cols.len(),
            });
        }
        rows.push(OlidRow {
            id: parse_id(cols[0], line_no)?,
            tweet: cols[1].to_string(),
            subtask_a: parse_label(cols[2], Subtask::A, line_no)?,
            subtask_b: (!is_null(cols[3])).then(|| cols[3].to_string()),
            subtask_c: parse_label(cols[4], Subtask::C, line_no)?,
        });
    }
    Ok(rows)
}

/// Writes rows in OLID layout; absent labels are written as `NULL`.
pub fn write_olid<W: Write>(mut writer: W, rows: &[OlidRow]) -> io::Result<()> {
    writeln!(writer, "{}", OLID_HEADER.join("\t"))?;
    for row in rows {
        let label = |l: Option<Label>| l.map_or("NULL", Label::as_str);
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}",
            row.id,
            row.tweet,
            label(row.subtask_a),
            row.subtask_b.as_deref().unwrap_or("NULL"),
            label(row.subtask_c)
        )?;
    }
    Ok(())
}

/// Examples of an OLID row set that carry a label for `subtask`.
pub fn gold_examples(rows: Vec<OlidRow>, subtask: Subtask) -> Vec<LabeledExample> {
    rows.into_iter()
        .filter_map(|row| {
            let label = match subtask {
                Subtask::A => row.subtask_a,
                Subtask::C => row.subtask_c,
            }?;
            Some(LabeledExample {
                id: row.id,
                text: row.tweet,
                label,
                source: LabelSource::Gold,
            })
        })
        .collect()
}

pub fn load_gold(path: &Path, subtask: Subtask) -> Result<Vec<LabeledExample>, CorpusError> {
    let rows = read_olid(BufReader::new(File::open(path)?))?;
    Ok(gold_examples(rows, subtask))
}

/// Streaming reader for confidence-scored TSV files (`id`, `text`,
/// `<conf column>`, ...). The text column is the second column.
pub struct ConfidenceReader<R: BufRead> {
    lines: io::Lines<R>,
    conf_column: usize,
    width: usize,
    line_no: usize,
}

impl<R: BufRead> ConfidenceReader<R> {
    pub fn new(reader: R, conf_column: &str) -> Result<Self, CorpusError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(CorpusError::MissingHeader)??;
        let columns: Vec<&str> = trim_eol(&header).split('\t').map(str::trim).collect();
        let conf = columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(conf_column))
            .ok_or_else(|| CorpusError::MissingColumn(conf_column.to_string()))?;
        if columns.len() < 2 || conf < 2 {
            return Err(CorpusError::MissingColumn(conf_column.to_string()));
        }
        Ok(ConfidenceReader {
            lines,
            conf_column: conf,
            width: columns.len(),
            line_no: 1,
        })
    }

    fn parse(&self, line: &str) -> Result<ConfidenceRecord, CorpusError> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != self.width {
            return Err(CorpusError::MalformedRow {
                line: self.line_no,
                expected: self.width,
                found: cols.len(),
            });
        }
        let token = cols[self.conf_column];
        let avg_conf: f64 = token
            .trim()
            .parse()
            .map_err(|_| CorpusError::BadConfidence {
                line: self.line_no,
                token: token.to_string(),
            })?;
        if !(0.0..=1.0).contains(&avg_conf) {
            return Err(CorpusError::ConfidenceOutOfRange {
                line: self.line_no,
                value: avg_conf,
            });
        }
        Ok(ConfidenceRecord {
            id: parse_id(cols[0], self.line_no)?,
            text: cols[1].to_string(),
            avg_conf,
        })
    }
}

impl<R: BufRead> Iterator for ConfidenceReader<R> {
    type Item = Result<ConfidenceRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            let line = trim_eol(&line);
            if !line.is_empty() {
                return Some(self.parse(line));
            }
        }
    }
}

/// `avg_conf >= threshold` is offensive.
pub fn threshold_label(avg_conf: f64, threshold: f64) -> Label {
    if avg_conf >= threshold {
        Label::Off
    } else {
        Label::Not
    }
}

fn check_threshold(threshold: f64) -> Result<(), CorpusError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(CorpusError::InvalidThreshold(threshold))
    }
}

/// Subtask A labels from confidence scores.
pub fn threshold_labels<I>(records: I, threshold: f64) -> Result<Vec<LabeledExample>, CorpusError>
where
    I: IntoIterator<Item = ConfidenceRecord>,
{
    check_threshold(threshold)?;
    Ok(records
        .into_iter()
        .map(|r| LabeledExample {
            id: r.id,
            label: threshold_label(r.avg_conf, threshold),
            text: r.text,
            source: LabelSource::Thresholded,
        })
        .collect())
}

/// Per-class example counts, accumulated one label at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCounts {
    subtask: Subtask,
    counts: Vec<u64>,
}

impl ClassCounts {
    pub fn new(subtask: Subtask) -> Self {
        ClassCounts {
            subtask,
            counts: vec![0; subtask.num_classes()],
        }
    }

    pub fn from_counts(subtask: Subtask, counts: &[(Label, u64)]) -> Result<Self, CorpusError> {
        let mut c = ClassCounts::new(subtask);
        for &(label, n) in counts {
            c.add_n(label, n)?;
        }
        Ok(c)
    }

    pub fn add(&mut self, label: Label) -> Result<(), CorpusError> {
        self.add_n(label, 1)
    }

    pub fn add_n(&mut self, label: Label, n: u64) -> Result<(), CorpusError> {
        if label.subtask() != self.subtask {
            return Err(CorpusError::WrongSubtask {
                label,
                subtask: self.subtask,
            });
        }
        self.counts[label.index()] += n;
        Ok(())
    }

    pub fn count(&self, label: Label) -> u64 {
        self.counts[label.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `w_c = 1 / (N * C_c)` with N the number of classes of the subtask.
    pub fn weights(&self) -> Result<ClassWeights, CorpusError> {
        let n = self.counts.len() as f64;
        let mut weights = Vec::with_capacity(self.counts.len());
        for (i, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                return Err(CorpusError::EmptyClass(self.subtask.classes()[i]));
            }
            weights.push(1.0 / (n * c as f64));
        }
        Ok(ClassWeights {
            subtask: self.subtask,
            counts: self.counts.clone(),
            weights,
        })
    }
}

/// Cost-sensitive per-class loss weights. Each class contributes
/// `C_c * w_c = 1/N` in total, so classes are equally important.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    subtask: Subtask,
    counts: Vec<u64>,
    weights: Vec<f64>,
}

impl ClassWeights {
    pub fn subtask(&self) -> Subtask {
        self.subtask
    }

    pub fn weight(&self, label: Label) -> f64 {
        self.weights[label.index()]
    }

    pub fn count(&self, label: Label) -> u64 {
        self.counts[label.index()]
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    /// Weights in class-index order.
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

pub fn class_weights(
    examples: &[LabeledExample],
    subtask: Subtask,
) -> Result<ClassWeights, CorpusError> {
    let mut counts = ClassCounts::new(subtask);
    for e in examples {
        counts.add(e.label)?;
    }
    counts.weights()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self, CorpusError> {
        if train_fraction > 0.0 && train_fraction < 1.0 {
            Ok(SplitSpec {
                train_fraction,
                seed,
            })
        } else {
            Err(CorpusError::InvalidFraction(train_fraction))
        }
    }

    /// `floor(n * train_fraction)`; the tiny slack absorbs representation
    /// error such as `13240 * 0.9`.
    pub fn train_size(&self, n: usize) -> usize {
        ((n as f64 * self.train_fraction + 1e-9).floor() as usize).min(n)
    }
}

/// Seeded permutation of `0..n` cut into (train, validation) index lists.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), CorpusError> {
    if n == 0 {
        return Err(CorpusError::Empty);
    }
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let validation = order.split_off(spec.train_size(n));
    Ok((order, validation))
}

pub fn split<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    let (train, val) = split_indices(items.len(), spec)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| items[i].clone()).collect();
    Ok((pick(train), pick(val)))
}

/// `id<TAB>label` rows; a leading `id<TAB>label` header is skipped.
pub fn read_labels<R: BufRead>(reader: R) -> Result<Vec<(ExampleId, Label)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = trim_eol(&line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                expected: 2,
                found: cols.len(),
            });
        }
        if line_no == 1 && cols[0].trim().eq_ignore_ascii_case("id") {
            continue;
        }
        let label: Label = cols[1].parse().map_err(|_| CorpusError::UnknownLabel {
            line: line_no,
            token: cols[1].to_string(),
            subtask: Subtask::A,
        })?;
        out.push((parse_id(cols[0], line_no)?, label));
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut writer: W, labels: &[(ExampleId, Label)]) -> io::Result<()> {
    for (id, label) in labels {
        writeln!(writer, "{id}\t{label}")?;
    }
    Ok(())
}

/// `id<TAB>text` rows; a leading header whose first field is `id` is skipped.
/// Any columns after the text are ignored.
pub fn read_tweets<R: BufRead>(reader: R) -> Result<Vec<Tweet>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = trim_eol(&line);
        if line.is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (Some(id), Some(text)) = (cols.next(), cols.next()) else {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                expected: 2,
                found: 1,
            });
        };
        if line_no == 1 && id.trim().eq_ignore_ascii_case("id") {
            continue;
        }
        out.push(Tweet::new(parse_id(id, line_no)?, text));
    }
    Ok(out)
}

pub fn write_tweets<'a, W, I>(mut writer: W, tweets: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (ExampleId, &'a str)>,
{
    for (id, text) in tweets {
        writeln!(writer, "{id}\t{text}")?;
    }
    Ok(())
}
