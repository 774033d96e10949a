//! Soft voting and a logistic-regression stacker over member probabilities.
//!
//! Members exchange per-id class distributions through a small TSV file:
//!
//! ```text
//! #member=<name>
//! <id>\t<p_class0>\t<p_class1>[\t<p_class2>]
//! ```
//!
//! Binary members always write both columns, `(1 - p, p)`.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::binio::{self, CheckpointError};
use crate::corpus::{split_indices, SplitSpec};
use crate::neural::{
    class_probabilities, decide, predict_row, train_from, AdamConfig, Dataset, Layer,
    MlpArchitecture, MlpParams, NeuralError, Prediction, TrainConfig, TrainOutcome,
};
use crate::types::ExampleId;

/// Tolerance on `sum(p) == 1` for member rows.
pub const SUM_TOLERANCE: f64 = 1e-6;
pub const STACKER_MAGIC: &[u8; 8] = b"OFSSTK01";

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("probability file must start with `#member=<name>`")]
    MissingMemberName,
    #[error("id {id}: not a probability vector {values:?}")]
    NotAProbability { id: ExampleId, values: Vec<f64> },
    #[error("duplicate id {0}")]
    DuplicateId(ExampleId),
    #[error("member {member}: {missing} ids missing and {extra} extra relative to {reference}")]
    IdMismatch {
        member: String,
        reference: String,
        missing: usize,
        extra: usize,
    },
    #[error("member {member} has {found} classes, expected {expected}")]
    ClassCountMismatch {
        member: String,
        expected: usize,
        found: usize,
    },
    #[error("stacker was trained on members {expected:?}, got {found:?}")]
    MemberOrderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("at least one member is required")]
    NoMembers,
    #[error("expected {expected} member weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("member weights must be non-negative, finite and not all zero")]
    InvalidWeights,
    #[error("no label for id {0}")]
    MissingLabel(ExampleId),
    #[error("stacker parameters are untrained")]
    Untrained,
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// One member's class distribution for each id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    member: String,
    num_classes: usize,
    ids: Vec<ExampleId>,
    values: Vec<f64>,
    index: HashMap<ExampleId, usize>,
}

impl ProbabilityTable {
    pub fn new(member: impl Into<String>, num_classes: usize) -> Self {
        ProbabilityTable {
            member: member.into(),
            num_classes,
            ids: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Build from neural predictions (binary ones already carry `(1-p, p)`).
    pub fn from_predictions(
        member: impl Into<String>,
        preds: &[Prediction],
    ) -> Result<Self, EnsembleError> {
        let num_classes = preds.first().map_or(2, |p| p.probabilities.len());
        let mut table = Self::new(member, num_classes);
        for p in preds {
            table.push(p.id, &p.probabilities)?;
        }
        Ok(table)
    }

    pub fn push(&mut self, id: ExampleId, probs: &[f64]) -> Result<(), EnsembleError> {
        if probs.len() != self.num_classes {
            return Err(EnsembleError::ClassCountMismatch {
                member: self.member.clone(),
                expected: self.num_classes,
                found: probs.len(),
            });
        }
        let valid = probs.iter().all(|p| (0.0..=1.0).contains(p))
            && (probs.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE;
        if !valid {
            return Err(EnsembleError::NotAProbability {
                id,
                values: probs.to_vec(),
            });
        }
        if self.index.insert(id, self.ids.len()).is_some() {
            return Err(EnsembleError::DuplicateId(id));
        }
        self.ids.push(id);
        self.values.extend_from_slice(probs);
        Ok(())
    }

    pub fn member(&self) -> &str {
        &self.member
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn ids(&self) -> &[ExampleId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: ExampleId) -> Option<&[f64]> {
        let row = *self.index.get(&id)?;
        Some(&self.values[row * self.num_classes..(row + 1) * self.num_classes])
    }

    pub fn rows(&self) -> impl Iterator<Item = (ExampleId, &[f64])> {
        self.ids
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.num_classes))
    }

    /// Class per id: binary uses `p_class1 >= threshold`, otherwise argmax
    /// with the lowest index winning ties.
    pub fn decisions(&self, threshold: f64) -> Vec<(ExampleId, usize)> {
        self.rows()
            .map(|(id, p)| {
                let class = if p.len() == 2 {
                    usize::from(p[1] >= threshold)
                } else {
                    decide(p, threshold)
                };
                (id, class)
            })
            .collect()
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, EnsembleError> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or(EnsembleError::MissingMemberName)?;
        let member = first
            .trim_end_matches('\r')
            .strip_prefix("#member=")
            .filter(|m| !m.is_empty())
            .ok_or(EnsembleError::MissingMemberName)?
            .to_string();
        let mut table: Option<ProbabilityTable> = None;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| EnsembleError::Parse {
                line: lineno,
                message,
            };
            let mut fields = line.split('\t');
            let id_tok = fields.next().unwrap_or_default();
            let id: ExampleId = id_tok
                .parse()
                .map_err(|_| parse_err(format!("bad id {id_tok:?}")))?;
            let probs = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| parse_err(format!("bad probability {f:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if !(2..=3).contains(&probs.len()) {
                return Err(parse_err(format!(
                    "expected 2 or 3 probabilities, found {}",
                    probs.len()
                )));
            }
            table
                .get_or_insert_with(|| ProbabilityTable::new(member.clone(), probs.len()))
                .push(id, &probs)?;
        }
        Ok(table.unwrap_or_else(|| ProbabilityTable::new(member, 2)))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "#member={}", self.member)?;
        for (id, probs) in self.rows() {
            write!(w, "{id}")?;
            for p in probs {
                write!(w, "\t{p}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EnsembleError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), EnsembleError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Several members' distributions over one shared id set. Ids are sorted;
/// each row is the concatenation of the members' vectors in member order.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberProbabilities {
    member_names: Vec<String>,
    num_classes: usize,
    ids: Vec<ExampleId>,
    rows: Vec<f64>,
}

impl MemberProbabilities {
    pub fn from_tables(tables: &[ProbabilityTable]) -> Result<Self, EnsembleError> {
        let first = tables.first().ok_or(EnsembleError::NoMembers)?;
        let reference: BTreeSet<ExampleId> = first.ids.iter().copied().collect();
        for t in &tables[1..] {
            if t.num_classes != first.num_classes {
                return Err(EnsembleError::ClassCountMismatch {
                    member: t.member.clone(),
                    expected: first.num_classes,
                    found: t.num_classes,
                });
            }
            let ids: BTreeSet<ExampleId> = t.ids.iter().copied().collect();
            if ids != reference {
                return Err(EnsembleError::IdMismatch {
                    member: t.member.clone(),
                    reference: first.member.clone(),
                    missing: reference.difference(&ids).count(),
                    extra: ids.difference(&reference).count(),
                });
            }
        }
        let ids: Vec<ExampleId> = reference.into_iter().collect();
        let mut rows = Vec::with_capacity(ids.len() * tables.len() * first.num_classes);
        for &id in &ids {
            for t in tables {
                rows.extend_from_slice(t.get(id).expect("id sets checked"));
            }
        }
        Ok(MemberProbabilities {
            member_names: tables.iter().map(|t| t.member.clone()).collect(),
            num_classes: first.num_classes,
            ids,
            rows,
        })
    }

    pub fn member_names(&self) -> &[String] {
        &self.member_names
    }

    pub fn num_members(&self) -> usize {
        self.member_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn ids(&self) -> &[ExampleId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn row_len(&self) -> usize {
        self.num_members() * self.num_classes
    }

    /// Concatenated member vectors of the `i`-th id.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.row_len()..(i + 1) * self.row_len()]
    }

    pub fn member_vector(&self, i: usize, member: usize) -> &[f64] {
        &self.row(i)[member * self.num_classes..(member + 1) * self.num_classes]
    }
}

/// Per-id (weighted) mean of the member vectors. `None` means uniform.
pub fn soft_vote(
    probs: &MemberProbabilities,
    weights: Option<&[f64]>,
) -> Result<ProbabilityTable, EnsembleError> {
    let m = probs.num_members();
    let weights = match weights {
        None => vec![1.0; m],
        Some(w) if w.len() != m => {
            return Err(EnsembleError::WeightCount {
                expected: m,
                found: w.len(),
            })
        }
        Some(w) => {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|&x| x == 0.0) {
                return Err(EnsembleError::InvalidWeights);
            }
            w.to_vec()
        }
    };
    let total: f64 = weights.iter().sum();
    let k = probs.num_classes;
    let mut out = ProbabilityTable::new("soft_vote", k);
    for (i, &id) in probs.ids.iter().enumerate() {
        // Summing then dividing would round k identical vectors.
        let first = probs.member_vector(i, 0);
        if (1..m).all(|j| probs.member_vector(i, j) == first) {
            out.push(id, first)?;
            continue;
        }
        let mut mean = vec![0.0; k];
        for (j, &w) in weights.iter().enumerate() {
            for (acc, p) in mean.iter_mut().zip(probs.member_vector(i, j)) {
                *acc += w * p;
            }
        }
        mean.iter_mut().for_each(|v| *v /= total);
        out.push(id, &mean)?;
    }
    Ok(out)
}

/// A single affine layer over the concatenated member vectors with a
/// sigmoid (binary) or softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct StackerParams {
    member_names: Vec<String>,
    num_classes: usize,
    arch: MlpArchitecture,
    params: MlpParams,
    trained: bool,
}

fn stacker_arch(members: usize, num_classes: usize) -> Result<MlpArchitecture, EnsembleError> {
    if members == 0 {
        return Err(EnsembleError::NoMembers);
    }
    let output = if num_classes == 2 { 1 } else { num_classes };
    Ok(MlpArchitecture::logistic(members * num_classes, output)?)
}

impl StackerParams {
    /// Zero weights and bias, flagged untrained.
    pub fn untrained(member_names: Vec<String>, num_classes: usize) -> Result<Self, EnsembleError> {
        let arch = stacker_arch(member_names.len(), num_classes)?;
        let params = MlpParams::zeros(&arch);
        Ok(StackerParams {
            member_names,
            num_classes,
            arch,
            params,
            trained: false,
        })
    }

    /// Explicit parameters: `weights` is `outputs x (members * classes)`,
    /// row-major, where `outputs` is 1 for binary problems.
    pub fn from_weights(
        member_names: Vec<String>,
        num_classes: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, EnsembleError> {
        let arch = stacker_arch(member_names.len(), num_classes)?;
        let layer = Layer::new(arch.input_dim, arch.output_dim, weights, bias)?;
        let params = MlpParams::from_layers(&arch, vec![layer])?;
        if !params.is_finite() {
            return Err(EnsembleError::Neural(NeuralError::InvalidConfig(
                "non-finite stacker weight".into(),
            )));
        }
        Ok(StackerParams {
            member_names,
            num_classes,
            arch,
            params,
            trained: true,
        })
    }

    /// Weights that pass member `member` straight through: identity block for
    /// softmax, `p1 - p0` for the binary sigmoid.
    pub fn select_member(
        member_names: Vec<String>,
        num_classes: usize,
        member: usize,
    ) -> Result<Self, EnsembleError> {
        let arch = stacker_arch(member_names.len(), num_classes)?;
        if member >= member_names.len() {
            return Err(EnsembleError::NoMembers);
        }
        let mut weights = vec![0.0; arch.input_dim * arch.output_dim];
        let base = member * num_classes;
        if arch.output_dim == 1 {
            weights[base] = -1.0;
            weights[base + 1] = 1.0;
        } else {
            for c in 0..num_classes {
                weights[c * arch.input_dim + base + c] = 1.0;
            }
        }
        Self::from_weights(
            member_names,
            num_classes,
            weights,
            vec![0.0; arch.output_dim],
        )
    }

    pub fn member_names(&self) -> &[String] {
        &self.member_names
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn weights(&self) -> &[f64] {
        self.params.layers()[0].weights()
    }

    pub fn bias(&self) -> &[f64] {
        self.params.layers()[0].bias()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), CheckpointError> {
        w.write_all(STACKER_MAGIC)?;
        binio::write_u32(w, self.member_names.len() as u32)?;
        for name in &self.member_names {
            binio::write_str(w, name)?;
        }
        binio::write_u32(w, self.num_classes as u32)?;
        binio::write_u8(w, u8::from(self.trained))?;
        binio::write_f64s(w, self.weights())?;
        binio::write_f64s(w, self.bias())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, CheckpointError> {
        let rd = CheckpointError::from_read;
        binio::expect_magic(r, STACKER_MAGIC)?;
        let members = binio::read_u32(r).map_err(rd)?;
        if members == 0 || members > 1024 {
            return Err(CheckpointError::Invalid(format!("{members} members")));
        }
        let names = (0..members)
            .map(|_| binio::read_string(r, 4096).map_err(rd))
            .collect::<Result<Vec<_>, _>>()?;
        let num_classes = binio::read_u32(r).map_err(rd)? as usize;
        if !(2..=3).contains(&num_classes) {
            return Err(CheckpointError::Invalid(format!("{num_classes} classes")));
        }
        let trained = match binio::read_u8(r).map_err(rd)? {
            0 => false,
            1 => true,
            other => return Err(CheckpointError::Invalid(format!("trained flag {other}"))),
        };
        let arch = stacker_arch(names.len(), num_classes)
            .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
        let weights = binio::read_f64s(r, arch.input_dim * arch.output_dim).map_err(rd)?;
        let bias = binio::read_f64s(r, arch.output_dim).map_err(rd)?;
        if !binio::at_eof(r)? {
            return Err(CheckpointError::TrailingBytes);
        }
        let mut params = Self::from_weights(names, num_classes, weights, bias)
            .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
        params.trained = trained;
        Ok(params)
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

/// Training defaults for the stacker. A handful of weights over inputs in
/// `[0, 1]` needs a larger step than the hidden-layer head, otherwise
/// validation F1 plateaus and early stopping fires before the fit settles.
pub fn default_stacker_config() -> TrainConfig {
    TrainConfig {
        patience: 5,
        adam: AdamConfig {
            learning_rate: 1e-2,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    }
}

/// Fit the stacker with the neural training loop (Adam, class weights,
/// early stopping on a held-out `1 - train_fraction` slice split by
/// `config.seed`). Training starts from zero weights; the loss is convex
/// in them, so no random start is needed.
pub fn train_stacker(
    probs: &MemberProbabilities,
    labels: &HashMap<ExampleId, usize>,
    class_weights: &[f64],
    config: &TrainConfig,
    train_fraction: f64,
) -> Result<(StackerParams, TrainOutcome), EnsembleError> {
    let mut stacker = StackerParams::untrained(probs.member_names.clone(), probs.num_classes)?;
    let mut targets = Vec::with_capacity(probs.len());
    for &id in &probs.ids {
        targets.push(*labels.get(&id).ok_or(EnsembleError::MissingLabel(id))?);
    }
    let data = Dataset::with_ids(
        probs.row_len(),
        probs.ids.clone(),
        probs.rows.clone(),
        targets,
    )?;
    let spec = SplitSpec {
        train_fraction,
        seed: config.seed,
    };
    let (tr, va) = split_indices(data.len(), &spec)
        .map_err(|e| NeuralError::InvalidConfig(format!("stacker split: {e}")))?;
    let initial = stacker.params.clone();
    let outcome = train_from(
        initial,
        &stacker.arch,
        &data.subset(&tr),
        &data.subset(&va),
        class_weights,
        config,
    )?;
    stacker.params = outcome.params.clone();
    stacker.trained = true;
    Ok((stacker, outcome))
}

/// Stacker output distribution per id, named `stacker`.
pub fn stack_predict(
    params: &StackerParams,
    probs: &MemberProbabilities,
) -> Result<ProbabilityTable, EnsembleError> {
    if !params.trained {
        return Err(EnsembleError::Untrained);
    }
    if params.member_names != probs.member_names {
        return Err(EnsembleError::MemberOrderMismatch {
            expected: params.member_names.clone(),
            found: probs.member_names.clone(),
        });
    }
    if params.num_classes != probs.num_classes {
        return Err(EnsembleError::ClassCountMismatch {
            member: "stacker".into(),
            expected: params.num_classes,
            found: probs.num_classes,
        });
    }
    let mut out = ProbabilityTable::new("stacker", params.num_classes);
    for (i, &id) in probs.ids.iter().enumerate() {
        let raw = predict_row(&params.params, &params.arch, probs.row(i))?;
        out.push(id, &class_probabilities(&raw))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(name: &str, rows: &[(u64, &[f64])]) -> ProbabilityTable {
        let mut t = ProbabilityTable::new(name, rows[0].1.len());
        for (id, p) in rows {
            t.push(*id, p).unwrap();
        }
        t
    }

    #[test]
    fn soft_vote_examples() {
        let a = table("a", &[(1, &[0.8, 0.2]), (2, &[1.0, 0.0])]);
        let b = table("b", &[(2, &[0.0, 1.0]), (1, &[0.6, 0.4])]);
        let probs = MemberProbabilities::from_tables(&[a.clone(), b]).unwrap();
        let vote = soft_vote(&probs, None).unwrap();
        assert!((vote.get(1).unwrap()[0] - 0.7).abs() < 1e-12);
        assert!((vote.get(1).unwrap()[1] - 0.3).abs() < 1e-12);
        assert_eq!(vote.get(2).unwrap(), &[0.5, 0.5]);

        let same = MemberProbabilities::from_tables(&[a.clone(), a.clone(), a.clone()]).unwrap();
        let vote = soft_vote(&same, None).unwrap();
        assert_eq!(vote.get(1).unwrap(), a.get(1).unwrap());

        let weighted = soft_vote(&probs, Some(&[3.0, 1.0])).unwrap();
        assert!((weighted.get(1).unwrap()[0] - 0.75).abs() < 1e-12);
        assert!(matches!(
            soft_vote(&probs, Some(&[1.0])),
            Err(EnsembleError::WeightCount { .. })
        ));
        assert!(matches!(
            soft_vote(&probs, Some(&[0.0, 0.0])),
            Err(EnsembleError::InvalidWeights)
        ));
    }

    #[test]
    fn mismatched_members_are_rejected() {
        let a = table("a", &[(1, &[0.8, 0.2]), (2, &[1.0, 0.0])]);
        let b = table("b", &[(1, &[0.6, 0.4]), (3, &[0.5, 0.5])]);
        match MemberProbabilities::from_tables(&[a.clone(), b]) {
            Err(EnsembleError::IdMismatch {
                missing: 1,
                extra: 1,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
        let c = table("c", &[(1, &[0.2, 0.3, 0.5]), (2, &[1.0, 0.0, 0.0])]);
        assert!(matches!(
            MemberProbabilities::from_tables(&[a, c]),
            Err(EnsembleError::ClassCountMismatch { .. })
        ));
        assert!(matches!(
            MemberProbabilities::from_tables(&[]),
            Err(EnsembleError::NoMembers)
        ));
        let mut t = ProbabilityTable::new("x", 2);
        assert!(matches!(
            t.push(1, &[0.7, 0.7]),
            Err(EnsembleError::NotAProbability { .. })
        ));
        t.push(1, &[0.3, 0.7]).unwrap();
        assert!(matches!(
            t.push(1, &[0.3, 0.7]),
            Err(EnsembleError::DuplicateId(1))
        ));
    }

    #[test]
    fn probability_file_round_trip() {
        let t = table(
            "bert",
            &[
                (7, &[0.1, 0.6, 0.3]),
                (3, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
            ],
        );
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#member=bert\n7\t0.1\t0.6\t0.3\n"));
        assert_eq!(ProbabilityTable::read_from(buf.as_slice()).unwrap(), t);
        assert!(matches!(
            ProbabilityTable::read_from("1\t0.5\t0.5\n".as_bytes()),
            Err(EnsembleError::MissingMemberName)
        ));
        assert!(matches!(
            ProbabilityTable::read_from("#member=x\n1\t0.5\n".as_bytes()),
            Err(EnsembleError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn zero_stacker_gives_one_half() {
        let names = vec!["a".to_string(), "b".to_string()];
        let zero = StackerParams::from_weights(names.clone(), 2, vec![0.0; 4], vec![0.0]).unwrap();
        let a = table("a", &[(1, &[0.9, 0.1]), (2, &[0.2, 0.8])]);
        let b = table("b", &[(1, &[0.4, 0.6]), (2, &[0.5, 0.5])]);
        let probs = MemberProbabilities::from_tables(&[a.clone(), b.clone()]).unwrap();
        let out = stack_predict(&zero, &probs).unwrap();
        assert!(out.rows().all(|(_, p)| p == [0.5, 0.5]));

        let swapped = MemberProbabilities::from_tables(&[b, a]).unwrap();
        assert!(matches!(
            stack_predict(&zero, &swapped),
            Err(EnsembleError::MemberOrderMismatch { .. })
        ));
        let untrained = StackerParams::untrained(names, 2).unwrap();
        assert!(matches!(
            stack_predict(&untrained, &probs),
            Err(EnsembleError::Untrained)
        ));
    }

    #[test]
    fn selecting_a_member_keeps_its_argmax() {
        let a = table(
            "a",
            &[
                (1, &[0.5, 0.2, 0.3]),
                (2, &[0.1, 0.1, 0.8]),
                (3, &[0.3, 0.4, 0.3]),
            ],
        );
        let b = table(
            "b",
            &[
                (1, &[0.0, 1.0, 0.0]),
                (2, &[0.9, 0.05, 0.05]),
                (3, &[0.2, 0.2, 0.6]),
            ],
        );
        let probs = MemberProbabilities::from_tables(&[a.clone(), b.clone()]).unwrap();
        let names = probs.member_names().to_vec();
        for (m, member) in [a, b].iter().enumerate() {
            let sel = StackerParams::select_member(names.clone(), 3, m).unwrap();
            let out = stack_predict(&sel, &probs).unwrap();
            assert_eq!(out.decisions(0.5), member.decisions(0.5));
        }
    }

    #[test]
    fn stacker_checkpoint_round_trip() {
        let names = vec!["roberta".to_string(), "xlnet".to_string()];
        let s = StackerParams::from_weights(
            names,
            3,
            (0..18).map(|i| i as f64 * 0.1).collect(),
            vec![0.1, -0.2, 0.3],
        )
        .unwrap();
        let mut bytes = Vec::new();
        s.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..8], b"OFSSTK01");
        assert_eq!(StackerParams::read_from(&mut bytes.as_slice()).unwrap(), s);
        assert!(matches!(
            StackerParams::read_from(&mut &bytes[..bytes.len() - 1]),
            Err(CheckpointError::Truncated)
        ));
        bytes.push(1);
        assert!(matches!(
            StackerParams::read_from(&mut bytes.as_slice()),
            Err(CheckpointError::TrailingBytes)
        ));
    }

    #[test]
    fn zero_epoch_budget_is_an_error() {
        let a = table("a", &[(1, &[0.9, 0.1]), (2, &[0.2, 0.8]), (3, &[0.6, 0.4])]);
        let probs = MemberProbabilities::from_tables(&[a]).unwrap();
        let labels: HashMap<u64, usize> = [(1, 0), (2, 1), (3, 0)].into_iter().collect();
        let cfg = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_stacker(&probs, &labels, &[1.0, 1.0], &cfg, 0.9),
            Err(EnsembleError::Neural(NeuralError::InvalidConfig(_)))
        ));
        let partial: HashMap<u64, usize> = [(1, 0)].into_iter().collect();
        assert!(matches!(
            train_stacker(&probs, &partial, &[1.0, 1.0], &TrainConfig::default(), 0.9),
            Err(EnsembleError::MissingLabel(2))
        ));
    }
}
