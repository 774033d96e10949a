use std::collections::{HashMap, HashSet};
use std::fmt::{Display, Write as _};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    repro_line, require_input, BaselineNbArgs, CliError, EvaluateArgs, InputFormat, NormalizeArgs,
    PredictArgs, StackArgs, TrainFlags, TrainHeadArgs, VoteArgs, WeighArgs,
};
use crate::baseline_nb::{NaiveBayesBaseline, NbError};
use crate::binio::CheckpointError;
use crate::corpus::{
    gold_examples, load_gold, read_labels, read_olid, read_tweets, split_indices, threshold_labels,
    write_labels, write_tweets, ClassCounts, ConfidenceReader, CorpusError, SplitSpec,
};
use crate::ensemble::{
    default_stacker_config, soft_vote, stack_predict, train_stacker, EnsembleError,
    MemberProbabilities, ProbabilityTable, StackerParams,
};
use crate::features::{align_concat, read_features, AlignedFeatures, FeatureError};
use crate::metrics::{confusion, macro_f1, MetricsError};
use crate::neural::{
    self, load_mlp, save_mlp, AdamConfig, Dataset, MlpArchitecture, NeuralError, TrainConfig,
    TrainOutcome,
};
use crate::normalize::{normalize as normalize_tweet, NormalizerConfig, NormalizerError};
use crate::types::{ExampleId, Label, Subtask, Tweet};

enum Kind {
    Config,
    Data,
    Numeric,
}

trait Classify: Display {
    fn kind(&self) -> Kind;
}

impl Classify for io::Error {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for CorpusError {
    fn kind(&self) -> Kind {
        match self {
            CorpusError::InvalidThreshold(_) | CorpusError::InvalidFraction(_) => Kind::Config,
            _ => Kind::Data,
        }
    }
}

impl Classify for FeatureError {
    fn kind(&self) -> Kind {
        match self {
            FeatureError::NonFiniteValue { .. } => Kind::Numeric,
            _ => Kind::Data,
        }
    }
}

impl Classify for NeuralError {
    fn kind(&self) -> Kind {
        match self {
            NeuralError::NonFiniteLoss { .. } => Kind::Numeric,
            NeuralError::InvalidConfig(_)
            | NeuralError::InvalidArchitecture(_)
            | NeuralError::WeightCount { .. } => Kind::Config,
            _ => Kind::Data,
        }
    }
}

impl Classify for EnsembleError {
    fn kind(&self) -> Kind {
        match self {
            EnsembleError::Neural(e) => e.kind(),
            EnsembleError::WeightCount { .. }
            | EnsembleError::InvalidWeights
            | EnsembleError::Untrained => Kind::Config,
            _ => Kind::Data,
        }
    }
}

impl Classify for CheckpointError {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

impl Classify for NbError {
    fn kind(&self) -> Kind {
        match self {
            NbError::InvalidAlpha(_) => Kind::Config,
            _ => Kind::Data,
        }
    }
}

impl Classify for NormalizerError {
    fn kind(&self) -> Kind {
        Kind::Config
    }
}

impl Classify for MetricsError {
    fn kind(&self) -> Kind {
        Kind::Data
    }
}

fn ctx<E: Classify>(context: impl Display) -> impl FnOnce(E) -> CliError {
    move |e| {
        let message = format!("{context}: {e}");
        match e.kind() {
            Kind::Config => CliError::Config(message),
            Kind::Data => CliError::Data(message),
            Kind::Numeric => CliError::Numeric(message),
        }
    }
}

fn data_err(message: impl Into<String>) -> CliError {
    CliError::Data(message.into())
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    require_input(path)?;
    File::open(path)
        .map(BufReader::new)
        .map_err(ctx(format!("opening {}", show(path))))
}

fn first_line(path: &Path) -> Result<String, CliError> {
    let mut line = String::new();
    open(path)?
        .read_line(&mut line)
        .map_err(ctx(format!("reading {}", show(path))))?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn is_olid_header(line: &str) -> bool {
    line.split('\t')
        .any(|c| c.trim().eq_ignore_ascii_case("subtask_a"))
}

fn write_output(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), CliError> {
    let fail = |e: io::Error| config_err(format!("cannot write {}: {e}", show(path)));
    let mut w = BufWriter::new(File::create(path).map_err(fail)?);
    body(&mut w).map_err(fail)?;
    w.flush().map_err(fail)
}

/// Print the report and, when asked, store it.
fn emit(report: &str, out_report: Option<&PathBuf>) -> Result<(), CliError> {
    print!("{report}");
    if let Some(path) = out_report {
        fs::write(path, report)
            .map_err(|e| config_err(format!("cannot write {}: {e}", show(path))))?;
    }
    Ok(())
}

fn paths(list: &[PathBuf]) -> Vec<String> {
    list.iter().map(|p| show(p)).collect()
}

fn check_subtask(
    labels: &[(ExampleId, Label)],
    subtask: Subtask,
    path: &Path,
) -> Result<(), CliError> {
    match labels.iter().find(|(_, l)| l.subtask() != subtask) {
        Some((id, l)) => Err(data_err(format!(
            "{}: id {id} has label {l}, not a subtask {subtask} label",
            show(path)
        ))),
        None => Ok(()),
    }
}

fn check_unique(labels: &[(ExampleId, Label)], path: &Path) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    match labels.iter().find(|(id, _)| !seen.insert(*id)) {
        Some((id, _)) => Err(data_err(format!("{}: duplicate id {id}", show(path)))),
        None => Ok(()),
    }
}

/// `id<TAB>label` file, optionally restricted to one subtask.
fn read_label_file(
    path: &Path,
    subtask: Option<Subtask>,
) -> Result<Vec<(ExampleId, Label)>, CliError> {
    let labels = read_labels(open(path)?).map_err(ctx(format!("reading {}", show(path))))?;
    check_unique(&labels, path)?;
    if let Some(s) = subtask {
        check_subtask(&labels, s, path)?;
    }
    Ok(labels)
}

/// Gold labels from an `id<TAB>label` file or an OLID TSV.
fn read_gold(path: &Path, subtask: Option<Subtask>) -> Result<Vec<(ExampleId, Label)>, CliError> {
    if is_olid_header(&first_line(path)?) {
        let subtask =
            subtask.ok_or_else(|| config_err("--subtask is required with an OLID gold file"))?;
        let examples = load_gold(path, subtask).map_err(ctx(format!("reading {}", show(path))))?;
        let labels: Vec<_> = examples.into_iter().map(|e| (e.id, e.label)).collect();
        check_unique(&labels, path)?;
        Ok(labels)
    } else {
        read_label_file(path, subtask)
    }
}

fn subtask_for_classes(n: usize) -> Result<Subtask, CliError> {
    Subtask::from_num_classes(n).ok_or_else(|| data_err(format!("no subtask has {n} classes")))
}

fn decisions_to_labels(
    decisions: &[(ExampleId, usize)],
    subtask: Subtask,
) -> Vec<(ExampleId, Label)> {
    decisions
        .iter()
        .map(|&(id, c)| (id, subtask.label(c).expect("class index within subtask")))
        .collect()
}

fn load_normalizer(config: Option<&PathBuf>) -> Result<NormalizerConfig, CliError> {
    match config {
        Some(path) => NormalizerConfig::from_json_file(require_input(path)?)
            .map_err(ctx(format!("loading {}", show(path)))),
        None => Ok(NormalizerConfig::builtin()),
    }
}

fn load_feature_files(files: &[PathBuf]) -> Result<AlignedFeatures, CliError> {
    let mut sets = Vec::with_capacity(files.len());
    for path in files {
        require_input(path)?;
        sets.push(read_features(path).map_err(ctx(format!("reading {}", show(path))))?);
    }
    let aligned = align_concat(&sets).map_err(ctx("aligning feature files"))?;
    if aligned.dropped > 0 {
        log::warn!(
            "{} ids are missing from at least one feature file and were dropped",
            aligned.dropped
        );
    }
    Ok(aligned)
}

fn check_threshold(threshold: f64) -> Result<(), CliError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )))
    }
}

pub(super) fn normalize(args: NormalizeArgs) -> Result<(), CliError> {
    let config = load_normalizer(args.config.as_ref())?;
    let input = &args.input;
    let tweets: Vec<Tweet> = if is_olid_header(&first_line(input)?) {
        let rows = read_olid(open(input)?).map_err(ctx(format!("reading {}", show(input))))?;
        rows.into_iter()
            .map(|r| Tweet::new(r.id, r.tweet))
            .collect()
    } else {
        read_tweets(open(input)?).map_err(ctx(format!("reading {}", show(input))))?
    };
    let normalized: Vec<_> = tweets.iter().map(|t| normalize_tweet(t, &config)).collect();
    write_output(&args.out, |w| {
        write_tweets(w, normalized.iter().map(|t| (t.id, t.text.as_str())))
    })?;
    let settings = json!({
        "command": "normalize",
        "input": show(input),
        "config": args.config.as_deref().map(show),
    });
    emit(
        &format!(
            "normalized={}\n{}\n",
            normalized.len(),
            repro_line("normalize", &settings, None)
        ),
        None,
    )
}

pub(super) fn weigh(args: WeighArgs) -> Result<(), CliError> {
    let input = &args.input;
    let read_ctx = format!("reading {}", show(input));
    let labels: Vec<(ExampleId, Label)> = match args.format {
        InputFormat::Olid => {
            let rows = read_olid(open(input)?).map_err(ctx(&read_ctx))?;
            gold_examples(rows, args.subtask)
                .into_iter()
                .map(|e| (e.id, e.label))
                .collect()
        }
        InputFormat::Solid => {
            if args.subtask != Subtask::A {
                return Err(config_err(
                    "confidence thresholding only produces subtask A labels",
                ));
            }
            let reader =
                ConfidenceReader::new(open(input)?, &args.conf_column).map_err(ctx(&read_ctx))?;
            let records = reader
                .collect::<Result<Vec<_>, _>>()
                .map_err(ctx(&read_ctx))?;
            let examples =
                threshold_labels(records, args.threshold).map_err(ctx("thresholding"))?;
            examples.into_iter().map(|e| (e.id, e.label)).collect()
        }
        InputFormat::Labels => read_label_file(input, Some(args.subtask))?,
    };
    let mut counts = ClassCounts::new(args.subtask);
    for &(_, label) in &labels {
        counts.add(label).map_err(ctx(&read_ctx))?;
    }
    let weights = counts.weights().map_err(ctx("computing class weights"))?;
    if let Some(path) = &args.out_labels {
        write_output(path, |w| write_labels(w, &labels))?;
    }

    let mut report = String::new();
    let _ = writeln!(report, "subtask={}", args.subtask);
    let _ = writeln!(report, "n={}", counts.total());
    let mut weighted_sum = 0.0;
    for &label in args.subtask.classes() {
        let (c, w) = (weights.count(label), weights.weight(label));
        weighted_sum += c as f64 * w;
        let _ = writeln!(report, "count.{label}={c}");
        let _ = writeln!(report, "weight.{label}={w}");
    }
    let _ = writeln!(report, "weighted_sum={weighted_sum}");
    let settings = json!({
        "command": "weigh",
        "input": show(input),
        "subtask": args.subtask,
        "format": args.format,
        "threshold": args.threshold,
        "conf_column": args.conf_column,
    });
    let _ = writeln!(report, "{}", repro_line("weigh", &settings, None));
    emit(&report, args.out_report.as_ref())
}

/// Optional JSON file for training runs. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainConfigFile {
    subtask: Option<Subtask>,
    max_epochs: Option<usize>,
    batch_size: Option<usize>,
    patience: Option<usize>,
    seed: Option<u64>,
    threshold: Option<f64>,
    train_fraction: Option<f64>,
    learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct TrainSettings {
    max_epochs: usize,
    batch_size: usize,
    patience: usize,
    seed: u64,
    threshold: f64,
    train_fraction: f64,
    learning_rate: f64,
}

impl TrainSettings {
    fn to_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            seed: self.seed,
            decision_threshold: self.threshold,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }
}

fn resolve_training(
    flags: &TrainFlags,
    defaults: TrainConfig,
) -> Result<(TrainSettings, Option<Subtask>), CliError> {
    let file: TrainConfigFile = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(require_input(path)?)
                .map_err(|e| config_err(format!("reading {}: {e}", show(path))))?;
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", show(path))))?
        }
        None => TrainConfigFile::default(),
    };
    let split = SplitSpec::default();
    let settings = TrainSettings {
        max_epochs: flags
            .max_epochs
            .or(file.max_epochs)
            .unwrap_or(defaults.max_epochs),
        batch_size: flags
            .batch_size
            .or(file.batch_size)
            .unwrap_or(defaults.batch_size),
        patience: flags
            .patience
            .or(file.patience)
            .unwrap_or(defaults.patience),
        seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
        threshold: flags
            .threshold
            .or(file.threshold)
            .unwrap_or(defaults.decision_threshold),
        train_fraction: flags
            .train_fraction
            .or(file.train_fraction)
            .unwrap_or(split.train_fraction),
        learning_rate: flags
            .learning_rate
            .or(file.learning_rate)
            .unwrap_or(defaults.adam.learning_rate),
    };
    settings
        .to_config()
        .validate()
        .map_err(ctx("training settings"))?;
    SplitSpec::new(settings.train_fraction, settings.seed).map_err(ctx("training settings"))?;
    Ok((settings, file.subtask))
}

fn training_report(report: &mut String, outcome: &TrainOutcome) {
    for r in &outcome.history {
        let _ = writeln!(
            report,
            "epoch={} train_loss={} val_macro_f1={}",
            r.epoch, r.train_loss, r.val_macro_f1
        );
    }
    let _ = writeln!(report, "best_epoch={}", outcome.best_epoch);
    let _ = writeln!(report, "best_val_macro_f1={}", outcome.best_val_macro_f1);
    let _ = writeln!(report, "stopped_early={}", outcome.stopped_early);
}

fn class_weights_for(
    subtask: Subtask,
    targets: impl IntoIterator<Item = usize>,
) -> Result<Vec<f64>, CliError> {
    let mut counts = ClassCounts::new(subtask);
    for t in targets {
        counts
            .add(subtask.label(t).expect("target within subtask"))
            .map_err(ctx("counting labels"))?;
    }
    Ok(counts
        .weights()
        .map_err(ctx("computing class weights"))?
        .as_slice()
        .to_vec())
}

pub(super) fn train_head(args: TrainHeadArgs) -> Result<(), CliError> {
    let (settings, file_subtask) = resolve_training(&args.train, TrainConfig::default())?;
    let subtask = args
        .subtask
        .or(file_subtask)
        .ok_or_else(|| config_err("--subtask is required"))?;
    let aligned = load_feature_files(&args.features)?;
    let labels = read_label_file(&args.labels, Some(subtask))?;
    let label_index: HashMap<ExampleId, usize> =
        labels.iter().map(|&(id, l)| (id, l.index())).collect();
    let data =
        Dataset::from_aligned(&aligned, &label_index).map_err(ctx("building the dataset"))?;
    if data.is_empty() {
        return Err(data_err("no feature rows have a label"));
    }
    if data.len() < labels.len() {
        log::warn!("{} labeled ids have no features", labels.len() - data.len());
    }
    if data.len() < aligned.len() {
        log::warn!("{} feature rows have no label", aligned.len() - data.len());
    }
    let weights = class_weights_for(subtask, data.targets().iter().copied())?;
    let spec = SplitSpec {
        train_fraction: settings.train_fraction,
        seed: settings.seed,
    };
    let (tr, va) = split_indices(data.len(), &spec).map_err(ctx("splitting"))?;
    let arch = MlpArchitecture::aggregation_head(aligned.dim_total(), subtask.output_dim())
        .map_err(ctx("building the head"))?;
    let outcome = neural::train(
        &arch,
        &data.subset(&tr),
        &data.subset(&va),
        &weights,
        &settings.to_config(),
    )
    .map_err(ctx("training"))?;
    save_mlp(&args.out_model, &arch, &outcome.params)
        .map_err(|e| config_err(format!("cannot write {}: {e}", show(&args.out_model))))?;

    let mut report = String::new();
    let _ = writeln!(report, "subtask={subtask}");
    let _ = writeln!(report, "input_dim={}", arch.input_dim);
    let _ = writeln!(report, "train_examples={}", tr.len());
    let _ = writeln!(report, "val_examples={}", va.len());
    let _ = writeln!(report, "dropped_ids={}", aligned.dropped);
    training_report(&mut report, &outcome);
    let settings_json = json!({
        "command": "train-head",
        "features": paths(&args.features),
        "labels": show(&args.labels),
        "subtask": subtask,
        "training": settings,
    });
    let _ = writeln!(
        report,
        "{}",
        repro_line("train-head", &settings_json, Some(settings.seed))
    );
    emit(&report, args.out_report.as_ref())
}

pub(super) fn predict(args: PredictArgs) -> Result<(), CliError> {
    check_threshold(args.threshold)?;
    let (arch, params) = load_mlp(require_input(&args.model)?)
        .map_err(ctx(format!("loading {}", show(&args.model))))?;
    let aligned = load_feature_files(&args.features)?;
    let preds =
        neural::predict(&params, &arch, &aligned, args.threshold).map_err(ctx("predicting"))?;
    let name = match &args.name {
        Some(n) => n.clone(),
        None => args
            .model
            .file_stem()
            .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned()),
    };
    let table = ProbabilityTable::from_predictions(&name, &preds)
        .map_err(ctx("collecting probabilities"))?;
    write_output(&args.out, |w| table.write_to(w))?;
    if let Some(path) = &args.out_labels {
        let subtask = subtask_for_classes(arch.num_classes())?;
        let labels: Vec<_> = preds
            .iter()
            .map(|p| (p.id, p.label(subtask).expect("class in range")))
            .collect();
        write_output(path, |w| write_labels(w, &labels))?;
    }
    let settings = json!({
        "command": "predict",
        "model": show(&args.model),
        "features": paths(&args.features),
        "threshold": args.threshold,
        "name": name,
    });
    emit(
        &format!(
            "predicted={}\nmember={name}\n{}\n",
            preds.len(),
            repro_line("predict", &settings, None)
        ),
        None,
    )
}

fn load_members(files: &[PathBuf]) -> Result<MemberProbabilities, CliError> {
    let mut tables = Vec::with_capacity(files.len());
    for path in files {
        require_input(path)?;
        tables.push(ProbabilityTable::load(path).map_err(ctx(format!("reading {}", show(path))))?);
    }
    MemberProbabilities::from_tables(&tables).map_err(ctx("combining members"))
}

fn write_decisions(
    path: Option<&PathBuf>,
    table: &ProbabilityTable,
    threshold: f64,
) -> Result<(), CliError> {
    if let Some(path) = path {
        let labels = decisions_to_labels(
            &table.decisions(threshold),
            subtask_for_classes(table.num_classes())?,
        );
        write_output(path, |w| write_labels(w, &labels))?;
    }
    Ok(())
}

pub(super) fn vote(args: VoteArgs) -> Result<(), CliError> {
    check_threshold(args.threshold)?;
    let probs = load_members(&args.members)?;
    let table = soft_vote(&probs, args.weights.as_deref()).map_err(ctx("voting"))?;
    write_output(&args.out, |w| table.write_to(w))?;
    write_decisions(args.out_labels.as_ref(), &table, args.threshold)?;
    let settings = json!({
        "command": "vote",
        "members": paths(&args.members),
        "weights": args.weights,
        "threshold": args.threshold,
    });
    emit(
        &format!(
            "members={}\nn={}\n{}\n",
            probs.member_names().join(","),
            table.len(),
            repro_line("vote", &settings, None)
        ),
        None,
    )
}

pub(super) fn stack(args: StackArgs) -> Result<(), CliError> {
    let probs = load_members(&args.members)?;
    let mut report = String::new();
    let _ = writeln!(report, "members={}", probs.member_names().join(","));
    match (&args.labels, &args.out_model, &args.model, &args.out) {
        (Some(labels_path), Some(out_model), None, _) => {
            let (settings, _) = resolve_training(&args.train, default_stacker_config())?;
            let subtask = subtask_for_classes(probs.num_classes())?;
            let labels = read_label_file(labels_path, Some(subtask))?;
            let label_index: HashMap<ExampleId, usize> =
                labels.iter().map(|&(id, l)| (id, l.index())).collect();
            let targets = probs
                .ids()
                .iter()
                .map(|id| {
                    label_index
                        .get(id)
                        .copied()
                        .ok_or_else(|| data_err(format!("no label for id {id}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let weights = class_weights_for(subtask, targets)?;
            let (stacker, outcome) = train_stacker(
                &probs,
                &label_index,
                &weights,
                &settings.to_config(),
                settings.train_fraction,
            )
            .map_err(ctx("training the stacker"))?;
            stacker
                .save(out_model)
                .map_err(|e| config_err(format!("cannot write {}: {e}", show(out_model))))?;
            if let Some(out) = &args.out {
                let table = stack_predict(&stacker, &probs).map_err(ctx("stacking"))?;
                write_output(out, |w| table.write_to(w))?;
                write_decisions(args.out_labels.as_ref(), &table, settings.threshold)?;
            }
            training_report(&mut report, &outcome);
            let settings_json = json!({
                "command": "stack",
                "mode": "train",
                "members": paths(&args.members),
                "labels": show(labels_path),
                "training": settings,
            });
            let _ = writeln!(
                report,
                "{}",
                repro_line("stack", &settings_json, Some(settings.seed))
            );
        }
        (None, None, Some(model), Some(out)) => {
            let stacker = StackerParams::load(require_input(model)?)
                .map_err(ctx(format!("loading {}", show(model))))?;
            let table = stack_predict(&stacker, &probs).map_err(ctx("stacking"))?;
            let threshold = args.train.threshold.unwrap_or(0.5);
            check_threshold(threshold)?;
            write_output(out, |w| table.write_to(w))?;
            write_decisions(args.out_labels.as_ref(), &table, threshold)?;
            let _ = writeln!(report, "n={}", table.len());
            let settings_json = json!({
                "command": "stack",
                "mode": "predict",
                "members": paths(&args.members),
                "model": show(model),
                "threshold": threshold,
            });
            let _ = writeln!(report, "{}", repro_line("stack", &settings_json, None));
        }
        _ => {
            return Err(config_err(
                "stack needs --labels and --out-model to train, or --model and --out to predict",
            ))
        }
    }
    emit(&report, args.out_report.as_ref())
}

/// `(id, text, label)` from an OLID TSV or `id<TAB>text<TAB>label` rows.
fn read_labeled_texts(
    path: &Path,
    subtask: Subtask,
) -> Result<Vec<(ExampleId, String, Label)>, CliError> {
    let read_ctx = format!("reading {}", show(path));
    if is_olid_header(&first_line(path)?) {
        let examples = load_gold(path, subtask).map_err(ctx(&read_ctx))?;
        return Ok(examples
            .into_iter()
            .map(|e| (e.id, e.text, e.label))
            .collect());
    }
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(ctx(&read_ctx))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(data_err(format!(
                "{}:{}: expected 3 columns, found {}",
                show(path),
                i + 1,
                cols.len()
            )));
        }
        if i == 0 && cols[0].trim().eq_ignore_ascii_case("id") {
            continue;
        }
        let id: ExampleId = cols[0]
            .trim()
            .parse()
            .map_err(|_| data_err(format!("{}:{}: bad id {:?}", show(path), i + 1, cols[0])))?;
        let label: Label = cols[2]
            .parse()
            .ok()
            .filter(|l: &Label| l.subtask() == subtask)
            .ok_or_else(|| {
                data_err(format!(
                    "{}:{}: bad subtask {subtask} label {:?}",
                    show(path),
                    i + 1,
                    cols[2]
                ))
            })?;
        out.push((id, cols[1].to_string(), label));
    }
    Ok(out)
}

pub(super) fn baseline_nb(args: BaselineNbArgs) -> Result<(), CliError> {
    let normalizer = if args.no_normalize {
        None
    } else {
        Some(load_normalizer(args.config.as_ref())?)
    };
    let prepare = |rows: Vec<(ExampleId, String, Label)>| -> Vec<(ExampleId, String, Label)> {
        match &normalizer {
            Some(cfg) => rows
                .into_iter()
                .map(|(id, text, label)| {
                    (id, normalize_tweet(&Tweet::new(id, text), cfg).text, label)
                })
                .collect(),
            None => rows,
        }
    };
    let train = prepare(read_labeled_texts(&args.train, args.subtask)?);
    let test = prepare(read_labeled_texts(&args.test, args.subtask)?);
    let texts: Vec<&str> = train.iter().map(|r| r.1.as_str()).collect();
    let targets: Vec<usize> = train.iter().map(|r| r.2.index()).collect();
    let model = NaiveBayesBaseline::fit(&texts, &targets, args.subtask.num_classes(), args.alpha)
        .map_err(ctx("fitting the baseline"))?;
    let classes = args.subtask.classes();
    let preds: Vec<(ExampleId, Label)> = test
        .iter()
        .map(|(id, text, _)| (*id, classes[model.predict(text)]))
        .collect();
    let gold: Vec<(ExampleId, Label)> = test.iter().map(|(id, _, l)| (*id, *l)).collect();
    let matrix = confusion(&preds, &gold, classes).map_err(ctx("scoring"))?;
    let scores = macro_f1(&matrix);
    if let Some(path) = &args.out_model {
        model
            .save(path)
            .map_err(|e| config_err(format!("cannot write {}: {e}", show(path))))?;
    }
    if let Some(path) = &args.out_labels {
        write_output(path, |w| write_labels(w, &preds))?;
    }
    let settings = json!({
        "command": "baseline-nb",
        "train": show(&args.train),
        "test": show(&args.test),
        "subtask": args.subtask,
        "alpha": args.alpha,
        "normalize": !args.no_normalize,
        "config": args.config.as_deref().map(show),
    });
    let mut report = scores.to_key_values();
    let _ = writeln!(report, "vocabulary={}", model.tfidf.len());
    let _ = writeln!(report, "{}", repro_line("baseline-nb", &settings, None));
    eprint!("{}", scores.to_table());
    emit(&report, args.out_report.as_ref())
}

pub(super) fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    check_threshold(args.threshold)?;
    let gold = read_gold(&args.gold, args.subtask)?;
    let preds: Vec<(ExampleId, Label)> = if first_line(&args.pred)?.starts_with("#member=") {
        require_input(&args.pred)?;
        let table = ProbabilityTable::load(&args.pred)
            .map_err(ctx(format!("reading {}", show(&args.pred))))?;
        decisions_to_labels(
            &table.decisions(args.threshold),
            subtask_for_classes(table.num_classes())?,
        )
    } else {
        read_label_file(&args.pred, None)?
    };
    let subtask = match (args.subtask, gold.first(), preds.first()) {
        (Some(s), _, _) => s,
        (None, Some((_, l)), _) | (None, None, Some((_, l))) => l.subtask(),
        (None, None, None) => return Err(data_err("no predictions and no gold labels")),
    };
    check_subtask(&gold, subtask, &args.gold)?;
    check_subtask(&preds, subtask, &args.pred)?;
    let matrix = confusion(&preds, &gold, subtask.classes()).map_err(ctx("scoring"))?;
    let scores = macro_f1(&matrix);
    let settings = json!({
        "command": "evaluate",
        "pred": show(&args.pred),
        "gold": show(&args.gold),
        "subtask": subtask,
        "threshold": args.threshold,
    });
    let mut report = scores.to_key_values();
    let _ = writeln!(report, "{}", repro_line("evaluate", &settings, None));
    eprint!("{}", scores.to_table());
    emit(&report, args.out_report.as_ref())
}
