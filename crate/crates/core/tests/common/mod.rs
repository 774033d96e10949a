//! Synthetic data generators and independent oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use offlang::ensemble::ProbabilityTable;
use offlang::features::{write_to, FeatureSet};
use offlang::{ExampleId, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn encode(set: &FeatureSet) -> Vec<u8> {
    let mut out = Vec::new();
    write_to(&mut out, set).unwrap();
    out
}

pub const AGG_N: usize = 600;
pub const AGG_DIM: usize = 16;
pub const AGG_SEED: u64 = 2020;

/// Three balanced classes seen through two 16-dim feature families.
/// Family `a` shifts 8 dims for class IND only, family `b` for class GRP
/// only, so each family alone separates 2 of the 3 classes and confuses the
/// remaining pair. Returns (family a, family b, labels).
pub fn aggregation_families() -> (FeatureSet, FeatureSet, Vec<(ExampleId, Label)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(AGG_SEED);
    let noise = Normal::new(0.0f64, 1.0).unwrap();
    let classes = [Label::Ind, Label::Grp, Label::Oth];
    let mut a = FeatureSet::new("family-a", AGG_DIM).unwrap();
    let mut b = FeatureSet::new("family-b", AGG_DIM).unwrap();
    let mut labels = Vec::with_capacity(AGG_N);
    for i in 0..AGG_N {
        let id = 10_000 + i as u64;
        let label = classes[i % 3];
        let shift_a = if label == Label::Ind { 1.5 } else { 0.0 };
        let shift_b = if label == Label::Grp { 1.5 } else { 0.0 };
        let va: Vec<f64> = (0..AGG_DIM)
            .map(|d| noise.sample(&mut rng) + if d < 8 { shift_a } else { 0.0 })
            .collect();
        let vb: Vec<f64> = (0..AGG_DIM)
            .map(|d| noise.sample(&mut rng) + if d >= 8 { shift_b } else { 0.0 })
            .collect();
        a.push_f64(id, &va).unwrap();
        b.push_f64(id, &vb).unwrap();
        labels.push((id, label));
    }
    (a, b, labels)
}

pub fn labels_tsv(labels: &[(ExampleId, Label)]) -> String {
    labels
        .iter()
        .map(|(id, l)| format!("{id}\t{l}\n"))
        .collect()
}

/// Encoder-shaped feature file: `n` records of dimension `dim`.
pub fn encoder_fixture(name: &str, dim: usize, n: usize, seed: u64) -> FeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = FeatureSet::new(name, dim).unwrap();
    for i in 0..n {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        set.push(90_000 + i as u64, &v).unwrap();
    }
    set
}

pub fn xlnet_fixture() -> FeatureSet {
    encoder_fixture("xlnet-base-cased", 768, 10, 768)
}

pub fn bert_fixture() -> FeatureSet {
    encoder_fixture("bert-large-uncased", 1024, 10, 1024)
}

/// Small valid file used as the base of the corrupt fixtures.
pub fn tiny_set() -> FeatureSet {
    let mut set = FeatureSet::new("tiny", 3).unwrap();
    set.push(1, &[0.5, -1.25, 3.0]).unwrap();
    set.push(2, &[0.0, 1e-3, -7.5]).unwrap();
    set
}

/// (file name, bytes) of deliberately broken OFSFEAT1 files.
pub fn corrupt_fixtures() -> Vec<(&'static str, Vec<u8>)> {
    let good = encode(&tiny_set());
    let header = 8 + 4 + 4 + 4 + 8;

    let mut bad_magic = good.clone();
    bad_magic[..8].copy_from_slice(b"OFSFEAT2");

    let truncated_header = good[..header - 3].to_vec();
    let truncated_record = good[..good.len() - 5].to_vec();

    let mut trailing = good.clone();
    trailing.extend_from_slice(&[0xAB, 0xCD]);

    let mut non_finite = good.clone();
    let second_value = header + 8 + 4;
    non_finite[second_value..second_value + 4].copy_from_slice(&f32::NAN.to_le_bytes());

    let mut zero_dim = good[..header].to_vec();
    zero_dim[16..20].copy_from_slice(&0u32.to_le_bytes());
    zero_dim[20..28].copy_from_slice(&0u64.to_le_bytes());

    let mut duplicate = good.clone();
    let second_id = header + 8 + 12;
    duplicate[second_id..second_id + 8].copy_from_slice(&1u64.to_le_bytes());

    vec![
        ("corrupt_bad_magic.ofsfeat", bad_magic),
        ("corrupt_truncated_header.ofsfeat", truncated_header),
        ("corrupt_truncated_record.ofsfeat", truncated_record),
        ("corrupt_trailing_bytes.ofsfeat", trailing),
        ("corrupt_non_finite.ofsfeat", non_finite),
        ("corrupt_zero_dim.ofsfeat", zero_dim),
        ("corrupt_duplicate_id.ofsfeat", duplicate),
    ]
}

/// Every fixture file with the bytes the generators produce.
pub fn all_fixtures() -> Vec<(String, Vec<u8>)> {
    let (a, b, labels) = aggregation_families();
    let mut out = vec![
        ("aggregation_family_a.ofsfeat".to_string(), encode(&a)),
        ("aggregation_family_b.ofsfeat".to_string(), encode(&b)),
        (
            "aggregation_labels.tsv".to_string(),
            labels_tsv(&labels).into_bytes(),
        ),
        (
            "xlnet_base_10.ofsfeat".to_string(),
            encode(&xlnet_fixture()),
        ),
        ("bert_large_10.ofsfeat".to_string(), encode(&bert_fixture())),
        ("tiny.ofsfeat".to_string(), encode(&tiny_set())),
    ];
    out.extend(
        corrupt_fixtures()
            .into_iter()
            .map(|(n, b)| (n.to_string(), b)),
    );
    out
}

/// Two-class corpus where each class owns a set of exclusive tokens and
/// both share a pool of filler words.
pub fn nb_corpus(n: usize, seed: u64) -> Vec<(ExampleId, String, usize)> {
    const FILLER: &[&str] = &[
        "the", "a", "this", "that", "is", "was", "you", "they", "today", "really", "so", "just",
        "people", "what", "about", "game", "news", "time",
    ];
    const OFF: &[&str] = &[
        "idiot",
        "stupid",
        "moron",
        "trash",
        "loser",
        "pathetic",
        "disgusting",
        "clown",
    ];
    const NOT: &[&str] = &[
        "lovely",
        "great",
        "thanks",
        "happy",
        "beautiful",
        "kind",
        "wonderful",
        "proud",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = i % 2;
            let own = if class == 1 { OFF } else { NOT };
            let mut words: Vec<&str> = (0..rng.random_range(3..8))
                .map(|_| FILLER[rng.random_range(0..FILLER.len())])
                .collect();
            for _ in 0..rng.random_range(1..3) {
                let pos = rng.random_range(0..=words.len());
                words.insert(pos, own[rng.random_range(0..own.len())]);
            }
            (i as u64 + 1, words.join(" "), class)
        })
        .collect()
}

/// Member 1 draws random distributions, member 2 always puts its largest
/// probability on the gold class.
pub fn perfect_member_tables(
    n: usize,
    num_classes: usize,
    seed: u64,
) -> (
    ProbabilityTable,
    ProbabilityTable,
    HashMap<ExampleId, usize>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = ProbabilityTable::new("random", num_classes);
    let mut oracle = ProbabilityTable::new("oracle", num_classes);
    let mut labels = HashMap::new();
    for i in 0..n {
        let id = i as u64;
        let gold = rng.random_range(0..num_classes);
        labels.insert(id, gold);
        let raw: Vec<f64> = (0..num_classes)
            .map(|_| rng.random_range(0.01..1.0))
            .collect();
        let s: f64 = raw.iter().sum();
        random
            .push(id, &raw.iter().map(|v| v / s).collect::<Vec<_>>())
            .unwrap();
        let top = rng.random_range(0.6..0.95);
        let rest = (1.0 - top) / (num_classes - 1) as f64;
        let p: Vec<f64> = (0..num_classes)
            .map(|c| if c == gold { top } else { rest })
            .collect();
        oracle.push(id, &p).unwrap();
    }
    (random, oracle, labels)
}

/// Macro F1 computed from scratch: count each cell of the confusion matrix
/// by scanning the pairs, then apply the precision/recall/F1 definitions
/// with zero-denominator results of 0.
pub fn brute_force_macro_f1(num_classes: usize, gold: &[usize], pred: &[usize]) -> f64 {
    let pairs: Vec<(usize, usize)> = gold.iter().copied().zip(pred.iter().copied()).collect();
    let cell = |g: usize, p: usize| pairs.iter().filter(|&&(a, b)| a == g && b == p).count() as u64;
    let mut sum = 0.0;
    for c in 0..num_classes {
        let tp = cell(c, c);
        let predicted: u64 = (0..num_classes).map(|g| cell(g, c)).sum();
        let actual: u64 = (0..num_classes).map(|p| cell(c, p)).sum();
        let precision = if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if actual == 0 {
            0.0
        } else {
            tp as f64 / actual as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        sum += f1;
    }
    if num_classes == 0 {
        0.0
    } else {
        sum / num_classes as f64
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
