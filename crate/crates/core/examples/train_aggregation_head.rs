//! Trains the dense aggregation head on two synthetic encoder families and
//! compares it with a head trained on either family alone.
//!
//! Family `a` only separates IND from the rest, family `b` only GRP, so
//! neither can tell all three classes apart by itself.
//!
//! `cargo run --release --example train_aggregation_head`

use std::collections::HashMap;

use offlang::corpus::{split_indices, ClassCounts, SplitSpec};
use offlang::features::{align_concat, FeatureSet};
use offlang::neural::{
    evaluate_macro_f1, load_mlp, predict, save_mlp, train, Dataset, MlpArchitecture, TrainConfig,
};
use offlang::{Label, Subtask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const N: usize = 600;
const DIM: usize = 16;

fn families() -> (FeatureSet, FeatureSet, HashMap<u64, usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let classes = Subtask::C.classes();
    let mut a = FeatureSet::new("family-a", DIM).unwrap();
    let mut b = FeatureSet::new("family-b", DIM).unwrap();
    let mut labels = HashMap::new();
    for i in 0..N {
        let label = classes[i % 3];
        let va: Vec<f64> = (0..DIM)
            .map(|d| {
                noise.sample(&mut rng)
                    + if d < 8 && label == Label::Ind {
                        1.5
                    } else {
                        0.0
                    }
            })
            .collect();
        let vb: Vec<f64> = (0..DIM)
            .map(|d| {
                noise.sample(&mut rng)
                    + if d >= 8 && label == Label::Grp {
                        1.5
                    } else {
                        0.0
                    }
            })
            .collect();
        a.push_f64(i as u64, &va).unwrap();
        b.push_f64(i as u64, &vb).unwrap();
        labels.insert(i as u64, label.index());
    }
    (a, b, labels)
}

fn run(
    name: &str,
    sets: &[FeatureSet],
    labels: &HashMap<u64, usize>,
) -> Result<f64, Box<dyn std::error::Error>> {
    let aligned = align_concat(sets)?;
    let data = Dataset::from_aligned(&aligned, labels)?;
    let (tr, va) = split_indices(data.len(), &SplitSpec::new(0.8, 1)?)?;

    let mut counts = ClassCounts::new(Subtask::C);
    for &t in data.targets() {
        counts.add(Subtask::C.classes()[t])?;
    }
    let weights = counts.weights()?;

    let arch = MlpArchitecture::aggregation_head(aligned.dim_total(), Subtask::C.output_dim())?;
    let config = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let outcome = train(
        &arch,
        &data.subset(&tr),
        &data.subset(&va),
        weights.as_slice(),
        &config,
    )?;
    println!(
        "{name:<10} dim {:>2}: best epoch {:>2} of {:>2}, validation macro F1 {:.3}",
        arch.input_dim,
        outcome.best_epoch,
        outcome.history.len(),
        outcome.best_val_macro_f1
    );

    if sets.len() > 1 {
        let path = std::env::temp_dir().join(format!("offlang-head-{}.ofsmlp", std::process::id()));
        save_mlp(&path, &arch, &outcome.params)?;
        let (arch2, params2) = load_mlp(&path)?;
        assert_eq!(
            evaluate_macro_f1(&params2, &arch2, &data.subset(&va), 0.5)?,
            outcome.best_val_macro_f1
        );
        let preds = predict(&params2, &arch2, &aligned, 0.5)?;
        let first = &preds[0];
        println!(
            "checkpoint {} reloads; id {} -> {:?} {:?}",
            path.display(),
            first.id,
            first.label(Subtask::C),
            first
                .probabilities
                .iter()
                .map(|p| format!("{p:.3}"))
                .collect::<Vec<_>>()
        );
        std::fs::remove_file(&path)?;
    }
    Ok(outcome.best_val_macro_f1)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, b, labels) = families();
    let fa = run("family a", std::slice::from_ref(&a), &labels)?;
    let fb = run("family b", std::slice::from_ref(&b), &labels)?;
    let both = run("a + b", &[a, b], &labels)?;
    println!(
        "aggregation gain over the best single family: {:+.3}",
        both - fa.max(fb)
    );
    Ok(())
}
