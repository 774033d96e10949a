//! Label thresholding, cost-sensitive weights and the seeded split.
//!
//! `cargo run --example class_weights`

use std::io::Cursor;

use offlang::corpus::{
    class_weights, split, threshold_labels, ClassCounts, ConfidenceReader, SplitSpec,
    DEFAULT_CONF_THRESHOLD,
};
use offlang::{Label, Subtask};

const SCORED: &str = "id\ttweet\tavg_conf\tconf_std
1\tyou are a clown\t0.81\t0.12
2\tlovely weather\t0.05\t0.02
3\tnot sure about this\t0.40\t0.20
4\tso boring\t0.39\t0.18
5\tshut up\t0.66\t0.25
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Confidence-scored rows become OFF at or above the threshold.
    let records =
        ConfidenceReader::new(Cursor::new(SCORED), "avg_conf")?.collect::<Result<Vec<_>, _>>()?;
    let labeled = threshold_labels(records, DEFAULT_CONF_THRESHOLD)?;
    for e in &labeled {
        println!("{}\t{}\t{}", e.id, e.label, e.text);
    }
    let w = class_weights(&labeled, Subtask::A)?;
    println!(
        "weights: OFF={:.4} NOT={:.4}",
        w.weight(Label::Off),
        w.weight(Label::Not)
    );

    // OLID-sized counts.
    for (subtask, counts) in [
        (Subtask::A, vec![(Label::Not, 8840), (Label::Off, 4400)]),
        (
            Subtask::C,
            vec![(Label::Ind, 2407), (Label::Grp, 1074), (Label::Oth, 395)],
        ),
    ] {
        let w = ClassCounts::from_counts(subtask, &counts)?.weights()?;
        let mut mass = 0.0;
        print!("subtask {subtask}:");
        for (label, c) in counts {
            mass += c as f64 * w.weight(label);
            print!(" {label}={:.3e}", w.weight(label));
        }
        println!("  (sum C*w = {mass})");
    }

    let ids: Vec<u64> = (0..13_240).collect();
    let (train, val) = split(&ids, &SplitSpec::new(0.9, 42)?)?;
    println!(
        "split 13240 -> {} train / {} validation, first train ids {:?}",
        train.len(),
        val.len(),
        &train[..5]
    );
    Ok(())
}
