//! Confusion matrix and macro F1 for id-keyed predictions.
//!
//! `cargo run --example evaluate`

use offlang::metrics::{confusion, macro_f1};
use offlang::{Label, Subtask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = [(1, Label::Off), (2, Label::Off), (3, Label::Not)];
    let pred = [(1, Label::Off), (2, Label::Not), (3, Label::Off)];
    let report = macro_f1(&confusion(&pred, &gold, Subtask::A.classes())?);
    print!("{}", report.to_table());
    println!();

    // Subtask C; OTH is never predicted and still counts as 0 in the mean.
    let gold = [
        (1, Label::Ind),
        (2, Label::Grp),
        (3, Label::Oth),
        (4, Label::Ind),
        (5, Label::Grp),
    ];
    let pred = [
        (1, Label::Ind),
        (2, Label::Grp),
        (3, Label::Ind),
        (4, Label::Ind),
        (5, Label::Ind),
    ];
    let m = confusion(&pred, &gold, Subtask::C.classes())?;
    let report = macro_f1(&m);
    print!("{}", report.to_table());
    print!("{}", report.to_key_values());
    Ok(())
}
