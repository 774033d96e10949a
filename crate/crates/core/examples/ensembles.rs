//! Soft voting and a trained stacker over three members' probabilities.
//!
//! `cargo run --example ensembles`

use std::collections::HashMap;

use offlang::ensemble::{
    default_stacker_config, soft_vote, stack_predict, train_stacker, MemberProbabilities,
    ProbabilityTable, StackerParams,
};
use offlang::metrics::macro_f1_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 400;
    let mut noisy = ProbabilityTable::new("noisy", 2);
    let mut decent = ProbabilityTable::new("decent", 2);
    let mut inverted = ProbabilityTable::new("inverted", 2);
    let mut labels = HashMap::new();
    for id in 0..n as u64 {
        let gold = rng.random_range(0..2usize);
        labels.insert(id, gold);
        let p: f64 = rng.random_range(0.0..1.0);
        noisy.push(id, &[1.0 - p, p])?;
        // right 80% of the time
        let right = rng.random_bool(0.8);
        let p1 = if (gold == 1) == right {
            rng.random_range(0.55..0.9)
        } else {
            rng.random_range(0.1..0.45)
        };
        decent.push(id, &[1.0 - p1, p1])?;
        // confidently wrong, which a stacker can exploit
        let q1 = if gold == 1 { 0.2 } else { 0.8 };
        inverted.push(id, &[1.0 - q1, q1])?;
    }

    let probs = MemberProbabilities::from_tables(&[noisy, decent, inverted])?;
    let gold: Vec<usize> = probs.ids().iter().map(|id| labels[id]).collect();
    let score = |t: &ProbabilityTable| {
        let pred: Vec<usize> = t.decisions(0.5).into_iter().map(|(_, c)| c).collect();
        macro_f1_indices(2, &gold, &pred).unwrap()
    };

    let uniform = soft_vote(&probs, None)?;
    let weighted = soft_vote(&probs, Some(&[0.5, 2.0, 0.5]))?;
    println!(
        "soft vote, uniform weights   macro F1 {:.3}",
        score(&uniform)
    );
    println!(
        "soft vote, weights .5/2/.5   macro F1 {:.3}",
        score(&weighted)
    );

    let (stacker, outcome) =
        train_stacker(&probs, &labels, &[1.0, 1.0], &default_stacker_config(), 0.8)?;
    let stacked = stack_predict(&stacker, &probs)?;
    println!(
        "stacker (best epoch {}, validation F1 {:.3})  macro F1 {:.3}",
        outcome.best_epoch,
        outcome.best_val_macro_f1,
        score(&stacked)
    );
    println!(
        "stacker weights {:?}",
        stacker
            .weights()
            .iter()
            .map(|w| format!("{w:.2}"))
            .collect::<Vec<_>>()
    );

    let only_decent = StackerParams::select_member(probs.member_names().to_vec(), 2, 1)?;
    println!(
        "pass-through of member 'decent'  macro F1 {:.3}",
        score(&stack_predict(&only_decent, &probs)?)
    );
    Ok(())
}
