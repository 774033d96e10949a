//! tf-idf + multinomial naive Bayes on a tiny normalized corpus.
//!
//! `cargo run --example naive_bayes_baseline`

use offlang::baseline_nb::NaiveBayesBaseline;
use offlang::normalize::{normalize_text, NormalizerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = NormalizerConfig::builtin();
    let train = [
        ("@USER you're an idiot #StupidPeople", 1),
        ("what a clown, pathetic", 1),
        ("shut up you loser &amp; go away", 1),
        ("I hate you", 1),
        ("lovely day with friends :)", 0),
        ("thanks for the kind words", 0),
        ("#HappyBirthday to my wonderful mom", 0),
        ("great game tonight", 0),
    ];
    let texts: Vec<String> = train
        .iter()
        .map(|(t, _)| normalize_text(t, &config))
        .collect();
    let labels: Vec<usize> = train.iter().map(|&(_, l)| l).collect();
    let model = NaiveBayesBaseline::fit(&texts, &labels, 2, 1.0)?;
    println!("vocabulary: {} tokens", model.tfidf.len());

    let names = ["NOT", "OFF"];
    for probe in [
        "hate hate",
        "you are such a loser",
        "have a wonderful day",
        "",
    ] {
        let text = normalize_text(probe, &config);
        println!("{probe:>24} -> {}", names[model.predict(&text)]);
    }

    let bytes = model.to_bytes();
    let again = NaiveBayesBaseline::fit(&texts, &labels, 2, 1.0)?;
    assert_eq!(bytes, again.to_bytes());
    println!("model: {} bytes, identical across fits", bytes.len());
    Ok(())
}
