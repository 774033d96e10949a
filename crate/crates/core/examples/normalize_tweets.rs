//! Cleans a handful of tweets with the built-in tables.
//!
//! `cargo run --example normalize_tweets`

use offlang::normalize::{
    collapse_user_runs, expand_contractions, fold_accents, normalize, replace_emojis,
    split_hashtag, strip_html, NormalizerConfig,
};
use offlang::Tweet;

fn main() {
    let config = NormalizerConfig::builtin();

    let tweets = [
        Tweet::new(1, "<i>WOW</i>  #dinnertime :) @USER @USER @USER @USER"),
        Tweet::new(2, "I can't wait for café"),
        Tweet::new(3, "@USER you're a #BigFatLiar &amp; everyone knows it 😂"),
        Tweet::new(4, "isn't it #MAGA2020 again <br/>"),
    ];
    for t in &tweets {
        let out = normalize(t, &config);
        println!("{:>2}  {:<55} -> {}", t.id, t.text, out.text);
    }

    println!();
    println!("stages on their own:");
    println!(
        "  strip_html          {:?}",
        strip_html("&lt;b&gt;bold&lt;/b&gt; move")
    );
    println!(
        "  collapse_user_runs  {:?}",
        collapse_user_runs("@user @user @user @user hi", 3)
    );
    println!(
        "  expand_contractions {:?}",
        expand_contractions("Isn't it?", config.contractions())
    );
    println!(
        "  split_hashtag       {:?}",
        split_hashtag("DinnerTime", config.lexicon())
    );
    println!(
        "  replace_emojis      {:?}",
        replace_emojis("ok :) <3", config.emojis())
    );
    println!("  fold_accents        {:?}", fold_accents("naïve café"));
}
