//! Writes two encoder feature files, reads them back and aligns them.
//!
//! `cargo run --example feature_files`

use offlang::features::{align_concat, read_features, write_features, FeatureSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("offlang-features-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let mut xlnet = FeatureSet::new("xlnet-base-cased", 768)?;
    let mut bert = FeatureSet::new("bert-large-uncased", 1024)?;
    for id in [3u64, 1, 2] {
        xlnet.push(id, &vec![id as f32 * 0.1; 768])?;
    }
    // bert missed example 3 and saw an extra one
    for id in [1u64, 2, 4] {
        bert.push(id, &vec![-(id as f32); 1024])?;
    }

    let xpath = dir.join("xlnet.ofsfeat");
    let bpath = dir.join("bert.ofsfeat");
    write_features(&xpath, &xlnet)?;
    write_features(&bpath, &bert)?;
    println!(
        "{}: {} bytes",
        xpath.display(),
        std::fs::metadata(&xpath)?.len()
    );
    println!(
        "{}: {} bytes",
        bpath.display(),
        std::fs::metadata(&bpath)?.len()
    );

    let sets = [read_features(&xpath)?, read_features(&bpath)?];
    assert_eq!(sets[0], xlnet);
    let aligned = align_concat(&sets)?;
    println!(
        "aligned {} rows of dim {} (ids {:?}, {} dropped)",
        aligned.len(),
        aligned.dim_total(),
        aligned.ids,
        aligned.dropped
    );
    let row = aligned.row(0);
    println!(
        "row 0: xlnet part starts {:.2}, bert part starts {:.2}",
        row[0], row[768]
    );

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
