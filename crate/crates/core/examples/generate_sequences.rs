//! Generates one sequence of each kind, writes them to disk, reads them back
//! and prints how pixel distance grows with the temporal gap.
//!
//!     cargo run --example generate_sequences -- [out_dir]

use std::path::PathBuf;

use slowpool::data::{generate, load_sequence, save_sequence, SequenceKind, SequenceSpec};
use slowpool::loss::feature_distance;

fn main() -> slowpool::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "slowpool-out".into()),
    );
    std::fs::create_dir_all(&out)?;

    for kind in [
        SequenceKind::TranslatingBlob,
        SequenceKind::DriftingTexture,
        SequenceKind::Constant,
    ] {
        let spec = SequenceSpec {
            kind,
            frames: 32,
            velocity: (0.25, 0.5),
            seed: 7,
            ..SequenceSpec::default()
        };
        let seq = generate(&spec)?;
        let path = out.join(format!("{kind}.sfv"));
        save_sequence(&seq, &path)?;
        let back = load_sequence(&path)?;
        assert_eq!(back.len(), seq.len());

        let profile: Vec<String> = (1..=6)
            .map(|g| {
                let n = seq.len() - g;
                let mean = (0..n)
                    .map(|t| {
                        feature_distance(seq.frame(t).as_slice(), seq.frame(t + g).as_slice(), 2.0)
                    })
                    .sum::<f64>()
                    / n as f64;
                format!("{mean:.3}")
            })
            .collect();
        println!(
            "{kind:<17} {}x{}x{} -> {}  pixel distance at gaps 1..6: {}",
            seq.len(),
            seq.height(),
            seq.width(),
            path.display(),
            profile.join(" ")
        );
    }
    Ok(())
}
