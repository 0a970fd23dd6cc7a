//! Seeded feature-hashing embeddings: a dependency-free dense backend.
//! Builds an index, saves it as a cache file and loads it back.
//!
//! ```bash
//! cargo run -p kwame --example hash_embedding
//! ```

use kwame::corpus::{ingest_lesson, AnswerBank};
use kwame::retrieval::{build_index, hash_embed, Backend, BuildOptions, IndexArtifact};
use kwame::Lang;

const LESSON: &str = include_str!("../data/lesson1_fr.md");

fn main() -> anyhow::Result<()> {
    let a = hash_embed("la fonction fill()", 16, 7)?;
    let b = hash_embed("la fonction fill()", 16, 7)?;
    let c = hash_embed("la fonction fill()", 16, 8)?;
    println!("dim 16, seed 7: {a:.2?}");
    println!("same seed reproduces: {}, other seed differs: {}", a == b, a != c);

    let bank = AnswerBank::new(ingest_lesson(LESSON.as_bytes(), Lang::Fr, 1)?)?;
    let opts = BuildOptions { dim: 512, seed: 7, ..BuildOptions::default() };
    let artifact = build_index(&bank, Lang::Fr, Backend::Hash, &opts)?;

    let path = std::env::temp_dir().join(format!("kwame-hash-{}.idx", std::process::id()));
    artifact.save(&path)?;
    let loaded = IndexArtifact::load(&path, Some(&bank))?;
    println!(
        "cache {} bytes, {} rows of dim {}",
        std::fs::metadata(&path)?.len(),
        loaded.index.len(),
        loaded.index.dim()
    );
    std::fs::remove_file(&path)?;

    let q = loaded.encoder.encode_local("Comment changer la couleur du contour ?").expect("hash encodes locally")?;
    let top = kwame::retrieval::cosine_top_k(&q, &loaded.index, 2, None)?;
    for s in &top.answers {
        println!("{} {} {:.3}", s.rank, s.id, s.score);
    }
    Ok(())
}
