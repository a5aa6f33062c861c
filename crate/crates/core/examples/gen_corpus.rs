//! Writes the bundled road corpus: `cargo run -p lanekit-core --example gen_corpus [dir]`.

use std::path::PathBuf;

use lanekit_core::imaging::save_pgm;
use lanekit_core::synth::{corpus_image, CORPUS_SEEDS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "corpus".into()));
    std::fs::create_dir_all(&dir)?;
    for n in 0..CORPUS_SEEDS.len() {
        let path = dir.join(format!("road_{:02}.pgm", n + 1));
        save_pgm(&corpus_image(n), &path)?;
        println!("{}", path.display());
    }
    Ok(())
}
