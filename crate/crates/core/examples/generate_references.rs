//! Regenerates the reference tables under `data/`.
//!
//! ```text
//! cargo run --release -p anagram-core --example generate_references
//! ```

use std::path::Path;

use anagram_core::problems::{allen_cahn_reference_grid, burgers_reference_grid};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let burgers = burgers_reference_grid(41, 21);
    std::fs::write(dir.join("burgers1d_reference.csv"), burgers.to_csv(&["x", "t"]))?;
    let allen_cahn = allen_cahn_reference_grid(1024, 5e-5, 16, 21);
    std::fs::write(dir.join("allen_cahn_reference.csv"), allen_cahn.to_csv(&["x", "t"]))?;
    Ok(())
}
