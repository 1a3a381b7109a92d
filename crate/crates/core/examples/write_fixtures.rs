//! Regenerates the bundled LIBSVM fixtures under `crates/core/fixtures/`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use apg_restart::dataio::{generate_synthetic, write_libsvm, SyntheticKind, FIXTURE_COLS, FIXTURE_ROWS, FIXTURE_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for kind in SyntheticKind::all() {
        let inst = generate_synthetic(kind, FIXTURE_ROWS, FIXTURE_COLS, FIXTURE_SEED)?;
        let path = dir.join(format!("{}.libsvm", kind.name()));
        write_libsvm(&inst.dataset, BufWriter::new(File::create(&path)?))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
