//! Pack the two-file bundle, write it, then verify and expand it again.

use deckforge::deck::{expand_bundle, pack_bundle, render_deck, verify_bundle};
use deckforge::spec::{resolve, SimulationSpec};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let resolved = resolve(&SimulationSpec::glyg1(295.0)).expect("GlyG1 resolves");
    let bundle = pack_bundle(&resolved, "glyg1.pdb", PDB.as_bytes()).expect("structure is readable");
    println!("sha256 {}", bundle.content_hash);

    let dir = tempfile::tempdir().expect("temp dir");
    bundle.write_to(dir.path()).expect("bundle written");
    for entry in std::fs::read_dir(dir.path()).expect("listing") {
        println!("  {}", entry.expect("entry").file_name().to_string_lossy());
    }

    let report = verify_bundle(dir.path());
    println!("verify: {} findings", report.findings.len());
    let expanded = expand_bundle(dir.path()).expect("bundle expands");
    println!("expanded {} files, identical to direct rendering: {}", expanded.files.len(), expanded.files == render_deck(&resolved));
}
