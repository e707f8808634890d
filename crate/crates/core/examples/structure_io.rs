//! Read a PDB file, summarize it, and write it back out as GRO.

use deckforge::structure::{parse_gro, parse_pdb, write_gro};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let structure = parse_pdb(PDB).expect("fixture parses");
    println!("{}: {} atoms in {} residues", structure.title, structure.len(), structure.residue_count());
    let first = &structure.atoms[0];
    println!("first atom {} {} at {:?} nm", first.residue_name, first.name, first.position);

    let gro = write_gro(&structure).expect("PDB has a CRYST1 box");
    let back = parse_gro(&gro).expect("written GRO parses");
    let worst = structure
        .atoms
        .iter()
        .zip(&back.atoms)
        .flat_map(|(a, b)| (0..3).map(move |d| (a.position[d] - b.position[d]).abs()))
        .fold(0.0, f64::max);
    println!("GRO round trip: {} lines, max error {worst:.1e} nm", gro.lines().count());
}
