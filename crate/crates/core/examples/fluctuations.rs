//! RMSD, per-atom and per-residue RMSF, and radius of gyration over a trajectory.

use deckforge::analysis::{per_residue, rmsd_series, rmsf, rog_series, RmsfAccumulator};
use deckforge::structure::parse_pdb;
use deckforge::traj::{resolve_selection, synthetic_trajectory};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let structure = parse_pdb(PDB).expect("fixture parses");
    let traj = synthetic_trajectory(&structure, 40, 10.0);
    let backbone = resolve_selection(&structure, "backbone").expect("valid selection");
    println!("{} backbone atoms of {}", backbone.len(), structure.len());

    let rmsd = rmsd_series(&traj, 0, &backbone, true, None).expect("rmsd");
    println!("RMSD at {} ps: {:.4} nm", rmsd.values[39].0, rmsd.values[39].1);

    let values = rmsf(&traj, &backbone, true, None).expect("rmsf");
    let residues = per_residue(&values, &backbone, &structure);
    println!("RMSF of residue {}: {:.4} nm", residues.values[0].0, residues.values[0].1);

    // The same fluctuations without holding the trajectory: feed frames one at a time.
    let mut acc = RmsfAccumulator::new(structure.len());
    for frame in &traj.frames {
        acc.push(&frame.positions).expect("same atom count");
    }
    let streamed = acc.finish().expect("enough frames");
    println!("streamed RMSF of atom 1: {:.4} nm over {} frames", streamed[0], acc.frames());

    let masses = structure.masses();
    let rog = rog_series(&traj, &resolve_selection(&structure, "all").expect("all"), Some(&masses)).expect("rog");
    println!("RoG first/last: {:.4} / {:.4} nm", rog.values[0].1, rog.values[39].1);
}
