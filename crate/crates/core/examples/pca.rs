//! Principal components of the backbone motion.

use deckforge::analysis::pca;
use deckforge::structure::parse_pdb;
use deckforge::traj::{resolve_selection, synthetic_trajectory};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let structure = parse_pdb(PDB).expect("fixture parses");
    let traj = synthetic_trajectory(&structure, 60, 10.0);
    let ca = resolve_selection(&structure, "name CA").expect("valid selection");
    let result = pca(&traj, &ca, true).expect("pca");
    println!("{} components, covariance trace {:.3e} nm^2", result.eigenvalues.len(), result.covariance_trace);
    for (i, share) in result.explained().iter().take(3).enumerate() {
        println!("PC{}: {:5.1}%", i + 1, 100.0 * share);
    }
    println!("frame 10 projects to ({:.4}, {:.4}) nm", result.projections[10][0], result.projections[10][1]);
}
