//! Write a trajectory as XTC, stream it back, and check the quantization error.

use deckforge::structure::parse_pdb;
use deckforge::traj::{synthetic_trajectory, write_xtc, XtcReader};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let structure = parse_pdb(PDB).expect("fixture parses");
    let traj = synthetic_trajectory(&structure, 50, 10.0);
    for precision in [100.0, 1000.0, 10000.0] {
        let bytes = write_xtc(&traj, precision).expect("coordinates fit");
        let mut worst: f64 = 0.0;
        let mut frames = 0;
        for (frame, original) in XtcReader::new(bytes.as_slice()).zip(&traj.frames) {
            let frame = frame.expect("frame decodes");
            for (p, q) in frame.positions.iter().zip(&original.positions) {
                worst = (0..3).map(|d| (p[d] - q[d]).abs()).fold(worst, f64::max);
            }
            frames += 1;
        }
        println!("precision {precision:>5}: {:>6} bytes, {frames} frames, max error {worst:.1e} nm", bytes.len());
    }
}
