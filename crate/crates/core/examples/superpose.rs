//! Compare QCP and Kabsch superposition on a rotated, noisy copy.

use deckforge::analysis::{kabsch_superpose, qcp_superpose};

pub fn main() {
    let reference: Vec<[f64; 3]> = (0..12)
        .map(|i| {
            let t = i as f64 * 0.7;
            [t.cos(), t.sin(), 0.1 * t]
        })
        .collect();
    let (s, c) = (0.6f64.sin(), 0.6f64.cos());
    let mobile: Vec<[f64; 3]> = reference
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let wobble = 0.01 * (i as f64).sin();
            [c * p[0] - s * p[1] + 2.0, s * p[0] + c * p[1] - 1.0, p[2] + wobble]
        })
        .collect();
    let weights = vec![1.0; reference.len()];

    let q = qcp_superpose(&reference, &mobile, &weights).expect("well-conditioned");
    let k = kabsch_superpose(&reference, &mobile, &weights).expect("well-conditioned");
    println!("QCP RMSD    {:.12} nm", q.rmsd);
    println!("Kabsch RMSD {:.12} nm", k.rmsd);
    // The rotation acts on centered coordinates; here it undoes the 0.6 rad turn.
    let axis_x = q.apply([1.0, 0.0, 0.0]);
    println!("fitted rotation angle {:.4} rad", -axis_x[1].atan2(axis_x[0]));
}
