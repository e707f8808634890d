use super::{Frame, Trajectory};
use crate::structure::Structure;

/// A smooth, deterministic trajectory around `structure`, for demos and tests.
///
/// Each frame applies a slow rigid rotation about z, a uniform breathing of
/// about 2 %, and per-atom sinusoidal wobble whose amplitude grows along the
/// chain, so later residues fluctuate more. No randomness is involved: equal
/// inputs give bit-identical frames.
pub fn synthetic_trajectory(structure: &Structure, frames: usize, dt_ps: f64) -> Trajectory {
    let base = structure.positions();
    let n = base.len().max(1) as f64;
    let mut center = [0.0; 3];
    for p in &base {
        for d in 0..3 {
            center[d] += p[d] / n;
        }
    }
    let box_matrix = structure.box_matrix.unwrap_or_default();
    let mut traj = Trajectory::new(base.len());
    for f in 0..frames {
        let t = f as f64 * dt_ps;
        let phase = f as f64 * 0.15;
        let (s, c) = (0.02 * phase).sin_cos();
        let scale = 1.0 + 0.02 * phase.sin();
        let positions = base
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let amp = 0.01 + 0.04 * i as f64 / n;
                let k = i as f64 * 0.7;
                let r = [
                    (p[0] - center[0]) * scale + amp * (phase + k).sin(),
                    (p[1] - center[1]) * scale + amp * (1.3 * phase + k).cos(),
                    (p[2] - center[2]) * scale + amp * (0.7 * phase + 2.0 * k).sin(),
                ];
                [c * r[0] - s * r[1] + center[0], s * r[0] + c * r[1] + center[1], r[2] + center[2]]
            })
            .collect();
        let mut frame = Frame::new(f as i64 * 500, t, positions);
        frame.box_matrix = box_matrix;
        traj.frames.push(frame);
    }
    traj
}
