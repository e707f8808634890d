use rayon::prelude::*;

use super::superpose::{align, qcp_rmsd};
use super::{pick, pick_weights, selected_frames, AnalysisError, AnalysisSeries, SeriesMethod};
use crate::structure::{Structure, Vec3};
use crate::traj::{Frame, Selection, Trajectory};

/// RMSD of every frame against `reference_frame`, over the selected atoms.
///
/// With `superpose` each frame is first fitted to the reference (QCP);
/// without it the raw lab-frame deviation is reported. `weights` are per atom
/// of the full system; `None` weighs every atom equally.
pub fn rmsd_series(
    trajectory: &Trajectory,
    reference_frame: usize,
    selection: &Selection,
    superpose: bool,
    weights: Option<&[f64]>,
) -> Result<AnalysisSeries, AnalysisError> {
    let frames = selected_frames(trajectory, selection)?;
    let reference = frames
        .get(reference_frame)
        .ok_or(AnalysisError::IndexOutOfRange { index: reference_frame, len: frames.len() })?;
    let w = pick_weights(weights, selection)?;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(AnalysisError::InvalidWeights);
    }
    let values = frames
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let y = if i == reference_frame {
                0.0
            } else if superpose {
                qcp_rmsd(reference, frame, &w)?
            } else {
                let sum: f64 = reference.iter().zip(frame).zip(&w).map(|((r, m), w)| w * dist2(r, m)).sum();
                (sum / total).sqrt()
            };
            Ok((trajectory.frames[i].time, y))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(AnalysisSeries { method: SeriesMethod::Rmsd, x_unit: "ps".into(), values })
}

fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|d| (a[d] - b[d]).powi(2)).sum()
}

fn mean_structure(frames: &[Vec<Vec3>]) -> Vec<Vec3> {
    let n = frames.len() as f64;
    let mut mean = vec![[0.0; 3]; frames[0].len()];
    for frame in frames {
        for (m, p) in mean.iter_mut().zip(frame) {
            for d in 0..3 {
                m[d] += p[d];
            }
        }
    }
    for m in &mut mean {
        *m = m.map(|v| v / n);
    }
    mean
}

/// Fits every frame to the mean structure, twice: mean, align, re-mean, align.
/// Returns the aligned frames and their mean.
pub(crate) fn superpose_to_mean(
    frames: &[Vec<Vec3>],
    weights: &[f64],
) -> Result<(Vec<Vec<Vec3>>, Vec<Vec3>), AnalysisError> {
    let mut mean = mean_structure(frames);
    let mut aligned = Vec::new();
    for _ in 0..2 {
        aligned = frames.par_iter().map(|f| align(&mean, f, weights)).collect::<Result<Vec<_>, _>>()?;
        mean = mean_structure(&aligned);
    }
    Ok((aligned, mean))
}

/// One-pass (Welford) per-atom fluctuation about the running mean position.
///
/// Frames can be pushed straight from a streaming reader; memory is
/// independent of trajectory length.
#[derive(Debug, Clone)]
pub struct RmsfAccumulator {
    frames: usize,
    mean: Vec<Vec3>,
    m2: Vec<f64>,
}

impl RmsfAccumulator {
    pub fn new(atoms: usize) -> Self {
        RmsfAccumulator { frames: 0, mean: vec![[0.0; 3]; atoms], m2: vec![0.0; atoms] }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn push(&mut self, positions: &[Vec3]) -> Result<(), AnalysisError> {
        if positions.len() != self.mean.len() {
            return Err(AnalysisError::LengthMismatch {
                reference: self.mean.len(),
                mobile: positions.len(),
                weights: self.mean.len(),
            });
        }
        self.frames += 1;
        let n = self.frames as f64;
        for ((mean, m2), p) in self.mean.iter_mut().zip(&mut self.m2).zip(positions) {
            for d in 0..3 {
                let delta = p[d] - mean[d];
                mean[d] += delta / n;
                *m2 += delta * (p[d] - mean[d]);
            }
        }
        Ok(())
    }

    /// Population RMSF (divisor = frame count), in nm.
    pub fn finish(&self) -> Result<Vec<f64>, AnalysisError> {
        if self.frames < 2 {
            return Err(AnalysisError::TooFewFrames { needed: 2, found: self.frames });
        }
        let n = self.frames as f64;
        Ok(self.m2.iter().map(|m2| (m2.max(0.0) / n).sqrt()).collect())
    }
}

/// Per-selected-atom RMSF in nm, optionally after fitting frames to the mean structure.
pub fn rmsf(
    trajectory: &Trajectory,
    selection: &Selection,
    superpose_to_mean: bool,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, AnalysisError> {
    if trajectory.len() < 2 {
        return Err(AnalysisError::TooFewFrames { needed: 2, found: trajectory.len() });
    }
    let mut frames = selected_frames(trajectory, selection)?;
    if superpose_to_mean {
        frames = self::superpose_to_mean(&frames, &pick_weights(weights, selection)?)?.0;
    }
    let mut acc = RmsfAccumulator::new(selection.len());
    for f in &frames {
        acc.push(f)?;
    }
    acc.finish()
}

/// RMSF values against 1-based atom numbers.
pub fn rmsf_series(values: &[f64], selection: &Selection) -> AnalysisSeries {
    AnalysisSeries {
        method: SeriesMethod::Rmsf,
        x_unit: "atom".into(),
        values: selection.indices.iter().zip(values).map(|(&i, &v)| ((i + 1) as f64, v)).collect(),
    }
}

/// Mean RMSF over the atoms of each residue.
///
/// Residues are consecutive runs of (chain, residue number). The x value is
/// the residue number while those increase, else the 1-based residue ordinal.
pub fn per_residue(values: &[f64], selection: &Selection, structure: &Structure) -> AnalysisSeries {
    let mut groups: Vec<((char, i32), f64, usize)> = Vec::new();
    for (&i, &v) in selection.indices.iter().zip(values) {
        let atom = &structure.atoms[i];
        let key = (atom.chain_id, atom.residue_seq);
        match groups.last_mut() {
            Some((k, sum, n)) if *k == key => {
                *sum += v;
                *n += 1;
            }
            _ => groups.push((key, v, 1)),
        }
    }
    let increasing = groups.windows(2).all(|w| w[0].0 .1 < w[1].0 .1);
    let values = groups
        .iter()
        .enumerate()
        .map(|(ord, (key, sum, n))| {
            let x = if increasing { f64::from(key.1) } else { (ord + 1) as f64 };
            (x, sum / *n as f64)
        })
        .collect();
    AnalysisSeries { method: SeriesMethod::Rmsf, x_unit: "residue".into(), values }
}

/// sqrt(sum w |r - r_com|^2 / sum w) over the selection, in nm.
/// `masses` are per atom of the full system; `None` weighs atoms equally.
pub fn radius_of_gyration(
    frame: &Frame,
    selection: &Selection,
    masses: Option<&[f64]>,
) -> Result<f64, AnalysisError> {
    if selection.is_empty() {
        return Err(AnalysisError::EmptySelection);
    }
    let points = pick(&frame.positions, selection)?;
    let w = pick_weights(masses, selection)?;
    if w.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(AnalysisError::InvalidWeights);
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(AnalysisError::ZeroTotalMass);
    }
    let com = super::superpose::weighted_centroid(&points, &w);
    let sum: f64 = points.iter().zip(&w).map(|(p, w)| w * dist2(p, &com)).sum();
    Ok((sum / total).sqrt())
}

pub fn rog_series(
    trajectory: &Trajectory,
    selection: &Selection,
    masses: Option<&[f64]>,
) -> Result<AnalysisSeries, AnalysisError> {
    let values = trajectory
        .frames
        .par_iter()
        .map(|f| Ok((f.time, radius_of_gyration(f, selection, masses)?)))
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(AnalysisSeries { method: SeriesMethod::Rog, x_unit: "ps".into(), values })
}
