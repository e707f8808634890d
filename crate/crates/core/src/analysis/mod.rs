//! RMSD, RMSF, radius of gyration and PCA over trajectories, plus CSV/SVG output.
//!
//! Every per-frame kernel runs through rayon's order-preserving `collect`, and
//! all sums are taken in frame order afterwards, so results do not depend on
//! the number of worker threads.

mod folder;
mod pca;
mod plot;
mod series;
mod superpose;

use std::path::PathBuf;

use thiserror::Error;

use crate::structure::Vec3;
use crate::traj::{Selection, Trajectory};

pub use folder::{analyze_folder, locate_inputs, run_analysis, AnalysisOutput, AnalysisRequest, Method};
pub use pca::{pca, PcaResult, MAX_PCA_DIMENSION};
pub use plot::{emit_plots, render_svg, series_csv};
pub use series::{
    per_residue, radius_of_gyration, rmsd_series, rmsf, rmsf_series, rog_series, RmsfAccumulator,
};
pub use superpose::{kabsch_superpose, qcp_rmsd, qcp_superpose, SuperpositionResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("selection is empty")]
    EmptySelection,
    #[error("index {index} is out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("need at least {needed} frames, got {found}")]
    TooFewFrames { needed: usize, found: usize },
    #[error("selection spans {dimension} coordinates; PCA is capped at {max}")]
    SelectionTooLarge { dimension: usize, max: usize },
    #[error("total mass of the selection is zero")]
    ZeroTotalMass,
    #[error("weights must be finite and non-negative")]
    InvalidWeights,
    #[error("coordinate sets differ in length: reference {reference}, mobile {mobile}, weights {weights}")]
    LengthMismatch { reference: usize, mobile: usize, weights: usize },
    #[error("cannot write {}: {source}", path.display())]
    OutputUnwritable { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Selection(#[from] crate::traj::SelectionError),
    #[error("analysis folder {}: {message}", path.display())]
    Folder { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesMethod {
    Rmsd,
    Rmsf,
    Rog,
}

impl SeriesMethod {
    pub fn label(self) -> &'static str {
        match self {
            SeriesMethod::Rmsd => "RMSD",
            SeriesMethod::Rmsf => "RMSF",
            SeriesMethod::Rog => "RoG",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            SeriesMethod::Rmsd => "rmsd",
            SeriesMethod::Rmsf => "rmsf",
            SeriesMethod::Rog => "rog",
        }
    }
}

/// One plotted curve: x in `x_unit` (ps, atom or residue), y in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSeries {
    pub method: SeriesMethod,
    pub x_unit: String,
    pub values: Vec<(f64, f64)>,
}

impl AnalysisSeries {
    pub fn ys(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.1).collect()
    }
}

/// Positions of the selected atoms of one frame.
pub(crate) fn pick(positions: &[Vec3], selection: &Selection) -> Result<Vec<Vec3>, AnalysisError> {
    selection
        .indices
        .iter()
        .map(|&i| positions.get(i).copied().ok_or(AnalysisError::IndexOutOfRange { index: i, len: positions.len() }))
        .collect()
}

/// Per-selected-atom weights from per-atom `weights`, or ones.
pub(crate) fn pick_weights(
    weights: Option<&[f64]>,
    selection: &Selection,
) -> Result<Vec<f64>, AnalysisError> {
    match weights {
        None => Ok(vec![1.0; selection.len()]),
        Some(w) => selection
            .indices
            .iter()
            .map(|&i| w.get(i).copied().ok_or(AnalysisError::IndexOutOfRange { index: i, len: w.len() }))
            .collect(),
    }
}

pub(crate) fn selected_frames(trajectory: &Trajectory, selection: &Selection) -> Result<Vec<Vec<Vec3>>, AnalysisError> {
    if selection.is_empty() {
        return Err(AnalysisError::EmptySelection);
    }
    trajectory.frames.iter().map(|f| pick(&f.positions, selection)).collect()
}
