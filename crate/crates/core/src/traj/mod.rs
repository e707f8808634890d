//! Trajectories: XTC streams, concatenated GRO frames, and atom selections.

mod selection;
mod synthetic;
mod xtc;

use thiserror::Error;

use crate::structure::{parse_gro_frame, BoxMatrix, Structure, StructureError, Vec3};

pub use selection::{resolve_selection, Selection, SelectionError};
pub use synthetic::synthetic_trajectory;
pub use xtc::{read_xtc, write_xtc, XtcReader, XTC_MAGIC};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: i64,
    /// Simulation time in ps.
    pub time: f64,
    pub box_matrix: BoxMatrix,
    pub positions: Vec<Vec3>,
    /// XTC quantization divisor; 0 for uncompressed sources.
    pub precision: f64,
}

impl Frame {
    pub fn new(step: i64, time: f64, positions: Vec<Vec3>) -> Self {
        Frame { step, time, box_matrix: [[0.0; 3]; 3], positions, precision: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub atom_count: usize,
    pub frames: Vec<Frame>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("stream ends inside frame {}", .frames_read + 1)]
    TruncatedFrame {
        frames_read: usize,
        /// The complete frames before the cut, when the whole stream was read.
        partial: Option<Box<Trajectory>>,
    },
    #[error("frame {frame} has {found} atoms, expected {expected}")]
    AtomCountChanged { frame: usize, expected: usize, found: usize },
    #[error("frame {frame}: coordinate {value} nm overflows the XTC integer range at this precision")]
    CoordinateOverflow { frame: usize, value: f64 },
    #[error("precision must be a positive finite number, got {0}")]
    InvalidPrecision(f64),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

impl Trajectory {
    pub fn new(atom_count: usize) -> Self {
        Trajectory { atom_count, frames: Vec::new(), warnings: Vec::new() }
    }

    pub fn from_frames(frames: Vec<Frame>) -> Result<Self, TrajError> {
        let mut t = Trajectory::new(frames.first().map_or(0, |f| f.positions.len()));
        for frame in frames {
            t.push(frame)?;
        }
        Ok(t)
    }

    /// Appends a frame. The first frame fixes the atom count of an empty
    /// trajectory; a time going backwards is recorded as a warning.
    pub fn push(&mut self, frame: Frame) -> Result<(), TrajError> {
        if self.frames.is_empty() && self.atom_count == 0 {
            self.atom_count = frame.positions.len();
        }
        if frame.positions.len() != self.atom_count {
            return Err(TrajError::AtomCountChanged {
                frame: self.frames.len(),
                expected: self.atom_count,
                found: frame.positions.len(),
            });
        }
        if let Some(last) = self.frames.last() {
            if frame.time < last.time {
                self.warnings.push(format!(
                    "frame {} time {} ps precedes the previous frame ({} ps)",
                    self.frames.len(),
                    frame.time,
                    last.time
                ));
            }
        }
        self.frames.push(frame);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }
}

fn title_number(title: &str, key: &str) -> Option<f64> {
    let rest = &title[title.find(key)? + key.len()..];
    rest.split_whitespace().next()?.parse().ok()
}

/// Reads concatenated GRO frames. Times come from a `t=` token in each title,
/// else the frame index in ps; steps from `step=` when present.
pub fn read_gro_trajectory(text: &str) -> Result<Trajectory, TrajError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut traj = Trajectory::new(0);
    let mut pos = 0;
    while pos < lines.len() {
        if lines[pos..].iter().all(|l| l.trim().is_empty()) {
            break;
        }
        let (structure, consumed): (Structure, usize) = parse_gro_frame(&lines[pos..], pos + 1)?;
        let index = traj.frames.len();
        if structure.atoms.is_empty() {
            return Err(StructureError::EmptyStructure.into());
        }
        let time = title_number(&structure.title, "t=").unwrap_or(index as f64);
        let step = title_number(&structure.title, "step=").map_or(index as i64, |s| s as i64);
        let frame = Frame {
            step,
            time,
            box_matrix: structure.box_matrix.unwrap_or_default(),
            positions: structure.positions(),
            precision: 0.0,
        };
        traj.push(frame)?;
        pos += consumed;
    }
    if traj.frames.is_empty() {
        return Err(StructureError::EmptyStructure.into());
    }
    Ok(traj)
}
