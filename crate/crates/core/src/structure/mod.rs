//! Molecular structure files: PDB and GRO fixed-column readers, a canonical GRO
//! writer, and the preparation pass that strips waters and heteroatoms.
//!
//! All positions are held in nanometres. PDB input is converted from Ångström on
//! read; GRO is already in nanometres.

mod elements;
mod gro;
mod pdb;
mod prepare;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use elements::{element_mass, guess_element};
pub use gro::{parse_gro, write_gro};
pub(crate) use gro::parse_gro_frame;
pub use pdb::parse_pdb;
pub use prepare::{prepare_structure, PrepOptions, PrepReport, WATER_RESIDUES};

/// Cartesian position or displacement in nanometres.
pub type Vec3 = [f64; 3];

/// Row-major box matrix; each row is one box vector in nanometres.
pub type BoxMatrix = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub serial: u32,
    pub name: String,
    pub residue_name: String,
    pub residue_seq: i32,
    pub chain_id: char,
    pub position: Vec3,
    pub element: Option<String>,
    /// Atomic mass in amu; 0 when the element is not in the mass table.
    pub mass: f64,
    /// Set for atoms read from `HETATM` records.
    pub hetero: bool,
}

impl Atom {
    /// Builds an atom and fills in element and mass from the name when the
    /// element is not given explicitly.
    pub fn new(
        serial: u32,
        name: &str,
        residue_name: &str,
        residue_seq: i32,
        position: Vec3,
    ) -> Self {
        let element = guess_element(name, residue_name);
        let mass = element.as_deref().and_then(element_mass).unwrap_or(0.0);
        Atom {
            serial,
            name: name.to_string(),
            residue_name: residue_name.to_string(),
            residue_seq,
            chain_id: ' ',
            position,
            element,
            mass,
            hetero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub title: String,
    pub atoms: Vec<Atom>,
    pub box_matrix: Option<BoxMatrix>,
    /// Non-fatal observations made while reading (unknown elements, extra models).
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Structure {
    pub fn new(title: impl Into<String>, atoms: Vec<Atom>, box_matrix: Option<BoxMatrix>) -> Self {
        Structure {
            title: title.into(),
            atoms,
            box_matrix,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.atoms.iter().map(|a| a.position).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.mass).collect()
    }

    /// Number of distinct residues, counted by consecutive (chain, seq, name) runs.
    pub fn residue_count(&self) -> usize {
        let mut count = 0;
        let mut last: Option<(char, i32, &str)> = None;
        for atom in &self.atoms {
            let key = (atom.chain_id, atom.residue_seq, atom.residue_name.as_str());
            if last != Some(key) {
                count += 1;
                last = Some(key);
            }
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("no atom records found")]
    EmptyStructure,
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("declared atom count {declared} but found {found} atom lines")]
    AtomCountMismatch { declared: usize, found: usize },
    #[error("structure has no box; GRO output requires one")]
    BoxMissing,
    #[error("value {value} does not fit the fixed-width {field} column")]
    FieldOverflow { field: &'static str, value: String },
    #[error("unrecognised structure format for {0}")]
    UnknownFormat(String),
}

impl StructureError {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        StructureError::MalformedRecord {
            line,
            reason: reason.into(),
        }
    }
}

/// Parses structure text, choosing the reader from the file extension
/// (`.pdb`/`.ent` or `.gro`).
pub fn parse_structure_file(name: &str, text: &str) -> Result<Structure, StructureError> {
    let lower = name.to_ascii_lowercase();
    if lower.ends_with(".pdb") || lower.ends_with(".ent") {
        parse_pdb(text)
    } else if lower.ends_with(".gro") {
        parse_gro(text)
    } else {
        Err(StructureError::UnknownFormat(name.to_string()))
    }
}
