use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{
    emit_plots, pca, per_residue, rmsd_series, rmsf, rmsf_series, rog_series, AnalysisError, AnalysisSeries,
    PcaResult,
};
use crate::structure::{parse_structure_file, Structure};
use crate::traj::{read_xtc, resolve_selection, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Rmsd,
    Rmsf,
    Rog,
    Pca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rmsd, Method::Rmsf, Method::Rog, Method::Pca];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rmsd => "rmsd",
            Method::Rmsf => "rmsf",
            Method::Rog => "rog",
            Method::Pca => "pca",
        }
    }

    /// Parses a comma-separated list such as `rmsd,rog`; order and repeats are normalized.
    pub fn parse_list(list: &str) -> Result<Vec<Method>, String> {
        let mut out: Vec<Method> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err("no analysis methods given".into());
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown analysis method {s:?} (expected rmsd, rmsf, rog or pca)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRequest {
    pub methods: Vec<Method>,
    /// Selection expression, e.g. `backbone` or `resid 1-20`.
    pub selection: String,
    pub title: String,
    /// Fit frames before RMSD, RMSF and PCA.
    pub superpose: bool,
    pub mass_weighted_rog: bool,
    pub rmsf_per_residue: bool,
}

impl Default for AnalysisRequest {
    fn default() -> Self {
        AnalysisRequest {
            methods: Method::ALL.to_vec(),
            selection: "all".into(),
            title: "Analysis".into(),
            superpose: true,
            mass_weighted_rog: true,
            rmsf_per_residue: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    pub series: Vec<AnalysisSeries>,
    pub pca: Option<PcaResult>,
}

pub fn run_analysis(
    structure: &Structure,
    trajectory: &Trajectory,
    request: &AnalysisRequest,
) -> Result<AnalysisOutput, AnalysisError> {
    if trajectory.atom_count != structure.len() {
        return Err(AnalysisError::LengthMismatch {
            reference: structure.len(),
            mobile: trajectory.atom_count,
            weights: structure.len(),
        });
    }
    let selection = resolve_selection(structure, &request.selection)?;
    if selection.is_empty() {
        return Err(AnalysisError::EmptySelection);
    }
    let mut series = Vec::new();
    let mut pca_result = None;
    for method in &request.methods {
        match method {
            Method::Rmsd => series.push(rmsd_series(trajectory, 0, &selection, request.superpose, None)?),
            Method::Rmsf => {
                let values = rmsf(trajectory, &selection, request.superpose, None)?;
                series.push(if request.rmsf_per_residue {
                    per_residue(&values, &selection, structure)
                } else {
                    rmsf_series(&values, &selection)
                });
            }
            Method::Rog => {
                let masses = structure.masses();
                let masses = request.mass_weighted_rog.then_some(masses.as_slice());
                series.push(rog_series(trajectory, &selection, masses)?);
            }
            Method::Pca => pca_result = Some(pca(trajectory, &selection, request.superpose)?),
        }
    }
    Ok(AnalysisOutput { series, pca: pca_result })
}

fn folder_error(path: &Path, message: impl Into<String>) -> AnalysisError {
    AnalysisError::Folder { path: path.to_path_buf(), message: message.into() }
}

/// Finds the reference structure (`.pdb`/`.gro`) and the `.xtc` trajectory in `dir`.
pub fn locate_inputs(dir: &Path) -> Result<(PathBuf, PathBuf), AnalysisError> {
    let entries = std::fs::read_dir(dir).map_err(|e| folder_error(dir, e.to_string()))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
    paths.sort();
    let with_ext = |exts: &[&str]| -> Vec<PathBuf> {
        paths
            .iter()
            .filter(|p| p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x))))
            .cloned()
            .collect()
    };
    let structures = with_ext(&["pdb", "gro"]);
    let trajectories = with_ext(&["xtc"]);
    match (structures.as_slice(), trajectories.as_slice()) {
        ([s], [t]) => Ok((s.clone(), t.clone())),
        _ => Err(folder_error(
            dir,
            format!(
                "expected one structure file (.pdb or .gro) and one .xtc trajectory, found {} and {}",
                structures.len(),
                trajectories.len()
            ),
        )),
    }
}

/// Reads an analysis folder, runs the requested methods and writes CSV/SVG to `out_dir`.
pub fn analyze_folder(
    dir: &Path,
    request: &AnalysisRequest,
    out_dir: &Path,
) -> Result<(AnalysisOutput, Vec<PathBuf>), AnalysisError> {
    let (structure_path, traj_path) = locate_inputs(dir)?;
    let text = std::fs::read_to_string(&structure_path).map_err(|e| folder_error(&structure_path, e.to_string()))?;
    let name = structure_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let structure = parse_structure_file(name, &text).map_err(|e| folder_error(&structure_path, e.to_string()))?;
    let bytes = std::fs::read(&traj_path).map_err(|e| folder_error(&traj_path, e.to_string()))?;
    let trajectory = read_xtc(&bytes).map_err(|e| folder_error(&traj_path, e.to_string()))?;
    let output = run_analysis(&structure, &trajectory, request)?;
    let files = emit_plots(&output.series, output.pca.as_ref(), &request.title, out_dir)?;
    Ok((output, files))
}
