use serde::{Deserialize, Serialize};

use super::{Atom, Structure};

/// Residue names treated as water.
pub const WATER_RESIDUES: &[&str] = &["HOH", "SOL", "WAT", "TIP3", "TIP4"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepOptions {
    pub strip_water: bool,
    pub strip_hetero: bool,
    pub renumber: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepReport {
    pub waters_removed: usize,
    pub hetero_removed: usize,
    pub atoms_renumbered: bool,
}

fn is_water(atom: &Atom) -> bool {
    let name = atom.residue_name.trim().to_ascii_uppercase();
    WATER_RESIDUES.contains(&name.as_str())
}

pub fn prepare_structure(structure: &Structure, options: PrepOptions) -> (Structure, PrepReport) {
    let mut report = PrepReport::default();
    let mut atoms = Vec::with_capacity(structure.atoms.len());
    for atom in &structure.atoms {
        if options.strip_water && is_water(atom) {
            report.waters_removed += 1;
        } else if options.strip_hetero && atom.hetero && !is_water(atom) {
            report.hetero_removed += 1;
        } else {
            atoms.push(atom.clone());
        }
    }
    if options.renumber {
        for (i, atom) in atoms.iter_mut().enumerate() {
            let serial = (i + 1) as u32;
            if atom.serial != serial {
                atom.serial = serial;
                report.atoms_renumbered = true;
            }
        }
    }
    let prepared = Structure {
        title: structure.title.clone(),
        atoms,
        box_matrix: structure.box_matrix,
        warnings: structure.warnings.clone(),
    };
    (prepared, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Structure {
        let mut atoms = Vec::new();
        for i in 0..10 {
            atoms.push(Atom::new(i + 1, "CA", "ALA", i as i32 + 1, [i as f64, 0.0, 0.0]));
        }
        for i in 0..3 {
            let mut w = Atom::new(20 + i, "O", "HOH", 100 + i as i32, [0.0, i as f64, 0.0]);
            w.hetero = true;
            atoms.push(w);
        }
        let mut lig = Atom::new(30, "C1", "LIG", 200, [1.0, 1.0, 1.0]);
        lig.hetero = true;
        atoms.push(lig);
        Structure::new("sample", atoms, None)
    }

    #[test]
    fn strips_water() {
        let (out, report) = prepare_structure(
            &sample(),
            PrepOptions { strip_water: true, ..Default::default() },
        );
        assert_eq!(out.atoms.len(), 11);
        assert_eq!(report.waters_removed, 3);
        assert_eq!(report.hetero_removed, 0);
    }

    #[test]
    fn strips_hetero_but_counts_water_separately() {
        let (out, report) = prepare_structure(
            &sample(),
            PrepOptions { strip_water: true, strip_hetero: true, renumber: false },
        );
        assert_eq!(out.atoms.len(), 10);
        assert_eq!((report.waters_removed, report.hetero_removed), (3, 1));
    }

    #[test]
    fn no_options_is_identity() {
        let s = sample();
        let (out, report) = prepare_structure(&s, PrepOptions::default());
        assert_eq!(out, s);
        assert_eq!(report, PrepReport::default());
    }

    #[test]
    fn renumbers() {
        let atoms = [5, 9, 12]
            .iter()
            .map(|&s| Atom::new(s, "CA", "GLY", 1, [0.0; 3]))
            .collect();
        let (out, report) = prepare_structure(
            &Structure::new("r", atoms, None),
            PrepOptions { renumber: true, ..Default::default() },
        );
        let serials: Vec<u32> = out.atoms.iter().map(|a| a.serial).collect();
        assert_eq!(serials, vec![1, 2, 3]);
        assert!(report.atoms_renumbered);
    }

    #[test]
    fn empty_result_is_legal() {
        let atoms = vec![Atom::new(1, "OW", "SOL", 1, [0.0; 3])];
        let (out, report) = prepare_structure(
            &Structure::new("w", atoms, None),
            PrepOptions { strip_water: true, ..Default::default() },
        );
        assert!(out.is_empty());
        assert_eq!(report.waters_removed, 1);
    }
}
