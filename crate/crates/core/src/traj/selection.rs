use thiserror::Error;

use crate::structure::Structure;

/// Atom names making up the protein backbone.
pub const BACKBONE: [&str; 4] = ["N", "CA", "C", "O"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub expression: String,
    /// Strictly increasing atom indices.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("cannot parse selection {expression:?}: {message}")]
    Syntax { expression: String, message: String },
}

impl Selection {
    pub fn all(atom_count: usize) -> Self {
        Selection { expression: "all".into(), indices: (0..atom_count).collect() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// An empty selection is legal but usually a mistake; callers flag it.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

enum Filter {
    All,
    Names(Vec<String>),
    Resid(i32, i32),
}

fn parse(expression: &str) -> Result<Filter, String> {
    let mut words = expression.split_whitespace();
    let keyword = words.next().ok_or("empty expression")?;
    let rest: Vec<&str> = words.collect();
    let arg = rest.join(" ");
    match keyword {
        "all" | "backbone" if !rest.is_empty() => Err(format!("{keyword} takes no arguments")),
        "all" => Ok(Filter::All),
        "backbone" => Ok(Filter::Names(BACKBONE.iter().map(|s| s.to_string()).collect())),
        "name" => {
            let names: Vec<String> = arg
                .split(',')
                .map(|s| s.trim().to_string())
                .collect();
            if names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
                return Err("name expects a comma-separated list of atom names".into());
            }
            Ok(Filter::Names(names))
        }
        "resid" => {
            let (a, b) = match arg.split_once('-') {
                Some((a, b)) => (a.trim(), b.trim()),
                None => (arg.trim(), arg.trim()),
            };
            let parse_n = |s: &str| s.parse::<i32>().map_err(|_| format!("{s:?} is not a residue number"));
            let (a, b) = (parse_n(a)?, parse_n(b)?);
            if a > b {
                return Err(format!("residue range {a}-{b} is reversed"));
            }
            Ok(Filter::Resid(a, b))
        }
        other => Err(format!("unknown keyword {other:?}; expected all, backbone, name or resid")),
    }
}

/// Resolves `all | backbone | name <id>[,<id>...] | resid <a>[-<b>]`.
pub fn resolve_selection(structure: &Structure, expression: &str) -> Result<Selection, SelectionError> {
    let filter = parse(expression).map_err(|message| SelectionError::Syntax {
        expression: expression.to_string(),
        message,
    })?;
    let indices = structure
        .atoms
        .iter()
        .enumerate()
        .filter(|(_, atom)| match &filter {
            Filter::All => true,
            Filter::Names(names) => names.contains(&atom.name),
            Filter::Resid(a, b) => (*a..=*b).contains(&atom.residue_seq),
        })
        .map(|(i, _)| i)
        .collect();
    Ok(Selection { expression: expression.trim().to_string(), indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Atom;

    fn peptide() -> Structure {
        let mut atoms = Vec::new();
        for res in 1..=3 {
            for name in ["N", "CA", "C", "O", "H"] {
                atoms.push(Atom::new(atoms.len() as u32 + 1, name, "GLY", res, [0.0; 3]));
            }
        }
        Structure::new("test", atoms, None)
    }

    #[test]
    fn keywords() {
        let s = peptide();
        assert_eq!(resolve_selection(&s, "all").unwrap().indices, (0..15).collect::<Vec<_>>());
        assert_eq!(resolve_selection(&s, "name CA").unwrap().indices, vec![1, 6, 11]);
        assert_eq!(resolve_selection(&s, "name CA, N").unwrap().indices, vec![0, 1, 5, 6, 10, 11]);
        assert_eq!(resolve_selection(&s, "backbone").unwrap().len(), 12);
        assert_eq!(resolve_selection(&s, "resid 2-3").unwrap().indices, (5..15).collect::<Vec<_>>());
        assert_eq!(resolve_selection(&s, "resid 2").unwrap().len(), 5);
        assert!(resolve_selection(&s, "name ZN").unwrap().is_empty());
    }

    #[test]
    fn syntax_errors() {
        let s = peptide();
        for bad in ["resid 5-3", "", "water", "all atoms", "name", "resid x-2"] {
            assert!(matches!(resolve_selection(&s, bad), Err(SelectionError::Syntax { .. })), "{bad:?}");
        }
    }
}
