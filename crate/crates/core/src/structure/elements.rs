/// Standard atomic masses (amu) for the elements that show up in biomolecular
/// systems and common counter-ions.
const MASSES: &[(&str, f64)] = &[
    ("H", 1.008),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("S", 32.06),
    ("P", 30.974),
    ("F", 18.998),
    ("NA", 22.990),
    ("MG", 24.305),
    ("CL", 35.45),
    ("K", 39.098),
    ("CA", 40.078),
    ("MN", 54.938),
    ("FE", 55.845),
    ("CU", 63.546),
    ("ZN", 65.38),
    ("SE", 78.971),
    ("BR", 79.904),
    ("I", 126.904),
];

/// Ion residues whose atom name is also a two-letter element symbol.
const ION_RESIDUES: &[&str] = &["NA", "CL", "K", "MG", "CA", "ZN", "FE", "MN", "CU", "BR"];

pub fn element_mass(symbol: &str) -> Option<f64> {
    let upper = symbol.trim().to_ascii_uppercase();
    MASSES
        .iter()
        .find(|(sym, _)| *sym == upper)
        .map(|(_, mass)| *mass)
}

/// Infers an element symbol from an atom name.
///
/// Protein atom names start with the element letter (`CA` is an alpha carbon),
/// so only ion residues get a two-letter symbol.
pub fn guess_element(atom_name: &str, residue_name: &str) -> Option<String> {
    let name = atom_name.trim().to_ascii_uppercase();
    let residue = residue_name.trim().to_ascii_uppercase();
    if ION_RESIDUES.contains(&residue.as_str()) && name.starts_with(&residue) {
        return Some(residue);
    }
    name.chars()
        .find(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_masses() {
        assert_eq!(element_mass("H"), Some(1.008));
        assert_eq!(element_mass("c"), Some(12.011));
        assert_eq!(element_mass("S"), Some(32.06));
        assert_eq!(element_mass("Xx"), None);
    }

    #[test]
    fn guesses() {
        assert_eq!(guess_element("CA", "MET").as_deref(), Some("C"));
        assert_eq!(guess_element("1HB", "ALA").as_deref(), Some("H"));
        assert_eq!(guess_element("NA", "NA").as_deref(), Some("NA"));
        assert_eq!(guess_element("OW", "SOL").as_deref(), Some("O"));
        assert_eq!(guess_element("123", "UNK"), None);
    }
}
