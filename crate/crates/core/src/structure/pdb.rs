use super::{element_mass, guess_element, Atom, BoxMatrix, Structure, StructureError};

const ANGSTROM_PER_NM: f64 = 10.0;

/// Returns the 1-based inclusive column range `[from, to]` of `line`, or `None`
/// when the line is too short or the range splits a multi-byte character.
fn columns(line: &str, from: usize, to: usize) -> Option<&str> {
    let end = to.min(line.len());
    if end < from {
        return None;
    }
    line.get(from - 1..end)
}

fn required<'a>(
    line: &'a str,
    lineno: usize,
    from: usize,
    to: usize,
    what: &str,
) -> Result<&'a str, StructureError> {
    if line.len() < to {
        return Err(StructureError::malformed(
            lineno,
            format!("{what} (columns {from}-{to}) truncated"),
        ));
    }
    columns(line, from, to)
        .ok_or_else(|| StructureError::malformed(lineno, format!("{what} is not ASCII")))
}

fn parse_number<T: std::str::FromStr>(
    field: &str,
    lineno: usize,
    what: &str,
) -> Result<T, StructureError> {
    field
        .trim()
        .parse::<T>()
        .map_err(|_| StructureError::malformed(lineno, format!("invalid {what} {:?}", field.trim())))
}

fn parse_coordinate(field: &str, lineno: usize, axis: &str) -> Result<f64, StructureError> {
    let value: f64 = parse_number(field, lineno, axis)?;
    if !value.is_finite() {
        return Err(StructureError::malformed(lineno, format!("non-finite {axis}")));
    }
    Ok(value / ANGSTROM_PER_NM)
}

fn parse_atom_record(line: &str, lineno: usize, hetero: bool) -> Result<Atom, StructureError> {
    let serial: u32 = parse_number(required(line, lineno, 7, 11, "serial")?, lineno, "serial")?;
    let name = required(line, lineno, 13, 16, "atom name")?.trim();
    if name.is_empty() {
        return Err(StructureError::malformed(lineno, "blank atom name"));
    }
    let residue_name = required(line, lineno, 18, 20, "residue name")?.trim();
    let chain_id = required(line, lineno, 22, 22, "chain id")?
        .chars()
        .next()
        .unwrap_or(' ');
    let residue_seq: i32 =
        parse_number(required(line, lineno, 23, 26, "residue number")?, lineno, "residue number")?;
    let x = parse_coordinate(required(line, lineno, 31, 38, "x")?, lineno, "x coordinate")?;
    let y = parse_coordinate(required(line, lineno, 39, 46, "y")?, lineno, "y coordinate")?;
    let z = parse_coordinate(required(line, lineno, 47, 54, "z")?, lineno, "z coordinate")?;

    let element = columns(line, 77, 78)
        .map(|e| e.trim())
        .filter(|e| !e.is_empty() && e.chars().all(|c| c.is_ascii_alphabetic()))
        .map(|e| e.to_ascii_uppercase())
        .or_else(|| guess_element(name, residue_name));
    let mass = element.as_deref().and_then(element_mass).unwrap_or(0.0);

    Ok(Atom {
        serial,
        name: name.to_string(),
        residue_name: residue_name.to_string(),
        residue_seq,
        chain_id,
        position: [x, y, z],
        element,
        mass,
        hetero,
    })
}

fn cos_sin_degrees(angle: f64) -> (f64, f64) {
    if angle == 90.0 {
        (0.0, 1.0)
    } else {
        let rad = angle.to_radians();
        (rad.cos(), rad.sin())
    }
}

fn parse_cryst1(line: &str, lineno: usize) -> Result<BoxMatrix, StructureError> {
    let a: f64 = parse_number(required(line, lineno, 7, 15, "a")?, lineno, "cell length a")?;
    let b: f64 = parse_number(required(line, lineno, 16, 24, "b")?, lineno, "cell length b")?;
    let c: f64 = parse_number(required(line, lineno, 25, 33, "c")?, lineno, "cell length c")?;
    let alpha: f64 = parse_number(required(line, lineno, 34, 40, "alpha")?, lineno, "alpha")?;
    let beta: f64 = parse_number(required(line, lineno, 41, 47, "beta")?, lineno, "beta")?;
    let gamma: f64 = parse_number(required(line, lineno, 48, 54, "gamma")?, lineno, "gamma")?;
    let values = [a, b, c, alpha, beta, gamma];
    if values.iter().any(|v| !v.is_finite()) || a < 0.0 || b < 0.0 || c < 0.0 {
        return Err(StructureError::malformed(lineno, "invalid CRYST1 cell"));
    }
    let (a, b, c) = (a / ANGSTROM_PER_NM, b / ANGSTROM_PER_NM, c / ANGSTROM_PER_NM);
    let (cos_a, _) = cos_sin_degrees(alpha);
    let (cos_b, _) = cos_sin_degrees(beta);
    let (cos_g, sin_g) = cos_sin_degrees(gamma);
    if sin_g.abs() < 1e-12 {
        return Err(StructureError::malformed(lineno, "degenerate CRYST1 gamma"));
    }
    let v3x = c * cos_b;
    let v3y = c * (cos_a - cos_b * cos_g) / sin_g;
    let v3z = (c * c - v3x * v3x - v3y * v3y).max(0.0).sqrt();
    Ok([[a, 0.0, 0.0], [b * cos_g, b * sin_g, 0.0], [v3x, v3y, v3z]])
}

/// Parses PDB text. Only the first MODEL is read; alternate locations other
/// than blank or `A` are skipped.
pub fn parse_pdb(text: &str) -> Result<Structure, StructureError> {
    let mut title_parts: Vec<String> = Vec::new();
    let mut atoms = Vec::new();
    let mut box_matrix = None;
    let mut warnings = Vec::new();
    let mut models_seen = 0usize;
    let mut skipping_model = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        let record = line.get(..line.len().min(6)).unwrap_or("").trim_end();
        match record {
            "ATOM" | "HETATM" if !skipping_model => {
                let alt_loc = columns(line, 17, 17).and_then(|s| s.chars().next());
                if let Some(alt) = alt_loc {
                    if alt != ' ' && alt != 'A' {
                        continue;
                    }
                }
                let atom = parse_atom_record(line, lineno, record == "HETATM")?;
                if atom.mass == 0.0 {
                    warnings.push(format!(
                        "line {lineno}: unknown element for atom {}, mass set to 0",
                        atom.name
                    ));
                }
                atoms.push(atom);
            }
            "CRYST1" => box_matrix = Some(parse_cryst1(line, lineno)?),
            "TITLE" | "HEADER" if title_parts.is_empty() => {
                if let Some(rest) = line.get(10..) {
                    let rest = rest.trim();
                    if !rest.is_empty() {
                        title_parts.push(rest.to_string());
                    }
                }
            }
            "MODEL" => {
                models_seen += 1;
                if models_seen > 1 && !skipping_model {
                    skipping_model = true;
                    warnings.push(format!(
                        "line {lineno}: additional MODEL records ignored; only model 1 is read"
                    ));
                }
            }
            "END" => break,
            _ => {}
        }
    }

    if atoms.is_empty() {
        return Err(StructureError::EmptyStructure);
    }
    Ok(Structure {
        title: title_parts.join(" "),
        atoms,
        box_matrix,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MET_N: &str = "ATOM      1  N   MET A   1      20.154  29.699   5.276";

    #[test]
    fn fixed_columns_and_unit_conversion() {
        let s = parse_pdb(MET_N).unwrap();
        let atom = &s.atoms[0];
        assert_eq!(atom.serial, 1);
        assert_eq!(atom.name, "N");
        assert_eq!(atom.residue_name, "MET");
        assert_eq!(atom.residue_seq, 1);
        assert_eq!(atom.chain_id, 'A');
        assert!((atom.position[0] - 2.0154).abs() < 1e-12);
        assert!((atom.position[1] - 2.9699).abs() < 1e-12);
        assert!((atom.position[2] - 0.5276).abs() < 1e-12);
        assert_eq!(atom.element.as_deref(), Some("N"));
        assert_eq!(atom.mass, 14.007);
        assert!(!atom.hetero);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_pdb(""), Err(StructureError::EmptyStructure));
        assert_eq!(
            parse_pdb("REMARK nothing here\nEND\n"),
            Err(StructureError::EmptyStructure)
        );
    }

    #[test]
    fn bad_coordinate_reports_line() {
        let text = format!(
            "REMARK 1\n{MET_N}\nATOM      2  CA  MET A   1     abc.def  29.699   5.276\n"
        );
        match parse_pdb(&text) {
            Err(StructureError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_record() {
        let err = parse_pdb("ATOM      1  N   MET A   1      20.154  29.699").unwrap_err();
        assert!(matches!(err, StructureError::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn hetatm_altloc_models_and_cryst1() {
        let text = "\
CRYST1   50.000   60.000   70.000  90.00  90.00  90.00 P 1           1
MODEL        1
ATOM      1  N   MET A   1      20.154  29.699   5.276  1.00  0.00           N
ATOM      2  CA AMET A   1      21.000  29.000   5.000  0.50  0.00           C
ATOM      3  CA BMET A   1      21.100  29.100   5.100  0.50  0.00           C
HETATM    4  O   HOH A 101      10.000  10.000  10.000  1.00  0.00           O
ENDMDL
MODEL        2
ATOM      1  N   MET A   1      99.000  99.000  99.000  1.00  0.00           N
ENDMDL
END
";
        let s = parse_pdb(text).unwrap();
        assert_eq!(s.atoms.len(), 3);
        assert_eq!(s.atoms[1].serial, 2);
        assert!(s.atoms[2].hetero);
        assert_eq!(s.atoms[2].residue_name, "HOH");
        let b = s.box_matrix.unwrap();
        assert_eq!(b, [[5.0, 0.0, 0.0], [0.0, 6.0, 0.0], [0.0, 0.0, 7.0]]);
        assert!(s.warnings.iter().any(|w| w.contains("MODEL")));
    }

    #[test]
    fn triclinic_cell() {
        let line = "CRYST1   50.000   50.000   50.000  60.00  60.00  90.00 P 1           1";
        let b = parse_cryst1(line, 1).unwrap();
        for row in b {
            let len = (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
            assert!((len - 5.0).abs() < 1e-12);
        }
        let dot = b[0][0] * b[2][0] + b[0][1] * b[2][1] + b[0][2] * b[2][2];
        assert!((dot - 25.0 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn never_panics_on_odd_bytes() {
        for text in ["ATOM", "ATOM  é", "HETATM\u{1F600}\u{1F600}\u{1F600}\u{1F600}\u{1F600}", "CRYST1 x"] {
            let _ = parse_pdb(text);
        }
    }
}
