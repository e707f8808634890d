use super::{Atom, BoxMatrix, Structure, StructureError};

const DEFAULT_COORD_WIDTH: usize = 8;

/// Width of the coordinate fields, inferred from the distance between the
/// first two decimal points as the engine does for high-precision files.
fn coordinate_width(line: &str) -> usize {
    let bytes = line.as_bytes();
    let first = bytes.iter().skip(20).position(|&b| b == b'.').map(|p| p + 20);
    if let Some(p1) = first {
        if let Some(p2) = bytes.iter().skip(p1 + 1).position(|&b| b == b'.') {
            let width = p2 + 1;
            if (5..=20).contains(&width) {
                return width;
            }
        }
    }
    DEFAULT_COORD_WIDTH
}

fn field<'a>(line: &'a str, lineno: usize, from: usize, to: usize, what: &str) -> Result<&'a str, StructureError> {
    if line.len() < to {
        return Err(StructureError::malformed(lineno, format!("{what} truncated")));
    }
    line.get(from..to)
        .ok_or_else(|| StructureError::malformed(lineno, format!("{what} is not ASCII")))
}

fn parse_atom_line(line: &str, lineno: usize, width: usize) -> Result<Atom, StructureError> {
    let residue_seq: i32 = field(line, lineno, 0, 5, "residue number")?
        .trim()
        .parse()
        .map_err(|_| StructureError::malformed(lineno, "invalid residue number"))?;
    let residue_name = field(line, lineno, 5, 10, "residue name")?.trim();
    let name = field(line, lineno, 10, 15, "atom name")?.trim();
    if name.is_empty() {
        return Err(StructureError::malformed(lineno, "blank atom name"));
    }
    let serial: u32 = field(line, lineno, 15, 20, "atom number")?
        .trim()
        .parse()
        .map_err(|_| StructureError::malformed(lineno, "invalid atom number"))?;
    let mut position = [0.0; 3];
    for (axis, slot) in position.iter_mut().enumerate() {
        let start = 20 + axis * width;
        let raw = field(line, lineno, start, start + width, "coordinate")?;
        let value: f64 = raw
            .trim()
            .parse()
            .map_err(|_| StructureError::malformed(lineno, format!("invalid coordinate {:?}", raw.trim())))?;
        if !value.is_finite() {
            return Err(StructureError::malformed(lineno, "non-finite coordinate"));
        }
        *slot = value;
    }
    Ok(Atom::new(serial, name, residue_name, residue_seq, position))
}

pub(crate) fn parse_box_line(line: &str, lineno: usize) -> Result<BoxMatrix, StructureError> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| StructureError::malformed(lineno, "invalid box line"))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StructureError::malformed(lineno, "non-finite box value"));
    }
    let m = match values.len() {
        3 => [
            [values[0], 0.0, 0.0],
            [0.0, values[1], 0.0],
            [0.0, 0.0, values[2]],
        ],
        // v1(x) v2(y) v3(z) v1(y) v1(z) v2(x) v2(z) v3(x) v3(y)
        9 => [
            [values[0], values[3], values[4]],
            [values[5], values[1], values[6]],
            [values[7], values[8], values[2]],
        ],
        n => {
            return Err(StructureError::malformed(
                lineno,
                format!("box line has {n} values, expected 3 or 9"),
            ))
        }
    };
    if m[0][0] < 0.0 || m[1][1] < 0.0 || m[2][2] < 0.0 {
        return Err(StructureError::malformed(lineno, "negative box diagonal"));
    }
    Ok(m)
}

/// Reads one GRO frame from `lines`, whose first element sits on 1-based line
/// `first_lineno`. Returns the structure and the number of lines consumed.
pub(crate) fn parse_gro_frame(lines: &[&str], first_lineno: usize) -> Result<(Structure, usize), StructureError> {
    let title = match lines.first() {
        Some(t) => t.trim_end_matches('\r').trim_end().to_string(),
        None => return Err(StructureError::EmptyStructure),
    };
    let count_line = lines
        .get(1)
        .ok_or_else(|| StructureError::malformed(first_lineno + 1, "missing atom count line"))?;
    let declared: usize = count_line
        .trim()
        .parse()
        .map_err(|_| StructureError::malformed(first_lineno + 1, "invalid atom count"))?;
    let available = lines.len().saturating_sub(2);
    if available < declared + 1 {
        return Err(StructureError::AtomCountMismatch {
            declared,
            found: available.saturating_sub(1),
        });
    }
    let mut atoms = Vec::with_capacity(declared);
    let width = lines
        .get(2)
        .filter(|_| declared > 0)
        .map(|l| coordinate_width(l))
        .unwrap_or(DEFAULT_COORD_WIDTH);
    for i in 0..declared {
        let line = lines[2 + i].trim_end_matches('\r');
        atoms.push(parse_atom_line(line, first_lineno + 2 + i, width)?);
    }
    let box_idx = 2 + declared;
    let box_matrix = parse_box_line(lines[box_idx].trim_end_matches('\r'), first_lineno + box_idx)?;
    let mut structure = Structure::new(title, atoms, Some(box_matrix));
    for atom in &structure.atoms {
        if atom.mass == 0.0 {
            structure.warnings.push(format!(
                "unknown element for atom {} {}, mass set to 0",
                atom.serial, atom.name
            ));
        }
    }
    Ok((structure, box_idx + 1))
}

/// Parses a single-frame GRO file. Lines after the box line are ignored.
pub fn parse_gro(text: &str) -> Result<Structure, StructureError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.iter().all(|l| l.trim().is_empty()) {
        return Err(StructureError::EmptyStructure);
    }
    let (structure, _) = parse_gro_frame(&lines, 1)?;
    if structure.atoms.is_empty() {
        return Err(StructureError::EmptyStructure);
    }
    Ok(structure)
}

/// Formats `value` with `decimals` places, rounding half away from zero.
pub(crate) fn fixed_decimal(value: f64, decimals: u32) -> String {
    let scale = 10f64.powi(decimals as i32);
    let scaled = (value * scale).round();
    if !scaled.is_finite() || scaled.abs() >= 9.0e15 {
        return format!("{value:.prec$}", prec = decimals as usize);
    }
    let units = scaled as i64;
    let magnitude = units.unsigned_abs();
    let div = 10u64.pow(decimals);
    let sign = if units < 0 { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{magnitude}")
    } else {
        format!(
            "{sign}{}.{:0width$}",
            magnitude / div,
            magnitude % div,
            width = decimals as usize
        )
    }
}

fn padded(value: f64, width: usize, decimals: u32, what: &'static str) -> Result<String, StructureError> {
    let text = fixed_decimal(value, decimals);
    if text.len() > width {
        return Err(StructureError::FieldOverflow { field: what, value: text });
    }
    Ok(format!("{text:>width$}"))
}

fn is_rectangular(m: &BoxMatrix) -> bool {
    m[0][1] == 0.0 && m[0][2] == 0.0 && m[1][0] == 0.0 && m[1][2] == 0.0 && m[2][0] == 0.0 && m[2][1] == 0.0
}

/// Writes canonical GRO text: `%5d%-5s%5s%5d` identifiers, coordinates as
/// `%8.3f`, and a `%10.5f` box line (9 values when triclinic).
pub fn write_gro(structure: &Structure) -> Result<String, StructureError> {
    let box_matrix = structure.box_matrix.ok_or(StructureError::BoxMissing)?;
    let mut out = String::with_capacity(64 + structure.atoms.len() * 45);
    out.push_str(structure.title.trim_end());
    out.push('\n');
    out.push_str(&format!("{:5}\n", structure.atoms.len()));
    for atom in &structure.atoms {
        let residue_seq = atom.residue_seq.rem_euclid(100_000);
        let serial = atom.serial % 100_000;
        let residue_name: String = atom.residue_name.chars().take(5).collect();
        let name: String = atom.name.chars().take(5).collect();
        out.push_str(&format!("{residue_seq:>5}{residue_name:<5}{name:>5}{serial:>5}"));
        for value in atom.position {
            out.push_str(&padded(value, 8, 3, "coordinate")?);
        }
        out.push('\n');
    }
    let m = &box_matrix;
    let mut values = vec![m[0][0], m[1][1], m[2][2]];
    if !is_rectangular(m) {
        values.extend([m[0][1], m[0][2], m[1][0], m[1][2], m[2][0], m[2][1]]);
    }
    for v in values {
        out.push_str(&padded(v, 10, 5, "box")?);
    }
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "GlyG1\n    1\n    1MET      N    1   2.015   2.970   0.528\n   5.00000   5.00000   5.00000\n";

    #[test]
    fn parses_single_atom() {
        let s = parse_gro(FIXTURE).unwrap();
        assert_eq!(s.title, "GlyG1");
        assert_eq!(s.atoms.len(), 1);
        let a = &s.atoms[0];
        assert_eq!((a.residue_seq, a.residue_name.as_str(), a.name.as_str(), a.serial), (1, "MET", "N", 1));
        assert_eq!(a.position, [2.015, 2.970, 0.528]);
        assert_eq!(s.box_matrix, Some([[5.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 5.0]]));
    }

    #[test]
    fn short_box_line_form() {
        let text = "GlyG1\n1\n    1MET      N    1   2.015   2.970   0.528\n5.0 5.0 5.0\n";
        let s = parse_gro(text).unwrap();
        assert_eq!(s.box_matrix.unwrap()[2][2], 5.0);
    }

    #[test]
    fn count_mismatch() {
        let text = "t\n    2\n    1MET      N    1   2.015   2.970   0.528\n   5.00000   5.00000   5.00000\n";
        assert_eq!(
            parse_gro(text),
            Err(StructureError::AtomCountMismatch { declared: 2, found: 1 })
        );
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        assert_eq!(write_gro(&parse_gro(FIXTURE).unwrap()).unwrap(), FIXTURE);
        let triclinic = "box\n    1\n    1SOL     OW    1   0.100  -0.200   3.000\n   5.00000   5.00000   4.00000   0.00000   0.00000   0.00000   2.50000   1.00000   1.50000\n";
        assert_eq!(write_gro(&parse_gro(triclinic).unwrap()).unwrap(), triclinic);
    }

    #[test]
    fn missing_box() {
        let mut s = parse_gro(FIXTURE).unwrap();
        s.box_matrix = None;
        assert_eq!(write_gro(&s), Err(StructureError::BoxMissing));
    }

    #[test]
    fn rounding_half_away_from_zero() {
        assert_eq!(fixed_decimal(1.23456, 3), "1.235");
        assert_eq!(fixed_decimal(0.0625, 3), "0.063");
        assert_eq!(fixed_decimal(-0.0625, 3), "-0.063");
        assert_eq!(fixed_decimal(-0.0001, 3), "0.000");
        assert_eq!(fixed_decimal(12.5, 0), "13");
    }

    #[test]
    fn written_atom_line_matches_template() {
        let mut s = parse_gro(FIXTURE).unwrap();
        s.atoms[0].position = [1.23456, 0.0, 0.0];
        let text = write_gro(&s).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "    1MET      N    1   1.235   0.000   0.000");
    }

    #[test]
    fn coordinate_overflow_is_an_error() {
        let mut s = parse_gro(FIXTURE).unwrap();
        s.atoms[0].position[0] = 123456.0;
        assert!(matches!(write_gro(&s), Err(StructureError::FieldOverflow { .. })));
    }

    #[test]
    fn high_precision_columns() {
        let text = "hp\n    1\n    1MET      N    1   2.01500   2.97000   0.52800\n   5.00000   5.00000   5.00000\n";
        let s = parse_gro(text).unwrap();
        assert_eq!(s.atoms[0].position, [2.015, 2.97, 0.528]);
    }
}
