use thiserror::Error;

use super::{format_real, Stage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizationError {
    #[error("{field}: cannot interpret {input:?}; accepted: {}", accepted.join(", "))]
    Rejected {
        field: String,
        input: String,
        accepted: Vec<String>,
    },
    #[error("unknown field {0:?}")]
    UnknownField(String),
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// `(canonical, aliases)`; matching is case-insensitive on both.
    Choice(&'static [(&'static str, &'static [&'static str])]),
    /// yes/no switch as the engine spells it.
    YesNo,
    /// true/false switch for spec-level flags.
    Flag,
    Seed,
    Integer,
    Real,
    RealList,
    Free,
}

const OFF: &[&str] = &["off", "none", "false", "0"];

const PCOUPL: &[(&str, &[&str])] = &[
    ("no", OFF),
    ("C-rescale", &["crescale", "c_rescale"]),
    ("Parrinello-Rahman", &["pr", "parrinello_rahman"]),
    ("Berendsen", &[]),
    ("MTTK", &[]),
];
const TCOUPL: &[(&str, &[&str])] = &[
    ("no", OFF),
    ("V-rescale", &["vrescale", "v_rescale"]),
    ("Nose-Hoover", &["nosehoover", "nose_hoover"]),
    ("Berendsen", &[]),
    ("Andersen", &[]),
];
const CONSTRAINTS: &[(&str, &[&str])] = &[
    ("none", &["no", "off"]),
    ("h-bonds", &["hbonds"]),
    ("all-bonds", &["allbonds"]),
    ("h-angles", &[]),
    ("all-angles", &[]),
];
const CONSTRAINT_ALGORITHM: &[(&str, &[&str])] = &[("lincs", &[]), ("shake", &[])];
const INTEGRATOR: &[(&str, &[&str])] = &[
    ("md", &["leap-frog"]),
    ("md-vv", &[]),
    ("sd", &[]),
    ("bd", &[]),
    ("steep", &["steepest-descent"]),
    ("cg", &[]),
    ("l-bfgs", &[]),
];
const CUTOFF_SCHEME: &[(&str, &[&str])] = &[("Verlet", &[]), ("group", &[])];
const COULOMBTYPE: &[(&str, &[&str])] = &[
    ("PME", &[]),
    ("cutoff", &["cut-off"]),
    ("Reaction-Field", &["rf"]),
    ("Ewald", &[]),
];
const PCOUPLTYPE: &[(&str, &[&str])] = &[
    ("isotropic", &[]),
    ("semiisotropic", &[]),
    ("anisotropic", &[]),
];
const REFCOORD_SCALING: &[(&str, &[&str])] = &[("no", OFF), ("all", &[]), ("com", &[])];
const DISPCORR: &[(&str, &[&str])] = &[
    ("no", OFF),
    ("EnerPres", &[]),
    ("Ener", &[]),
    ("AllEnerPres", &[]),
    ("AllEner", &[]),
];
const NS_TYPE: &[(&str, &[&str])] = &[("grid", &[]), ("simple", &[])];
const PBC: &[(&str, &[&str])] = &[("xyz", &[]), ("no", OFF), ("xy", &[])];
const FORCEFIELD: &[(&str, &[&str])] = &[
    ("OPLS-AA", &["oplsaa", "opls"]),
    ("AMBER99SB", &[]),
    ("CHARMM27", &[]),
    ("GROMOS54A7", &[]),
];
const WATER: &[(&str, &[&str])] = &[
    ("TIP3P", &[]),
    ("SPC", &[]),
    ("SPCE", &["spc/e"]),
    ("TIP4P", &[]),
];
const BOX: &[(&str, &[&str])] = &[
    ("cubic", &[]),
    ("dodecahedron", &["rhombic dodecahedron"]),
    ("octahedron", &["truncated octahedron"]),
];

/// Field → interpretation. Spec fields, hardware fields, and `.mdp` keys share
/// one namespace; `.mdp` keys are looked up with `-`/`_` folded.
fn kind_of(field: &str) -> Option<Kind> {
    let kind = match field {
        "job_name" | "positive_ion" | "negative_ion" | "structure_file" => Kind::Free,
        "forcefield" => Kind::Choice(FORCEFIELD),
        "water_model" => Kind::Choice(WATER),
        "box_type" => Kind::Choice(BOX),
        "temperature" | "temperature_k" | "pressure" | "pressure_bar" | "timestep" | "timestep_fs"
        | "production_duration" | "production_ns" | "box_padding" | "box_padding_nm" => Kind::Real,
        "neutralize" => Kind::Flag,
        "molecule_count" => Kind::Integer,
        "random_seed" | "gen-seed" => Kind::Seed,
        "pressure_coupling" | "pcoupl" => Kind::Choice(PCOUPL),
        "temperature_coupling" | "tcoupl" => Kind::Choice(TCOUPL),
        "nodes" | "cores_per_node" | "gpus" => Kind::Integer,
        "memory" | "memory_gb" | "walltime" | "walltime_hours" => Kind::Real,
        "queue" | "project_code" | "email" | "engine_module" => Kind::Free,
        "constraints" => Kind::Choice(CONSTRAINTS),
        "constraint-algorithm" => Kind::Choice(CONSTRAINT_ALGORITHM),
        "integrator" => Kind::Choice(INTEGRATOR),
        "cutoff-scheme" => Kind::Choice(CUTOFF_SCHEME),
        "coulombtype" => Kind::Choice(COULOMBTYPE),
        "pcoupltype" => Kind::Choice(PCOUPLTYPE),
        "refcoord-scaling" => Kind::Choice(REFCOORD_SCALING),
        "dispcorr" => Kind::Choice(DISPCORR),
        "ns-type" => Kind::Choice(NS_TYPE),
        "pbc" => Kind::Choice(PBC),
        "gen-vel" | "continuation" => Kind::YesNo,
        "nsteps" | "nstxout" | "nstvout" | "nstfout" | "nstenergy" | "nstlog" | "nstcalcenergy"
        | "nstxout-compressed" | "nstlist" | "lincs-iter" | "lincs-order" | "pme-order" | "nstcomm"
        | "nsttcouple" | "nstpcouple" => Kind::Integer,
        "dt" | "emtol" | "emstep" | "rcoulomb" | "rvdw" | "rlist" | "fourierspacing" | "tau-p"
        | "compressibility" | "verlet-buffer-tolerance" | "gen-temp" | "ewald-rtol" | "epsilon-r" => {
            Kind::Real
        }
        "ref-t" | "tau-t" | "ref-p" => Kind::RealList,
        _ => return None,
    };
    Some(kind)
}

fn strip_path(field: &str) -> &str {
    let field = field.trim();
    if let Some(rest) = field.strip_prefix("advanced.") {
        if let Some((stage, key)) = rest.split_once('.') {
            if stage.parse::<Stage>().is_ok() {
                return key;
            }
        }
    }
    field.strip_prefix("hardware.").unwrap_or(field)
}

fn lookup(field: &str) -> Option<Kind> {
    let name = strip_path(field);
    kind_of(name).or_else(|| kind_of(&crate::mdp::canonical_key(name)))
}

fn rejected(field: &str, input: &str, accepted: Vec<String>) -> NormalizationError {
    NormalizationError::Rejected {
        field: field.to_string(),
        input: input.to_string(),
        accepted,
    }
}

/// Maps a human-entered value to the canonical token for `field`.
///
/// Unknown fields are rejected; use [`normalize_override`] for `.mdp` keys
/// that may be carried through verbatim.
pub fn normalize_value(field: &str, human_input: &str) -> Result<String, NormalizationError> {
    let kind = lookup(field).ok_or_else(|| NormalizationError::UnknownField(field.to_string()))?;
    normalize_kind(field, kind, human_input)
}

/// Normalizes an advanced-settings value; keys without a dedicated
/// interpretation are trimmed and passed through.
pub(crate) fn normalize_override(key: &str, value: &str) -> Result<String, NormalizationError> {
    let kind = lookup(key).unwrap_or(Kind::Free);
    let out = normalize_kind(key, kind, value)?;
    if out.contains([';', '\n', '\r']) {
        return Err(rejected(key, value, vec!["a single-line value without ';'".into()]));
    }
    Ok(out)
}

fn normalize_kind(field: &str, kind: Kind, human_input: &str) -> Result<String, NormalizationError> {
    let input = human_input.trim();
    let lower = input.to_ascii_lowercase();
    match kind {
        Kind::Choice(table) => table
            .iter()
            .find(|(canon, aliases)| canon.to_ascii_lowercase() == lower || aliases.contains(&lower.as_str()))
            .map(|(canon, _)| canon.to_string())
            .ok_or_else(|| rejected(field, input, table.iter().map(|(c, _)| c.to_string()).collect())),
        Kind::YesNo => match lower.as_str() {
            "yes" | "true" | "on" | "1" => Ok("yes".into()),
            "no" | "false" | "off" | "0" => Ok("no".into()),
            _ => Err(rejected(field, input, vec!["yes".into(), "no".into()])),
        },
        Kind::Flag => match lower.as_str() {
            "yes" | "true" | "on" | "1" => Ok("true".into()),
            "no" | "false" | "off" | "0" => Ok("false".into()),
            _ => Err(rejected(field, input, vec!["true".into(), "false".into()])),
        },
        Kind::Seed => match lower.as_str() {
            "none" | "random" | "auto" | "-1" | "" => Ok("-1".into()),
            _ => match input.parse::<i64>() {
                Ok(n) if n >= 0 => Ok(n.to_string()),
                _ => Err(rejected(field, input, vec!["None".into(), "-1".into(), "a non-negative integer".into()])),
            },
        },
        Kind::Integer => input
            .parse::<i64>()
            .map(|n| n.to_string())
            .map_err(|_| rejected(field, input, vec!["an integer".into()])),
        Kind::Real => parse_real(input)
            .map(format_real)
            .ok_or_else(|| rejected(field, input, vec!["a finite number".into()])),
        Kind::RealList => {
            let parts: Option<Vec<String>> = input
                .split_whitespace()
                .map(|p| parse_real(p).map(format_real))
                .collect();
            match parts {
                Some(p) if !p.is_empty() => Ok(p.join(" ")),
                _ => Err(rejected(field, input, vec!["one or more finite numbers".into()])),
            }
        }
        Kind::Free => Ok(input.to_string()),
    }
}

fn parse_real(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}
