//! Human-editable spec documents.
//!
//! ```text
//! # GlyG1 at 295 K
//! job_name = GlyG1
//! temperature = 295
//! random_seed = None
//!
//! [hardware]
//! nodes = 1
//! email = researcher@example.org
//!
//! [advanced.nvt]
//! nsteps = 1000
//! ```
//!
//! Blank lines and `#` comments are ignored, including trailing ` # ...`
//! comments. Values may be wrapped in double quotes. Keys not listed in
//! [`SimulationSpec`] are rejected outside the `[advanced.<stage>]` sections,
//! which accept any `.mdp` key.

use thiserror::Error;

use super::normalize::normalize_value;
use super::{format_real, SimulationSpec, Stage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("spec line {line}: {message}")]
pub struct SpecFileError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> SpecFileError {
    SpecFileError {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Hardware,
    Advanced(Stage),
}

fn strip_comment(value: &str) -> &str {
    let mut cut = value.len();
    for pat in [" #", "\t#"] {
        if let Some(pos) = value.find(pat) {
            cut = cut.min(pos);
        }
    }
    value[..cut].trim()
}

fn unquote(value: &str) -> &str {
    if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
        &value[1..value.len() - 1]
    } else {
        value
    }
}

fn real(line: usize, key: &str, value: &str) -> Result<f64, SpecFileError> {
    value
        .parse::<f64>()
        .map_err(|_| err(line, format!("{key}: expected a number, got {value:?}")))
}

fn integer(line: usize, key: &str, value: &str) -> Result<i64, SpecFileError> {
    value
        .parse::<i64>()
        .map_err(|_| err(line, format!("{key}: expected an integer, got {value:?}")))
}

fn choice<T: std::str::FromStr<Err = String>>(line: usize, key: &str, value: &str) -> Result<T, SpecFileError> {
    value.parse::<T>().map_err(|e| err(line, format!("{key}: {e}")))
}

fn normalized(line: usize, key: &str, value: &str) -> Result<String, SpecFileError> {
    normalize_value(key, value).map_err(|e| err(line, e.to_string()))
}

fn optional(value: &str) -> Option<String> {
    match value.to_ascii_lowercase().as_str() {
        "" | "none" => None,
        _ => Some(value.to_string()),
    }
}

fn set_top(spec: &mut SimulationSpec, line: usize, key: &str, value: &str) -> Result<(), SpecFileError> {
    match key {
        "job_name" => spec.job_name = value.to_string(),
        "forcefield" => spec.forcefield = choice(line, key, value)?,
        "water_model" => spec.water_model = choice(line, key, value)?,
        "temperature" => spec.temperature_k = real(line, key, value)?,
        "pressure" => spec.pressure_bar = real(line, key, value)?,
        "timestep" => spec.timestep_fs = real(line, key, value)?,
        "production_duration" => spec.production_ns = real(line, key, value)?,
        "box_type" => spec.box_type = choice(line, key, value)?,
        "box_padding" => spec.box_padding_nm = real(line, key, value)?,
        "neutralize" => spec.neutralize = normalized(line, key, value)? == "true",
        "positive_ion" => spec.positive_ion = value.to_string(),
        "negative_ion" => spec.negative_ion = value.to_string(),
        "molecule_count" => spec.molecule_count = integer(line, key, value)?,
        "random_seed" => {
            let seed = normalized(line, key, value)?;
            spec.random_seed = if seed == "-1" { None } else { Some(integer(line, key, &seed)?) };
        }
        "structure_file" => spec.structure_file = optional(value),
        _ => return Err(err(line, format!("unknown key {key:?}"))),
    }
    Ok(())
}

fn set_hardware(spec: &mut SimulationSpec, line: usize, key: &str, value: &str) -> Result<(), SpecFileError> {
    let hw = &mut spec.hardware;
    match key {
        "nodes" => hw.nodes = integer(line, key, value)?,
        "cores_per_node" => hw.cores_per_node = integer(line, key, value)?,
        "memory" => hw.memory_gb = real(line, key, value)?,
        "gpus" => hw.gpus = integer(line, key, value)?,
        "walltime" => hw.walltime_hours = real(line, key, value)?,
        "queue" => hw.queue = value.to_string(),
        "project_code" => hw.project_code = value.to_string(),
        "email" => hw.email = optional(value),
        "engine_module" => hw.engine_module = value.to_string(),
        _ => return Err(err(line, format!("unknown hardware key {key:?}"))),
    }
    Ok(())
}

/// Parses a spec document. Missing keys keep their defaults.
pub fn parse_spec_text(text: &str) -> Result<SimulationSpec, SpecFileError> {
    let mut spec = SimulationSpec::default();
    let mut section = Section::Top;
    let mut seen: Vec<(String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            section = if name == "hardware" {
                Section::Hardware
            } else if let Some(stage) = name.strip_prefix("advanced.") {
                Section::Advanced(stage.parse().map_err(|e| err(line, format!("unknown stage {stage:?}: {e}")))?)
            } else {
                return Err(err(line, format!("unknown section [{name}]")));
            };
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(err(line, "missing key"));
        }
        let value = unquote(strip_comment(value));
        let scope = match section {
            Section::Top => String::new(),
            Section::Hardware => "hardware".to_string(),
            Section::Advanced(stage) => format!("advanced.{}", stage.label()),
        };
        let dup_key = match section {
            Section::Advanced(_) => crate::mdp::canonical_key(key),
            _ => key.to_string(),
        };
        if seen.iter().any(|(s, k)| *s == scope && *k == dup_key) {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
        seen.push((scope, dup_key));
        match section {
            Section::Top => set_top(&mut spec, line, key, value)?,
            Section::Hardware => set_hardware(&mut spec, line, key, value)?,
            Section::Advanced(stage) => {
                spec.advanced
                    .entry(stage)
                    .or_default()
                    .insert(key.to_string(), value.to_string());
            }
        }
    }
    Ok(spec)
}

/// Renders a spec document with every field spelled out, in a fixed order.
pub fn render_spec_text(spec: &SimulationSpec) -> String {
    let mut lines: Vec<String> = Vec::new();
    let mut kv = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    kv("job_name", spec.job_name.clone());
    kv("forcefield", spec.forcefield.label().to_string());
    kv("water_model", spec.water_model.label().to_string());
    kv("temperature", format_real(spec.temperature_k));
    kv("pressure", format_real(spec.pressure_bar));
    kv("timestep", format_real(spec.timestep_fs));
    kv("production_duration", format_real(spec.production_ns));
    kv("box_type", spec.box_type.label().to_string());
    kv("box_padding", format_real(spec.box_padding_nm));
    kv("neutralize", spec.neutralize.to_string());
    kv("positive_ion", spec.positive_ion.clone());
    kv("negative_ion", spec.negative_ion.clone());
    kv("molecule_count", spec.molecule_count.to_string());
    kv(
        "random_seed",
        spec.random_seed.map(|s| s.to_string()).unwrap_or_else(|| "None".into()),
    );
    kv("structure_file", spec.structure_file.clone().unwrap_or_else(|| "None".into()));

    let hw = &spec.hardware;
    lines.push(String::new());
    lines.push("[hardware]".into());
    lines.push(format!("nodes = {}", hw.nodes));
    lines.push(format!("cores_per_node = {}", hw.cores_per_node));
    lines.push(format!("memory = {}", format_real(hw.memory_gb)));
    lines.push(format!("gpus = {}", hw.gpus));
    lines.push(format!("walltime = {}", format_real(hw.walltime_hours)));
    lines.push(format!("queue = {}", hw.queue));
    lines.push(format!("project_code = {}", hw.project_code));
    lines.push(format!("email = {}", hw.email.clone().unwrap_or_else(|| "None".into())));
    lines.push(format!("engine_module = {}", hw.engine_module));

    for (stage, overrides) in &spec.advanced {
        if overrides.is_empty() {
            continue;
        }
        lines.push(String::new());
        lines.push(format!("[advanced.{}]", stage.label()));
        for (k, v) in overrides {
            lines.push(format!("{k} = {v}"));
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{BoxType, Forcefield};
    use proptest::prelude::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "\
# GlyG1 at 295 K
job_name = GlyG1
temperature = 295   # kelvin
forcefield = amber99sb
box_type = \"dodecahedron\"
random_seed = None
neutralize = yes

[hardware]
nodes = 2
email = a@b.org

[advanced.nvt]
nsteps = 1000
";
        let spec = parse_spec_text(text).unwrap();
        assert_eq!(spec.job_name, "GlyG1");
        assert_eq!(spec.temperature_k, 295.0);
        assert_eq!(spec.forcefield, Forcefield::Amber99sb);
        assert_eq!(spec.box_type, BoxType::Dodecahedron);
        assert_eq!(spec.random_seed, None);
        assert!(spec.neutralize);
        assert_eq!(spec.hardware.nodes, 2);
        assert_eq!(spec.hardware.email.as_deref(), Some("a@b.org"));
        assert_eq!(spec.advanced[&Stage::Nvt]["nsteps"], "1000");
    }

    #[test]
    fn negative_temperature_parses_for_validation() {
        let spec = parse_spec_text("temperature = -10\n").unwrap();
        assert_eq!(spec.temperature_k, -10.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_spec_text("\n\nwarp = 9\n").unwrap_err().line, 3);
        assert_eq!(parse_spec_text("temperature = hot\n").unwrap_err().line, 1);
        assert_eq!(parse_spec_text("[advanced.xyz]\n").unwrap_err().line, 1);
        assert_eq!(parse_spec_text("a\n").unwrap_err().line, 1);
        assert_eq!(parse_spec_text("timestep = 2\ntimestep = 1\n").unwrap_err().line, 2);
        assert_eq!(parse_spec_text("random_seed = Maybe\n").unwrap_err().line, 1);
    }

    #[test]
    fn render_round_trips_glyg1() {
        let mut spec = SimulationSpec::glyg1(295.0);
        spec.random_seed = Some(7);
        spec.advanced.entry(Stage::Md).or_default().insert("nstlist".into(), "20".into());
        assert_eq!(parse_spec_text(&render_spec_text(&spec)).unwrap(), spec);
    }

    proptest! {
        #[test]
        fn render_parse_identity(
            t in 1.0f64..1000.0,
            p in 0.01f64..100.0,
            dt in 0.1f64..10.0,
            ns in 0.001f64..1000.0,
            nodes in 1i64..64,
            seed in proptest::option::of(0i64..1_000_000),
            email in proptest::option::of("[a-z]{1,8}@[a-z]{1,8}\\.org"),
        ) {
            let mut spec = SimulationSpec {
                temperature_k: t, pressure_bar: p, timestep_fs: dt, production_ns: ns,
                random_seed: seed, ..SimulationSpec::default()
            };
            spec.hardware.nodes = nodes;
            spec.hardware.email = email;
            prop_assert_eq!(parse_spec_text(&render_spec_text(&spec)).unwrap(), spec);
        }
    }
}
