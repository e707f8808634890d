use serde::{Deserialize, Serialize};

use super::ledger::DefaultsLedger;
use super::normalize::normalize_override;
use super::resolve::{steps_for, EQUILIBRATION_PS};
use super::SimulationSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn push(&mut self, severity: Severity, field: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity,
            field: field.into(),
            message: message.into(),
            suggestion: None,
        });
    }

    fn suggest(&mut self, suggestion: impl Into<String>) {
        if let Some(last) = self.findings.last_mut() {
            last.suggestion = Some(suggestion.into());
        }
    }

    /// Orders findings by field path; findings on the same field keep insertion order.
    pub fn sort(&mut self) {
        self.findings.sort_by(|a, b| a.field.cmp(&b.field));
    }

    pub fn summary(&self) -> String {
        self.findings
            .iter()
            .map(|f| format!("{} {}: {}", severity_word(f.severity), f.field, f.message))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn severity_word(s: Severity) -> &'static str {
    match s {
        Severity::Error => "error",
        Severity::Warning => "warning",
    }
}

/// Characters allowed in values that end up inside shell commands and file names.
fn is_shell_safe(value: &str) -> bool {
    !value.is_empty()
        && value
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '@' | '+' | '/'))
}

pub fn validate(spec: &SimulationSpec) -> ValidationReport {
    validate_with(spec, &DefaultsLedger::builtin())
}

pub fn validate_with(spec: &SimulationSpec, ledger: &DefaultsLedger) -> ValidationReport {
    let mut r = ValidationReport::default();
    use Severity::{Error, Warning};

    if spec.job_name.is_empty() {
        r.push(Error, "job_name", "job name is empty");
    } else if !spec.job_name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
        r.push(Error, "job_name", "job name may only contain letters, digits, '_', '-' and '.'");
    } else if !spec.job_name.starts_with(|c: char| c.is_ascii_alphabetic()) {
        r.push(Warning, "job_name", "schedulers may reject job names not starting with a letter");
    }

    let t = spec.temperature_k;
    if !t.is_finite() || t <= 0.0 {
        r.push(Error, "temperature", format!("temperature must be above 0 K, got {t}"));
    } else if !(250.0..=400.0).contains(&t) {
        r.push(Warning, "temperature", format!("{t} K is outside the usual 250-400 K range"));
    }

    let p = spec.pressure_bar;
    if !p.is_finite() || p <= 0.0 {
        r.push(Error, "pressure", format!("pressure must be above 0 bar, got {p}"));
    } else if p > 1000.0 {
        r.push(Warning, "pressure", format!("{p} bar is unusually high"));
    }

    let dt = spec.timestep_fs;
    if !dt.is_finite() || dt <= 0.0 {
        r.push(Error, "timestep", format!("timestep must be above 0 fs, got {dt}"));
    } else if !(1.0..=5.0).contains(&dt) {
        r.push(Warning, "timestep", format!("{dt} fs is outside the typical 1-5 fs range"));
        r.suggest("use 2 fs with h-bond constraints");
    }

    let ns = spec.production_ns;
    if !ns.is_finite() || ns <= 0.0 {
        r.push(Error, "production_duration", format!("production duration must be above 0 ns, got {ns}"));
    } else if ns * 1000.0 <= 2.0 * EQUILIBRATION_PS {
        r.push(
            Warning,
            "production_duration",
            "production run is not longer than the NVT and NPT equilibration combined",
        );
    } else if dt.is_finite() && dt > 0.0 && steps_for(ns * 1000.0, dt) > i64::from(i32::MAX) * 100 {
        r.push(Warning, "production_duration", "production run needs an unusually large step count");
    }

    let pad = spec.box_padding_nm;
    if !pad.is_finite() || pad < 0.0 {
        r.push(Error, "box_padding", format!("box padding must be at least 0 nm, got {pad}"));
    } else if pad < 1.0 {
        r.push(Warning, "box_padding", format!("{pad} nm padding is below the usual 1.0 nm"));
        r.suggest("padding below the cut-off lets periodic images interact");
    }

    if spec.molecule_count < 1 {
        r.push(Error, "molecule_count", "molecule count must be at least 1");
    }
    for (field, ion) in [("positive_ion", &spec.positive_ion), ("negative_ion", &spec.negative_ion)] {
        if ion.is_empty() || !ion.chars().all(|c| c.is_ascii_alphanumeric()) {
            r.push(Error, field, format!("ion name {ion:?} must be alphanumeric"));
        }
    }
    if let Some(seed) = spec.random_seed {
        if seed < 0 {
            r.push(Error, "random_seed", "seed must be non-negative, or None for an engine-chosen seed");
        }
    }
    if let Some(name) = &spec.structure_file {
        if !is_shell_safe(name) || name.contains('/') || name.starts_with('.') {
            r.push(Error, "structure_file", "structure file must be a plain file name");
        }
    }

    let hw = &spec.hardware;
    if hw.nodes < 1 {
        r.push(Error, "hardware.nodes", "at least 1 node is required");
    }
    if hw.cores_per_node < 1 {
        r.push(Error, "hardware.cores_per_node", "at least 1 core per node is required");
    }
    if !hw.memory_gb.is_finite() || hw.memory_gb <= 0.0 {
        r.push(Error, "hardware.memory", "memory must be above 0 GB");
    }
    if hw.gpus < 0 {
        r.push(Error, "hardware.gpus", "GPU count cannot be negative");
    }
    if !hw.walltime_hours.is_finite() || hw.walltime_hours <= 0.0 {
        r.push(Error, "hardware.walltime", "walltime must be above 0 hours");
    } else if hw.walltime_hours > 720.0 {
        r.push(Warning, "hardware.walltime", "walltime above 30 days is rarely granted");
    }
    for (field, value) in [
        ("hardware.queue", &hw.queue),
        ("hardware.project_code", &hw.project_code),
        ("hardware.engine_module", &hw.engine_module),
    ] {
        if !is_shell_safe(value) {
            r.push(Error, field, format!("{value:?} must be non-empty without spaces or shell characters"));
        }
    }
    if let Some(email) = &hw.email {
        let parts: Vec<&str> = email.split('@').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) || !is_shell_safe(email) {
            r.push(Error, "hardware.email", format!("{email:?} is not a valid e-mail address"));
        }
    }

    for (stage, overrides) in &spec.advanced {
        for (key, value) in overrides {
            let field = format!("advanced.{}.{}", stage.label(), key);
            if !ledger.accepts_override(*stage, key) {
                r.push(Error, field, format!("{key} is not a known {} parameter", stage.title()));
            } else if let Err(e) = normalize_override(key, value) {
                r.push(Error, field, e.to_string());
            }
        }
    }

    r.sort();
    r
}
