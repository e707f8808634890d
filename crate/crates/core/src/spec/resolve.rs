use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ledger::DefaultsLedger;
use super::normalize::{normalize_override, NormalizationError};
use super::validate::{validate_with, ValidationReport};
use super::{format_real, SimulationSpec, Stage};
use crate::mdp::{canonical_key, MdpEntry};

/// Length of each of the NVT and NPT equilibration runs.
pub const EQUILIBRATION_PS: f64 = 100.0;

/// Keys (canonical spelling) whose values follow the spec temperature.
pub const TEMPERATURE_KEYS: &[&str] = &["ref-t", "gen-temp"];

const OVERRIDE_COMMENT: &str = "advanced override";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub nsteps_md: i64,
    pub nsteps_nvt: i64,
    pub nsteps_npt: i64,
    /// Energy-minimisation force tolerance, kJ/mol/nm.
    pub em_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSpec {
    pub source: SimulationSpec,
    pub stage_tables: BTreeMap<Stage, Vec<MdpEntry>>,
    pub derived: Derived,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error("spec has validation errors: {}", .0.summary())]
    Invalid(ValidationReport),
    #[error("advanced override [{stage}] {key} is neither a ledger key nor a pass-through key")]
    UnresolvedOverride { stage: &'static str, key: String },
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
}

pub(crate) fn steps_for(duration_ps: f64, timestep_fs: f64) -> i64 {
    (duration_ps * 1000.0 / timestep_fs).round() as i64
}

/// Values of the named variables that bound ledger keys take, in the order the
/// setup script declares them.
pub(crate) fn bound_variables(spec: &SimulationSpec) -> Vec<(&'static str, String)> {
    let seed = spec.random_seed.map(|s| s.to_string()).unwrap_or_else(|| "-1".into());
    vec![
        ("TEMPERATURE_K", format_real(spec.temperature_k)),
        ("PRESSURE_BAR", format_real(spec.pressure_bar)),
        ("DT_PS", format_real(spec.timestep_fs / 1000.0)),
        ("NSTEPS_NVT", steps_for(EQUILIBRATION_PS, spec.timestep_fs).to_string()),
        ("NSTEPS_NPT", steps_for(EQUILIBRATION_PS, spec.timestep_fs).to_string()),
        ("NSTEPS_MD", steps_for(spec.production_ns * 1000.0, spec.timestep_fs).to_string()),
        ("GEN_SEED", seed),
    ]
}

/// Variable a `(stage, key)` pair is bound to, if any.
pub(crate) fn binding_for(stage: Stage, key: &str) -> Option<&'static str> {
    let dynamics = matches!(stage, Stage::Nvt | Stage::Npt | Stage::Md);
    let var = match canonical_key(key).as_str() {
        "ref-t" if dynamics => "TEMPERATURE_K",
        "gen-temp" if stage == Stage::Nvt => "TEMPERATURE_K",
        "ref-p" if matches!(stage, Stage::Npt | Stage::Md) => "PRESSURE_BAR",
        "dt" if dynamics => "DT_PS",
        "nsteps" => match stage {
            Stage::Nvt => "NSTEPS_NVT",
            Stage::Npt => "NSTEPS_NPT",
            Stage::Md => "NSTEPS_MD",
            _ => return None,
        },
        "gen-seed" if stage == Stage::Nvt => "GEN_SEED",
        _ => return None,
    };
    Some(var)
}

/// Repeats `value` once per whitespace-separated token of `template`, so
/// multi-group keys such as `ref_t = 300 300` stay multi-group.
pub(crate) fn repeat_per_group(value: &str, template: &str) -> String {
    let groups = template.split_whitespace().count().max(1);
    vec![value; groups].join(" ")
}

pub fn resolve(spec: &SimulationSpec) -> Result<ResolvedSpec, ResolveError> {
    resolve_with(spec, &DefaultsLedger::builtin())
}

pub fn resolve_with(spec: &SimulationSpec, ledger: &DefaultsLedger) -> Result<ResolvedSpec, ResolveError> {
    for (stage, overrides) in &spec.advanced {
        if let Some(key) = overrides.keys().find(|k| !ledger.accepts_override(*stage, k)) {
            return Err(ResolveError::UnresolvedOverride {
                stage: stage.label(),
                key: key.clone(),
            });
        }
    }
    let report = validate_with(spec, ledger);
    if report.has_errors() {
        return Err(ResolveError::Invalid(report));
    }
    let variables: BTreeMap<&str, String> = bound_variables(spec).into_iter().collect();

    let mut stage_tables = BTreeMap::new();
    for &stage in Stage::ALL {
        let mut table: Vec<MdpEntry> = ledger.table(stage).to_vec();
        for entry in &mut table {
            if let Some(var) = binding_for(stage, &entry.key) {
                entry.value = repeat_per_group(&variables[var], &entry.value);
            }
        }
        if let Some(overrides) = spec.advanced.get(&stage) {
            for (key, raw) in overrides {
                let value = normalize_override(key, raw)?;
                let canon = canonical_key(key);
                match table.iter_mut().find(|e| canonical_key(&e.key) == canon) {
                    Some(entry) => {
                        entry.value = value;
                        entry.comment = OVERRIDE_COMMENT.to_string();
                    }
                    None => table.push(MdpEntry::new(key.trim(), value, OVERRIDE_COMMENT)),
                }
            }
        }
        stage_tables.insert(stage, table);
    }

    let derived = derive(spec, &stage_tables);
    Ok(ResolvedSpec {
        source: spec.clone(),
        stage_tables,
        derived,
    })
}

fn table_value<'a>(tables: &'a BTreeMap<Stage, Vec<MdpEntry>>, stage: Stage, key: &str) -> Option<&'a str> {
    tables
        .get(&stage)?
        .iter()
        .find(|e| canonical_key(&e.key) == key)
        .map(|e| e.value.as_str())
}

pub(crate) fn derive(spec: &SimulationSpec, tables: &BTreeMap<Stage, Vec<MdpEntry>>) -> Derived {
    let steps = |stage: Stage, fallback: i64| {
        table_value(tables, stage, "nsteps")
            .and_then(|v| v.parse::<i64>().ok())
            .unwrap_or(fallback)
    };
    let equilibration = steps_for(EQUILIBRATION_PS, spec.timestep_fs);
    Derived {
        nsteps_md: steps(Stage::Md, steps_for(spec.production_ns * 1000.0, spec.timestep_fs)),
        nsteps_nvt: steps(Stage::Nvt, equilibration),
        nsteps_npt: steps(Stage::Npt, equilibration),
        em_tolerance: table_value(tables, Stage::Em, "emtol")
            .and_then(|v| v.parse::<f64>().ok())
            .unwrap_or(f64::NAN),
    }
}

/// The resolved `.mdp` entries for one stage.
pub fn stage_parameters(resolved: &ResolvedSpec, stage: Stage) -> &[MdpEntry] {
    resolved.stage_tables.get(&stage).map(Vec::as_slice).unwrap_or(&[])
}

impl ResolvedSpec {
    pub fn table(&self, stage: Stage) -> &[MdpEntry] {
        stage_parameters(self, stage)
    }

    /// Looks up a stage by name (`ions`, `EM`, `production`, ...).
    pub fn table_named(&self, stage: &str) -> Result<&[MdpEntry], ResolveError> {
        let stage: Stage = stage
            .parse()
            .map_err(|_| ResolveError::UnknownStage(stage.to_string()))?;
        Ok(self.table(stage))
    }

    pub fn value(&self, stage: Stage, key: &str) -> Option<&str> {
        table_value(&self.stage_tables, stage, &canonical_key(key))
    }
}
