//! The manifest comment block at the head of the setup script.
//!
//! ```text
//! # >>> deckforge manifest
//! # schema_version = 1
//! # content_sha256 = <64 hex digits>
//! # structure_file = glyg1.pdb
//! # [spec]
//! # job_name = GlyG1
//! # ...
//! # [mdp.ions]
//! # integrator               = steep ; steepest-descent minimisation
//! # ...
//! # [derived]
//! # nsteps_md = 5000000
//! # <<< deckforge manifest
//! ```

use std::collections::BTreeMap;

use super::bundle::BundleError;
use crate::mdp::{parse_line, render_entry, MdpEntry};
use crate::spec::resolve::derive;
use crate::spec::{format_real, parse_spec_text, ResolvedSpec, Stage};

pub const MANIFEST_BEGIN: &str = "# >>> deckforge manifest";
pub const MANIFEST_END: &str = "# <<< deckforge manifest";
pub const SCHEMA_VERSION: u32 = 1;

pub(crate) const HASH_KEY: &str = "content_sha256";

#[derive(Debug, Clone, PartialEq)]
/// The parsed manifest block of a setup script.
pub struct Manifest {
    pub schema_version: u32,
    pub content_sha256: Option<String>,
    pub structure_file: String,
    pub spec_text: String,
    pub tables: BTreeMap<Stage, Vec<MdpEntry>>,
    pub derived: Vec<(String, String)>,
}

fn derived_pairs(resolved: &ResolvedSpec) -> Vec<(String, String)> {
    let d = &resolved.derived;
    vec![
        ("nsteps_md".into(), d.nsteps_md.to_string()),
        ("nsteps_nvt".into(), d.nsteps_nvt.to_string()),
        ("nsteps_npt".into(), d.nsteps_npt.to_string()),
        ("em_tolerance".into(), format_real(d.em_tolerance)),
    ]
}

fn comment(out: &mut String, text: &str) {
    if text.is_empty() {
        out.push_str("#\n");
    } else {
        out.push_str("# ");
        out.push_str(text);
        out.push('\n');
    }
}

pub(crate) fn render_manifest(resolved: &ResolvedSpec, hash: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(MANIFEST_BEGIN);
    out.push('\n');
    comment(&mut out, &format!("schema_version = {SCHEMA_VERSION}"));
    if let Some(hash) = hash {
        comment(&mut out, &format!("{HASH_KEY} = {hash}"));
    }
    comment(&mut out, &format!("structure_file = {}", resolved.source.structure_file_name()));
    comment(&mut out, "[spec]");
    for line in crate::spec::render_spec_text(&resolved.source).lines() {
        comment(&mut out, line);
    }
    for stage in Stage::ALL {
        comment(&mut out, &format!("[mdp.{}]", stage.label()));
        for entry in resolved.table(*stage) {
            comment(&mut out, &render_entry(entry));
        }
    }
    comment(&mut out, "[derived]");
    for (k, v) in derived_pairs(resolved) {
        comment(&mut out, &format!("{k} = {v}"));
    }
    out.push_str(MANIFEST_END);
    out.push('\n');
    out
}

enum Section {
    Top,
    Spec,
    Mdp(Stage),
    Derived,
}

fn malformed(line: usize, message: impl Into<String>) -> BundleError {
    BundleError::ManifestMalformed { line, message: message.into() }
}

pub fn parse_manifest(script: &str) -> Result<Manifest, BundleError> {
    let lines: Vec<&str> = script.lines().map(|l| l.trim_end_matches('\r')).collect();
    let begin = lines
        .iter()
        .position(|l| *l == MANIFEST_BEGIN)
        .ok_or(BundleError::ManifestMissing)?;
    let end = lines[begin..]
        .iter()
        .position(|l| *l == MANIFEST_END)
        .map(|p| p + begin)
        .ok_or_else(|| malformed(begin + 1, "manifest block is not terminated"))?;

    let mut version: Option<u32> = None;
    let mut hash = None;
    let mut structure_file = None;
    let mut spec_text = String::new();
    let mut tables: BTreeMap<Stage, Vec<MdpEntry>> = BTreeMap::new();
    let mut derived = Vec::new();
    let mut section = Section::Top;

    for (idx, raw) in lines.iter().enumerate().take(end).skip(begin + 1) {
        let line = idx + 1;
        let body = if *raw == "#" {
            ""
        } else {
            raw.strip_prefix("# ").ok_or_else(|| malformed(line, "manifest line is not a comment"))?
        };
        let trimmed = body.trim();
        if let Some(name) = trimmed.strip_prefix("[mdp.").and_then(|s| s.strip_suffix(']')) {
            let stage: Stage = name.parse().map_err(|_| malformed(line, format!("unknown stage {name:?}")))?;
            if tables.insert(stage, Vec::new()).is_some() {
                return Err(malformed(line, format!("stage {name} listed twice")));
            }
            section = Section::Mdp(stage);
            continue;
        }
        match trimmed {
            "[spec]" => {
                section = Section::Spec;
                continue;
            }
            "[derived]" => {
                section = Section::Derived;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Spec => {
                spec_text.push_str(body);
                spec_text.push('\n');
            }
            Section::Mdp(stage) => {
                let entry = parse_line(body, line).map_err(|e| malformed(line, e.to_string()))?;
                if let Some(entry) = entry {
                    tables.get_mut(&stage).expect("section inserted").push(entry);
                }
            }
            Section::Top | Section::Derived => {
                if trimmed.is_empty() {
                    continue;
                }
                let (k, v) = trimmed
                    .split_once('=')
                    .ok_or_else(|| malformed(line, "expected key = value"))?;
                let (k, v) = (k.trim(), v.trim().to_string());
                if matches!(section, Section::Derived) {
                    derived.push((k.to_string(), v));
                    continue;
                }
                match k {
                    "schema_version" => {
                        let n = v
                            .parse()
                            .map_err(|_| BundleError::ManifestVersionUnsupported(v.clone()))?;
                        version = Some(n);
                    }
                    HASH_KEY => hash = Some(v),
                    "structure_file" => structure_file = Some(v),
                    _ => return Err(malformed(line, format!("unknown manifest key {k:?}"))),
                }
            }
        }
    }

    let schema_version = version.ok_or_else(|| malformed(begin + 1, "schema_version is missing"))?;
    if schema_version != SCHEMA_VERSION {
        return Err(BundleError::ManifestVersionUnsupported(schema_version.to_string()));
    }
    for stage in Stage::ALL {
        if !tables.contains_key(stage) {
            return Err(malformed(end + 1, format!("stage table [mdp.{}] is missing", stage.label())));
        }
    }
    Ok(Manifest {
        schema_version,
        content_sha256: hash,
        structure_file: structure_file.ok_or_else(|| malformed(begin + 1, "structure_file is missing"))?,
        spec_text,
        tables,
        derived,
    })
}

impl Manifest {
    pub fn to_resolved(&self) -> Result<ResolvedSpec, BundleError> {
        let mut source = parse_spec_text(&self.spec_text).map_err(|e| BundleError::ManifestMalformed {
            line: e.line,
            message: format!("[spec] {}", e.message),
        })?;
        if source.structure_file.is_none() {
            source.structure_file = Some(self.structure_file.clone());
        }
        let derived = derive(&source, &self.tables);
        Ok(ResolvedSpec { source, stage_tables: self.tables.clone(), derived })
    }

    /// Derived values recorded in the manifest that disagree with recomputation.
    pub(crate) fn derived_mismatches(&self, resolved: &ResolvedSpec) -> Vec<String> {
        let expected = derived_pairs(resolved);
        expected
            .iter()
            .filter(|(k, v)| self.derived.iter().find(|(dk, _)| dk == k).map(|(_, dv)| dv) != Some(v))
            .map(|(k, _)| k.clone())
            .collect()
    }
}
