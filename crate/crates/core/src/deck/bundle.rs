use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::manifest::{parse_manifest, HASH_KEY};
use super::setup::render_with_hash;
use super::{render_deck, setup_script_name, DeckFile};
use crate::spec::{validate, ResolvedSpec, Severity, ValidationReport};
use crate::structure::parse_structure_file;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("structure file is unreadable: {0}")]
    StructureUnreadable(String),
    #[error("setup script has no manifest block")]
    ManifestMissing,
    #[error("manifest schema version {0} is not supported")]
    ManifestVersionUnsupported(String),
    #[error("manifest line {line}: {message}")]
    ManifestMalformed { line: usize, message: String },
    #[error("content hash mismatch: recorded {recorded}, computed {computed}")]
    HashMismatch { recorded: String, computed: String },
    #[error("{0}")]
    NotABundle(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.to_path_buf(), source }
}

/// The two-file reproducibility bundle: setup script plus structure file.
#[derive(Debug, Clone, PartialEq)]
pub struct DeckBundle {
    pub resolved: ResolvedSpec,
    pub setup_script: String,
    pub structure_name: String,
    pub structure_bytes: Vec<u8>,
    pub content_hash: String,
}

impl DeckBundle {
    pub fn setup_script_name(&self) -> String {
        setup_script_name(&self.resolved)
    }

    /// `(file name, bytes)` for both bundle files, script first.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            (self.setup_script_name(), self.setup_script.as_bytes().to_vec()),
            (self.structure_name.clone(), self.structure_bytes.clone()),
        ]
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), BundleError> {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        for (name, bytes) in self.files() {
            let path = dir.join(&name);
            std::fs::write(&path, bytes).map_err(io_error(&path))?;
        }
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let path = dir.join(self.setup_script_name());
            std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).map_err(io_error(&path))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedBundle {
    pub resolved: ResolvedSpec,
    pub files: Vec<DeckFile>,
    pub content_hash: Option<String>,
}

fn lf_normalize(bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\r' && bytes.get(i + 1) == Some(&b'\n') {
            i += 1;
            continue;
        }
        out.push(bytes[i]);
        i += 1;
    }
    out
}

fn without_hash_line(script: &str) -> String {
    let prefix = format!("# {HASH_KEY} = ");
    let mut out = String::with_capacity(script.len());
    for line in script.split_inclusive('\n') {
        if !line.starts_with(&prefix) {
            out.push_str(line);
        }
    }
    out
}

/// SHA-256 over the LF-normalized setup script (its own hash line removed), a
/// NUL, the structure file name, a NUL, and the LF-normalized structure bytes.
/// Lowercase hex.
pub fn content_hash(setup_script: &str, structure_name: &str, structure_bytes: &[u8]) -> String {
    let script = String::from_utf8_lossy(&lf_normalize(setup_script.as_bytes())).into_owned();
    let mut h = Sha256::new();
    h.update(without_hash_line(&script).as_bytes());
    h.update([0]);
    h.update(structure_name.as_bytes());
    h.update([0]);
    h.update(lf_normalize(structure_bytes));
    hex::encode(h.finalize())
}

fn check_structure(name: &str, bytes: &[u8]) -> Result<(), BundleError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| BundleError::StructureUnreadable(format!("{name} is not text")))?;
    parse_structure_file(name, text).map_err(|e| BundleError::StructureUnreadable(format!("{name}: {e}")))?;
    Ok(())
}

/// Packs the resolved spec with the structure file. The spec's structure file
/// name is set to `structure_name` so the job script refers to the bundled file.
pub fn pack_bundle(
    resolved: &ResolvedSpec,
    structure_name: &str,
    structure_bytes: &[u8],
) -> Result<DeckBundle, BundleError> {
    let name = Path::new(structure_name)
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| BundleError::StructureUnreadable(format!("{structure_name:?} has no file name")))?
        .to_string();
    check_structure(&name, structure_bytes)?;
    let mut resolved = resolved.clone();
    resolved.source.structure_file = Some(name.clone());
    if validate(&resolved.source).errors().any(|f| f.field == "structure_file") {
        return Err(BundleError::StructureUnreadable(format!("{name:?} is not a plain file name")));
    }
    let draft = render_with_hash(&resolved, None);
    let hash = content_hash(&draft, &name, structure_bytes);
    let setup_script = render_with_hash(&resolved, Some(&hash));
    Ok(DeckBundle {
        resolved,
        setup_script,
        structure_name: name,
        structure_bytes: structure_bytes.to_vec(),
        content_hash: hash,
    })
}

/// Regenerates the deck from a setup script's manifest and the structure bytes.
pub fn expand_script(setup_script: &str, structure_bytes: &[u8]) -> Result<ExpandedBundle, BundleError> {
    let manifest = parse_manifest(setup_script)?;
    if let Some(recorded) = &manifest.content_sha256 {
        let computed = content_hash(setup_script, &manifest.structure_file, structure_bytes);
        if &computed != recorded {
            return Err(BundleError::HashMismatch { recorded: recorded.clone(), computed });
        }
    }
    let resolved = manifest.to_resolved()?;
    Ok(ExpandedBundle { files: render_deck(&resolved), resolved, content_hash: manifest.content_sha256 })
}

struct BundleDir {
    entries: Vec<String>,
    script: Option<(String, String)>,
}

fn read_bundle_dir(dir: &Path) -> Result<BundleDir, BundleError> {
    let mut entries = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_error(dir))? {
        let entry = entry.map_err(io_error(dir))?;
        entries.push(entry.file_name().to_string_lossy().into_owned());
    }
    entries.sort();
    let scripts: Vec<&String> = entries.iter().filter(|n| n.ends_with("_setup.sh")).collect();
    let script = match scripts.as_slice() {
        [] => None,
        [one] => {
            let path = dir.join(one);
            let text = std::fs::read_to_string(&path).map_err(io_error(&path))?;
            Some(((*one).clone(), text))
        }
        _ => return Err(BundleError::NotABundle(format!("{} has several *_setup.sh files", dir.display()))),
    };
    Ok(BundleDir { entries, script })
}

fn read_structure(dir: &Path, name: &str) -> Result<Vec<u8>, BundleError> {
    if Path::new(name).file_name().and_then(|n| n.to_str()) != Some(name) {
        return Err(BundleError::StructureUnreadable(format!("{name:?} is not a plain file name")));
    }
    std::fs::read(dir.join(name)).map_err(|e| BundleError::StructureUnreadable(format!("{name}: {e}")))
}

pub fn expand_bundle(dir: &Path) -> Result<ExpandedBundle, BundleError> {
    let listing = read_bundle_dir(dir)?;
    let (_, script) = listing
        .script
        .ok_or_else(|| BundleError::NotABundle(format!("{} has no *_setup.sh file", dir.display())))?;
    let manifest = parse_manifest(&script)?;
    let bytes = read_structure(dir, &manifest.structure_file)?;
    expand_script(&script, &bytes)
}

/// Checks a bundle directory; problems are reported as findings, never errors.
pub fn verify_bundle(dir: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    let fail = |r: &mut ValidationReport, msg: String| r.push(Severity::Error, "bundle", msg);

    let listing = match read_bundle_dir(dir) {
        Ok(l) => l,
        Err(e) => {
            fail(&mut report, e.to_string());
            return report;
        }
    };
    if listing.entries.len() != 2 {
        fail(&mut report, format!("bundle has {} files, expected 2", listing.entries.len()));
    }
    let Some((_, script)) = listing.script else {
        fail(&mut report, "no *_setup.sh file".into());
        return report;
    };
    let manifest = match parse_manifest(&script) {
        Ok(m) => m,
        Err(e) => {
            fail(&mut report, e.to_string());
            return report;
        }
    };
    match read_structure(dir, &manifest.structure_file) {
        Ok(bytes) => {
            if let Err(e) = check_structure(&manifest.structure_file, &bytes) {
                fail(&mut report, e.to_string());
            }
            let computed = content_hash(&script, &manifest.structure_file, &bytes);
            match &manifest.content_sha256 {
                Some(recorded) if *recorded != computed => {
                    fail(&mut report, format!("hash mismatch: recorded {recorded}, computed {computed}"))
                }
                Some(_) => {}
                None => report.push(Severity::Warning, "bundle", "no content hash recorded"),
            }
        }
        Err(e) => fail(&mut report, e.to_string()),
    }
    let resolved = match manifest.to_resolved() {
        Ok(r) => r,
        Err(e) => {
            fail(&mut report, e.to_string());
            return report;
        }
    };
    report.findings.extend(validate(&resolved.source).findings);
    for key in manifest.derived_mismatches(&resolved) {
        fail(&mut report, format!("derived value {key} disagrees with the stage tables"));
    }
    let expected = render_with_hash(&resolved, manifest.content_sha256.as_deref());
    let actual = String::from_utf8_lossy(&lf_normalize(script.as_bytes())).into_owned();
    if let Some(n) = first_difference(&expected, &actual) {
        fail(&mut report, format!("setup script differs from its manifest at line {n}"));
    }
    report
}

fn first_difference(a: &str, b: &str) -> Option<usize> {
    let (mut la, mut lb) = (a.lines(), b.lines());
    let mut n = 1;
    loop {
        match (la.next(), lb.next()) {
            (None, None) => return None,
            (x, y) if x != y => return Some(n),
            _ => n += 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("spec has validation errors: {}", .0.summary())]
    Invalid(ValidationReport),
    #[error(transparent)]
    Resolve(#[from] crate::spec::ResolveError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

/// Validates `spec` against `ledger`, resolves it, and packs it with the
/// structure. Warnings come back alongside the bundle; errors stop it.
pub fn generate_bundle(
    spec: &crate::spec::SimulationSpec,
    ledger: &crate::spec::DefaultsLedger,
    structure_name: &str,
    structure_bytes: &[u8],
) -> Result<(DeckBundle, ValidationReport), GenerateError> {
    let report = crate::spec::validate_with(spec, ledger);
    if report.has_errors() {
        return Err(GenerateError::Invalid(report));
    }
    let resolved = crate::spec::resolve_with(spec, ledger)?;
    Ok((pack_bundle(&resolved, structure_name, structure_bytes)?, report))
}
