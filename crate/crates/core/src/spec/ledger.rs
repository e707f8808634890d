use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::Stage;
use crate::mdp::{canonical_key, parse_line, MdpEntry, MdpError};

const BUILTIN: &str = include_str!("../../ledger/defaults.ledger");

/// Environment variable naming an alternate ledger file.
pub const DEFAULTS_ENV: &str = "DECKFORGE_DEFAULTS";

/// Engine keys that advanced settings may add even though the ledger does not
/// list them. They are appended to the stage table after the ledger entries.
pub const PASS_THROUGH_KEYS: &[&str] = &[
    "annealing",
    "annealing-npoints",
    "annealing-temp",
    "annealing-time",
    "bd-fric",
    "comm-grps",
    "comm-mode",
    "cos-acceleration",
    "energygrps",
    "epsilon-r",
    "ewald-rtol",
    "freezedim",
    "freezegrps",
    "include",
    "ld-seed",
    "nstcomm",
    "nstpcouple",
    "nsttcouple",
    "rlist",
    "tinit",
    "verlet-buffer-tolerance",
    "vdw-modifier",
    "vdwtype",
    "coulomb-modifier",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("ledger line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("ledger stage [{stage}]: {source}")]
    Entry { stage: &'static str, source: MdpError },
    #[error("ledger is missing stage [{0}]")]
    MissingStage(&'static str),
    #[error("ledger stage [{stage}] lacks required key {key}")]
    MissingKey { stage: &'static str, key: &'static str },
    #[error("cannot read ledger {path}: {message}")]
    Io { path: String, message: String },
}

/// The immutable table of default `.mdp` entries per stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefaultsLedger {
    tables: BTreeMap<Stage, Vec<MdpEntry>>,
}

impl DefaultsLedger {
    pub fn builtin() -> Self {
        Self::from_text(BUILTIN).expect("built-in defaults ledger is well formed")
    }

    /// Text of the built-in ledger, for documentation and `GET /api/defaults`.
    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    /// Loads `DECKFORGE_DEFAULTS` when set, the built-in ledger otherwise.
    pub fn from_env() -> Result<Self, LedgerError> {
        match std::env::var_os(DEFAULTS_ENV) {
            Some(path) if !path.is_empty() => Self::from_path(Path::new(&path)),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, LedgerError> {
        let text = std::fs::read_to_string(path).map_err(|e| LedgerError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, LedgerError> {
        let mut tables: BTreeMap<Stage, Vec<MdpEntry>> = BTreeMap::new();
        let mut current: Option<Stage> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('[') {
                let name = header.strip_suffix(']').ok_or_else(|| LedgerError::Syntax {
                    line,
                    message: "unterminated section header".into(),
                })?;
                let stage: Stage = name.parse().map_err(|e| LedgerError::Syntax {
                    line,
                    message: format!("unknown stage {name:?}: {e}"),
                })?;
                if tables.contains_key(&stage) {
                    return Err(LedgerError::Syntax {
                        line,
                        message: format!("stage [{name}] listed twice"),
                    });
                }
                tables.insert(stage, Vec::new());
                current = Some(stage);
                continue;
            }
            let stage = current.ok_or_else(|| LedgerError::Syntax {
                line,
                message: "entry before the first [stage] header".into(),
            })?;
            let entry = parse_line(raw, line)
                .map_err(|source| LedgerError::Entry { stage: stage.label(), source })?;
            if let Some(entry) = entry {
                let table = tables.get_mut(&stage).expect("stage inserted at header");
                let canon = canonical_key(&entry.key);
                if table.iter().any(|e| canonical_key(&e.key) == canon) {
                    return Err(LedgerError::Entry {
                        stage: stage.label(),
                        source: MdpError::DuplicateKey { key: entry.key, line },
                    });
                }
                table.push(entry);
            }
        }
        for stage in Stage::ALL {
            if !tables.contains_key(stage) {
                return Err(LedgerError::MissingStage(stage.label()));
            }
        }
        let ledger = DefaultsLedger { tables };
        for (stage, key) in [(Stage::Md, "dt"), (Stage::Md, "nsteps"), (Stage::Em, "emtol")] {
            if !ledger.contains(stage, key) {
                return Err(LedgerError::MissingKey { stage: stage.label(), key });
            }
        }
        Ok(ledger)
    }

    pub fn table(&self, stage: Stage) -> &[MdpEntry] {
        self.tables.get(&stage).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, stage: Stage, key: &str) -> bool {
        let canon = canonical_key(key);
        self.table(stage).iter().any(|e| canonical_key(&e.key) == canon)
    }

    /// True when `key` is a ledger key in any stage or a pass-through key.
    pub fn accepts_override(&self, stage: Stage, key: &str) -> bool {
        let canon = canonical_key(key);
        self.contains(stage, key) || PASS_THROUGH_KEYS.contains(&canon.as_str())
    }
}

impl Default for DefaultsLedger {
    fn default() -> Self {
        Self::builtin()
    }
}
