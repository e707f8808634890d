//! JSON bodies shared by the HTTP service and the CLI `--json` mode.

use deckforge::analysis::{AnalysisRequest, Method};
use deckforge::deck::DeckBundle;
use deckforge::mdp::MdpEntry;
use deckforge::spec::{field_metadata, DefaultsLedger, FieldMeta, Finding, SimulationSpec, Stage, ValidationReport};
use serde::{Deserialize, Serialize};

/// Version tag of every body below; bumped on breaking changes.
pub const API_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    /// Stable machine-readable code, e.g. `malformed_body`.
    pub error: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<Finding>,
}

impl ErrorBody {
    pub fn new(error: &str, detail: impl Into<String>) -> Self {
        ErrorBody { error: error.into(), detail: detail.into(), findings: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefaultsBody {
    pub api_version: u32,
    pub spec: SimulationSpec,
    pub fields: Vec<FieldMeta>,
    /// Default `.mdp` entries per stage, in workflow order.
    pub ledger: Vec<StageDefaults>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageDefaults {
    pub stage: &'static str,
    pub file: String,
    pub entries: Vec<MdpEntry>,
}

impl DefaultsBody {
    pub fn new(ledger: &DefaultsLedger) -> Self {
        DefaultsBody {
            api_version: API_VERSION,
            spec: SimulationSpec::default(),
            fields: field_metadata(),
            ledger: Stage::ALL
                .iter()
                .map(|s| StageDefaults { stage: s.title(), file: s.file_name(), entries: ledger.table(*s).to_vec() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidateBody {
    pub api_version: u32,
    pub valid: bool,
    #[serde(flatten)]
    pub report: ValidationReport,
}

impl From<ValidationReport> for ValidateBody {
    fn from(report: ValidationReport) -> Self {
        ValidateBody { api_version: API_VERSION, valid: !report.has_errors(), report }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BundleBody {
    pub api_version: u32,
    pub job_name: String,
    pub files: Vec<String>,
    pub content_sha256: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Finding>,
}

impl BundleBody {
    pub fn new(bundle: &DeckBundle, warnings: &ValidationReport) -> Self {
        BundleBody {
            api_version: API_VERSION,
            job_name: bundle.resolved.source.job_name.clone(),
            files: bundle.files().into_iter().map(|(name, _)| name).collect(),
            content_sha256: bundle.content_hash.clone(),
            warnings: warnings.findings.clone(),
        }
    }
}

/// Body of `POST /api/analyze`. `methods` may be a list or a comma-separated string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalyzeBody {
    pub folder: String,
    #[serde(default = "all_methods", deserialize_with = "methods_de")]
    pub methods: Vec<String>,
    #[serde(default = "default_selection")]
    pub selection: String,
    #[serde(default = "default_title")]
    pub title: String,
    #[serde(default = "yes")]
    pub superpose: bool,
    #[serde(default)]
    pub rmsf_per_residue: bool,
}

fn all_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}

fn default_selection() -> String {
    "all".into()
}

fn default_title() -> String {
    "Analysis".into()
}

fn yes() -> bool {
    true
}

fn methods_de<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        List(Vec<String>),
        Joined(String),
    }
    Ok(match Either::deserialize(d)? {
        Either::List(v) => v,
        Either::Joined(s) => s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect(),
    })
}

impl AnalyzeBody {
    pub fn to_request(&self) -> Result<AnalysisRequest, String> {
        Ok(AnalysisRequest {
            methods: Method::parse_list(&self.methods.join(","))?,
            selection: self.selection.clone(),
            title: self.title.clone(),
            superpose: self.superpose,
            mass_weighted_rog: true,
            rmsf_per_residue: self.rmsf_per_residue,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JobResult {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisJob {
    pub id: String,
    pub state: JobState,
    pub request: AnalyzeBody,
    pub result: Option<JobResult>,
    /// 0 when queued, 1 when finished either way.
    pub progress: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JobCreated {
    pub api_version: u32,
    pub id: String,
}

/// `deckforge expand --json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpandBody {
    pub api_version: u32,
    pub job_name: String,
    pub out_dir: String,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_sha256: Option<String>,
}

/// `deckforge analyze --json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalyzeResultBody {
    pub api_version: u32,
    pub methods: Vec<String>,
    pub out_dir: String,
    pub files: Vec<String>,
}

/// `deckforge inspect --json`. `kind` is one of `structure`, `trajectory`,
/// `mdp`, `setup_script`, `spec`, `bundle`; `details` depends on it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InspectBody {
    pub api_version: u32,
    pub path: String,
    pub kind: String,
    pub details: serde_json::Map<String, serde_json::Value>,
}
