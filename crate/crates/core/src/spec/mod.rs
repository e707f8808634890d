//! The user-facing simulation parameter model and its resolution into
//! complete per-stage configuration tables.
//!
//! Resolution layers three sources, last one wins:
//!
//! 1. the defaults ledger (`ledger/defaults.ledger`, or the file named by
//!    `DECKFORGE_DEFAULTS`),
//! 2. keys bound to user fields (temperature, pressure, timestep, run lengths, seed),
//! 3. advanced overrides from the spec's `[advanced.<stage>]` sections.

mod file;
mod ledger;
mod metadata;
mod normalize;
pub(crate) mod resolve;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use file::{parse_spec_text, render_spec_text, SpecFileError};
pub use ledger::{DefaultsLedger, LedgerError, DEFAULTS_ENV, PASS_THROUGH_KEYS};
pub use metadata::{field_metadata, FieldMeta, Widget};
pub use normalize::{normalize_value, NormalizationError};
pub use resolve::{
    resolve, resolve_with, stage_parameters, Derived, ResolveError, ResolvedSpec, EQUILIBRATION_PS,
    TEMPERATURE_KEYS,
};
pub use validate::{validate, validate_with, Finding, Severity, ValidationReport};

macro_rules! labelled_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal / $engine:literal [$($alias:literal),*]),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Display label, also the canonical spec-file token.
            pub fn label(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }

            /// Token passed to the engine's command-line tools.
            pub fn engine_name(self) -> &'static str {
                match self { $($name::$variant => $engine),+ }
            }

            pub(crate) fn aliases(self) -> &'static [&'static str] {
                match self { $($name::$variant => &[$($alias),*]),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let needle = s.trim().to_ascii_lowercase();
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| {
                        v.label().to_ascii_lowercase() == needle
                            || v.engine_name() == needle
                            || v.aliases().contains(&needle.as_str())
                    })
                    .ok_or_else(|| {
                        let accepted: Vec<&str> = $name::ALL.iter().map(|v| v.label()).collect();
                        format!("expected one of {}", accepted.join(", "))
                    })
            }
        }
    };
}

labelled_enum!(Forcefield {
    OplsAa => "OPLS-AA" / "oplsaa" ["opls"],
    Amber99sb => "AMBER99SB" / "amber99sb" [],
    Charmm27 => "CHARMM27" / "charmm27" [],
    Gromos54a7 => "GROMOS54A7" / "gromos54a7" [],
});

labelled_enum!(WaterModel {
    Tip3p => "TIP3P" / "tip3p" [],
    Spc => "SPC" / "spc" [],
    Spce => "SPCE" / "spce" ["spc/e"],
    Tip4p => "TIP4P" / "tip4p" [],
});

labelled_enum!(BoxType {
    Cubic => "cubic" / "cubic" [],
    Dodecahedron => "dodecahedron" / "dodecahedron" ["rhombic dodecahedron"],
    Octahedron => "octahedron" / "octahedron" ["truncated octahedron"],
});

labelled_enum!(
    /// One phase of the simulation workflow, each with its own `.mdp` file.
    Stage {
        Ions => "ions" / "ions" [],
        Em => "em" / "em" ["minimisation", "minimization"],
        Nvt => "nvt" / "nvt" [],
        Npt => "npt" / "npt" [],
        Md => "md" / "md" ["production"],
    }
);

impl WaterModel {
    /// Pre-equilibrated solvent box shipped with the engine.
    pub fn solvent_box(self) -> &'static str {
        match self {
            WaterModel::Tip4p => "tip4p.gro",
            _ => "spc216.gro",
        }
    }
}

impl Stage {
    pub fn file_name(self) -> String {
        format!("{}.mdp", self.engine_name())
    }

    /// Conventional upper-case name used in reports (`EM`, `NVT`, ...).
    pub fn title(self) -> &'static str {
        match self {
            Stage::Ions => "Ions",
            Stage::Em => "EM",
            Stage::Nvt => "NVT",
            Stage::Npt => "NPT",
            Stage::Md => "MD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareRequest {
    pub nodes: i64,
    pub cores_per_node: i64,
    /// Memory per node in GB.
    pub memory_gb: f64,
    pub gpus: i64,
    pub walltime_hours: f64,
    pub queue: String,
    pub project_code: String,
    pub email: Option<String>,
    pub engine_module: String,
}

impl Default for HardwareRequest {
    fn default() -> Self {
        HardwareRequest {
            nodes: 1,
            cores_per_node: 16,
            memory_gb: 32.0,
            gpus: 0,
            walltime_hours: 24.0,
            queue: "normal".to_string(),
            project_code: "default".to_string(),
            email: None,
            engine_module: "gromacs/2024.5".to_string(),
        }
    }
}

/// Per-stage advanced overrides, `key -> value`.
pub type AdvancedOverrides = BTreeMap<Stage, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSpec {
    pub job_name: String,
    pub forcefield: Forcefield,
    pub water_model: WaterModel,
    pub temperature_k: f64,
    pub pressure_bar: f64,
    pub timestep_fs: f64,
    pub production_ns: f64,
    pub box_type: BoxType,
    pub box_padding_nm: f64,
    pub neutralize: bool,
    pub positive_ion: String,
    pub negative_ion: String,
    pub molecule_count: i64,
    /// `None` lets the engine choose the velocity seed.
    pub random_seed: Option<i64>,
    /// File name of the solute structure inside the bundle.
    pub structure_file: Option<String>,
    pub hardware: HardwareRequest,
    pub advanced: AdvancedOverrides,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            job_name: "simulation".to_string(),
            forcefield: Forcefield::OplsAa,
            water_model: WaterModel::Tip3p,
            temperature_k: 300.0,
            pressure_bar: 1.0,
            timestep_fs: 2.0,
            production_ns: 10.0,
            box_type: BoxType::Cubic,
            box_padding_nm: 1.0,
            neutralize: true,
            positive_ion: "NA".to_string(),
            negative_ion: "CL".to_string(),
            molecule_count: 1,
            random_seed: None,
            structure_file: None,
            hardware: HardwareRequest::default(),
            advanced: AdvancedOverrides::new(),
        }
    }
}

impl SimulationSpec {
    /// Structure file name used in generated commands.
    pub fn structure_file_name(&self) -> String {
        self.structure_file
            .clone()
            .unwrap_or_else(|| format!("{}.pdb", self.job_name))
    }

    /// Single GlyG1 protein in water at 1 bar for 10 ns, at the given temperature.
    pub fn glyg1(temperature_k: f64) -> Self {
        SimulationSpec {
            job_name: "GlyG1".to_string(),
            temperature_k,
            pressure_bar: 1.0,
            timestep_fs: 2.0,
            production_ns: 10.0,
            neutralize: true,
            structure_file: Some("glyg1.pdb".to_string()),
            hardware: HardwareRequest {
                email: Some("researcher@example.org".to_string()),
                ..HardwareRequest::default()
            },
            ..SimulationSpec::default()
        }
    }
}

/// Formats a float in its shortest round-trip decimal form (`2` for 2.0).
pub(crate) fn format_real(value: f64) -> String {
    format!("{value}")
}
