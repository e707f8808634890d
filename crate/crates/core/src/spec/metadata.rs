use serde::Serialize;

use super::{BoxType, Forcefield, SimulationSpec, WaterModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Widget {
    Text,
    Number,
    Slider,
    Dropdown,
    Checkbox,
}

/// Form metadata for one spec field, served to the wizard UI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldMeta {
    pub path: &'static str,
    pub label: &'static str,
    pub tooltip: String,
    pub unit: Option<&'static str>,
    pub widget: Widget,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<&'static str>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Range outside which validation warns.
    pub typical: Option<(f64, f64)>,
    pub default: String,
    pub advanced: bool,
}

struct Row {
    path: &'static str,
    label: &'static str,
    tooltip: &'static str,
    unit: Option<&'static str>,
    widget: Widget,
    min: Option<f64>,
    max: Option<f64>,
    typical: Option<(f64, f64)>,
}

const fn row(
    path: &'static str,
    label: &'static str,
    tooltip: &'static str,
    unit: Option<&'static str>,
    widget: Widget,
) -> Row {
    Row { path, label, tooltip, unit, widget, min: None, max: None, typical: None }
}

fn labels<T: Copy>(all: &[T], f: impl Fn(T) -> &'static str) -> Vec<&'static str> {
    all.iter().map(|v| f(*v)).collect()
}

pub fn field_metadata() -> Vec<FieldMeta> {
    let d = SimulationSpec::default();
    let rows: Vec<(Row, String, Vec<&'static str>)> = vec![
        (row("job_name", "Job name", "Name used for the job script and output files, e.g. GlyG1", None, Widget::Text), d.job_name.clone(), vec![]),
        (row("forcefield", "Forcefield", "Parameter set the engine uses for bonded and non-bonded terms", None, Widget::Dropdown), d.forcefield.label().into(), labels(Forcefield::ALL, Forcefield::label)),
        (row("water_model", "Water model", "Explicit solvent model; most forcefields expect a 3-point model such as TIP3P", None, Widget::Dropdown), d.water_model.label().into(), labels(WaterModel::ALL, WaterModel::label)),
        (Row { min: Some(0.0), typical: Some((250.0, 400.0)), ..row("temperature", "Temperature", "Simulation temperature in K; typical range 250-400 K (e.g. 295 K for room temperature)", Some("K"), Widget::Number) }, format!("{}", d.temperature_k), vec![]),
        (Row { min: Some(0.0), typical: Some((0.5, 1000.0)), ..row("pressure", "Pressure", "Reference pressure in bar; 1 bar is atmospheric", Some("bar"), Widget::Number) }, format!("{}", d.pressure_bar), vec![]),
        (Row { min: Some(0.5), max: Some(10.0), typical: Some((1.0, 5.0)), ..row("timestep", "Timestep", "Integration step in fs; typically 1-5 fs, 2 fs with h-bond constraints", Some("fs"), Widget::Slider) }, format!("{}", d.timestep_fs), vec![]),
        (Row { min: Some(0.0), ..row("production_duration", "Simulation runtime", "Length of the production run in ns, e.g. 10 ns", Some("ns"), Widget::Number) }, format!("{}", d.production_ns), vec![]),
        (row("box_type", "Box shape", "Periodic box shape around the solute", None, Widget::Dropdown), d.box_type.label().into(), labels(BoxType::ALL, BoxType::label)),
        (Row { min: Some(0.0), max: Some(3.0), typical: Some((1.0, 3.0)), ..row("box_padding", "Box padding", "Minimum distance between solute and box edge in nm", Some("nm"), Widget::Slider) }, format!("{}", d.box_padding_nm), vec![]),
        (row("neutralize", "Neutralize", "Replace solvent molecules with counter-ions until the net charge is zero", None, Widget::Checkbox), d.neutralize.to_string(), vec![]),
        (row("positive_ion", "Positive ion", "Cation species used for neutralization, e.g. NA", None, Widget::Text), d.positive_ion.clone(), vec![]),
        (row("negative_ion", "Negative ion", "Anion species used for neutralization, e.g. CL", None, Widget::Text), d.negative_ion.clone(), vec![]),
        (Row { min: Some(1.0), ..row("molecule_count", "Molecule count", "Copies of the inserted structure", None, Widget::Number) }, d.molecule_count.to_string(), vec![]),
        (row("random_seed", "Random seed", "Velocity-generation seed; None lets the engine pick one (-1)", None, Widget::Text), "None".into(), vec![]),
        (Row { min: Some(1.0), ..row("hardware.nodes", "Nodes", "Compute nodes requested", None, Widget::Number) }, d.hardware.nodes.to_string(), vec![]),
        (Row { min: Some(1.0), ..row("hardware.cores_per_node", "CPU cores per node", "CPU cores requested on each node", None, Widget::Number) }, d.hardware.cores_per_node.to_string(), vec![]),
        (Row { min: Some(0.0), ..row("hardware.memory", "Memory", "Memory per node in GB", Some("GB"), Widget::Number) }, format!("{}", d.hardware.memory_gb), vec![]),
        (Row { min: Some(0.0), ..row("hardware.gpus", "GPUs", "GPUs per node; 0 runs on CPU only", None, Widget::Number) }, d.hardware.gpus.to_string(), vec![]),
        (Row { min: Some(0.0), typical: Some((0.0, 720.0)), ..row("hardware.walltime", "Walltime", "Maximum job length in hours", Some("h"), Widget::Number) }, format!("{}", d.hardware.walltime_hours), vec![]),
        (row("hardware.queue", "Queue", "Scheduler queue name", None, Widget::Text), d.hardware.queue.clone(), vec![]),
        (row("hardware.project_code", "Project code", "Allocation the job is charged to", None, Widget::Text), d.hardware.project_code.clone(), vec![]),
        (row("hardware.email", "E-mail", "Optional address for scheduler notifications", None, Widget::Text), String::new(), vec![]),
        (row("hardware.engine_module", "Engine module", "Environment module providing the engine, e.g. gromacs/2024.5", None, Widget::Text), d.hardware.engine_module.clone(), vec![]),
    ];
    rows.into_iter()
        .map(|(r, default, choices)| FieldMeta {
            path: r.path,
            label: r.label,
            tooltip: r.tooltip.to_string(),
            unit: r.unit,
            widget: r.widget,
            choices,
            min: r.min,
            max: r.max,
            typical: r.typical,
            default,
            advanced: r.path.starts_with("hardware."),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_tooltip_has_units_and_range() {
        let meta = field_metadata();
        let t = meta.iter().find(|m| m.path == "temperature").unwrap();
        assert_eq!(t.unit, Some("K"));
        assert!(t.tooltip.contains("250-400 K"));
    }

    #[test]
    fn limited_choice_fields_are_dropdowns() {
        let meta = field_metadata();
        let w = meta.iter().find(|m| m.path == "water_model").unwrap();
        assert_eq!(w.widget, Widget::Dropdown);
        assert_eq!(w.choices, vec!["TIP3P", "SPC", "SPCE", "TIP4P"]);
    }
}
