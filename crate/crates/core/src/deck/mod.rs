//! Deck rendering: the five `.mdp` files, the PBS job script, the portable
//! setup script, and the two-file reproducibility bundle.

mod bundle;
mod manifest;
mod setup;
pub(crate) mod template;

use serde::{Deserialize, Serialize};

use crate::mdp::{canonical_key, parse_entries, render_entries, MdpEntry, MdpError, KEY_WIDTH};
use crate::spec::resolve::{binding_for, bound_variables, repeat_per_group};
use crate::spec::{format_real, ResolvedSpec, Stage};
use template::{lit, var, Line, Vars};

pub use bundle::{
    content_hash, expand_bundle, expand_script, generate_bundle, pack_bundle, verify_bundle, BundleError,
    DeckBundle, ExpandedBundle, GenerateError,
};
pub use manifest::{parse_manifest, Manifest, MANIFEST_BEGIN, MANIFEST_END, SCHEMA_VERSION};
pub use setup::render_setup_script;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdpDocument {
    pub stage: Stage,
    pub entries: Vec<MdpEntry>,
}

impl MdpDocument {
    pub fn for_stage(resolved: &ResolvedSpec, stage: Stage) -> Self {
        MdpDocument { stage, entries: resolved.table(stage).to_vec() }
    }
}

pub fn render_mdp(doc: &MdpDocument) -> String {
    render_entries(&doc.entries)
}

pub fn parse_mdp(text: &str) -> Result<Vec<MdpEntry>, MdpError> {
    parse_entries(text)
}

/// A rendered PBS script with its effective directive and command lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobScript {
    pub directives: Vec<String>,
    pub commands: Vec<String>,
    pub text: String,
}

pub fn render_pbs(resolved: &ResolvedSpec) -> JobScript {
    let vars = parameters(resolved);
    let (directives, commands) = pbs_template(resolved);
    JobScript {
        directives: directives.iter().map(|l| vars.eval(l)).collect(),
        commands: commands.iter().map(|l| vars.eval(l)).collect(),
        text: vars.render(&pbs_lines(&directives, &commands)),
    }
}

pub fn pbs_file_name(resolved: &ResolvedSpec) -> String {
    format!("{}.pbs", resolved.source.job_name)
}

pub fn setup_script_name(resolved: &ResolvedSpec) -> String {
    format!("{}_setup.sh", resolved.source.job_name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeckFile {
    pub name: String,
    pub contents: String,
}

/// The six deck files in generation order: five `.mdp` files then the PBS script.
pub fn render_deck(resolved: &ResolvedSpec) -> Vec<DeckFile> {
    let mut files: Vec<DeckFile> = Stage::ALL
        .iter()
        .map(|s| DeckFile {
            name: s.file_name(),
            contents: render_mdp(&MdpDocument::for_stage(resolved, *s)),
        })
        .collect();
    files.push(DeckFile { name: pbs_file_name(resolved), contents: render_pbs(resolved).text });
    files
}

pub(crate) fn mdp_var_name(stage: Stage, key: &str) -> String {
    let key: String = canonical_key(key)
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("MDP_{}_{}", stage.engine_name().to_ascii_uppercase(), key)
}

fn walltime(hours: f64) -> String {
    let secs = (hours * 3600.0).round() as i64;
    format!("{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

fn memory(gb: f64) -> String {
    if gb.fract() == 0.0 {
        format!("{}gb", gb as i64)
    } else {
        format!("{}mb", (gb * 1024.0).round() as i64)
    }
}

/// Every value the deck depends on, as named shell variables.
pub(crate) fn parameters(resolved: &ResolvedSpec) -> Vars {
    let spec = &resolved.source;
    let hw = &spec.hardware;
    let mut v = Vars::default();
    v.set("JOB_NAME", spec.job_name.clone());
    v.set("STRUCTURE_FILE", spec.structure_file_name());
    v.set("FORCEFIELD", spec.forcefield.engine_name());
    v.set("WATER_MODEL", spec.water_model.engine_name());
    v.set("SOLVENT_BOX", spec.water_model.solvent_box());
    v.set("BOX_TYPE", spec.box_type.engine_name());
    v.set("BOX_PADDING_NM", format_real(spec.box_padding_nm));
    v.set("POSITIVE_ION", spec.positive_ion.clone());
    v.set("NEGATIVE_ION", spec.negative_ion.clone());
    v.set("MOLECULE_COUNT", spec.molecule_count.to_string());
    if spec.molecule_count > 1 {
        v.set("EXTRA_MOLECULES", (spec.molecule_count - 1).to_string());
    }
    for (name, value) in bound_variables(spec) {
        v.set(name, value);
    }
    v.set("NODES", hw.nodes.to_string());
    v.set("CORES_PER_NODE", hw.cores_per_node.to_string());
    v.set("MEMORY", memory(hw.memory_gb));
    v.set("GPUS", hw.gpus.to_string());
    v.set("WALLTIME", walltime(hw.walltime_hours));
    v.set("QUEUE", hw.queue.clone());
    v.set("PROJECT_CODE", hw.project_code.clone());
    if let Some(email) = &hw.email {
        v.set("EMAIL", email.clone());
    }
    v.set("ENGINE_MODULE", hw.engine_module.clone());

    for stage in Stage::ALL {
        for entry in resolved.table(*stage) {
            let name = mdp_var_name(*stage, &entry.key);
            let bound = binding_for(*stage, &entry.key)
                .filter(|b| entry.value == repeat_per_group(v.get(b), &entry.value));
            match bound {
                Some(b) => {
                    let groups = entry.value.split_whitespace().count().max(1);
                    let mut parts = Vec::new();
                    for i in 0..groups {
                        if i > 0 {
                            parts.push(lit(" "));
                        }
                        parts.push(var(b));
                    }
                    v.define(name, parts);
                }
                None => v.set(name, entry.value.clone()),
            }
        }
    }
    v
}

pub(crate) fn mdp_template(stage: Stage, entries: &[MdpEntry]) -> Vec<Line> {
    entries
        .iter()
        .map(|e| {
            let mut line = vec![lit(format!("{:<width$}= ", e.key, width = KEY_WIDTH)), var(mdp_var_name(stage, &e.key))];
            if !e.comment.is_empty() {
                line.push(lit(format!(" ; {}", e.comment)));
            }
            line
        })
        .collect()
}

/// Directive and command templates of the PBS script.
pub(crate) fn pbs_template(resolved: &ResolvedSpec) -> (Vec<Line>, Vec<Line>) {
    let spec = &resolved.source;
    let hw = &spec.hardware;

    let mut select = vec![
        lit("#PBS -l select="),
        var("NODES"),
        lit(":ncpus="),
        var("CORES_PER_NODE"),
        lit(":mem="),
        var("MEMORY"),
    ];
    if hw.gpus > 0 {
        select.extend([lit(":ngpus="), var("GPUS")]);
    }
    let mut directives = vec![
        vec![lit("#PBS -N "), var("JOB_NAME")],
        select,
        vec![lit("#PBS -l walltime="), var("WALLTIME")],
        vec![lit("#PBS -P "), var("PROJECT_CODE")],
        vec![lit("#PBS -q "), var("QUEUE")],
    ];
    if hw.email.is_some() {
        directives.push(vec![lit("#PBS -m abe -M "), var("EMAIL")]);
    }

    let mut commands: Vec<Line> = vec![
        vec![lit("cd \"$PBS_O_WORKDIR\"")],
        vec![lit("module load "), var("ENGINE_MODULE")],
        vec![
            lit("gmx pdb2gmx -f "),
            var("STRUCTURE_FILE"),
            lit(" -o processed.gro -p topol.top -ff "),
            var("FORCEFIELD"),
            lit(" -water "),
            var("WATER_MODEL"),
            lit(" -ignh"),
        ],
    ];
    let box_out = if spec.molecule_count > 1 { "box.gro" } else { "newbox.gro" };
    commands.push(vec![
        lit("gmx editconf -f processed.gro -o "),
        lit(box_out),
        lit(" -c -d "),
        var("BOX_PADDING_NM"),
        lit(" -bt "),
        var("BOX_TYPE"),
    ]);
    if spec.molecule_count > 1 {
        commands.push(vec![
            lit("gmx insert-molecules -f box.gro -ci processed.gro -nmol "),
            var("EXTRA_MOLECULES"),
            lit(" -o newbox.gro && sed -i '$ s/[0-9][0-9]*$/"),
            var("MOLECULE_COUNT"),
            lit("/' topol.top"),
        ]);
    }
    commands.push(vec![
        lit("gmx solvate -cp newbox.gro -cs "),
        var("SOLVENT_BOX"),
        lit(" -o solv.gro -p topol.top"),
    ]);
    if spec.neutralize {
        commands.push(vec![lit("gmx grompp -f ions.mdp -c solv.gro -p topol.top -o ions.tpr")]);
        commands.push(vec![
            lit("echo SOL | gmx genion -s ions.tpr -o solv_ions.gro -p topol.top -pname "),
            var("POSITIVE_ION"),
            lit(" -nname "),
            var("NEGATIVE_ION"),
            lit(" -neutral"),
        ]);
    } else {
        commands.push(vec![lit("cp solv.gro solv_ions.gro")]);
    }
    for text in [
        "gmx grompp -f em.mdp -c solv_ions.gro -p topol.top -o em.tpr",
        "gmx mdrun -v -deffnm em",
        "gmx grompp -f nvt.mdp -c em.gro -r em.gro -p topol.top -o nvt.tpr",
        "gmx mdrun -deffnm nvt",
        "gmx grompp -f npt.mdp -c nvt.gro -r nvt.gro -t nvt.cpt -p topol.top -o npt.tpr",
        "gmx mdrun -deffnm npt",
        "gmx grompp -f md.mdp -c npt.gro -t npt.cpt -p topol.top -o md.tpr",
        "gmx mdrun -deffnm md",
        "echo 1 0 | gmx trjconv -s md.tpr -f md.xtc -o md_noPBC.xtc -pbc mol -center",
        "mkdir -p Analysis && mv md_noPBC.xtc md.gro Analysis/",
    ] {
        commands.push(vec![lit(text)]);
    }
    (directives, commands)
}

pub(crate) fn pbs_lines(directives: &[Line], commands: &[Line]) -> Vec<Line> {
    let mut lines = vec![vec![lit("#!/bin/bash")]];
    lines.extend(directives.iter().cloned());
    lines.push(Vec::new());
    lines.extend(commands.iter().cloned());
    lines
}
