//! Validate a spec, normalize wizard-style inputs, and read the spec file format.

use deckforge::spec::{normalize_value, parse_spec_text, render_spec_text, validate, SimulationSpec};

pub fn main() {
    let mut spec = SimulationSpec::glyg1(295.0);
    println!("GlyG1 at 295 K: {} findings", validate(&spec).findings.len());

    spec.temperature_k = -10.0;
    spec.timestep_fs = 5.0;
    for f in validate(&spec).findings {
        println!("{:?} {}: {}", f.severity, f.field, f.message);
    }

    for (field, input) in [("random_seed", "None"), ("integrator", "Steepest descent"), ("gen-vel", "true")] {
        match normalize_value(field, input) {
            Ok(v) => println!("{field}: {input:?} -> {v:?}"),
            Err(e) => println!("{field}: {input:?} rejected: {e}"),
        }
    }

    let text = render_spec_text(&SimulationSpec::glyg1(325.0));
    let parsed = parse_spec_text(&text).expect("rendered spec parses");
    println!("spec file has {} lines; round trip equal: {}", text.lines().count(), parsed == SimulationSpec::glyg1(325.0));
}
