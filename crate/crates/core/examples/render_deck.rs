//! Resolve a spec through the defaults ledger and render its `.mdp` and PBS files.

use deckforge::deck::{render_deck, render_pbs};
use deckforge::spec::{resolve, SimulationSpec, Stage};

pub fn main() {
    let resolved = resolve(&SimulationSpec::glyg1(295.0)).expect("GlyG1 resolves");
    for stage in Stage::ALL {
        println!("{:<4} {:>2} parameters", stage.title(), resolved.table(*stage).len());
    }
    println!("EM tolerance: {}", resolved.value(Stage::Em, "emtol").unwrap_or("?"));

    let job = render_pbs(&resolved);
    println!("{} directives, {} commands", job.directives.len(), job.commands.len());
    for file in render_deck(&resolved) {
        println!("{:<10} {:>5} bytes", file.name, file.contents.len());
    }
    let md = render_deck(&resolved).into_iter().find(|f| f.name == "md.mdp").expect("md.mdp rendered");
    println!("{}", md.contents.lines().take(3).collect::<Vec<_>>().join("\n"));
}
