//! The post-run workflow: a folder with a structure and an XTC in, CSVs and an SVG out.

use deckforge::analysis::{analyze_folder, AnalysisRequest, Method};
use deckforge::structure::parse_pdb;
use deckforge::traj::{synthetic_trajectory, write_xtc};

const PDB: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/glyg1.pdb"));

pub fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let folder = work.path().join("Analysis");
    std::fs::create_dir(&folder).expect("folder");
    let structure = parse_pdb(PDB).expect("fixture parses");
    std::fs::write(folder.join("md.pdb"), PDB).expect("structure written");
    let traj = synthetic_trajectory(&structure, 100, 10.0);
    std::fs::write(folder.join("md_noPBC.xtc"), write_xtc(&traj, 1000.0).expect("fits")).expect("xtc written");

    let request = AnalysisRequest {
        methods: Method::ALL.to_vec(),
        selection: "backbone".into(),
        title: "GlyG1".into(),
        ..AnalysisRequest::default()
    };
    let (output, files) = analyze_folder(&folder, &request, &work.path().join("plots")).expect("analysis runs");
    for s in &output.series {
        println!("{:<5} {} points", s.method.label(), s.values.len());
    }
    for f in files {
        println!("wrote {}", f.file_name().unwrap_or_default().to_string_lossy());
    }
}
