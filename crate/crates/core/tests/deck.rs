use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use deckforge::deck::{
    content_hash, expand_bundle, expand_script, pack_bundle, parse_mdp, render_deck, render_mdp, render_pbs,
    render_setup_script, verify_bundle, BundleError, MdpDocument,
};
use deckforge::mdp::MdpEntry;
use deckforge::spec::{resolve, ResolvedSpec, SimulationSpec, Stage};
use proptest::prelude::*;

const PDB: &[u8] = include_bytes!("data/glyg1.pdb");

fn glyg1(t: f64) -> ResolvedSpec {
    resolve(&SimulationSpec::glyg1(t)).unwrap()
}

fn packed_dir(resolved: &ResolvedSpec) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    pack_bundle(resolved, "glyg1.pdb", PDB).unwrap().write_to(dir.path()).unwrap();
    dir
}

fn script_path(dir: &Path) -> std::path::PathBuf {
    dir.join("GlyG1_setup.sh")
}

#[test]
fn mdp_round_trip_and_edge_cases() {
    let doc = MdpDocument::for_stage(&glyg1(295.0), Stage::Md);
    assert_eq!(parse_mdp(&render_mdp(&doc)).unwrap(), doc.entries);

    let bare = MdpDocument { stage: Stage::Em, entries: vec![MdpEntry::new("emtol", "500.0", "")] };
    assert_eq!(render_mdp(&bare), "emtol                   = 500.0\n");
    assert_eq!(parse_mdp("; pure comment line\n\ndt = 0.002\n").unwrap(), vec![MdpEntry::new("dt", "0.002", "")]);
}

#[test]
fn setup_script_materializes_the_deck() {
    let resolved = glyg1(295.0);
    let work = tempfile::tempdir().unwrap();
    let script = work.path().join("setup.sh");
    std::fs::write(&script, render_setup_script(&resolved)).unwrap();
    let out_dir = work.path().join("deck");
    std::fs::create_dir(&out_dir).unwrap();
    let output = Command::new("sh").arg(&script).current_dir(&out_dir).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(String::from_utf8(output.stdout).unwrap(), "qsub GlyG1.pbs\n");

    let produced: BTreeSet<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(produced.len(), 6);
    for file in render_deck(&resolved) {
        let bytes = std::fs::read(out_dir.join(&file.name)).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), file.contents, "{}", file.name);
    }
}

#[test]
fn setup_script_survives_awkward_values() {
    let mut spec = SimulationSpec::glyg1(310.5);
    spec.molecule_count = 3;
    spec.neutralize = false;
    spec.hardware.gpus = 1;
    spec.hardware.memory_gb = 7.25;
    let md = spec.advanced.entry(Stage::Md).or_default();
    md.insert("tc-grps".into(), "Protein Non-Protein".into());
    md.insert("ref_t".into(), "310.5 310.5".into());
    md.insert("tau_t".into(), "0.1 0.1".into());
    md.insert("comm-grps".into(), "$HOME `id` \\ 'x'".into());
    let resolved = resolve(&spec).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("setup.sh");
    std::fs::write(&script, render_setup_script(&resolved)).unwrap();
    let status = Command::new("sh").arg(&script).current_dir(dir.path()).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for file in render_deck(&resolved) {
        assert_eq!(std::fs::read_to_string(dir.path().join(&file.name)).unwrap(), file.contents);
    }
}

#[test]
fn two_temperature_diff_touches_only_temperature_lines() {
    let a = render_deck(&glyg1(295.0));
    let b = render_deck(&glyg1(325.0));
    let mut changed = 0;
    for (fa, fb) in a.iter().zip(&b) {
        assert_eq!(fa.name, fb.name);
        let (la, lb): (Vec<&str>, Vec<&str>) = (fa.contents.lines().collect(), fb.contents.lines().collect());
        assert_eq!(la.len(), lb.len());
        for (x, y) in la.iter().zip(&lb) {
            if x != y {
                changed += 1;
                let key = x.split('=').next().unwrap().trim().replace('_', "-");
                assert!(key == "ref-t" || key == "gen-temp", "{}: {x:?} vs {y:?}", fa.name);
            }
        }
    }
    // ref_t in NVT, NPT, MD and gen_temp in NVT
    assert_eq!(changed, 4);
}

#[test]
fn pack_expand_identity_and_determinism() {
    let resolved = glyg1(295.0);
    let a = pack_bundle(&resolved, "glyg1.pdb", PDB).unwrap();
    let b = pack_bundle(&resolved, "glyg1.pdb", PDB).unwrap();
    assert_eq!(a.content_hash, b.content_hash);
    assert_eq!(a.setup_script, b.setup_script);
    assert_eq!(a.content_hash.len(), 64);
    assert!(a.content_hash.chars().all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c)));
    assert_eq!(a.content_hash, content_hash(&a.setup_script, "glyg1.pdb", PDB));

    let dir = tempfile::tempdir().unwrap();
    a.write_to(dir.path()).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    let expanded = expand_bundle(dir.path()).unwrap();
    assert_eq!(expanded.resolved, resolved);
    assert_eq!(expanded.files, render_deck(&resolved));
    assert_eq!(expanded.content_hash.as_deref(), Some(a.content_hash.as_str()));
}

#[test]
fn crlf_checkout_keeps_the_hash() {
    let bundle = pack_bundle(&glyg1(295.0), "glyg1.pdb", PDB).unwrap();
    let crlf_script = bundle.setup_script.replace('\n', "\r\n");
    let crlf_pdb = String::from_utf8(PDB.to_vec()).unwrap().replace('\n', "\r\n");
    assert!(expand_script(&crlf_script, crlf_pdb.as_bytes()).is_ok());
}

#[test]
fn expand_errors() {
    let dir = packed_dir(&glyg1(295.0));
    std::fs::write(dir.path().join("glyg1.pdb"), b"ATOM      1  N   GLY A   1       0.000   0.000   0.000\n").unwrap();
    assert!(matches!(expand_bundle(dir.path()), Err(BundleError::HashMismatch { .. })));

    let dir = packed_dir(&glyg1(295.0));
    let script = std::fs::read_to_string(script_path(dir.path())).unwrap();
    let stripped: String = script
        .lines()
        .filter(|l| !l.starts_with('#') || l.starts_with("#!"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(script_path(dir.path()), stripped).unwrap();
    assert!(matches!(expand_bundle(dir.path()), Err(BundleError::ManifestMissing)));

    assert!(matches!(
        pack_bundle(&glyg1(295.0), "glyg1.pdb", b"not a structure"),
        Err(BundleError::StructureUnreadable(_))
    ));
}

#[test]
fn verify_findings() {
    let dir = packed_dir(&glyg1(295.0));
    assert!(verify_bundle(dir.path()).findings.is_empty());

    let script = std::fs::read_to_string(script_path(dir.path())).unwrap();
    std::fs::write(script_path(dir.path()), script.replace("# temperature = 295\n", "# temperature = 300\n")).unwrap();
    let report = verify_bundle(dir.path());
    assert!(report.findings.iter().any(|f| f.message.starts_with("hash mismatch")), "{}", report.summary());

    std::fs::write(script_path(dir.path()), script.replace("# temperature = 295\n", "# temperature = -5\n")).unwrap();
    let report = verify_bundle(dir.path());
    assert!(report.errors().any(|f| f.field == "temperature"), "{}", report.summary());

    std::fs::write(dir.path().join("extra.txt"), "x").unwrap();
    assert!(verify_bundle(dir.path()).findings.iter().any(|f| f.message.contains("expected 2")));
}

fn hardware_strategy() -> impl Strategy<Value = SimulationSpec> {
    (
        1i64..64,
        1i64..128,
        1u32..2048,
        0i64..8,
        1u32..2000,
        proptest::option::of("[a-z]{1,8}@[a-z]{1,8}\\.org"),
        any::<bool>(),
        1i64..6,
    )
        .prop_map(|(nodes, cores, mem, gpus, wall, email, neutralize, molecules)| {
            let mut spec = SimulationSpec::default();
            spec.hardware.nodes = nodes;
            spec.hardware.cores_per_node = cores;
            spec.hardware.memory_gb = f64::from(mem) / 4.0;
            spec.hardware.gpus = gpus;
            spec.hardware.walltime_hours = f64::from(wall) / 10.0;
            spec.hardware.email = email;
            spec.neutralize = neutralize;
            spec.molecule_count = molecules;
            spec
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn job_script_counts_stay_in_range(spec in hardware_strategy()) {
        let job = render_pbs(&resolve(&spec).unwrap());
        prop_assert!((5..=7).contains(&job.directives.len()));
        prop_assert!((16..=18).contains(&job.commands.len()));
        let expected = if spec.hardware.email.is_some() { 6 } else { 5 };
        prop_assert_eq!(job.directives.len(), expected);
    }
}
