//! The `deckforge` command line.
//!
//! Exit codes: 0 success, 1 operational error (I/O, parse, usage), 2 the
//! input has validation errors. Results go to stdout, diagnostics to stderr.
//! Every failure writes one machine-readable line to stderr first:
//! `error[<code>]: <detail>`, or an [`ErrorBody`] JSON object under `--json`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use deckforge::analysis::{analyze_folder, AnalysisRequest, Method};
use deckforge::deck::{expand_bundle, generate_bundle, parse_manifest, verify_bundle, GenerateError};
use deckforge::mdp::parse_entries;
use deckforge::spec::{parse_spec_text, validate_with, DefaultsLedger, Finding, Severity, SimulationSpec, ValidationReport};
use deckforge::structure::parse_structure_file;
use deckforge::traj::read_xtc;
use deckforge_service::api::{
    AnalyzeResultBody, BundleBody, ErrorBody, ExpandBody, InspectBody, ValidateBody, API_VERSION,
};
use deckforge_service::{ServiceConfig, DEFAULT_PORT, DEFAULT_UPLOAD_CAP};
use serde_json::{json, Map, Value};

#[derive(Debug, Parser)]
#[command(name = "deckforge", version, about = "Reproducible MD simulation decks and trajectory analysis")]
struct Cli {
    /// Print a single JSON document on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a spec file and print its findings.
    Validate {
        spec: PathBuf,
    },
    /// Write the two-file bundle (setup script + structure) for a spec.
    Generate {
        spec: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Materialize the deck files described by a bundle.
    Expand {
        bundle: PathBuf,
        /// Defaults to `<bundle>_deck` next to the bundle.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a bundle's hash, manifest and spec.
    Verify {
        bundle: PathBuf,
    },
    /// Run trajectory analysis on a folder holding one structure and one .xtc.
    Analyze(AnalyzeArgs),
    /// Identify a file or bundle directory and summarize it.
    Inspect {
        path: PathBuf,
    },
    /// Start the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    folder: PathBuf,
    #[arg(long, default_value = "rmsd,rmsf,rog,pca")]
    methods: String,
    #[arg(long = "select", default_value = "all")]
    selection: String,
    #[arg(long, default_value = "Analysis")]
    title: String,
    /// Defaults to the input folder.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report lab-frame deviations without fitting.
    #[arg(long)]
    no_superpose: bool,
    /// Average RMSF over each residue.
    #[arg(long)]
    per_residue: bool,
    /// Unweighted radius of gyration.
    #[arg(long)]
    no_mass_weighting: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Directory of UI assets to serve at `/`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    /// Concurrent analysis jobs; defaults to cores - 1.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_UPLOAD_CAP)]
    max_upload_bytes: usize,
}

/// A failed command: exit code, stable code word, one-line detail, and
/// optional human-oriented lines.
#[derive(Debug)]
struct Failure {
    exit: i32,
    code: &'static str,
    detail: String,
    notes: Vec<String>,
}

impl Failure {
    fn new(exit: i32, code: &'static str, detail: impl Into<String>) -> Self {
        Failure { exit, code, detail: detail.into(), notes: Vec::new() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::new(1, "io", format!("{}: {e}", path.display()))
    }

    fn parse(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::new(1, "parse", format!("{}: {e}", path.display()))
    }

    fn invalid(report: &ValidationReport) -> Self {
        Failure::new(2, "invalid", counts(report))
    }
}

type Outcome = Result<(), Failure>;

/// Runs one invocation; `argv[0]` is the program name. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let json = argv.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let mut failure = Failure::new(1, "usage", first);
            if !json {
                failure.notes.push(e.render().to_string().trim_end().to_string());
            }
            return report_failure(&failure, json, err);
        }
    };
    let result = match cli.command {
        Command::Validate { spec } => validate(&spec, cli.json, out),
        Command::Generate { spec, structure, out: dir } => generate(&spec, &structure, &dir, cli.json, out, err),
        Command::Expand { bundle, out: dir } => expand(&bundle, dir, cli.json, out),
        Command::Verify { bundle } => verify(&bundle, cli.json, out),
        Command::Analyze(args) => analyze(&args, cli.json, out),
        Command::Inspect { path } => inspect(&path, cli.json, out),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => 0,
        Err(f) => report_failure(&f, cli.json, err),
    }
}

fn report_failure(f: &Failure, json: bool, err: &mut dyn Write) -> i32 {
    let detail = f.detail.replace(['\n', '\r'], "; ");
    if json {
        let body = ErrorBody::new(f.code, detail);
        let _ = writeln!(err, "{}", serde_json::to_string(&body).unwrap_or_default());
    } else {
        let _ = writeln!(err, "error[{}]: {detail}", f.code);
        for note in &f.notes {
            let _ = writeln!(err, "{note}");
        }
    }
    f.exit
}

fn emit_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(1, "internal", e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Failure::new(1, "io", format!("stdout: {e}")))
}

fn say(out: &mut dyn Write, text: impl std::fmt::Display) -> Outcome {
    writeln!(out, "{text}").map_err(|e| Failure::new(1, "io", format!("stdout: {e}")))
}

fn finding_line(f: &Finding) -> String {
    let severity = match f.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    match &f.suggestion {
        Some(s) => format!("{severity}: {}: {} (try {s})", f.field, f.message),
        None => format!("{severity}: {}: {}", f.field, f.message),
    }
}

fn counts(report: &ValidationReport) -> String {
    let plural = |n: usize, word: &str| format!("{n} {word}{}", if n == 1 { "" } else { "s" });
    format!("{}, {}", plural(report.errors().count(), "error"), plural(report.warnings().count(), "warning"))
}

fn ledger() -> Result<DefaultsLedger, Failure> {
    DefaultsLedger::from_env().map_err(|e| Failure::new(1, "defaults", e.to_string()))
}

/// Spec files are the `key = value` text format, or JSON when the name ends
/// in `.json` or the text opens with `{`.
fn load_spec(path: &Path) -> Result<SimulationSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(&text).map_err(|e| Failure::parse(path, e))
    } else {
        parse_spec_text(&text).map_err(|e| Failure::parse(path, e))
    }
}

fn validate(path: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    let spec = load_spec(path)?;
    let report = validate_with(&spec, &ledger()?);
    if json {
        emit_json(out, &ValidateBody::from(report.clone()))?;
    } else {
        for f in &report.findings {
            say(out, finding_line(f))?;
        }
        say(out, if report.is_clean() { "spec is valid".to_string() } else { counts(&report) })?;
    }
    if report.has_errors() {
        return Err(Failure::invalid(&report));
    }
    Ok(())
}

fn generate(spec_path: &Path, structure: &Path, dir: &Path, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let spec = load_spec(spec_path)?;
    let bytes = std::fs::read(structure).map_err(|e| Failure::io(structure, e))?;
    let name = structure.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (bundle, report) = generate_bundle(&spec, &ledger()?, name, &bytes).map_err(|e| match e {
        GenerateError::Invalid(report) => {
            let mut f = Failure::invalid(&report);
            f.notes = report.findings.iter().map(finding_line).collect();
            f
        }
        GenerateError::Resolve(e) => Failure::new(2, "invalid", e.to_string()),
        GenerateError::Bundle(e) => Failure::parse(structure, e),
    })?;

    // A bundle is exactly two files, so refuse to mix it into other content.
    let ours: BTreeSet<String> = bundle.files().into_iter().map(|(n, _)| n).collect();
    if let Ok(entries) = std::fs::read_dir(dir) {
        let strangers: Vec<String> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !ours.contains(n))
            .collect();
        if !strangers.is_empty() {
            return Err(Failure::new(1, "out_not_empty", format!("{} already holds {}", dir.display(), strangers.join(", "))));
        }
    }
    bundle.write_to(dir).map_err(|e| Failure::new(1, "io", e.to_string()))?;

    for w in report.warnings() {
        let _ = writeln!(err, "{}", finding_line(w));
    }
    if json {
        emit_json(out, &BundleBody::new(&bundle, &report))
    } else {
        for (name, _) in bundle.files() {
            say(out, dir.join(name).display())?;
        }
        say(out, format!("sha256 {}", bundle.content_hash))
    }
}

fn default_deck_dir(bundle: &Path) -> PathBuf {
    let name = bundle
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty() && n != "." && n != "..")
        .unwrap_or_else(|| "bundle".into());
    bundle.with_file_name(format!("{name}_deck"))
}

fn expand(bundle: &Path, dir: Option<PathBuf>, json: bool, out: &mut dyn Write) -> Outcome {
    if !bundle.is_dir() {
        return Err(Failure::io(bundle, "not a directory"));
    }
    let bundle = std::fs::canonicalize(bundle).map_err(|e| Failure::io(bundle, e))?;
    let expanded = expand_bundle(&bundle).map_err(|e| Failure::parse(&bundle, e))?;
    let dir = dir.unwrap_or_else(|| default_deck_dir(&bundle));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;

    let structure = expanded.resolved.source.structure_file_name();
    let mut files = Vec::new();
    for f in &expanded.files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|e| Failure::io(&path, e))?;
        files.push(f.name.clone());
    }
    // The deck runs from its own directory, so it carries the structure too.
    let target = dir.join(&structure);
    std::fs::copy(bundle.join(&structure), &target).map_err(|e| Failure::io(&target, e))?;
    files.push(structure);

    if json {
        emit_json(
            out,
            &ExpandBody {
                api_version: API_VERSION,
                job_name: expanded.resolved.source.job_name.clone(),
                out_dir: dir.display().to_string(),
                files,
                content_sha256: expanded.content_hash,
            },
        )
    } else {
        for f in files {
            say(out, dir.join(f).display())?;
        }
        Ok(())
    }
}

fn verify(bundle: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    if !bundle.is_dir() {
        return Err(Failure::io(bundle, "not a directory"));
    }
    let report = verify_bundle(bundle);
    if json {
        emit_json(out, &ValidateBody::from(report.clone()))?;
    } else {
        for f in &report.findings {
            say(out, finding_line(f))?;
        }
        say(out, if report.has_errors() { counts(&report) } else { "bundle verified".into() })?;
    }
    if report.has_errors() {
        return Err(Failure::invalid(&report));
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs, json: bool, out: &mut dyn Write) -> Outcome {
    let methods = Method::parse_list(&args.methods).map_err(|e| Failure::new(1, "usage", e))?;
    let request = AnalysisRequest {
        methods: methods.clone(),
        selection: args.selection.clone(),
        title: args.title.clone(),
        superpose: !args.no_superpose,
        mass_weighted_rog: !args.no_mass_weighting,
        rmsf_per_residue: args.per_residue,
    };
    let dir = args.out.clone().unwrap_or_else(|| args.folder.clone());
    let (_, files) = analyze_folder(&args.folder, &request, &dir).map_err(|e| Failure::new(1, "analysis", e.to_string()))?;
    if json {
        emit_json(
            out,
            &AnalyzeResultBody {
                api_version: API_VERSION,
                methods: methods.iter().map(|m| m.name().to_string()).collect(),
                out_dir: dir.display().to_string(),
                files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
            },
        )
    } else {
        for f in files {
            say(out, f.display())?;
        }
        Ok(())
    }
}

fn inspect(path: &Path, json: bool, out: &mut dyn Write) -> Outcome {
    let (kind, details) = if path.is_dir() {
        inspect_bundle(path)
    } else {
        let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
        inspect_file(path, &bytes)?
    };
    if json {
        emit_json(
            out,
            &InspectBody { api_version: API_VERSION, path: path.display().to_string(), kind: kind.into(), details },
        )
    } else {
        say(out, format!("{}: {kind}", path.display()))?;
        for (k, v) in &details {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            say(out, format!("  {k}: {v}"))?;
        }
        Ok(())
    }
}

fn inspect_bundle(dir: &Path) -> (&'static str, Map<String, Value>) {
    let report = verify_bundle(dir);
    let mut d = Map::new();
    d.insert("valid".into(), json!(!report.has_errors()));
    if let Ok(expanded) = expand_bundle(dir) {
        d.insert("job_name".into(), json!(expanded.resolved.source.job_name));
        d.insert("content_sha256".into(), json!(expanded.content_hash));
    }
    d.insert("findings".into(), json!(report.findings));
    ("bundle", d)
}

fn inspect_file(path: &Path, bytes: &[u8]) -> Result<(&'static str, Map<String, Value>), Failure> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default().to_ascii_lowercase();
    let mut d = Map::new();
    if ext == "xtc" || bytes.starts_with(&deckforge::traj::XTC_MAGIC.to_be_bytes()) {
        let traj = read_xtc(bytes).map_err(|e| Failure::parse(path, e))?;
        d.insert("atoms".into(), json!(traj.atom_count));
        d.insert("frames".into(), json!(traj.frames.len()));
        if let (Some(first), Some(last)) = (traj.frames.first(), traj.frames.last()) {
            d.insert("first_time_ps".into(), json!(first.time));
            d.insert("last_time_ps".into(), json!(last.time));
            d.insert("precision".into(), json!(first.precision));
        }
        return Ok(("trajectory", d));
    }
    let text = std::str::from_utf8(bytes).map_err(|_| Failure::parse(path, "not a supported binary format"))?;
    if matches!(ext.as_str(), "pdb" | "ent" | "gro") {
        let s = parse_structure_file(name, text).map_err(|e| Failure::parse(path, e))?;
        let chains: BTreeSet<char> = s.atoms.iter().map(|a| a.chain_id).collect();
        d.insert("format".into(), json!(if ext == "gro" { "gro" } else { "pdb" }));
        d.insert("title".into(), json!(s.title));
        d.insert("atoms".into(), json!(s.len()));
        d.insert("residues".into(), json!(s.residue_count()));
        d.insert("chains".into(), json!(chains.iter().collect::<String>()));
        d.insert("box_nm".into(), json!(s.box_matrix));
        d.insert("warnings".into(), json!(s.warnings.len()));
        return Ok(("structure", d));
    }
    if text.lines().any(|l| l == deckforge::deck::MANIFEST_BEGIN) {
        let m = parse_manifest(text).map_err(|e| Failure::parse(path, e))?;
        let resolved = m.to_resolved().map_err(|e| Failure::parse(path, e))?;
        d.insert("job_name".into(), json!(resolved.source.job_name));
        d.insert("schema_version".into(), json!(m.schema_version));
        d.insert("structure_file".into(), json!(m.structure_file));
        d.insert("content_sha256".into(), json!(m.content_sha256));
        return Ok(("setup_script", d));
    }
    if ext == "mdp" {
        let entries = parse_entries(text).map_err(|e| Failure::parse(path, e))?;
        d.insert("entries".into(), json!(entries.len()));
        let integrator = entries.iter().find(|e| e.key == "integrator").map(|e| e.value.clone());
        d.insert("integrator".into(), json!(integrator));
        return Ok(("mdp", d));
    }
    let spec = load_spec(path)?;
    let report = validate_with(&spec, &ledger()?);
    d.insert("job_name".into(), json!(spec.job_name));
    d.insert("valid".into(), json!(!report.has_errors()));
    d.insert("errors".into(), json!(report.errors().count()));
    d.insert("warnings".into(), json!(report.warnings().count()));
    Ok(("spec", d))
}

fn serve(args: ServeArgs) -> Outcome {
    let mut config = ServiceConfig {
        bind: SocketAddr::new(args.bind, args.port),
        static_dir: args.static_dir,
        max_upload_bytes: args.max_upload_bytes,
        ..ServiceConfig::default()
    };
    if let Some(w) = args.workers {
        config.workers = w.max(1);
    }
    config.defaults_path = std::env::var_os(deckforge::spec::DEFAULTS_ENV).filter(|p| !p.is_empty()).map(PathBuf::from);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(1, "io", e.to_string()))?;
    runtime.block_on(deckforge_service::serve(config)).map_err(|e| Failure::new(1, "serve", e.to_string()))
}
