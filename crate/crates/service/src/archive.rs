use std::io::{Cursor, Write};

use deckforge::deck::{verify_bundle, DeckBundle};
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

/// Zips a bundle as `<job>/<file>` entries.
///
/// The bundle is first written to a private temporary directory and verified
/// there, so what the archive holds is exactly what `verify` accepts.
/// Timestamps are fixed, so equal bundles give equal archives.
pub fn bundle_zip(bundle: &DeckBundle) -> std::io::Result<Vec<u8>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path().join(&bundle.resolved.source.job_name);
    bundle.write_to(&root).map_err(std::io::Error::other)?;
    let report = verify_bundle(&root);
    if report.has_errors() {
        return Err(std::io::Error::other(format!("bundle failed verification: {}", report.summary())));
    }
    let prefix = &bundle.resolved.source.job_name;
    let base = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default());
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    zip.add_directory(format!("{prefix}/"), base.unix_permissions(0o755)).map_err(std::io::Error::other)?;
    for (name, _) in bundle.files() {
        let bytes = std::fs::read(root.join(&name))?;
        let mode = if name == bundle.setup_script_name() { 0o755 } else { 0o644 };
        zip.start_file(format!("{prefix}/{name}"), base.unix_permissions(mode)).map_err(std::io::Error::other)?;
        zip.write_all(&bytes)?;
    }
    Ok(zip.finish().map_err(std::io::Error::other)?.into_inner())
}
