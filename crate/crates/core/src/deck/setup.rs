use super::manifest::render_manifest;
use super::template::{heredoc_line, Line};
use super::{mdp_template, parameters, pbs_lines, pbs_template};
use crate::spec::{ResolvedSpec, Stage};

const EOF_MARK: &str = "DECKFORGE_EOF";

fn heredoc(out: &mut String, target: &str, lines: &[Line]) {
    out.push_str(&format!("cat > {target} <<{EOF_MARK}\n"));
    for line in lines {
        out.push_str(&heredoc_line(line));
        out.push('\n');
    }
    out.push_str(EOF_MARK);
    out.push('\n');
}

/// POSIX shell script that writes the five `.mdp` files and the PBS script
/// into the working directory. Parameters come first, then generation, then
/// the submission hint.
pub fn render_setup_script(resolved: &ResolvedSpec) -> String {
    render_with_hash(resolved, None)
}

pub(crate) fn render_with_hash(resolved: &ResolvedSpec, hash: Option<&str>) -> String {
    let vars = parameters(resolved);
    let mut out = String::from("#!/bin/sh\n");
    out.push_str(&render_manifest(resolved, hash));
    out.push_str(&format!(
        "#\n# Writes the {} simulation deck into the current directory.\nset -eu\n\n",
        resolved.source.job_name
    ));
    out.push_str(&vars.shell_assignments());
    for stage in Stage::ALL {
        out.push('\n');
        heredoc(&mut out, &stage.file_name(), &mdp_template(*stage, resolved.table(*stage)));
    }
    out.push('\n');
    let (directives, commands) = pbs_template(resolved);
    heredoc(&mut out, "\"${JOB_NAME}.pbs\"", &pbs_lines(&directives, &commands));
    out.push_str("\necho \"qsub ${JOB_NAME}.pbs\"\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{resolve, SimulationSpec};

    #[test]
    fn parameters_precede_generation() {
        let script = render_setup_script(&resolve(&SimulationSpec::glyg1(295.0)).unwrap());
        let param = script.find("\nTEMPERATURE_K=295\n").expect("parameter line");
        let first_cat = script.find("\ncat > ").unwrap();
        assert!(param < first_cat);
        assert!(script.starts_with("#!/bin/sh\n# >>> deckforge manifest\n"));
        assert!(script.ends_with("echo \"qsub ${JOB_NAME}.pbs\"\n"));
    }
}
