//! Line templates shared by the direct renderers and the setup script.
//!
//! A template line is a sequence of literal text and variable references. The
//! direct renderers substitute values; the setup script emits the same lines
//! inside here-documents, so both paths produce identical bytes.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Part {
    Lit(String),
    Var(String),
}

pub(crate) type Line = Vec<Part>;

pub(crate) fn lit(text: impl Into<String>) -> Part {
    Part::Lit(text.into())
}

pub(crate) fn var(name: impl Into<String>) -> Part {
    Part::Var(name.into())
}

/// Ordered shell variable definitions. A definition may reference earlier ones.
#[derive(Debug, Clone, Default)]
pub(crate) struct Vars {
    defs: Vec<(String, Vec<Part>)>,
    values: HashMap<String, String>,
}

impl Vars {
    pub(crate) fn define(&mut self, name: impl Into<String>, parts: Vec<Part>) {
        let name = name.into();
        let value = self.eval(&parts);
        debug_assert!(!self.values.contains_key(&name), "variable {name} defined twice");
        self.values.insert(name.clone(), value);
        self.defs.push((name, parts));
    }

    pub(crate) fn set(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.define(name, vec![lit(value)]);
    }

    pub(crate) fn get(&self, name: &str) -> &str {
        self.values
            .get(name)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("template references undefined variable {name}"))
    }

    pub(crate) fn eval(&self, parts: &[Part]) -> String {
        parts
            .iter()
            .map(|p| match p {
                Part::Lit(s) => s.as_str(),
                Part::Var(v) => self.get(v),
            })
            .collect()
    }

    pub(crate) fn render(&self, lines: &[Line]) -> String {
        let mut out = String::new();
        for line in lines {
            out.push_str(&self.eval(line));
            out.push('\n');
        }
        out
    }

    /// `NAME=value` assignments, one per line.
    pub(crate) fn shell_assignments(&self) -> String {
        let mut out = String::new();
        for (name, parts) in &self.defs {
            out.push_str(name);
            out.push('=');
            out.push_str(&shell_value(parts));
            out.push('\n');
        }
        out
    }
}

fn is_bare_safe(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ',' | ':' | '/' | '+' | '@' | '%' | '=' | '-'))
}

fn shell_value(parts: &[Part]) -> String {
    match parts {
        [Part::Lit(s)] if is_bare_safe(s) => s.clone(),
        [Part::Lit(s)] => format!("'{}'", s.replace('\'', "'\\''")),
        [] => "''".to_string(),
        _ => {
            let mut out = String::from("\"");
            for p in parts {
                match p {
                    Part::Lit(s) => {
                        for c in s.chars() {
                            if matches!(c, '\\' | '$' | '`' | '"') {
                                out.push('\\');
                            }
                            out.push(c);
                        }
                    }
                    Part::Var(v) => {
                        out.push_str("${");
                        out.push_str(v);
                        out.push('}');
                    }
                }
            }
            out.push('"');
            out
        }
    }
}

/// One line of an unquoted here-document body.
pub(crate) fn heredoc_line(parts: &[Part]) -> String {
    let mut out = String::new();
    for p in parts {
        match p {
            Part::Lit(s) => {
                for c in s.chars() {
                    if matches!(c, '\\' | '$' | '`') {
                        out.push('\\');
                    }
                    out.push(c);
                }
            }
            Part::Var(v) => {
                out.push_str("${");
                out.push_str(v);
                out.push('}');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments_quote_only_when_needed() {
        let mut vars = Vars::default();
        vars.set("TEMPERATURE_K", "295");
        vars.set("DEFINE", "-DPOSRES");
        vars.set("GROUPS", "Protein Non-Protein");
        vars.set("QUOTE", "it's");
        vars.set("EMPTY", "");
        vars.define("REF_T", vec![var("TEMPERATURE_K"), lit(" "), var("TEMPERATURE_K")]);
        assert_eq!(
            vars.shell_assignments(),
            "TEMPERATURE_K=295\nDEFINE=-DPOSRES\nGROUPS='Protein Non-Protein'\nQUOTE='it'\\''s'\nEMPTY=''\nREF_T=\"${TEMPERATURE_K} ${TEMPERATURE_K}\"\n"
        );
        assert_eq!(vars.get("REF_T"), "295 295");
    }

    #[test]
    fn heredoc_escapes_expansions() {
        let line = vec![lit("cd \"$PBS_O_WORKDIR\" `x` \\"), var("JOB")];
        assert_eq!(heredoc_line(&line), "cd \"\\$PBS_O_WORKDIR\" \\`x\\` \\\\${JOB}");
    }
}
