//! Prompt templates. Templates ship as editable text files; placeholder
//! names are part of the file contract. A file may carry `[system]` and
//! `[user]` sections; a file without section markers is all user content.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const TEMPLATE_NAMES: [&str; 6] = [
    "keyword_extraction",
    "shared_ref_role",
    "relationship_summary",
    "summary_selection",
    "short_form_gen",
    "open_ended_gen",
];

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub body: String,
    pub required_placeholders: Vec<String>,
}

impl PromptTemplate {
    /// Parse a template file: optional `[system]` / `[user]` sections,
    /// placeholders written `{name}`. Every placeholder found is required.
    pub fn parse(name: &str, raw: &str) -> Self {
        let (system, body) = split_sections(raw);
        let mut required_placeholders = Vec::new();
        for source in [&system, &body] {
            for ph in scan_placeholders(source) {
                if !required_placeholders.contains(&ph) {
                    required_placeholders.push(ph);
                }
            }
        }
        PromptTemplate {
            name: name.to_string(),
            system,
            body,
            required_placeholders,
        }
    }

    /// Render the template. Fails if any required placeholder is unbound.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<RenderedPrompt> {
        for ph in &self.required_placeholders {
            if !bindings.contains_key(ph.as_str()) {
                return Err(HarnessError::Prompt(format!(
                    "template {}: unbound placeholder {{{ph}}}",
                    self.name
                )));
            }
        }
        Ok(RenderedPrompt {
            system: substitute(&self.system, bindings),
            user: substitute(&self.body, bindings),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

fn split_sections(raw: &str) -> (String, String) {
    if let Some(rest) = raw.strip_prefix("[system]\n") {
        if let Some((system, user)) = rest.split_once("\n[user]\n") {
            return (system.trim().to_string(), user.trim().to_string());
        }
    }
    (String::new(), raw.trim().to_string())
}

fn scan_placeholders(text: &str) -> Vec<String> {
    let re = regex::Regex::new(r"\{([a-z0-9_]+)\}").expect("static regex");
    re.captures_iter(text).map(|c| c[1].to_string()).collect()
}

fn substitute(text: &str, bindings: &BTreeMap<&str, String>) -> String {
    let mut out = text.to_string();
    for (key, value) in bindings {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// The six named templates used by generation and augmentation.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptSet {
    /// Built-in defaults, identical to the files shipped under `prompts/`.
    pub fn builtin() -> Self {
        let sources: [(&str, &str); 6] = [
            (
                "keyword_extraction",
                include_str!("../prompts/keyword_extraction.txt"),
            ),
            ("shared_ref_role", include_str!("../prompts/shared_ref_role.txt")),
            (
                "relationship_summary",
                include_str!("../prompts/relationship_summary.txt"),
            ),
            (
                "summary_selection",
                include_str!("../prompts/summary_selection.txt"),
            ),
            ("short_form_gen", include_str!("../prompts/short_form_gen.txt")),
            ("open_ended_gen", include_str!("../prompts/open_ended_gen.txt")),
        ];
        let templates = sources
            .into_iter()
            .map(|(name, raw)| (name.to_string(), PromptTemplate::parse(name, raw)))
            .collect();
        PromptSet { templates }
    }

    /// Load all six templates from a directory of `<name>.txt` files.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut templates = BTreeMap::new();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            let raw = std::fs::read_to_string(&path).map_err(|e| {
                HarnessError::Prompt(format!("cannot read {}: {e}", path.display()))
            })?;
            templates.insert(name.to_string(), PromptTemplate::parse(name, &raw));
        }
        Ok(PromptSet { templates })
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate> {
        self.templates
            .get(name)
            .ok_or_else(|| HarnessError::Prompt(format!("unknown template {name}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_binds_placeholders() {
        let t = PromptTemplate::parse("t", "Hello {who}, count {n}.");
        let mut b = BTreeMap::new();
        b.insert("who", "world".to_string());
        b.insert("n", "7".to_string());
        let r = t.render(&b).unwrap();
        assert_eq!(r.user, "Hello world, count 7.");
        assert!(r.system.is_empty());
    }

    #[test]
    fn unbound_placeholder_fails() {
        let t = PromptTemplate::parse("t", "Hello {who}.");
        assert!(t.render(&BTreeMap::new()).is_err());
    }

    #[test]
    fn system_section_split() {
        let t = PromptTemplate::parse("t", "[system]\nBe brief.\n[user]\nDo {thing}.");
        assert_eq!(t.system, "Be brief.");
        assert_eq!(t.body, "Do {thing}.");
    }

    #[test]
    fn builtin_templates_all_parse() {
        let set = PromptSet::builtin();
        for name in TEMPLATE_NAMES {
            let t = set.get(name).unwrap();
            assert!(!t.body.is_empty(), "{name} empty");
        }
        assert!(set
            .get("keyword_extraction")
            .unwrap()
            .required_placeholders
            .contains(&"content".to_string()));
    }
}
