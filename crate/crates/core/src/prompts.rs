//! Versioned prompt templates.
//!
//! A template file holds the system prompt, a line containing only `---`,
//! then the user prompt. `{name}` placeholders are substituted in a single
//! pass, so substituted text (review bodies, descriptions) is never
//! re-scanned. Braces that do not form a known placeholder are kept as-is.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template {name}: missing `---` line separating system and user prompts")]
    MissingSeparator { name: String },
    #[error("template {name}: required placeholder {{{placeholder}}} not found")]
    MissingPlaceholder { name: String, placeholder: String },
    #[error("reading template {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(name: &str, text: &str, required: &[&str]) -> Result<Self, PromptError> {
        let mut system = Vec::new();
        let mut user = Vec::new();
        let mut seen_separator = false;
        for line in text.lines() {
            if !seen_separator && line.trim_end() == "---" {
                seen_separator = true;
            } else if seen_separator {
                user.push(line);
            } else {
                system.push(line);
            }
        }
        if !seen_separator {
            return Err(PromptError::MissingSeparator { name: name.to_string() });
        }
        let template = PromptTemplate {
            name: name.to_string(),
            system: system.join("\n").trim().to_string(),
            user: user.join("\n").trim().to_string(),
        };
        for placeholder in required {
            let token = format!("{{{placeholder}}}");
            if !template.system.contains(&token) && !template.user.contains(&token) {
                return Err(PromptError::MissingPlaceholder {
                    name: name.to_string(),
                    placeholder: placeholder.to_string(),
                });
            }
        }
        Ok(template)
    }

    /// Returns the rendered (system, user) prompt pair.
    pub fn render(&self, vars: &[(&str, &str)]) -> (String, String) {
        (substitute(&self.system, vars), substitute(&self.user, vars))
    }
}

fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, close))
        });
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

const STEPS: [(&str, &[&str], &str); 5] = [
    ("extraction", &["schema", "title", "review_text"], include_str!("../prompts/v1/extraction.txt")),
    ("comparison", &["schema", "seller_description", "attributes"], include_str!("../prompts/v1/comparison.txt")),
    ("grouping", &["schema", "attribute_keys"], include_str!("../prompts/v1/grouping.txt")),
    ("baseline", &["schema", "title", "seller_description", "reviews"], include_str!("../prompts/v1/baseline.txt")),
    (
        "ablated",
        &["schema", "title", "seller_description", "extracted_attributes"],
        include_str!("../prompts/v1/ablated.txt"),
    ),
];

/// Version tag of the built-in templates.
pub const BUILTIN_PROMPT_VERSION: &str = "v1";

/// The five templates used by the pipeline modes, plus the version tag that
/// enters every request fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub version: String,
    pub extraction: PromptTemplate,
    pub comparison: PromptTemplate,
    pub grouping: PromptTemplate,
    pub baseline: PromptTemplate,
    pub ablated: PromptTemplate,
}

impl PromptSet {
    pub fn builtin() -> Self {
        let texts = STEPS.map(|(_, _, text)| text.to_string());
        Self::from_texts(BUILTIN_PROMPT_VERSION, texts).expect("built-in templates are valid")
    }

    /// Loads `<step>.txt` files from `dir`; steps without a file use the
    /// built-in template.
    pub fn load_dir(dir: &Path, version: &str) -> Result<Self, PromptError> {
        let mut texts = STEPS.map(|(_, _, text)| text.to_string());
        for (i, (name, _, _)) in STEPS.iter().enumerate() {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                texts[i] = std::fs::read_to_string(&path)
                    .map_err(|source| PromptError::Io { path: path.display().to_string(), source })?;
            }
        }
        Self::from_texts(version, texts)
    }

    fn from_texts(version: &str, texts: [String; 5]) -> Result<Self, PromptError> {
        let parse = |i: usize| {
            let (name, required, _) = STEPS[i];
            PromptTemplate::parse(name, &texts[i], required)
        };
        Ok(PromptSet {
            version: version.to_string(),
            extraction: parse(0)?,
            comparison: parse(1)?,
            grouping: parse(2)?,
            baseline: parse(3)?,
            ablated: parse(4)?,
        })
    }

    pub fn with_version(mut self, version: &str) -> Self {
        self.version = version.to_string();
        self
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}
