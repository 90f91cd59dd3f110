//! Versioned prompt wording. The v1 set ships inside the binary; a directory
//! holding the same file names can replace it.

use std::path::Path;

use thiserror::Error;

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template {name}: {source}")]
    Io {
        name: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template {name} lacks the {{{{{var}}}}} placeholder")]
    MissingPlaceholder {
        name: &'static str,
        var: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub version: String,
    pub cot_system: String,
    pub cot_reasoning: String,
    pub cot_answer: String,
    pub expert_system: String,
    pub expert_query: String,
    pub corrupt_system: String,
    pub corrupt_query: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            version: TEMPLATE_VERSION.to_string(),
            cot_system: include_str!("../../templates/v1/cot_system.txt").to_string(),
            cot_reasoning: include_str!("../../templates/v1/cot_reasoning.txt").to_string(),
            cot_answer: include_str!("../../templates/v1/cot_answer.txt").to_string(),
            expert_system: include_str!("../../templates/v1/expert_system.txt").to_string(),
            expert_query: include_str!("../../templates/v1/expert_query.txt").to_string(),
            corrupt_system: include_str!("../../templates/v1/corrupt_system.txt").to_string(),
            corrupt_query: include_str!("../../templates/v1/corrupt_query.txt").to_string(),
        }
    }
}

const REQUIRED: [(&str, &str); 7] = [
    ("cot_system", ""),
    ("cot_reasoning", "source"),
    ("cot_answer", "source"),
    ("expert_system", "taxonomy_block"),
    ("expert_query", "source"),
    ("corrupt_system", "taxonomy_block"),
    ("corrupt_query", "source"),
];

impl TemplateSet {
    /// Loads `<name>.txt` files and an optional `VERSION` file from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let read = |name: &str| -> Result<String, TemplateError> {
            std::fs::read_to_string(dir.join(name)).map_err(|source| TemplateError::Io {
                name: name.to_string(),
                source,
            })
        };
        let version = match read("VERSION") {
            Ok(v) => v.trim().to_string(),
            Err(_) => dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".to_string()),
        };
        let set = TemplateSet {
            version,
            cot_system: read("cot_system.txt")?,
            cot_reasoning: read("cot_reasoning.txt")?,
            cot_answer: read("cot_answer.txt")?,
            expert_system: read("expert_system.txt")?,
            expert_query: read("expert_query.txt")?,
            corrupt_system: read("corrupt_system.txt")?,
            corrupt_query: read("corrupt_query.txt")?,
        };
        set.check()?;
        Ok(set)
    }

    fn get(&self, name: &str) -> &str {
        match name {
            "cot_system" => &self.cot_system,
            "cot_reasoning" => &self.cot_reasoning,
            "cot_answer" => &self.cot_answer,
            "expert_system" => &self.expert_system,
            "expert_query" => &self.expert_query,
            "corrupt_system" => &self.corrupt_system,
            _ => &self.corrupt_query,
        }
    }

    pub fn check(&self) -> Result<(), TemplateError> {
        for (name, var) in REQUIRED {
            if !var.is_empty() && !self.get(name).contains(&format!("{{{{{var}}}}}")) {
                return Err(TemplateError::MissingPlaceholder { name, var });
            }
        }
        Ok(())
    }

    /// Substitutes `{{name}}` placeholders and drops trailing whitespace.
    pub fn fill(&self, template: &str, vars: &[(&str, &str)]) -> String {
        let mut out = template.to_string();
        for (name, value) in vars {
            out = out.replace(&format!("{{{{{name}}}}}"), value);
        }
        out.trim_end().to_string()
    }
}
