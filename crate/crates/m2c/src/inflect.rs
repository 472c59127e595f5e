//! Hook for external inflection generators.
//!
//! Shipped lexica enumerate their inflections by hand. For scaling, an
//! external tool can be plugged in here to draft lexicon files that a human
//! then reviews; nothing in the pipeline consumes inflector output directly.

use std::io::Write;
use std::process::{Command, Stdio};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::FeatureSet;

pub trait Inflector {
    fn inflect(&self, lemma: &str, features: &FeatureSet) -> Result<String>;
}

/// Shells out to a command speaking newline-delimited JSON:
/// `{"lemma": ..., "features": [...]}` in, `{"surface": ...}` out.
pub struct CommandInflector {
    program: String,
    args: Vec<String>,
}

#[derive(Serialize)]
struct InflectRequest<'a> {
    lemma: &'a str,
    features: &'a FeatureSet,
}

#[derive(Deserialize)]
struct InflectResponse {
    surface: String,
}

impl CommandInflector {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> CommandInflector {
        CommandInflector {
            program: program.into(),
            args,
        }
    }
}

impl Inflector for CommandInflector {
    fn inflect(&self, lemma: &str, features: &FeatureSet) -> Result<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawn `{}`: {e}", self.program)))?;
        let request = serde_json::to_string(&InflectRequest { lemma, features })?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(format!("{request}\n").as_bytes())?;
        let output = child.wait_with_output()?;
        if !output.status.success() {
            return Err(Error::Transport(format!(
                "inflector `{}` exited with {}",
                self.program, output.status
            )));
        }
        let line = String::from_utf8_lossy(&output.stdout);
        let response: InflectResponse = serde_json::from_str(line.trim()).map_err(|e| {
            Error::Transport(format!("inflector returned malformed JSON: {e}"))
        })?;
        Ok(response.surface)
    }
}

/// Drafts a lexicon document for review: one entry per lemma with the
/// requested feature combinations filled in by the inflector.
pub fn draft_lexicon(
    inflector: &dyn Inflector,
    requests: &[(String, String, Vec<FeatureSet>)],
) -> Result<String> {
    #[derive(Serialize)]
    struct Draft {
        id: String,
        forms: IndexMap<String, String>,
    }
    let mut types: IndexMap<String, Vec<Draft>> = IndexMap::new();
    for (type_name, lemma, combinations) in requests {
        let mut forms = IndexMap::new();
        for features in combinations {
            forms.insert(features.key(), inflector.inflect(lemma, features)?);
        }
        types.entry(type_name.clone()).or_default().push(Draft {
            id: lemma.clone(),
            forms,
        });
    }
    Ok(serde_json::to_string_pretty(&types)?)
}
