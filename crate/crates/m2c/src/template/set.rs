//! Template sets: context/question/answer triples with answer matchers and
//! per-type placeholder configuration.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::schema::{FeatureSchema, TO_CAPITALIZE};

use super::ast::{FeatureSpec, PlaceholderName, Segment, TemplateAst};
use super::parse::parse_template;

/// Enumeration behavior for duplicate placeholders of one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderConfig {
    /// Allow the same value in two slots of the type.
    #[serde(default = "default_true")]
    pub repetition: bool,
    /// Distinguish orderings of the same value multiset.
    #[serde(default = "default_true")]
    pub order: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PlaceholderConfig {
    fn default() -> Self {
        PlaceholderConfig {
            repetition: true,
            order: true,
        }
    }
}

/// Template-level answer matcher; `gold_form` and `numeric_equiv` are
/// materialized per test case during rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpecMatcher {
    /// Accept the answer rendered for the referenced placeholder (or function
    /// call); wrong inflections of the same entry classify as morphological
    /// errors.
    GoldForm {
        #[serde(rename = "ref")]
        reference: String,
    },
    /// Accept any of a fixed list of strings.
    AnyOf { values: Vec<String> },
    /// Accept predictions fully matching the (POSIX-ERE-compatible) pattern.
    Pattern { regex: String },
    /// Accept the numeric value of the referenced placeholder, in digits or
    /// any spelled form the lexicon knows for that value.
    NumericEquiv {
        #[serde(rename = "ref")]
        reference: String,
    },
}

#[derive(Deserialize, Serialize)]
struct TemplateSetDoc {
    id: String,
    language: String,
    context: String,
    question: String,
    answer: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    answer_spec: Vec<SpecMatcher>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    configs: IndexMap<String, PlaceholderConfig>,
}

/// Context/question/answer templates plus answer matchers and configs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub id: String,
    pub language: String,
    pub context: TemplateAst,
    pub question: TemplateAst,
    pub answer: TemplateAst,
    pub answer_spec: Vec<SpecMatcher>,
    pub configs: IndexMap<String, PlaceholderConfig>,
}

/// Which of the three templates a node lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Context,
    Question,
    Answer,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Context, Section::Question, Section::Answer];
}

impl TemplateSet {
    /// Parses a `{id, language, context, question, answer, answer_spec?,
    /// configs?}` document and checks intra-set consistency.
    pub fn parse(document: &str) -> Result<TemplateSet> {
        let doc: TemplateSetDoc = serde_json::from_str(document).map_err(|e| {
            Error::Validation(format!("template document is not valid JSON: {e}"))
        })?;
        let set = TemplateSet {
            id: doc.id,
            language: doc.language,
            context: parse_template(&doc.context)?,
            question: parse_template(&doc.question)?,
            answer: parse_template(&doc.answer)?,
            answer_spec: doc.answer_spec,
            configs: doc.configs,
        };
        set.check_cross_references()?;
        Ok(set)
    }

    /// Serializes back to the document format; template fields reproduce the
    /// original source bytes.
    pub fn to_document(&self) -> Result<String> {
        let doc = TemplateSetDoc {
            id: self.id.clone(),
            language: self.language.clone(),
            context: self.context.source(),
            question: self.question.source(),
            answer: self.answer.source(),
            answer_spec: self.answer_spec.clone(),
            configs: self.configs.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn template(&self, section: Section) -> &TemplateAst {
        match section {
            Section::Context => &self.context,
            Section::Question => &self.question,
            Section::Answer => &self.answer,
        }
    }

    /// Distinct placeholders in document order (context, question, answer).
    pub fn placeholders(&self) -> Vec<&PlaceholderName> {
        let mut seen = Vec::new();
        for section in Section::ALL {
            for node in self.template(section).placeholders() {
                if !seen.contains(&&node.name) {
                    seen.push(&node.name);
                }
            }
        }
        seen
    }

    /// Distinct base types in document order.
    pub fn base_types(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for name in self.placeholders() {
            if !out.contains(&name.base.as_str()) {
                out.push(&name.base);
            }
        }
        out
    }

    pub fn config(&self, base: &str) -> PlaceholderConfig {
        self.configs.get(base).copied().unwrap_or_default()
    }

    fn check_cross_references(&self) -> Result<()> {
        let occurring = self.placeholders();
        // Bare and digit-suffixed spellings of one base type must not mix.
        for a in &occurring {
            for b in &occurring {
                if a.base == b.base && a.explicitly_indexed() != b.explicitly_indexed() {
                    return Err(Error::Validation(format!(
                        "placeholder `{}` mixes bare and indexed spellings of base type `{}`",
                        b.raw, a.base
                    )));
                }
            }
        }
        for section in Section::ALL {
            for reference in self.template(section).references() {
                if !occurring.contains(&reference) {
                    return Err(Error::Validation(format!(
                        "reference `{}` does not name any placeholder in the set",
                        reference.raw
                    )));
                }
            }
        }
        for matcher in &self.answer_spec {
            let reference = match matcher {
                SpecMatcher::GoldForm { reference } => reference,
                SpecMatcher::NumericEquiv { reference } => reference,
                _ => continue,
            };
            if !self.answer_node_exists(reference) {
                return Err(Error::Validation(format!(
                    "answer_spec references `{reference}`, which does not occur in the answer template"
                )));
            }
        }
        Ok(())
    }

    fn answer_node_exists(&self, reference: &str) -> bool {
        self.answer.segments.iter().any(|seg| match seg {
            Segment::Placeholder(n) => n.name.raw == reference,
            Segment::Function(f) => f.signature() == reference,
            _ => false,
        })
    }

    /// Validates the set against a schema and lexicon: features and
    /// dimensions must exist, copies must name real dimensions, every base
    /// type must have values, and patterns must compile.
    pub fn validate(&self, schema: &FeatureSchema, lexicon: &Lexicon) -> Result<()> {
        for section in Section::ALL {
            for seg in &self.template(section).segments {
                match seg {
                    Segment::Placeholder(node) => {
                        self.check_specs(&node.specs, &node.raw, schema)?
                    }
                    Segment::Function(node) => {
                        self.check_specs(&node.specs, &node.raw, schema)?
                    }
                    Segment::Conditional(node) => {
                        for guard in &node.guards {
                            check_feature(schema, &guard.feature, &node.raw)?;
                        }
                    }
                    Segment::Literal(_) => {}
                }
            }
        }
        for base in self.base_types() {
            if !lexicon.contains_type(base) {
                return Err(Error::Validation(format!(
                    "placeholder type `{base}` has no values in the lexicon"
                )));
            }
        }
        for base in self.configs.keys() {
            if !self.base_types().contains(&base.as_str()) {
                return Err(Error::Validation(format!(
                    "config refers to unknown placeholder type `{base}`"
                )));
            }
        }
        for matcher in &self.answer_spec {
            if let SpecMatcher::Pattern { regex } = matcher {
                regex::Regex::new(&format!("^(?:{regex})$")).map_err(|e| {
                    Error::Validation(format!("answer_spec pattern does not compile: {e}"))
                })?;
            }
        }
        Ok(())
    }

    fn check_specs(
        &self,
        specs: &[FeatureSpec],
        raw: &str,
        schema: &FeatureSchema,
    ) -> Result<()> {
        for spec in specs {
            match spec {
                FeatureSpec::Static(f) => check_feature(schema, f, raw)?,
                FeatureSpec::Transform => {}
                FeatureSpec::Copy { dimensions, .. } => {
                    for d in dimensions {
                        if !schema.contains_dimension(d) {
                            return Err(Error::Validation(format!(
                                "unknown dimension `{d}` in `{raw}`"
                            )));
                        }
                    }
                }
                FeatureSpec::Conditional { guards, default } => {
                    for g in guards {
                        check_feature(schema, &g.output, raw)?;
                        check_feature(schema, &g.feature, raw)?;
                    }
                    if let Some(d) = default {
                        check_feature(schema, d, raw)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Topological resolution order of the set's placeholders: every copy or
    /// guard reference precedes its dependent; independents keep document
    /// order.
    pub fn dependency_order(&self) -> Result<Vec<&PlaceholderName>> {
        let nodes = self.placeholders();
        // edges[i] holds the node indices that depend on nodes[i].
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        let mut indegree = vec![0usize; nodes.len()];
        let position = |name: &PlaceholderName| nodes.iter().position(|n| *n == name);
        for section in Section::ALL {
            for node in self.template(section).placeholders() {
                let Some(owner) = position(&node.name) else {
                    continue;
                };
                for spec in &node.specs {
                    let refs: Vec<&PlaceholderName> = match spec {
                        FeatureSpec::Copy { reference, .. } => vec![reference],
                        FeatureSpec::Conditional { guards, .. } => {
                            guards.iter().map(|g| &g.reference).collect()
                        }
                        _ => Vec::new(),
                    };
                    for reference in refs {
                        let from = position(reference).ok_or_else(|| {
                            Error::Validation(format!("dangling reference `{}`", reference.raw))
                        })?;
                        if from != owner && !dependents[from].contains(&owner) {
                            dependents[from].push(owner);
                            indegree[owner] += 1;
                        }
                    }
                }
            }
        }
        let mut order = Vec::with_capacity(nodes.len());
        let mut ready: Vec<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
        while let Some(&next) = ready.iter().min() {
            ready.retain(|&i| i != next);
            order.push(nodes[next]);
            for &dep in &dependents[next] {
                indegree[dep] -= 1;
                if indegree[dep] == 0 {
                    ready.push(dep);
                }
            }
        }
        if order.len() != nodes.len() {
            let stuck: Vec<&str> = (0..nodes.len())
                .filter(|&i| indegree[i] > 0)
                .map(|i| nodes[i].raw.as_str())
                .collect();
            return Err(Error::CyclicDependence(stuck.join(", ")));
        }
        Ok(order)
    }
}

fn check_feature(schema: &FeatureSchema, feature: &str, raw: &str) -> Result<()> {
    if feature == TO_CAPITALIZE || schema.contains_feature(feature) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "unknown feature `{feature}` in `{raw}`"
        )))
    }
}
