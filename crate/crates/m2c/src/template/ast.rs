//! Template AST. Parsing is lossless: every non-literal node keeps its raw
//! source span so a parsed template can be re-serialized byte for byte.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A placeholder identifier such as `name`, `name2`, or `ART1`.
///
/// Trailing digits are the duplicate index; `name` and `name1` both denote
/// index 1 of base type `name`. Identity (equality, ordering, hashing) is by
/// `(base, index)`; `raw` keeps the source spelling.
#[derive(Debug, Clone)]
pub struct PlaceholderName {
    pub base: String,
    pub index: u32,
    pub raw: String,
}

impl PlaceholderName {
    pub fn parse(raw: &str) -> Result<PlaceholderName, String> {
        if raw.is_empty() {
            return Err("empty placeholder name".to_string());
        }
        if !raw
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
            || raw.chars().next().is_some_and(|c| c.is_ascii_digit())
        {
            return Err(format!("`{raw}` is not a valid placeholder name"));
        }
        let digits = raw.len() - raw.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (base, suffix) = raw.split_at(raw.len() - digits);
        if base.is_empty() {
            return Err(format!("`{raw}` has no base type"));
        }
        let index = if suffix.is_empty() {
            1
        } else {
            suffix
                .parse::<u32>()
                .map_err(|_| format!("placeholder index `{suffix}` out of range"))?
        };
        if index == 0 {
            return Err(format!("placeholder index in `{raw}` must be positive"));
        }
        Ok(PlaceholderName {
            base: base.to_string(),
            index,
            raw: raw.to_string(),
        })
    }

    /// True when the source spelling carries an explicit index digit.
    pub fn explicitly_indexed(&self) -> bool {
        self.raw.ends_with(|c: char| c.is_ascii_digit())
    }
}

impl PartialEq for PlaceholderName {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.index == other.index
    }
}
impl Eq for PlaceholderName {}

impl PartialOrd for PlaceholderName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PlaceholderName {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.base, self.index).cmp(&(&other.base, other.index))
    }
}
impl Hash for PlaceholderName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.base.hash(state);
        self.index.hash(state);
    }
}

impl fmt::Display for PlaceholderName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// One guard of a conditional: emit `output` when `reference` carries
/// `feature`. `output` is a feature symbol in feature position and arbitrary
/// text in literal position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub output: String,
    pub reference: PlaceholderName,
    pub feature: String,
}

/// A single dot-separated specifier on a placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSpec {
    /// A fixed feature requirement, e.g. `NOM`.
    Static(String),
    /// `<ref.D1.D2>`: copy the referent's feature for each named dimension.
    Copy {
        reference: PlaceholderName,
        dimensions: Vec<String>,
    },
    /// `<F1:ref.G1|F2:ref.G2|DFLT>`: feature chosen by the first matching
    /// guard, falling back to the optional default feature.
    Conditional {
        guards: Vec<Guard>,
        default: Option<String>,
    },
    /// `TO_CAPITALIZE`.
    Transform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceholderNode {
    pub name: PlaceholderName,
    pub specs: Vec<FeatureSpec>,
    /// Source span including braces.
    pub raw: String,
}

/// Standalone `{out1:ref.F1|out2:ref.F2|default}` choosing between literal
/// outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalNode {
    pub guards: Vec<Guard>,
    pub default: Option<String>,
    pub raw: String,
}

/// `{$name(arg1,arg2).SPEC...}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionNode {
    pub name: String,
    pub args: Vec<PlaceholderName>,
    pub specs: Vec<FeatureSpec>,
    pub raw: String,
}

impl FunctionNode {
    /// Canonical `$name(arg1,arg2)` signature used to reference the node.
    pub fn signature(&self) -> String {
        let args: Vec<&str> = self.args.iter().map(|a| a.raw.as_str()).collect();
        format!("${}({})", self.name, args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Literal(String),
    Placeholder(PlaceholderNode),
    Conditional(ConditionalNode),
    Function(FunctionNode),
}

/// A parsed template string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateAst {
    pub segments: Vec<Segment>,
}

impl TemplateAst {
    /// Reconstructs the source text. Literal braces are re-escaped, so the
    /// result is byte-identical to the parsed input.
    pub fn source(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => {
                    out.push_str(&s.replace('{', "{{").replace('}', "}}"))
                }
                Segment::Placeholder(n) => out.push_str(&n.raw),
                Segment::Conditional(n) => out.push_str(&n.raw),
                Segment::Function(n) => out.push_str(&n.raw),
            }
        }
        out
    }

    /// Placeholder nodes in document order.
    pub fn placeholders(&self) -> impl Iterator<Item = &PlaceholderNode> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Placeholder(n) => Some(n),
            _ => None,
        })
    }

    /// Every placeholder reference made by this template: occurrences plus
    /// refs inside copies, conditional features, guards, and function args.
    pub fn references(&self) -> Vec<&PlaceholderName> {
        let mut out = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(_) => {}
                Segment::Placeholder(n) => collect_spec_refs(&n.specs, &mut out),
                Segment::Conditional(n) => {
                    out.extend(n.guards.iter().map(|g| &g.reference));
                }
                Segment::Function(n) => {
                    out.extend(n.args.iter());
                    collect_spec_refs(&n.specs, &mut out);
                }
            }
        }
        out
    }
}

fn collect_spec_refs<'a>(specs: &'a [FeatureSpec], out: &mut Vec<&'a PlaceholderName>) {
    for spec in specs {
        match spec {
            FeatureSpec::Copy { reference, .. } => out.push(reference),
            FeatureSpec::Conditional { guards, .. } => {
                out.extend(guards.iter().map(|g| &g.reference));
            }
            _ => {}
        }
    }
}
