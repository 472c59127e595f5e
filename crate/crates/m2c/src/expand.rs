//! Binding enumeration, agreement resolution, rendering, and deterministic
//! suite sampling.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconEntry};
use crate::schema::{FeatureSchema, FeatureSet};
use crate::template::{
    FeatureSpec, FunctionNode, PlaceholderName, PlaceholderNode, Section, Segment, SpecMatcher,
    TemplateSet,
};
use crate::validate::CaseMatcher;

/// One placeholder slot resolved to a lexicon entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundEntry {
    pub type_name: String,
    pub entry_index: usize,
    pub entry_id: String,
}

/// An assignment of every placeholder in a template set to a lexicon entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Binding {
    assignments: BTreeMap<String, BoundEntry>,
}

impl Binding {
    pub fn assign(&mut self, placeholder: &str, bound: BoundEntry) {
        self.assignments.insert(placeholder.to_string(), bound);
    }

    pub fn get(&self, placeholder: &str) -> Option<&BoundEntry> {
        self.assignments.get(placeholder)
    }

    pub fn entry<'l>(&self, lexicon: &'l Lexicon, placeholder: &str) -> Result<&'l LexiconEntry> {
        let bound = self.get(placeholder).ok_or_else(|| {
            Error::Validation(format!("binding does not assign `{placeholder}`"))
        })?;
        lexicon.entry(&bound.type_name, &bound.entry_id)
    }

    /// Placeholder name → entry id, for test-case metadata.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        self.assignments
            .iter()
            .map(|(k, v)| (k.clone(), v.entry_id.clone()))
            .collect()
    }
}

/// Full Cartesian product over placeholder types, filtered by per-type
/// configs. With `repetition = false`, tuples repeating an entry within a
/// type are dropped; with `order = false`, only the lexicon-order-sorted
/// representative of each value multiset is kept. Output order is row-major
/// over canonical lexicon order, types in document order.
pub fn enumerate_bindings(set: &TemplateSet, lexicon: &Lexicon) -> Result<Vec<Binding>> {
    let groups = slot_groups(set, lexicon)?;
    let mut bindings = vec![Binding::default()];
    for (type_name, slots, tuples) in &groups {
        let mut next = Vec::with_capacity(bindings.len() * tuples.len());
        for binding in &bindings {
            for tuple in tuples {
                let mut b = binding.clone();
                for (slot, &entry_index) in slots.iter().zip(tuple) {
                    let entry = &lexicon.entries(type_name)?[entry_index];
                    b.assign(
                        slot,
                        BoundEntry {
                            type_name: type_name.clone(),
                            entry_index,
                            entry_id: entry.id.clone(),
                        },
                    );
                }
                next.push(b);
            }
        }
        bindings = next;
    }
    // A set with no placeholders still renders once.
    Ok(bindings)
}

type SlotGroup = (String, Vec<String>, Vec<Vec<usize>>);

fn slot_groups(set: &TemplateSet, lexicon: &Lexicon) -> Result<Vec<SlotGroup>> {
    let mut groups: Vec<SlotGroup> = Vec::new();
    for base in set.base_types() {
        let mut slots: Vec<&PlaceholderName> = set
            .placeholders()
            .into_iter()
            .filter(|p| p.base == base)
            .collect();
        slots.sort_by_key(|p| p.index);
        let count = lexicon.entries(base)?.len();
        let config = set.config(base);
        let tuples = slot_tuples(count, slots.len(), config.repetition, config.order);
        groups.push((
            base.to_string(),
            slots.into_iter().map(|p| p.raw.clone()).collect(),
            tuples,
        ));
    }
    Ok(groups)
}

fn slot_tuples(values: usize, slots: usize, repetition: bool, order: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(slots);
    fill_tuples(values, slots, repetition, order, &mut current, &mut out);
    out
}

fn fill_tuples(
    values: usize,
    slots: usize,
    repetition: bool,
    order: bool,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == slots {
        out.push(current.clone());
        return;
    }
    for candidate in 0..values {
        if !repetition && current.contains(&candidate) {
            continue;
        }
        if !order && current.last().is_some_and(|&last| candidate < last) {
            continue;
        }
        current.push(candidate);
        fill_tuples(values, slots, repetition, order, current, out);
        current.pop();
    }
}

/// A rendered context/question/answer instance with machine-checkable answer
/// matchers. Field order matches the suite JSONL layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub template_id: String,
    pub language: String,
    pub context: String,
    pub question: String,
    pub gold_answer: String,
    pub matchers: Vec<CaseMatcher>,
    pub bindings: BTreeMap<String, String>,
    pub index: u64,
    pub seed: u64,
}

/// Resolution record for one rendered placeholder or function occurrence.
#[derive(Debug, Clone)]
pub struct OccurrenceTrace {
    pub section: Section,
    /// Placeholder name or `$fn(args)` signature.
    pub node: String,
    pub entry_type: String,
    pub entry_id: String,
    /// Features demanded of the form (transforms excluded).
    pub required: FeatureSet,
    /// The table key of the chosen form.
    pub chosen_key: FeatureSet,
    /// Final surface text, transforms applied.
    pub surface: String,
    pub copies: Vec<CopyTrace>,
    /// Byte span of `surface` within the rendered section string.
    pub span: (usize, usize),
    pub numeric_value: Option<i64>,
}

/// One copied dimension: which referent it came from and what it resolved to.
#[derive(Debug, Clone)]
pub struct CopyTrace {
    pub reference: String,
    pub dimension: String,
    pub feature: String,
}

#[derive(Debug, Clone, Default)]
pub struct RenderTrace {
    pub occurrences: Vec<OccurrenceTrace>,
}

struct ResolveCtx<'a> {
    binding: &'a Binding,
    lexicon: &'a Lexicon,
    schema: &'a FeatureSchema,
    /// Realized form key of the first rendered occurrence per placeholder.
    realized: BTreeMap<String, FeatureSet>,
}

impl<'a> ResolveCtx<'a> {
    /// The referent's feature for `dimension`: declared intrinsic first, then
    /// form-key agreement, then the feature realized on the referent's
    /// rendered form.
    fn referent_feature(&self, reference: &PlaceholderName, dimension: &str) -> Result<String> {
        let entry = self.binding.entry(self.lexicon, &reference.raw)?;
        match entry.intrinsic_feature(self.schema, dimension) {
            Ok(f) => return Ok(f.to_string()),
            Err(Error::UnresolvedDimension { .. }) => {}
            Err(e) => return Err(e),
        }
        if let Some(key) = self.realized.get(&reference.raw) {
            if let Some(f) = key.feature_for(self.schema, dimension) {
                return Ok(f.to_string());
            }
        }
        Err(Error::UnresolvedDimension {
            entry: entry.id.clone(),
            dimension: dimension.to_string(),
        })
    }

    fn resolve_specs(
        &self,
        specs: &[FeatureSpec],
        raw: &str,
    ) -> Result<(FeatureSet, bool, Vec<CopyTrace>)> {
        let mut required = FeatureSet::empty();
        let mut transform = false;
        let mut copies = Vec::new();
        for spec in specs {
            match spec {
                FeatureSpec::Static(f) => required.insert_checked(self.schema, f)?,
                FeatureSpec::Transform => transform = true,
                FeatureSpec::Copy {
                    reference,
                    dimensions,
                } => {
                    for dimension in dimensions {
                        let feature = self.referent_feature(reference, dimension)?;
                        required.insert_checked(self.schema, &feature)?;
                        copies.push(CopyTrace {
                            reference: reference.raw.clone(),
                            dimension: dimension.clone(),
                            feature,
                        });
                    }
                }
                FeatureSpec::Conditional { guards, default } => {
                    let mut outcome = None;
                    for guard in guards {
                        let dimension = self.schema.dimension_of(&guard.feature)?;
                        if self.referent_feature(&guard.reference, dimension)? == guard.feature {
                            outcome = Some(guard.output.clone());
                            break;
                        }
                    }
                    let outcome = outcome
                        .or_else(|| default.clone())
                        .ok_or_else(|| Error::NoGuardFired { raw: raw.into() })?;
                    required.insert_checked(self.schema, &outcome)?;
                }
            }
        }
        Ok((required, transform, copies))
    }

    fn resolve_placeholder_node(&self, node: &PlaceholderNode) -> Result<OccurrenceResolution> {
        let entry = self.binding.entry(self.lexicon, &node.name.raw)?;
        let (required, transform, copies) = self.resolve_specs(&node.specs, &node.raw)?;
        let (key, surface) = entry.lookup_form_keyed(&required)?;
        let surface = if transform {
            capitalize_first(surface)
        } else {
            surface.to_string()
        };
        let bound = self.binding.get(&node.name.raw).expect("checked above");
        Ok(OccurrenceResolution {
            node: node.name.raw.clone(),
            entry_type: bound.type_name.clone(),
            entry_id: entry.id.clone(),
            required,
            chosen_key: key.clone(),
            surface,
            copies,
            numeric_value: entry.numeric,
        })
    }

    fn resolve_function_node(&self, node: &FunctionNode) -> Result<OccurrenceResolution> {
        let arity_and_impl = builtin_function(&node.name)
            .ok_or_else(|| Error::UnknownFunction(format!("${}", node.name)))?;
        let (arity, implementation) = arity_and_impl;
        if node.args.len() != arity {
            return Err(Error::Validation(format!(
                "${} takes {arity} arguments, got {}",
                node.name,
                node.args.len()
            )));
        }
        let mut values = Vec::with_capacity(node.args.len());
        let mut arg_types: Vec<&str> = Vec::new();
        for arg in &node.args {
            let entry = self.binding.entry(self.lexicon, &arg.raw)?;
            values.push(
                entry
                    .numeric
                    .ok_or_else(|| Error::MissingNumeric(entry.id.clone()))?,
            );
            let bound = self.binding.get(&arg.raw).expect("entry resolved above");
            if !arg_types.contains(&bound.type_name.as_str()) {
                arg_types.push(&bound.type_name);
            }
        }
        let result = implementation(&values);
        let (result_type, entry) = arg_types
            .iter()
            .find_map(|t| {
                self.lexicon
                    .entries(t)
                    .ok()?
                    .iter()
                    .find(|e| e.numeric == Some(result))
                    .map(|e| (*t, e))
            })
            .ok_or(Error::ResultNotInLexicon(result))?;
        let (required, transform, copies) = self.resolve_specs(&node.specs, &node.raw)?;
        let (key, surface) = entry.lookup_form_keyed(&required)?;
        let surface = if transform {
            capitalize_first(surface)
        } else {
            surface.to_string()
        };
        Ok(OccurrenceResolution {
            node: node.signature(),
            entry_type: result_type.to_string(),
            entry_id: entry.id.clone(),
            required,
            chosen_key: key.clone(),
            surface,
            copies,
            numeric_value: Some(result),
        })
    }
}

struct OccurrenceResolution {
    node: String,
    entry_type: String,
    entry_id: String,
    required: FeatureSet,
    chosen_key: FeatureSet,
    surface: String,
    copies: Vec<CopyTrace>,
    numeric_value: Option<i64>,
}

/// Registered template functions. Results are mapped back onto lexicon
/// entries by numeric value, searching the argument types in order.
fn builtin_function(name: &str) -> Option<(usize, fn(&[i64]) -> i64)> {
    match name {
        "diff" => Some((2, |v| v[0] - v[1])),
        _ => None,
    }
}

/// Uppercases the first scalar of `s`.
pub fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        None => String::new(),
        Some(c) => c.to_uppercase().chain(chars).collect(),
    }
}

/// Resolves a single placeholder node against a binding, outside a full
/// render. Referent features come from intrinsics (declared or key-agreed);
/// the realized-form fallback needs render context and is unavailable here.
pub fn resolve_placeholder(
    node: &PlaceholderNode,
    binding: &Binding,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
) -> Result<String> {
    let ctx = ResolveCtx {
        binding,
        lexicon,
        schema,
        realized: BTreeMap::new(),
    };
    ctx.resolve_placeholder_node(node).map(|r| r.surface)
}

/// Applies a function node against a binding, outside a full render.
pub fn apply_function(
    node: &FunctionNode,
    binding: &Binding,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
) -> Result<String> {
    let ctx = ResolveCtx {
        binding,
        lexicon,
        schema,
        realized: BTreeMap::new(),
    };
    ctx.resolve_function_node(node).map(|r| r.surface)
}

/// Renders one binding into a test case.
pub fn render(
    set: &TemplateSet,
    binding: &Binding,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
) -> Result<TestCase> {
    render_traced(set, binding, lexicon, schema).map(|(case, _)| case)
}

/// Like [`render`], also returning per-occurrence resolution traces.
pub fn render_traced(
    set: &TemplateSet,
    binding: &Binding,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
) -> Result<(TestCase, RenderTrace)> {
    let mut ctx = ResolveCtx {
        binding,
        lexicon,
        schema,
        realized: BTreeMap::new(),
    };
    // Resolve placeholders in dependency order so copied features can fall
    // back to realized forms.
    let order = set.dependency_order()?;
    let mut resolved: BTreeMap<(usize, usize), OccurrenceResolution> = BTreeMap::new();
    for name in order {
        for (section_idx, section) in Section::ALL.iter().enumerate() {
            for (seg_idx, seg) in set.template(*section).segments.iter().enumerate() {
                let Segment::Placeholder(node) = seg else {
                    continue;
                };
                if node.name != *name {
                    continue;
                }
                let resolution = ctx
                    .resolve_placeholder_node(node)
                    .map_err(|e| e.in_render(&set.id, &node.name.raw))?;
                ctx.realized
                    .entry(name.raw.clone())
                    .or_insert_with(|| resolution.chosen_key.clone());
                resolved.insert((section_idx, seg_idx), resolution);
            }
        }
    }
    // Assemble the three sections, evaluating conditionals and functions in
    // place and recording spans.
    let mut trace = RenderTrace::default();
    let mut texts: Vec<String> = Vec::with_capacity(3);
    for (section_idx, section) in Section::ALL.iter().enumerate() {
        let mut out = String::new();
        for (seg_idx, seg) in set.template(*section).segments.iter().enumerate() {
            match seg {
                Segment::Literal(text) => out.push_str(text),
                Segment::Placeholder(_) => {
                    let resolution = resolved
                        .remove(&(section_idx, seg_idx))
                        .expect("placeholder resolved in first pass");
                    push_occurrence(&mut out, *section, resolution, &mut trace);
                }
                Segment::Conditional(node) => {
                    let mut output = None;
                    for guard in &node.guards {
                        let dimension = schema
                            .dimension_of(&guard.feature)
                            .map_err(|e| e.in_render(&set.id, &node.raw))?;
                        let actual = ctx
                            .referent_feature(&guard.reference, dimension)
                            .map_err(|e| e.in_render(&set.id, &node.raw))?;
                        if actual == guard.feature {
                            output = Some(guard.output.clone());
                            break;
                        }
                    }
                    let output = output
                        .or_else(|| node.default.clone())
                        .ok_or_else(|| {
                            Error::NoGuardFired {
                                raw: node.raw.clone(),
                            }
                            .in_render(&set.id, &node.raw)
                        })?;
                    out.push_str(&output);
                }
                Segment::Function(node) => {
                    let resolution = ctx
                        .resolve_function_node(node)
                        .map_err(|e| e.in_render(&set.id, &node.signature()))?;
                    push_occurrence(&mut out, *section, resolution, &mut trace);
                }
            }
        }
        texts.push(out);
    }
    let answer = texts.pop().expect("three sections");
    let question = texts.pop().expect("three sections");
    let context = texts.pop().expect("three sections");
    let matchers = materialize_matchers(set, &trace, &answer)?;
    let case = TestCase {
        template_id: set.id.clone(),
        language: set.language.clone(),
        context,
        question,
        gold_answer: answer,
        matchers,
        bindings: binding.metadata(),
        index: 0,
        seed: 0,
    };
    Ok((case, trace))
}

fn push_occurrence(
    out: &mut String,
    section: Section,
    resolution: OccurrenceResolution,
    trace: &mut RenderTrace,
) {
    let start = out.len();
    out.push_str(&resolution.surface);
    trace.occurrences.push(OccurrenceTrace {
        section,
        node: resolution.node,
        entry_type: resolution.entry_type,
        entry_id: resolution.entry_id,
        required: resolution.required,
        chosen_key: resolution.chosen_key,
        surface: resolution.surface,
        copies: resolution.copies,
        span: (start, out.len()),
        numeric_value: resolution.numeric_value,
    });
}

fn materialize_matchers(
    set: &TemplateSet,
    trace: &RenderTrace,
    answer: &str,
) -> Result<Vec<CaseMatcher>> {
    let answer_occurrence = |reference: &str| -> Result<&OccurrenceTrace> {
        trace
            .occurrences
            .iter()
            .find(|o| o.section == Section::Answer && o.node == reference)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "answer_spec reference `{reference}` was not rendered in the answer"
                ))
            })
    };
    let gold_form = |occ: &OccurrenceTrace| CaseMatcher::GoldForm {
        placeholder: occ.node.clone(),
        type_name: occ.entry_type.clone(),
        entry_id: occ.entry_id.clone(),
        required: occ.required.clone(),
        prefix: answer[..occ.span.0].to_string(),
        expected: occ.surface.clone(),
        suffix: answer[occ.span.1..].to_string(),
    };
    if set.answer_spec.is_empty() {
        // Default: gold-form on the first rendered answer slot, else the
        // literal answer text.
        let first = trace
            .occurrences
            .iter()
            .find(|o| o.section == Section::Answer);
        return Ok(vec![match first {
            Some(occ) => gold_form(occ),
            None => CaseMatcher::AnyOf {
                values: vec![answer.to_string()],
            },
        }]);
    }
    let mut out = Vec::with_capacity(set.answer_spec.len());
    for matcher in &set.answer_spec {
        out.push(match matcher {
            SpecMatcher::GoldForm { reference } => gold_form(answer_occurrence(reference)?),
            SpecMatcher::AnyOf { values } => CaseMatcher::AnyOf {
                values: values.clone(),
            },
            SpecMatcher::Pattern { regex } => CaseMatcher::Pattern {
                regex: regex.clone(),
            },
            SpecMatcher::NumericEquiv { reference } => {
                let occ = answer_occurrence(reference)?;
                CaseMatcher::NumericEquiv {
                    value: occ
                        .numeric_value
                        .ok_or_else(|| Error::MissingNumeric(occ.entry_id.clone()))?,
                }
            }
        });
    }
    Ok(out)
}

/// A generated suite plus diagnostics for bindings that failed to render.
#[derive(Debug)]
pub struct GeneratedSuite {
    pub cases: Vec<TestCase>,
    pub skipped: Vec<String>,
}

/// Renders up to `n` test cases deterministically.
///
/// When the binding space fits in `n`, every binding is rendered in canonical
/// order. Otherwise a uniform sample without replacement is drawn by a
/// partial Fisher–Yates shuffle over binding indices keyed by a seeded
/// ChaCha8 generator. Bindings that fail to resolve are skipped with a
/// diagnostic; the suite fails when more than 1% of attempted bindings skip.
pub fn generate_suite(
    set: &TemplateSet,
    lexicon: &Lexicon,
    schema: &FeatureSchema,
    n: u64,
    seed: u64,
) -> Result<GeneratedSuite> {
    if n == 0 {
        return Err(Error::Validation("suite size must be at least 1".into()));
    }
    let bindings = enumerate_bindings(set, lexicon)?;
    if bindings.is_empty() {
        return Err(Error::Suite(format!(
            "template `{}` admits zero valid bindings",
            set.id
        )));
    }
    let total = bindings.len();
    let chosen: Vec<usize> = if total as u64 <= n {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..total).collect();
        for i in 0..n as usize {
            let j = i + uniform_u64(&mut rng, (total - i) as u64) as usize;
            indices.swap(i, j);
        }
        indices.truncate(n as usize);
        indices
    };
    let mut cases = Vec::with_capacity(chosen.len());
    let mut skipped = Vec::new();
    for &binding_index in &chosen {
        match render(set, &bindings[binding_index], lexicon, schema) {
            Ok(mut case) => {
                case.index = cases.len() as u64;
                case.seed = seed;
                cases.push(case);
            }
            Err(e) => skipped.push(format!("binding {binding_index}: {e}")),
        }
    }
    let attempted = chosen.len();
    if skipped.len() * 100 > attempted {
        return Err(Error::Suite(format!(
            "{} of {} attempted bindings failed to render (>1%); first failure: {}",
            skipped.len(),
            attempted,
            skipped.first().map(String::as_str).unwrap_or("")
        )));
    }
    Ok(GeneratedSuite { cases, skipped })
}

/// Unbiased integer in `[0, m)` from a 64-bit generator, by rejection.
pub(crate) fn uniform_u64(rng: &mut ChaCha8Rng, m: u64) -> u64 {
    debug_assert!(m >= 1);
    let threshold = (u64::MAX % m).wrapping_add(1) % m;
    loop {
        let x = rng.next_u64();
        if x >= threshold {
            return x % m;
        }
    }
}

/// Serializes a suite as JSONL, one test case per line, stable field order.
pub fn suite_to_jsonl(cases: &[TestCase]) -> Result<String> {
    let mut out = String::new();
    for case in cases {
        out.push_str(&serde_json::to_string(case)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSONL suite.
pub fn suite_from_jsonl(text: &str) -> Result<Vec<TestCase>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Re-derives every copied dimension of a rendered case from the trace and
/// checks it against the chosen form keys.
pub fn check_agreement(trace: &RenderTrace, schema: &FeatureSchema) -> Result<()> {
    for occ in &trace.occurrences {
        if !occ.chosen_key.is_superset(&occ.required) {
            return Err(Error::Validation(format!(
                "occurrence `{}`: chosen key [{}] does not cover required [{}]",
                occ.node,
                occ.chosen_key.key(),
                occ.required.key()
            )));
        }
        for copy in &occ.copies {
            if occ.chosen_key.feature_for(schema, &copy.dimension) != Some(&copy.feature) {
                return Err(Error::Validation(format!(
                    "occurrence `{}`: copied {}={} from `{}` but chosen key is [{}]",
                    occ.node,
                    copy.dimension,
                    copy.feature,
                    copy.reference,
                    occ.chosen_key.key()
                )));
            }
        }
    }
    Ok(())
}
