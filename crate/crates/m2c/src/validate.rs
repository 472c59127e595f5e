//! Prediction normalization and judging against materialized answer matchers.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::schema::FeatureSet;

/// Canonicalizes a model output for matching: Unicode NFC, outer whitespace
/// stripped, one trailing `.` or `。` removed, internal whitespace runs
/// collapsed to single spaces.
pub fn normalize(raw: &str) -> String {
    let composed: String = raw.nfc().collect();
    let trimmed = composed.trim();
    let without_dot = trimmed
        .strip_suffix('.')
        .or_else(|| trimmed.strip_suffix('。'))
        .unwrap_or(trimmed);
    without_dot.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Equality that ignores case on the first character only. Sentence-initial
/// capitalization varies with answer position while stems stay case
/// significant.
pub fn equals_ci_first(a: &str, b: &str) -> bool {
    let mut ca = a.chars();
    let mut cb = b.chars();
    match (ca.next(), cb.next()) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            (x == y || x.to_lowercase().eq(y.to_lowercase())) && ca.as_str() == cb.as_str()
        }
        _ => false,
    }
}

/// A matcher materialized against one concrete binding. The `gold_form`
/// variant keeps the answer text around its slot so other inflections of the
/// same entry can be recognized in context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CaseMatcher {
    GoldForm {
        placeholder: String,
        type_name: String,
        entry_id: String,
        required: FeatureSet,
        prefix: String,
        expected: String,
        suffix: String,
    },
    AnyOf {
        values: Vec<String>,
    },
    Pattern {
        regex: String,
    },
    NumericEquiv {
        value: i64,
    },
}

impl CaseMatcher {
    fn accepts(&self, normalized: &str, lexicon: &Lexicon) -> bool {
        match self {
            CaseMatcher::GoldForm {
                prefix,
                expected,
                suffix,
                ..
            } => {
                let gold = normalize(&format!("{prefix}{expected}{suffix}"));
                equals_ci_first(normalized, &gold)
            }
            CaseMatcher::AnyOf { values } => values
                .iter()
                .any(|v| equals_ci_first(normalized, &normalize(v))),
            CaseMatcher::Pattern { regex } => {
                let Ok(re) = regex::Regex::new(&format!("^(?:{regex})$")) else {
                    return false;
                };
                re.is_match(normalized) || re.is_match(&swap_first_case(normalized))
            }
            CaseMatcher::NumericEquiv { value } => {
                if normalized == value.to_string() {
                    return true;
                }
                lexicon
                    .all_entries()
                    .filter(|(_, e)| e.numeric == Some(*value))
                    .flat_map(|(_, e)| e.variants())
                    .any(|(_, s)| equals_ci_first(normalized, &normalize(s)))
            }
        }
    }
}

fn swap_first_case(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        None => String::new(),
        Some(c) => {
            let swapped: String = if c.is_uppercase() {
                c.to_lowercase().collect()
            } else {
                c.to_uppercase().collect()
            };
            format!("{swapped}{}", chars.as_str())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Correct,
    MorphologicalError,
    Incorrect,
}

/// Outcome of judging one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_features: Option<FeatureSet>,
}

impl Verdict {
    fn correct(index: usize, variant: Option<FeatureSet>) -> Verdict {
        Verdict {
            verdict: VerdictKind::Correct,
            matcher_index: Some(index),
            variant_features: variant,
        }
    }

    fn incorrect() -> Verdict {
        Verdict {
            verdict: VerdictKind::Incorrect,
            matcher_index: None,
            variant_features: None,
        }
    }
}

/// Judges one prediction against materialized matchers. Matcher order is
/// authoritative: the first accepting matcher wins. A prediction that accepts
/// no matcher but realizes a different inflection of a gold entry is a
/// morphological error carrying that variant's feature set.
pub fn judge(prediction: &str, matchers: &[CaseMatcher], lexicon: &Lexicon) -> Verdict {
    let normalized = normalize(prediction);
    for (i, matcher) in matchers.iter().enumerate() {
        if matcher.accepts(&normalized, lexicon) {
            let variant = match matcher {
                CaseMatcher::GoldForm { required, .. } => Some(required.clone()),
                _ => None,
            };
            return Verdict::correct(i, variant);
        }
    }
    for (i, matcher) in matchers.iter().enumerate() {
        let CaseMatcher::GoldForm {
            type_name,
            entry_id,
            required,
            prefix,
            suffix,
            ..
        } = matcher
        else {
            continue;
        };
        let Ok(entry) = lexicon.entry(type_name, entry_id) else {
            continue;
        };
        let wanted = required.clone();
        for (key, surface) in entry.variants() {
            if *key == wanted {
                continue;
            }
            let candidate = normalize(&format!("{prefix}{surface}{suffix}"));
            if equals_ci_first(&normalized, &candidate) {
                return Verdict {
                    verdict: VerdictKind::MorphologicalError,
                    matcher_index: Some(i),
                    variant_features: Some(key.clone()),
                };
            }
        }
    }
    Verdict::incorrect()
}

/// Element-wise [`judge`] over a suite; prediction count must match.
pub fn judge_suite(
    matchers_per_case: &[&[CaseMatcher]],
    predictions: &[String],
    lexicon: &Lexicon,
) -> Result<Vec<Verdict>> {
    if matchers_per_case.len() != predictions.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} test cases",
            predictions.len(),
            matchers_per_case.len()
        )));
    }
    Ok(matchers_per_case
        .iter()
        .zip(predictions)
        .map(|(m, p)| judge(p, m, lexicon))
        .collect())
}
