//! Morphology-aware behavioral testing for multilingual question answering.
//!
//! The pipeline has three stages, each usable on its own:
//!
//! 1. **Generate** — parse morphology-aware templates ([`template`]), expand
//!    them against inflection lexica ([`lexicon`], [`schema`]) into test
//!    suites ([`expand`]).
//! 2. **Evaluate** — build zero-/one-shot prompts and drive a pluggable model
//!    client ([`harness`]).
//! 3. **Validate** — judge predictions against per-case answer matchers,
//!    separating morphological errors from substantive ones ([`validate`]).

pub mod error;
pub mod expand;
pub mod harness;
pub mod inflect;
pub mod lexicon;
pub mod manifest;
pub mod schema;
pub mod template;
pub mod validate;

pub mod cli;

pub use error::{Error, Result};
pub use expand::{enumerate_bindings, generate_suite, render, Binding, TestCase};
pub use lexicon::{Lexicon, LexiconEntry};
pub use schema::{FeatureSchema, FeatureSet};
pub use template::{TemplateAst, TemplateSet};
pub use validate::{judge, normalize, CaseMatcher, Verdict, VerdictKind};
