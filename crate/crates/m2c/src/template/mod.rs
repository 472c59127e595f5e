//! The template DSL: lossless AST, parser, and validated template sets.

mod ast;
mod parse;
mod set;

pub use ast::{
    ConditionalNode, FeatureSpec, FunctionNode, Guard, PlaceholderName, PlaceholderNode, Segment,
    TemplateAst,
};
pub use parse::{parse_feature_path, parse_template};
pub use set::{PlaceholderConfig, Section, SpecMatcher, TemplateSet};
