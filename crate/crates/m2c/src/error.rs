//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("lexicon error: {0}")]
    Lexicon(String),

    #[error("template parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("missing inflection for `{entry}`: no form covers [{required}]")]
    MissingInflection { entry: String, required: String },

    #[error(
        "ambiguous inflection for `{entry}`: {candidates} minimal forms cover [{required}]"
    )]
    AmbiguousInflection {
        entry: String,
        required: String,
        candidates: usize,
    },

    #[error("dimension {dimension} cannot be resolved for `{entry}`")]
    UnresolvedDimension { entry: String, dimension: String },

    #[error("no guard fired in `{raw}` and no default is given")]
    NoGuardFired { raw: String },

    #[error("cyclic dependence among placeholders: {0}")]
    CyclicDependence(String),

    #[error("template `{template_id}`, placeholder `{placeholder}`: {source}")]
    Render {
        template_id: String,
        placeholder: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("entry `{0}` has no numeric value")]
    MissingNumeric(String),

    #[error("function result {0} matches no lexicon entry")]
    ResultNotInLexicon(i64),

    #[error("suite generation failed: {0}")]
    Suite(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps a resolution failure with the template/placeholder it occurred in.
    pub(crate) fn in_render(self, template_id: &str, placeholder: &str) -> Error {
        Error::Render {
            template_id: template_id.to_string(),
            placeholder: placeholder.to_string(),
            source: Box::new(self),
        }
    }
}
