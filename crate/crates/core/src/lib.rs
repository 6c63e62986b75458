//! AI usage cards: taxonomy, card model, validation, serialization and the
//! questionnaire that produces cards.

pub mod card;
pub mod codecs;
pub mod path;
pub mod questionnaire;
pub mod taxonomy;
pub mod validator;

pub use card::{
    new_card, Card, CardError, Correspondence, EthicsAnswers, FinalizedCard, ModelUsage,
    ProjectDetails, Unmet, UsageEntry,
};
pub use codecs::{CodecError, ExportBundle, Format};
pub use path::FieldPath;
pub use questionnaire::{Answer, AnswerScript, Session, SessionError, Step, StepKind};
pub use taxonomy::{
    builtin_v1, load_taxonomy, serialize_taxonomy, Classification, Registry, Taxonomy,
    TaxonomyError,
};
pub use validator::{assess, assess_with, Dimension, Policy, ValidationReport};
