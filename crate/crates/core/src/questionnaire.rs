//! The card questionnaire as a resumable step machine.
//!
//! A [`Session`] records the answers given so far and a cursor into the step
//! sequence. The sequence itself is recomputed from the answers on every
//! call, so it always reflects the categories and subcategories currently
//! selected. Transitions are pure: each one returns a new session.
//!
//! Step order: model information, main categories, model assignment, then for
//! each selected category (in taxonomy order) the subcategory selection
//! followed by one detail step per selected subcategory, then the ethics
//! questions, approval, project details and finally review.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{
    Card, CardError, EthicsAnswers, FinalizedCard, ModelUsage, ProjectDetails, Unmet, UsageEntry,
};
use crate::codecs::{canonicalize, encode_json};
use crate::path::{FieldPath, Segment};
use crate::taxonomy::{ethics_ids, Classification, Registry, Taxonomy};

/// Position in the step sequence, with the id it concerns where relevant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum StepKind {
    ModelInfo,
    MainCategories,
    ModelAssignment,
    SubcategorySelect { category: String },
    SubcategoryDetail { subcategory: String },
    Ethics,
    Approval,
    ProjectDetails,
    Review,
}

impl StepKind {
    /// The answer tag expected by this step.
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::ModelInfo => "modelInfo",
            StepKind::MainCategories => "mainCategories",
            StepKind::ModelAssignment => "modelAssignment",
            StepKind::SubcategorySelect { .. } => "subcategorySelect",
            StepKind::SubcategoryDetail { .. } => "subcategoryDetail",
            StepKind::Ethics => "ethics",
            StepKind::Approval => "approval",
            StepKind::ProjectDetails => "projectDetails",
            StepKind::Review => "review",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::SubcategorySelect { category } => write!(f, "subcategorySelect({category})"),
            StepKind::SubcategoryDetail { subcategory } => {
                write!(f, "subcategoryDetail({subcategory})")
            }
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectAnswer {
    pub category: String,
    /// Selected subcategory ids with their classifications. An empty set
    /// stands for all classifications the subcategory allows.
    pub selected: BTreeMap<String, BTreeSet<Classification>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetailAnswer {
    pub subcategory: String,
    pub detail: String,
    /// Defaults to every model assigned to the subcategory's category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<BTreeSet<usize>>,
}

/// One submitted answer, tagged with the step it answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", content = "payload", rename_all = "camelCase")]
pub enum Answer {
    ModelInfo(Vec<ModelUsage>),
    MainCategories(BTreeSet<String>),
    ModelAssignment(BTreeMap<String, BTreeSet<usize>>),
    SubcategorySelect(SelectAnswer),
    SubcategoryDetail(DetailAnswer),
    Ethics(EthicsAnswers),
    Approval(bool),
    ProjectDetails(ProjectDetails),
}

impl Answer {
    pub fn name(&self) -> &'static str {
        match self {
            Answer::ModelInfo(_) => "modelInfo",
            Answer::MainCategories(_) => "mainCategories",
            Answer::ModelAssignment(_) => "modelAssignment",
            Answer::SubcategorySelect(_) => "subcategorySelect",
            Answer::SubcategoryDetail(_) => "subcategoryDetail",
            Answer::Ethics(_) => "ethics",
            Answer::Approval(_) => "approval",
            Answer::ProjectDetails(_) => "projectDetails",
        }
    }

    fn describe(&self) -> String {
        match self {
            Answer::SubcategorySelect(a) => format!("subcategorySelect({})", a.category),
            Answer::SubcategoryDetail(a) => format!("subcategoryDetail({})", a.subcategory),
            other => other.name().to_string(),
        }
    }
}

/// Everything answered so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Answers {
    pub models: Option<Vec<ModelUsage>>,
    pub categories: Option<BTreeSet<String>>,
    pub assignment: Option<BTreeMap<String, BTreeSet<usize>>>,
    pub selections: BTreeMap<String, BTreeMap<String, BTreeSet<Classification>>>,
    pub details: BTreeMap<String, DetailAnswer>,
    pub ethics: Option<EthicsAnswers>,
    pub approval: Option<bool>,
    pub project: Option<ProjectDetails>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    pub id: String,
    pub taxonomy_version: String,
    pub cursor: usize,
    pub answers: Answers,
    pub created_at: DateTime<Utc>,
    pub revision: u64,
    #[serde(default)]
    pub finalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub card_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Choice {
    pub id: String,
    pub title: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubcategoryChoice {
    pub id: String,
    pub title: String,
    pub description: String,
    pub allowed_classifications: BTreeSet<Classification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelOption {
    pub index: usize,
    pub name: String,
}

/// Shape of the answer a step expects, detailed enough to render a form.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase"
)]
pub enum StepSchema {
    /// A list of `{name, dates, version}` objects; dates are YYYY-MM-DD.
    ModelList,
    /// Any subset of the options.
    CategorySet { options: Vec<Choice> },
    /// For every category, a non-empty set of model indices.
    ModelAssignment {
        categories: Vec<Choice>,
        models: Vec<ModelOption>,
    },
    /// A non-empty subset of the options, each with classifications.
    SubcategorySet {
        category: Choice,
        options: Vec<SubcategoryChoice>,
    },
    /// Free text plus an optional subset of the offered models.
    Detail {
        subcategory: SubcategoryChoice,
        classifications: BTreeSet<Classification>,
        models: Vec<ModelOption>,
    },
    /// Free-text answers keyed `implications`, `errorMitigation`, `harmMitigation`.
    Ethics { questions: Vec<Choice> },
    /// A boolean.
    Approval { statement: String },
    /// `{name, keyApplications, correspondences: [{name, contact, affiliation}]}`.
    ProjectDetails,
    /// No answer; call finalize.
    Review {
        card: serde_json::Value,
        missing: Vec<Unmet>,
    },
}

/// The step a session currently waits on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Step {
    pub index: usize,
    pub kind: StepKind,
    pub prompt: String,
    pub schema: StepSchema,
    /// The answer previously given here, if the user navigated back.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefill: Option<Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown taxonomy version `{0}`")]
    UnknownTaxonomy(String),
    #[error("session uses taxonomy `{session}` but `{given}` was supplied")]
    TaxonomyMismatch { session: String, given: String },
    #[error("session is already finalized")]
    Finalized,
    #[error("expected an answer for {expected}, got {found}")]
    StepMismatch { expected: StepKind, found: String },
    #[error("invalid answer at {path}: {message}")]
    PayloadInvalid { path: FieldPath, message: String },
    #[error("already at the first step")]
    AtFirstStep,
    #[error("card is incomplete; revisit {revisit}")]
    Incomplete {
        unmet: Vec<Unmet>,
        revisit: StepKind,
    },
}

impl SessionError {
    fn invalid(path: FieldPath, message: impl Into<String>) -> Self {
        Self::PayloadInvalid {
            path,
            message: message.into(),
        }
    }
}

fn invalid<T>(path: FieldPath, message: impl Into<String>) -> Result<T, SessionError> {
    Err(SessionError::invalid(path, message))
}

fn from_card_error(error: CardError) -> SessionError {
    SessionError::invalid(error.path(), error.to_string())
}

/// The full step sequence implied by `answers`.
pub fn steps(taxonomy: &Taxonomy, answers: &Answers) -> Vec<StepKind> {
    let mut out = vec![StepKind::ModelInfo, StepKind::MainCategories];
    let selected = answers.categories.clone().unwrap_or_default();
    if !selected.is_empty() {
        out.push(StepKind::ModelAssignment);
    }
    for category in taxonomy.usage_categories() {
        if !selected.contains(&category.id) {
            continue;
        }
        out.push(StepKind::SubcategorySelect {
            category: category.id.clone(),
        });
        if let Some(chosen) = answers.selections.get(&category.id) {
            for sub in category
                .subcategories
                .iter()
                .filter(|s| chosen.contains_key(&s.id))
            {
                out.push(StepKind::SubcategoryDetail {
                    subcategory: sub.id.clone(),
                });
            }
        }
    }
    out.extend([
        StepKind::Ethics,
        StepKind::Approval,
        StepKind::ProjectDetails,
        StepKind::Review,
    ]);
    out
}

/// Assembles the card described by `answers`; unanswered parts stay empty.
pub fn build_card(taxonomy: &Taxonomy, answers: &Answers) -> Card {
    let mut card = Card::new(taxonomy);
    card.models = answers.models.clone().unwrap_or_default();
    let selected = answers.categories.clone().unwrap_or_default();
    if let Some(assignment) = &answers.assignment {
        for (category, refs) in assignment {
            if selected.contains(category) && !refs.is_empty() {
                card.category_models.insert(category.clone(), refs.clone());
            }
        }
    }
    for category in taxonomy.usage_categories() {
        if !selected.contains(&category.id) {
            continue;
        }
        let Some(chosen) = answers.selections.get(&category.id) else {
            continue;
        };
        for (sub, classifications) in chosen {
            if let Some(detail) = answers.details.get(sub) {
                let models = detail.models.clone().unwrap_or_else(|| {
                    card.category_models
                        .get(&category.id)
                        .cloned()
                        .unwrap_or_default()
                });
                card.entries.insert(
                    sub.clone(),
                    UsageEntry::used(sub, classifications.iter().copied(), models, &detail.detail),
                );
            }
        }
    }
    card.ethics = answers.ethics.clone().unwrap_or_default();
    card.approval = answers.approval.unwrap_or(false);
    card.project = answers.project.clone().unwrap_or_default();
    canonicalize(&card)
}

/// The step to revisit to fix an unmet condition.
pub fn step_for_path(path: &FieldPath) -> StepKind {
    match path.segments() {
        [Segment::Field(f), ..] if f == "project" => StepKind::ProjectDetails,
        [Segment::Field(f), ..] if f == "ethics" => StepKind::Ethics,
        [Segment::Field(f), ..] if f == "approval" => StepKind::Approval,
        [Segment::Field(f), ..] if f == "categories" => StepKind::ModelAssignment,
        [Segment::Field(f), Segment::Key(id), ..] if f == "entries" => {
            StepKind::SubcategoryDetail {
                subcategory: id.clone(),
            }
        }
        _ => StepKind::ModelInfo,
    }
}

fn model_options(answers: &Answers, only: Option<&BTreeSet<usize>>) -> Vec<ModelOption> {
    answers
        .models
        .iter()
        .flatten()
        .enumerate()
        .filter(|(i, _)| only.is_none_or(|set| set.contains(i)))
        .map(|(index, m)| ModelOption {
            index,
            name: m.name.clone(),
        })
        .collect()
}

fn sub_choice(def: &crate::taxonomy::SubcategoryDef) -> SubcategoryChoice {
    SubcategoryChoice {
        id: def.id.clone(),
        title: def.title.clone(),
        description: def.description.clone(),
        allowed_classifications: def.allowed_classifications.clone(),
    }
}

fn title_of(taxonomy: &Taxonomy, id: &str) -> String {
    taxonomy
        .lookup_subcategory(id)
        .map(|d| d.title.clone())
        .unwrap_or_else(|_| id.to_string())
}

impl Session {
    /// Opens a new session at the model information step.
    pub fn start(registry: &Registry, taxonomy_version: &str) -> Result<Session, SessionError> {
        registry
            .get(taxonomy_version)
            .map_err(|_| SessionError::UnknownTaxonomy(taxonomy_version.to_string()))?;
        Ok(Session {
            id: uuid::Uuid::new_v4().simple().to_string(),
            taxonomy_version: taxonomy_version.to_string(),
            cursor: 0,
            answers: Answers::default(),
            created_at: Utc::now(),
            revision: 0,
            finalized: false,
            card_id: None,
        })
    }

    fn ensure(&self, taxonomy: &Taxonomy) -> Result<(), SessionError> {
        if self.finalized {
            return Err(SessionError::Finalized);
        }
        if taxonomy.version != self.taxonomy_version {
            return Err(SessionError::TaxonomyMismatch {
                session: self.taxonomy_version.clone(),
                given: taxonomy.version.clone(),
            });
        }
        Ok(())
    }

    pub fn steps(&self, taxonomy: &Taxonomy) -> Vec<StepKind> {
        steps(taxonomy, &self.answers)
    }

    pub fn current_kind(&self, taxonomy: &Taxonomy) -> StepKind {
        let all = self.steps(taxonomy);
        let last = all.len() - 1;
        all.into_iter()
            .nth(self.cursor.min(last))
            .expect("sequence always ends with review")
    }

    /// The card assembled from the answers so far.
    pub fn card(&self, taxonomy: &Taxonomy) -> Card {
        build_card(taxonomy, &self.answers)
    }

    pub fn current_step(&self, taxonomy: &Taxonomy) -> Result<Step, SessionError> {
        self.ensure(taxonomy)?;
        let kind = self.current_kind(taxonomy);
        let answers = &self.answers;
        let (prompt, schema, prefill) = match &kind {
            StepKind::ModelInfo => (
                "Which AI models did you use? Give each model's name, the dates you used it \
                 and its version if known. Leave the list empty if no AI was used."
                    .to_string(),
                StepSchema::ModelList,
                answers.models.clone().map(Answer::ModelInfo),
            ),
            StepKind::MainCategories => (
                "In which parts of the project did AI contribute? Select every category that applies."
                    .to_string(),
                StepSchema::CategorySet {
                    options: taxonomy
                        .usage_categories()
                        .map(|c| Choice {
                            id: c.id.clone(),
                            title: c.title.clone(),
                            description: String::new(),
                        })
                        .collect(),
                },
                answers.categories.clone().map(Answer::MainCategories),
            ),
            StepKind::ModelAssignment => {
                let selected = answers.categories.clone().unwrap_or_default();
                (
                    "Assign the models you used to each selected category.".to_string(),
                    StepSchema::ModelAssignment {
                        categories: taxonomy
                            .usage_categories()
                            .filter(|c| selected.contains(&c.id))
                            .map(|c| Choice {
                                id: c.id.clone(),
                                title: c.title.clone(),
                                description: String::new(),
                            })
                            .collect(),
                        models: model_options(answers, None),
                    },
                    answers.assignment.clone().map(Answer::ModelAssignment),
                )
            }
            StepKind::SubcategorySelect { category } => {
                let def = taxonomy
                    .lookup_category(category)
                    .expect("steps only name known categories");
                (
                    format!(
                        "Which kinds of {} work did AI support? Pick the subcategories and how the AI contributed.",
                        def.title
                    ),
                    StepSchema::SubcategorySet {
                        category: Choice {
                            id: def.id.clone(),
                            title: def.title.clone(),
                            description: String::new(),
                        },
                        options: def
                            .subcategories
                            .iter()
                            .filter(|s| s.is_usage())
                            .map(sub_choice)
                            .collect(),
                    },
                    answers.selections.get(category).map(|selected| {
                        Answer::SubcategorySelect(SelectAnswer {
                            category: category.clone(),
                            selected: selected.clone(),
                        })
                    }),
                )
            }
            StepKind::SubcategoryDetail { subcategory } => {
                let def = taxonomy
                    .lookup_subcategory(subcategory)
                    .expect("steps only name known subcategories");
                let category = taxonomy
                    .category_of(subcategory)
                    .expect("steps only name known subcategories");
                let assigned = answers
                    .assignment
                    .as_ref()
                    .and_then(|a| a.get(&category.id))
                    .cloned()
                    .unwrap_or_default();
                let classifications = answers
                    .selections
                    .get(&category.id)
                    .and_then(|s| s.get(subcategory))
                    .cloned()
                    .unwrap_or_default();
                (
                    format!(
                        "{}: describe what the AI produced, why it was needed and how the \
                         content changed as a result.",
                        def.title
                    ),
                    StepSchema::Detail {
                        subcategory: sub_choice(def),
                        classifications,
                        models: model_options(answers, Some(&assigned)),
                    },
                    answers
                        .details
                        .get(subcategory)
                        .cloned()
                        .map(Answer::SubcategoryDetail),
                )
            }
            StepKind::Ethics => (
                "Answer the ethics questions about this use of AI.".to_string(),
                StepSchema::Ethics {
                    questions: [
                        ("implications", ethics_ids::IMPLICATIONS),
                        ("errorMitigation", ethics_ids::ERROR_MITIGATION),
                        ("harmMitigation", ethics_ids::HARM_MITIGATION),
                    ]
                    .into_iter()
                    .map(|(key, id)| Choice {
                        id: key.to_string(),
                        title: title_of(taxonomy, id),
                        description: String::new(),
                    })
                    .collect(),
                },
                answers.ethics.clone().map(Answer::Ethics),
            ),
            StepKind::Approval => (
                "Confirm that the authors reviewed and approve the AI-assisted content.".to_string(),
                StepSchema::Approval {
                    statement: title_of(taxonomy, ethics_ids::APPROVAL),
                },
                answers.approval.map(Answer::Approval),
            ),
            StepKind::ProjectDetails => (
                "Name the project, its key applications and the people to contact about it."
                    .to_string(),
                StepSchema::ProjectDetails,
                answers.project.clone().map(Answer::ProjectDetails),
            ),
            StepKind::Review => {
                let card = self.card(taxonomy);
                (
                    "Review the card and finalize it.".to_string(),
                    StepSchema::Review {
                        card: serde_json::from_str(&encode_json(taxonomy, &card))
                            .expect("encoder emits valid JSON"),
                        missing: card.unmet_conditions(taxonomy),
                    },
                    None,
                )
            }
        };
        Ok(Step {
            index: self.cursor,
            kind,
            prompt,
            schema,
            prefill,
        })
    }

    /// Applies an answer to the current step and advances the cursor.
    pub fn submit(&self, taxonomy: &Taxonomy, answer: Answer) -> Result<Session, SessionError> {
        self.ensure(taxonomy)?;
        let kind = self.current_kind(taxonomy);
        let mismatch = || SessionError::StepMismatch {
            expected: kind.clone(),
            found: answer.describe(),
        };
        let mut answers = self.answers.clone();
        match (&kind, &answer) {
            (StepKind::ModelInfo, Answer::ModelInfo(models)) => {
                let mut card = Card::new(taxonomy);
                for (index, model) in models.iter().enumerate() {
                    if model.dates_used.is_empty() {
                        return invalid(
                            FieldPath::field("models")
                                .push_index(index)
                                .push_field("dates"),
                            "at least one usage date is required",
                        );
                    }
                    card = card.add_model(model.clone()).map_err(from_card_error)?.0;
                }
                answers.models = Some(models.clone());
            }
            (StepKind::MainCategories, Answer::MainCategories(selected)) => {
                for id in selected {
                    if !taxonomy
                        .lookup_category(id)
                        .map(|c| c.is_usage())
                        .unwrap_or(false)
                    {
                        return invalid(
                            FieldPath::field("categories").push_key(id),
                            format!("unknown usage category `{id}`"),
                        );
                    }
                }
                answers.selections.retain(|c, _| selected.contains(c));
                answers.details.retain(|sub, _| {
                    taxonomy
                        .category_of(sub)
                        .map(|c| selected.contains(&c.id))
                        .unwrap_or(false)
                });
                if let Some(assignment) = answers.assignment.as_mut() {
                    assignment.retain(|c, _| selected.contains(c));
                }
                answers.categories = Some(selected.clone());
            }
            (StepKind::ModelAssignment, Answer::ModelAssignment(assignment)) => {
                let selected = answers.categories.clone().unwrap_or_default();
                let count = answers.models.as_ref().map_or(0, Vec::len);
                for (category, refs) in assignment {
                    let path = FieldPath::field("categories")
                        .push_key(category)
                        .push_field("models");
                    if !selected.contains(category) {
                        return invalid(path, format!("`{category}` was not selected"));
                    }
                    if let Some(&index) = refs.iter().find(|&&i| i >= count) {
                        return invalid(
                            path,
                            format!("model {index} does not exist ({count} declared)"),
                        );
                    }
                }
                for category in &selected {
                    if assignment.get(category).is_none_or(BTreeSet::is_empty) {
                        return invalid(
                            FieldPath::field("categories")
                                .push_key(category)
                                .push_field("models"),
                            "assign at least one model",
                        );
                    }
                }
                answers.assignment = Some(assignment.clone());
            }
            (StepKind::SubcategorySelect { category }, Answer::SubcategorySelect(select)) => {
                if select.category != *category {
                    return Err(mismatch());
                }
                if select.selected.is_empty() {
                    return invalid(
                        FieldPath::field("categories").push_key(category),
                        "select at least one subcategory",
                    );
                }
                let mut chosen = BTreeMap::new();
                for (sub, classes) in &select.selected {
                    let path = FieldPath::field("entries").push_key(sub);
                    let def = match taxonomy.lookup_subcategory(sub) {
                        Ok(def)
                            if def.is_usage()
                                && taxonomy.category_of(sub).map(|c| &c.id) == Ok(category) =>
                        {
                            def
                        }
                        _ => {
                            return invalid(
                                path,
                                format!("`{sub}` is not a subcategory of `{category}`"),
                            )
                        }
                    };
                    if let Some(c) = classes
                        .iter()
                        .find(|c| !def.allowed_classifications.contains(c))
                    {
                        return invalid(
                            path.push_field("classifications"),
                            format!("classification {c} is not allowed here"),
                        );
                    }
                    let classes = if classes.is_empty() {
                        def.allowed_classifications.clone()
                    } else {
                        classes.clone()
                    };
                    chosen.insert(sub.clone(), classes);
                }
                answers
                    .details
                    .retain(|sub, _| chosen.contains_key(sub) || !sub_of(taxonomy, sub, category));
                answers.selections.insert(category.clone(), chosen);
            }
            (StepKind::SubcategoryDetail { subcategory }, Answer::SubcategoryDetail(detail)) => {
                if detail.subcategory != *subcategory {
                    return Err(mismatch());
                }
                let path = FieldPath::field("entries").push_key(subcategory);
                if detail.detail.trim().is_empty() {
                    return invalid(path.push_field("detail"), "describe how AI was used");
                }
                let category = taxonomy
                    .category_of(subcategory)
                    .map_err(|e| SessionError::invalid(path.clone(), e.to_string()))?;
                let assigned = answers
                    .assignment
                    .as_ref()
                    .and_then(|a| a.get(&category.id))
                    .cloned()
                    .unwrap_or_default();
                if let Some(models) = &detail.models {
                    if models.is_empty() {
                        return invalid(path.push_field("models"), "select at least one model");
                    }
                    if let Some(index) = models.iter().find(|i| !assigned.contains(i)) {
                        return invalid(
                            path.push_field("models"),
                            format!("model {index} is not assigned to `{}`", category.id),
                        );
                    }
                }
                answers.details.insert(subcategory.clone(), detail.clone());
            }
            (StepKind::Ethics, Answer::Ethics(ethics)) => answers.ethics = Some(ethics.clone()),
            (StepKind::Approval, Answer::Approval(approved)) => answers.approval = Some(*approved),
            (StepKind::ProjectDetails, Answer::ProjectDetails(project)) => {
                answers.project = Some(project.clone())
            }
            _ => return Err(mismatch()),
        }
        Ok(Session {
            cursor: self.cursor + 1,
            answers,
            revision: self.revision + 1,
            ..self.clone()
        })
    }

    /// Moves to the previous step, keeping every answer.
    pub fn go_back(&self, taxonomy: &Taxonomy) -> Result<Session, SessionError> {
        self.ensure(taxonomy)?;
        if self.cursor == 0 {
            return Err(SessionError::AtFirstStep);
        }
        Ok(Session {
            cursor: self.cursor - 1,
            revision: self.revision + 1,
            ..self.clone()
        })
    }

    /// Builds and finalizes the card; only allowed at the review step.
    pub fn finalize(&self, taxonomy: &Taxonomy) -> Result<(Session, FinalizedCard), SessionError> {
        self.ensure(taxonomy)?;
        let kind = self.current_kind(taxonomy);
        if kind != StepKind::Review {
            return Err(SessionError::StepMismatch {
                expected: kind,
                found: "review".to_string(),
            });
        }
        match self.card(taxonomy).finalize(taxonomy) {
            Ok(card) => Ok((
                Session {
                    finalized: true,
                    revision: self.revision + 1,
                    ..self.clone()
                },
                card,
            )),
            Err(CardError::Incomplete(unmet)) => {
                let revisit = unmet
                    .first()
                    .map(|u| step_for_path(&u.path))
                    .unwrap_or(StepKind::ModelInfo);
                Err(SessionError::Incomplete { unmet, revisit })
            }
            Err(other) => {
                let path = other.path();
                Err(SessionError::Incomplete {
                    revisit: step_for_path(&path),
                    unmet: vec![Unmet {
                        path,
                        message: other.to_string(),
                    }],
                })
            }
        }
    }
}

fn sub_of(taxonomy: &Taxonomy, sub: &str, category: &str) -> bool {
    taxonomy
        .category_of(sub)
        .map(|c| c.id == category)
        .unwrap_or(false)
}

pub fn start(registry: &Registry, taxonomy_version: &str) -> Result<Session, SessionError> {
    Session::start(registry, taxonomy_version)
}

pub fn current_step(session: &Session, taxonomy: &Taxonomy) -> Result<Step, SessionError> {
    session.current_step(taxonomy)
}

pub fn submit_answer(
    session: &Session,
    taxonomy: &Taxonomy,
    answer: Answer,
) -> Result<Session, SessionError> {
    session.submit(taxonomy, answer)
}

pub fn go_back(session: &Session, taxonomy: &Taxonomy) -> Result<Session, SessionError> {
    session.go_back(taxonomy)
}

pub fn finalize_session(
    session: &Session,
    taxonomy: &Taxonomy,
) -> Result<(Session, FinalizedCard), SessionError> {
    session.finalize(taxonomy)
}

/// A recorded, replayable sequence of answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerScript {
    pub version: String,
    pub answers: Vec<Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("answer script is not valid JSON: {0}")]
    Parse(String),
    #[error("answer {index} ({step}): {source}")]
    Step {
        index: usize,
        step: StepKind,
        #[source]
        source: SessionError,
    },
    #[error("answer script ends before {step}")]
    Truncated { index: usize, step: StepKind },
    #[error(transparent)]
    Session(SessionError),
}

impl AnswerScript {
    pub fn new(version: impl Into<String>, answers: Vec<Answer>) -> Self {
        Self {
            version: version.into(),
            answers,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        serde_json::from_str(text).map_err(|e| ScriptError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scripts are serializable");
        out.push('\n');
        out
    }

    /// Submits every answer to `session` in order.
    pub fn apply(&self, taxonomy: &Taxonomy, session: &Session) -> Result<Session, ScriptError> {
        let mut session = session.clone();
        for (index, answer) in self.answers.iter().enumerate() {
            session =
                session
                    .submit(taxonomy, answer.clone())
                    .map_err(|source| ScriptError::Step {
                        index,
                        step: session.current_kind(taxonomy),
                        source,
                    })?;
        }
        Ok(session)
    }

    /// Plays the script against a fresh session and finalizes the result.
    pub fn replay(&self, registry: &Registry) -> Result<(Session, FinalizedCard), ScriptError> {
        let session = Session::start(registry, &self.version).map_err(ScriptError::Session)?;
        let taxonomy = registry.get(&self.version).map_err(|_| {
            ScriptError::Session(SessionError::UnknownTaxonomy(self.version.clone()))
        })?;
        let session = self.apply(taxonomy, &session)?;
        let step = session.current_kind(taxonomy);
        if step != StepKind::Review {
            return Err(ScriptError::Truncated {
                index: self.answers.len(),
                step,
            });
        }
        session.finalize(taxonomy).map_err(ScriptError::Session)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::Correspondence;
    use crate::taxonomy::builtin_v1;

    fn date(s: &str) -> chrono::NaiveDate {
        s.parse().unwrap()
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn session() -> Session {
        Session::start(&Registry::builtin(), "1.0").unwrap()
    }

    fn models() -> Answer {
        Answer::ModelInfo(vec![ModelUsage::new("ChatGPT", vec![date("2023-01-21")])])
    }

    fn through_selection(categories: &[&str]) -> Session {
        let tax = builtin_v1();
        let s = session().submit(&tax, models()).unwrap();
        let s = s
            .submit(&tax, Answer::MainCategories(set(categories)))
            .unwrap();
        if categories.is_empty() {
            return s;
        }
        s.submit(
            &tax,
            Answer::ModelAssignment(
                categories
                    .iter()
                    .map(|c| (c.to_string(), [0].into()))
                    .collect(),
            ),
        )
        .unwrap()
    }

    #[test]
    fn starts_at_model_info() {
        let s = session();
        assert_eq!(s.current_kind(&builtin_v1()), StepKind::ModelInfo);
        assert_eq!(s.revision, 0);
        assert_ne!(s.id, session().id);
        assert_eq!(
            Session::start(&Registry::builtin(), "9.9"),
            Err(SessionError::UnknownTaxonomy("9.9".into()))
        );
    }

    #[test]
    fn selected_categories_drive_the_sequence() {
        let s = through_selection(&["writing", "ideation"]);
        let selects: Vec<StepKind> = s
            .steps(&builtin_v1())
            .into_iter()
            .filter(|k| matches!(k, StepKind::SubcategorySelect { .. }))
            .collect();
        assert_eq!(
            selects,
            vec![
                StepKind::SubcategorySelect {
                    category: "ideation".into()
                },
                StepKind::SubcategorySelect {
                    category: "writing".into()
                },
            ]
        );
    }

    #[test]
    fn empty_selection_skips_to_ethics() {
        let s = through_selection(&[]);
        assert_eq!(s.current_kind(&builtin_v1()), StepKind::Ethics);
    }

    #[test]
    fn empty_detail_is_rejected() {
        let tax = builtin_v1();
        let s = through_selection(&["ideation"])
            .submit(
                &tax,
                Answer::SubcategorySelect(SelectAnswer {
                    category: "ideation".into(),
                    selected: [("ideation.improving".to_string(), BTreeSet::new())].into(),
                }),
            )
            .unwrap();
        let err = s
            .submit(
                &tax,
                Answer::SubcategoryDetail(DetailAnswer {
                    subcategory: "ideation.improving".into(),
                    detail: "  ".into(),
                    models: None,
                }),
            )
            .unwrap_err();
        match err {
            SessionError::PayloadInvalid { path, .. } => {
                assert_eq!(path.to_string(), "entries[ideation.improving].detail")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_step_is_a_mismatch() {
        let err = session()
            .submit(&builtin_v1(), Answer::Approval(true))
            .unwrap_err();
        assert!(matches!(err, SessionError::StepMismatch { .. }));
    }

    #[test]
    fn back_at_first_step() {
        assert_eq!(
            session().go_back(&builtin_v1()),
            Err(SessionError::AtFirstStep)
        );
    }

    #[test]
    fn removing_a_category_discards_its_answers() {
        let tax = builtin_v1();
        let mut s = through_selection(&["ideation", "writing"]);
        for (cat, sub) in [
            ("ideation", "ideation.generating"),
            ("writing", "writing.improving"),
        ] {
            s = s
                .submit(
                    &tax,
                    Answer::SubcategorySelect(SelectAnswer {
                        category: cat.into(),
                        selected: [(sub.to_string(), BTreeSet::new())].into(),
                    }),
                )
                .unwrap()
                .submit(
                    &tax,
                    Answer::SubcategoryDetail(DetailAnswer {
                        subcategory: sub.into(),
                        detail: "text".into(),
                        models: None,
                    }),
                )
                .unwrap();
        }
        assert_eq!(s.current_kind(&tax), StepKind::Ethics);
        let mut back = s.clone();
        while back.current_kind(&tax) != StepKind::MainCategories {
            back = back.go_back(&tax).unwrap();
        }
        let same = back
            .submit(&tax, Answer::MainCategories(set(&["ideation", "writing"])))
            .unwrap();
        assert_eq!(same.answers.details, s.answers.details);
        let fewer = back
            .submit(&tax, Answer::MainCategories(set(&["ideation"])))
            .unwrap();
        assert!(fewer.answers.details.contains_key("ideation.generating"));
        assert!(!fewer.answers.details.contains_key("writing.improving"));
        assert!(!fewer.answers.selections.contains_key("writing"));
    }

    #[test]
    fn finalize_requires_review_and_correspondence() {
        let tax = builtin_v1();
        let s = through_selection(&[]);
        assert!(matches!(
            s.finalize(&tax),
            Err(SessionError::StepMismatch { .. })
        ));
        let s = s
            .submit(&tax, Answer::Ethics(EthicsAnswers::default()))
            .unwrap()
            .submit(&tax, Answer::Approval(true))
            .unwrap()
            .submit(
                &tax,
                Answer::ProjectDetails(ProjectDetails {
                    project_name: "P".into(),
                    ..Default::default()
                }),
            )
            .unwrap();
        match s.finalize(&tax) {
            Err(SessionError::Incomplete { revisit, .. }) => {
                assert_eq!(revisit, StepKind::ProjectDetails)
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut fixed = s.go_back(&tax).unwrap();
        fixed = fixed
            .submit(
                &tax,
                Answer::ProjectDetails(ProjectDetails {
                    project_name: "P".into(),
                    correspondences: vec![Correspondence::new("A", "a@b.c", "")],
                    key_applications: vec![],
                }),
            )
            .unwrap();
        let (done, card) = fixed.finalize(&tax).unwrap();
        assert!(done.finalized);
        assert!(!card.card().any_used());
        assert_eq!(done.current_step(&tax), Err(SessionError::Finalized));
    }

    #[test]
    fn answer_wire_format() {
        let json = serde_json::to_value(Answer::Approval(true)).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"step": "approval", "payload": true})
        );
        let kind = serde_json::to_value(StepKind::SubcategorySelect {
            category: "ideation".into(),
        })
        .unwrap();
        assert_eq!(
            kind,
            serde_json::json!({"kind": "subcategorySelect", "category": "ideation"})
        );
    }
}
