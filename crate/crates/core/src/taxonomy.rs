//! The versioned card structure.
//!
//! A [`Taxonomy`] lists the blocks of a card, the categories inside each
//! block and the subcategories inside each category, in reading order. Every
//! other module walks this data instead of hard-coding card shape, so custom
//! cards only need a different taxonomy document.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version string of the builtin taxonomy.
pub const V1: &str = "1.0";

/// Ids of the fixed ethics items; exports look their titles up by these ids.
pub mod ethics_ids {
    pub const IMPLICATIONS: &str = "ethics.implications";
    pub const ERROR_MITIGATION: &str = "ethics.error-mitigation";
    pub const HARM_MITIGATION: &str = "ethics.harm-mitigation";
    pub const APPROVAL: &str = "ethics.approval";
}

/// How AI contributed to the content of a subcategory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Classification {
    New,
    Revise,
    Compare,
}

impl Classification {
    pub const ALL: [Classification; 3] = [Self::New, Self::Revise, Self::Compare];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::New => "New",
            Self::Revise => "Revise",
            Self::Compare => "Compare",
        }
    }

    /// Case-insensitive parse.
    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(text.trim()))
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerKind {
    /// A usage subcategory answered with classifications, models and detail text.
    UsageDetail,
    /// An open question answered with free text (ethics questions).
    FreeTextQuestion,
    /// A yes/no attestation (content approval).
    Affirmation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubcategoryDef {
    pub id: String,
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub allowed_classifications: BTreeSet<Classification>,
    pub answer_kind: AnswerKind,
}

impl SubcategoryDef {
    pub fn is_usage(&self) -> bool {
        self.answer_kind == AnswerKind::UsageDetail
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Category {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub subcategories: Vec<SubcategoryDef>,
}

impl Category {
    /// A usage category holds at least one usage subcategory and is offered
    /// as a "where was AI used" choice.
    pub fn is_usage(&self) -> bool {
        self.subcategories.iter().any(SubcategoryDef::is_usage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Block {
    pub id: String,
    pub title: String,
    pub categories: Vec<Category>,
}

impl Block {
    pub fn subcategory_count(&self) -> usize {
        self.categories.iter().map(|c| c.subcategories.len()).sum()
    }

    pub fn is_usage(&self) -> bool {
        self.categories.iter().any(Category::is_usage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Taxonomy {
    pub version: String,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("unknown taxonomy version `{0}`")]
    UnknownVersion(String),
    #[error("taxonomy parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("taxonomy invariant `{invariant}` violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },
}

fn violation(invariant: &'static str, detail: impl Into<String>) -> TaxonomyError {
    TaxonomyError::Invariant {
        invariant,
        detail: detail.into(),
    }
}

fn is_identifier(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && !id.ends_with('.')
        && !id.contains("..")
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '.')
}

impl Taxonomy {
    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.blocks.iter().flat_map(|b| b.categories.iter())
    }

    pub fn subcategories(&self) -> impl Iterator<Item = &SubcategoryDef> {
        self.categories().flat_map(|c| c.subcategories.iter())
    }

    pub fn usage_categories(&self) -> impl Iterator<Item = &Category> {
        self.categories().filter(|c| c.is_usage())
    }

    /// Usage subcategories in reading order, paired with their category.
    pub fn usage_subcategories(&self) -> impl Iterator<Item = (&Category, &SubcategoryDef)> {
        self.usage_categories().flat_map(|c| {
            c.subcategories
                .iter()
                .filter(|s| s.is_usage())
                .map(move |s| (c, s))
        })
    }

    pub fn lookup_subcategory(&self, id: &str) -> Result<&SubcategoryDef, TaxonomyError> {
        self.subcategories()
            .find(|s| s.id == id)
            .ok_or_else(|| TaxonomyError::UnknownId(id.to_string()))
    }

    pub fn lookup_category(&self, id: &str) -> Result<&Category, TaxonomyError> {
        self.categories()
            .find(|c| c.id == id)
            .ok_or_else(|| TaxonomyError::UnknownId(id.to_string()))
    }

    /// The category owning a subcategory.
    pub fn category_of(&self, subcategory_id: &str) -> Result<&Category, TaxonomyError> {
        self.categories()
            .find(|c| c.subcategories.iter().any(|s| s.id == subcategory_id))
            .ok_or_else(|| TaxonomyError::UnknownId(subcategory_id.to_string()))
    }

    /// Checks every structural invariant. The fixed six-block shape and the
    /// per-block subcategory counts only apply to version `1.0`.
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        if self.version.trim().is_empty() {
            return Err(violation("version-present", "version string is empty"));
        }
        if self.blocks.is_empty() {
            return Err(violation("blocks-present", "taxonomy has no blocks"));
        }

        let mut block_ids = HashSet::new();
        let mut category_ids = HashSet::new();
        let mut subcategory_ids = HashSet::new();
        for block in &self.blocks {
            if !is_identifier(&block.id) {
                return Err(violation(
                    "identifier-syntax",
                    format!("block id `{}`", block.id),
                ));
            }
            if !block_ids.insert(block.id.as_str()) {
                return Err(violation(
                    "unique-block-ids",
                    format!("duplicate block `{}`", block.id),
                ));
            }
            if !(1..=2).contains(&block.categories.len()) {
                return Err(violation(
                    "categories-per-block",
                    format!(
                        "block `{}` has {} categories, expected 1 or 2",
                        block.id,
                        block.categories.len()
                    ),
                ));
            }
            for category in &block.categories {
                if !is_identifier(&category.id) {
                    return Err(violation(
                        "identifier-syntax",
                        format!("category id `{}`", category.id),
                    ));
                }
                if !category_ids.insert(category.id.as_str()) {
                    return Err(violation(
                        "unique-category-ids",
                        format!("duplicate category `{}`", category.id),
                    ));
                }
                for sub in &category.subcategories {
                    if !is_identifier(&sub.id) {
                        return Err(violation(
                            "identifier-syntax",
                            format!("subcategory id `{}`", sub.id),
                        ));
                    }
                    if !subcategory_ids.insert(sub.id.as_str()) {
                        return Err(violation(
                            "unique-subcategory-ids",
                            format!("duplicate subcategory `{}`", sub.id),
                        ));
                    }
                    if sub.title.trim().is_empty() {
                        return Err(violation(
                            "titles-present",
                            format!("`{}` has no title", sub.id),
                        ));
                    }
                    if sub.is_usage() && sub.allowed_classifications.is_empty() {
                        return Err(violation(
                            "allowed-classifications",
                            format!("usage subcategory `{}` allows no classification", sub.id),
                        ));
                    }
                }
            }
        }

        if self.version == V1 {
            self.validate_v1_shape()?;
        }
        Ok(())
    }

    fn validate_v1_shape(&self) -> Result<(), TaxonomyError> {
        if self.blocks.len() != 6 {
            return Err(violation(
                "six-blocks",
                format!("version 1.0 requires 6 blocks, found {}", self.blocks.len()),
            ));
        }
        for block in self.blocks.iter().filter(|b| b.is_usage()) {
            let count = block.subcategory_count();
            if !(6..=7).contains(&count) {
                return Err(violation(
                    "subcategories-per-block",
                    format!(
                        "block `{}` has {count} subcategories, expected 6 to 7",
                        block.id
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Parses a taxonomy document and checks its invariants.
pub fn load_taxonomy(document: &str) -> Result<Taxonomy, TaxonomyError> {
    let taxonomy: Taxonomy = serde_json::from_str(document).map_err(|e| TaxonomyError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    taxonomy.validate()?;
    Ok(taxonomy)
}

/// Deterministic pretty-printed JSON, terminated by a newline.
pub fn serialize_taxonomy(taxonomy: &Taxonomy) -> String {
    let mut out = serde_json::to_string_pretty(taxonomy).expect("taxonomy is always serializable");
    out.push('\n');
    out
}

/// Known taxonomies keyed by version.
#[derive(Debug, Clone)]
pub struct Registry {
    taxonomies: BTreeMap<String, Arc<Taxonomy>>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    /// A registry holding only the builtin `1.0` taxonomy.
    pub fn builtin() -> Self {
        let mut taxonomies = BTreeMap::new();
        taxonomies.insert(V1.to_string(), Arc::new(builtin_v1()));
        Self { taxonomies }
    }

    /// Adds (or replaces) a taxonomy after validating it.
    pub fn register(&mut self, taxonomy: Taxonomy) -> Result<(), TaxonomyError> {
        taxonomy.validate()?;
        self.taxonomies
            .insert(taxonomy.version.clone(), Arc::new(taxonomy));
        Ok(())
    }

    pub fn get(&self, version: &str) -> Result<&Arc<Taxonomy>, TaxonomyError> {
        self.taxonomies
            .get(version)
            .ok_or_else(|| TaxonomyError::UnknownVersion(version.to_string()))
    }

    pub fn versions(&self) -> impl Iterator<Item = &str> {
        self.taxonomies.keys().map(String::as_str)
    }
}

use Classification::{Compare, New, Revise};

type SubRow = (&'static str, &'static str, Classification, &'static str);

#[rustfmt::skip]
const IDEATION: &[SubRow] = &[
    ("generating", "Generating ideas, outlines, and workflows", New,
     "When the project direction, topics, outlines, and research questions are generated through prompts or instructions."),
    ("improving", "Improving existing ideas", Revise,
     "When existing project ideas, topics, outline, and research questions are either paraphrased, extended, or improved."),
    ("finding-gaps", "Finding gaps or compare aspects of ideas", Compare,
     "When models are used to identify missing aspects in existing content or compare them."),
];

#[rustfmt::skip]
const LITERATURE_REVIEW: &[SubRow] = &[
    ("finding", "Finding literature", New,
     "When unknown related work, supporting literature, or similar is obtained through models."),
    ("finding-examples", "Finding examples from known literature", Compare,
     "When examples from a collection of known literature are specified as relevant."),
    ("adding", "Adding additional literature for existing statements and facts", Revise,
     "When literature material is suggested to support existing content."),
    ("comparing", "Comparing literature", Compare,
     "When suggested or existing material is compared and analyzed by the model."),
];

#[rustfmt::skip]
const METHODOLOGY: &[SubRow] = &[
    ("proposing", "Proposing new solutions to problems", New,
     "When the method and process for solving the problem are outlined."),
    ("optimizing", "Finding iterative optimizations", Revise,
     "When existing method and process are improved."),
    ("comparing", "Comparing related solutions", Compare,
     "When existing or generated methods and processes are compared."),
];

#[rustfmt::skip]
const EXPERIMENTS: &[SubRow] = &[
    ("designing", "Designing new experiments", New,
     "When new experiment setups are generated through prompts or instructions."),
    ("editing", "Editing existing experiments", Revise,
     "When existing or generated experimental setup is improved."),
    ("aggregating", "Finding, comparing, and aggregating results", Compare,
     "When unseen patterns are suggested using existing or generated results to support analysis."),
];

#[rustfmt::skip]
const WRITING: &[SubRow] = &[
    ("generating", "Generating new text based on instructions", New,
     "When any text is generated through prompts, questions, or instructions."),
    ("improving", "Assisting in improving own content", Revise,
     "When existing text is paraphrased or improved."),
    ("paraphrasing", "Paraphrasing related work", Revise,
     "When related work content is paraphrased."),
    ("perspective", "Putting other works in perspective", Compare,
     "When related work is challenged or paraphrased towards a different direction from their original content."),
];

#[rustfmt::skip]
const PRESENTATION: &[SubRow] = &[
    ("generating", "Generating new artifacts", New,
     "When new tables, figures, diagrams, or similar elements are generated through instructions or prompts."),
    ("improving", "Improving the aesthetics of artifacts", Revise,
     "When the visual aspects of tables, figures, diagrams, or similar elements are improved."),
    ("relations", "Finding relations between own or related artifacts", Compare,
     "When the content of tables, figures, diagrams, or similar elements are compared to uncover unseen relations."),
];

#[rustfmt::skip]
const CODING: &[SubRow] = &[
    ("generating", "Generating new code based on descriptions or existing code", New,
     "When new code is generated based on instructions or prompts."),
    ("refactoring", "Refactoring and optimizing existing code", Revise,
     "When existing or generated code is refactored or its performance optimized."),
    ("comparing", "Comparing aspects of existing code", Compare,
     "When existing or generated code is compared to uncover unseen patterns or flaws."),
];

#[rustfmt::skip]
const DATA: &[SubRow] = &[
    ("suggesting", "Suggesting new sources for data collection", New,
     "When datasets, collections, or similar sources are suggested based on instructions or prompts."),
    ("cleaning", "Cleaning, normalizing, or standardizing data", Revise,
     "When any form of noise is removed or mitigated from existing or suggested data."),
    ("relations", "Finding relations between data and collection methods", Compare,
     "When models are used to establish any relation between datasets' content and collection methods."),
];

fn usage_category(id: &str, title: &str, rows: &[SubRow]) -> Category {
    Category {
        id: id.to_string(),
        title: title.to_string(),
        subcategories: rows
            .iter()
            .map(|&(suffix, title, class, description)| SubcategoryDef {
                id: format!("{id}.{suffix}"),
                title: title.to_string(),
                description: description.to_string(),
                allowed_classifications: BTreeSet::from([class]),
                answer_kind: AnswerKind::UsageDetail,
            })
            .collect(),
    }
}

fn question(id: &str, title: &str, description: &str, answer_kind: AnswerKind) -> SubcategoryDef {
    SubcategoryDef {
        id: id.to_string(),
        title: title.to_string(),
        description: description.to_string(),
        allowed_classifications: BTreeSet::new(),
        answer_kind,
    }
}

fn block(id: &str, title: &str, categories: Vec<Category>) -> Block {
    Block {
        id: id.to_string(),
        title: title.to_string(),
        categories,
    }
}

/// The builtin version `1.0` card taxonomy.
pub fn builtin_v1() -> Taxonomy {
    use ethics_ids::*;
    let ethics = Category {
        id: "ethics".into(),
        title: "Ethics".into(),
        subcategories: vec![
            question(
                IMPLICATIONS,
                "What are the implications of using AI for this project?",
                "Explain the implications of using AI in the current work scope and its broader impact.",
                AnswerKind::FreeTextQuestion,
            ),
            question(
                ERROR_MITIGATION,
                "What steps are we taking to mitigate errors of AI for this project?",
                "Explain which decisions and actions were taken to minimize or eliminate the use of AI in this project.",
                AnswerKind::FreeTextQuestion,
            ),
            question(
                HARM_MITIGATION,
                "What steps are we taking to minimize the chance of harm or inappropriate use of AI for this project?",
                "Explain the decisions and actions taken to minimize any form of harm, misuse, and discrimination of the AI model towards any individuals.",
                AnswerKind::FreeTextQuestion,
            ),
            question(
                APPROVAL,
                "The corresponding authors verify and agree with the modifications or generations of their used AI-generated content",
                "Verify that any generated or modified content was approved by the authors involved. This can include facts, statements, ideas, and others.",
                AnswerKind::Affirmation,
            ),
        ],
    };

    Taxonomy {
        version: V1.to_string(),
        blocks: vec![
            block(
                "project-details",
                "Project Details",
                vec![Category {
                    id: "project".into(),
                    title: "Project".into(),
                    subcategories: Vec::new(),
                }],
            ),
            block(
                "ideation-review",
                "Ideation and Review",
                vec![
                    usage_category("ideation", "Ideation", IDEATION),
                    usage_category("literature-review", "Literature Review", LITERATURE_REVIEW),
                ],
            ),
            block(
                "methodology-experiments",
                "Methodology and Experiments",
                vec![
                    usage_category("methodology", "Methodology", METHODOLOGY),
                    usage_category("experiments", "Experiments", EXPERIMENTS),
                ],
            ),
            block(
                "writing-presentation",
                "Writing and Presentation",
                vec![
                    usage_category("writing", "Writing", WRITING),
                    usage_category("presentation", "Presentation", PRESENTATION),
                ],
            ),
            block(
                "code-data",
                "Code and Data",
                vec![
                    usage_category("coding", "Coding", CODING),
                    usage_category("data", "Data", DATA),
                ],
            ),
            block("ethics", "Ethics", vec![ethics]),
        ],
    }
}
