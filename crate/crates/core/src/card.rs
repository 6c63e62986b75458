//! The card aggregate and its mutators.
//!
//! Cards are plain values. Every mutator validates its input against the
//! card's taxonomy and returns a new card, leaving the receiver untouched.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path::FieldPath;
use crate::taxonomy::{Classification, Registry, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Correspondence {
    pub name: String,
    pub contact: String,
    pub affiliation: String,
}

impl Correspondence {
    pub fn new(
        name: impl Into<String>,
        contact: impl Into<String>,
        affiliation: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            contact: contact.into(),
            affiliation: affiliation.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ProjectDetails {
    pub correspondences: Vec<Correspondence>,
    #[serde(rename = "name")]
    pub project_name: String,
    pub key_applications: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelUsage {
    pub name: String,
    #[serde(rename = "dates")]
    pub dates_used: Vec<NaiveDate>,
    #[serde(default)]
    pub version: Option<String>,
}

impl ModelUsage {
    pub fn new(name: impl Into<String>, dates_used: Vec<NaiveDate>) -> Self {
        Self {
            name: name.into(),
            dates_used,
            version: None,
        }
    }

    pub fn with_version(mut self, version: impl Into<String>) -> Self {
        self.version = Some(version.into());
        self
    }
}

/// The answer for one usage subcategory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UsageEntry {
    pub subcategory_id: String,
    pub used: bool,
    pub classifications: BTreeSet<Classification>,
    /// Indices into [`Card::models`].
    pub model_refs: BTreeSet<usize>,
    pub detail: String,
}

impl UsageEntry {
    pub fn unused(subcategory_id: impl Into<String>) -> Self {
        Self {
            subcategory_id: subcategory_id.into(),
            used: false,
            classifications: BTreeSet::new(),
            model_refs: BTreeSet::new(),
            detail: String::new(),
        }
    }

    pub fn used(
        subcategory_id: impl Into<String>,
        classifications: impl IntoIterator<Item = Classification>,
        model_refs: impl IntoIterator<Item = usize>,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            subcategory_id: subcategory_id.into(),
            used: true,
            classifications: classifications.into_iter().collect(),
            model_refs: model_refs.into_iter().collect(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct EthicsAnswers {
    pub implications: String,
    pub error_mitigation: String,
    pub harm_mitigation: String,
}

/// A complete AI usage report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Card {
    pub taxonomy_version: String,
    pub project: ProjectDetails,
    pub models: Vec<ModelUsage>,
    /// Usage category id to the models assigned to it.
    pub category_models: BTreeMap<String, BTreeSet<usize>>,
    /// Usage subcategory id to its entry; seeded for every usage subcategory.
    pub entries: BTreeMap<String, UsageEntry>,
    pub ethics: EthicsAnswers,
    pub approval: bool,
}

/// A card that passed [`Card::finalize`]. Only finalized cards can be rendered
/// to the export-only formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalizedCard(Card);

impl FinalizedCard {
    pub fn card(&self) -> &Card {
        &self.0
    }

    pub fn into_card(self) -> Card {
        self.0
    }
}

impl AsRef<Card> for FinalizedCard {
    fn as_ref(&self) -> &Card {
        &self.0
    }
}

/// A completeness condition that a card does not meet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unmet {
    pub path: FieldPath,
    pub message: String,
}

impl Unmet {
    fn new(path: FieldPath, message: impl Into<String>) -> Self {
        Self {
            path,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("card uses taxonomy `{card}` but `{given}` was supplied")]
    TaxonomyMismatch { card: String, given: String },
    #[error("unknown usage subcategory `{0}`")]
    UnknownSubcategory(String),
    #[error("unknown usage category `{0}`")]
    UnknownCategory(String),
    #[error("classification {classification} is not allowed for `{subcategory}`")]
    ClassificationNotAllowed {
        subcategory: String,
        classification: Classification,
    },
    #[error("{path} refers to model {index} but only {count} model(s) are declared")]
    DanglingModelRef {
        path: FieldPath,
        index: usize,
        count: usize,
    },
    #[error("used entry `{0}` has an empty detail")]
    EmptyDetail(String),
    #[error("unused entry `{0}` must not carry classifications, models or detail")]
    UnusedEntryNotEmpty(String),
    #[error("entry stored under `{key}` is for `{id}`")]
    EntryKeyMismatch { key: String, id: String },
    #[error("{0}: model name is empty")]
    EmptyModelName(FieldPath),
    #[error("{path}: date {date} lies in the future")]
    FutureDate { path: FieldPath, date: NaiveDate },
    #[error("card is incomplete: {}", format_unmet(.0))]
    Incomplete(Vec<Unmet>),
}

fn format_unmet(unmet: &[Unmet]) -> String {
    unmet
        .iter()
        .map(|u| format!("{} ({})", u.path, u.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CardError {
    /// Where in the card the problem sits.
    pub fn path(&self) -> FieldPath {
        match self {
            Self::Taxonomy(_) | Self::TaxonomyMismatch { .. } => FieldPath::field("version"),
            Self::UnknownSubcategory(id) | Self::EntryKeyMismatch { key: id, .. } => {
                FieldPath::field("entries").push_key(id)
            }
            Self::UnknownCategory(id) => FieldPath::field("categories").push_key(id),
            Self::ClassificationNotAllowed { subcategory, .. } => FieldPath::field("entries")
                .push_key(subcategory)
                .push_field("classifications"),
            Self::DanglingModelRef { path, .. } => path.clone(),
            Self::EmptyDetail(id) => FieldPath::field("entries")
                .push_key(id)
                .push_field("detail"),
            Self::UnusedEntryNotEmpty(id) => FieldPath::field("entries").push_key(id),
            Self::EmptyModelName(path) => path.clone(),
            Self::FutureDate { path, .. } => path.clone(),
            Self::Incomplete(unmet) => unmet.first().map(|u| u.path.clone()).unwrap_or_default(),
        }
    }
}

/// Path vocabulary shared by card checks, findings and decoders.
pub mod paths {
    use crate::path::FieldPath;

    pub fn project_name() -> FieldPath {
        FieldPath::field("project").push_field("name")
    }
    pub fn correspondences() -> FieldPath {
        FieldPath::field("project").push_field("correspondences")
    }
    pub fn correspondence(index: usize) -> FieldPath {
        correspondences().push_index(index)
    }
    pub fn model(index: usize) -> FieldPath {
        FieldPath::field("models").push_index(index)
    }
    pub fn entry(id: &str) -> FieldPath {
        FieldPath::field("entries").push_key(id)
    }
    pub fn category_models(id: &str) -> FieldPath {
        FieldPath::field("categories")
            .push_key(id)
            .push_field("models")
    }
    pub fn ethics(field: &str) -> FieldPath {
        FieldPath::field("ethics").push_field(field)
    }
    pub fn approval() -> FieldPath {
        FieldPath::field("approval")
    }
}

/// Creates an empty card for a registered taxonomy version.
pub fn new_card(registry: &Registry, taxonomy_version: &str) -> Result<Card, CardError> {
    Ok(Card::new(registry.get(taxonomy_version)?))
}

impl Card {
    /// Empty card with every usage subcategory seeded as unused.
    pub fn new(taxonomy: &Taxonomy) -> Self {
        let entries = taxonomy
            .usage_subcategories()
            .map(|(_, s)| (s.id.clone(), UsageEntry::unused(&s.id)))
            .collect();
        Self {
            taxonomy_version: taxonomy.version.clone(),
            project: ProjectDetails::default(),
            models: Vec::new(),
            category_models: BTreeMap::new(),
            entries,
            ethics: EthicsAnswers::default(),
            approval: false,
        }
    }

    fn ensure_taxonomy(&self, taxonomy: &Taxonomy) -> Result<(), CardError> {
        if taxonomy.version == self.taxonomy_version {
            Ok(())
        } else {
            Err(CardError::TaxonomyMismatch {
                card: self.taxonomy_version.clone(),
                given: taxonomy.version.clone(),
            })
        }
    }

    pub fn any_used(&self) -> bool {
        self.entries.values().any(|e| e.used)
    }

    pub fn used_entries(&self) -> impl Iterator<Item = &UsageEntry> {
        self.entries.values().filter(|e| e.used)
    }

    fn check_refs<'a>(
        &self,
        refs: impl IntoIterator<Item = &'a usize>,
        path: impl Fn() -> FieldPath,
    ) -> Result<(), CardError> {
        match refs.into_iter().find(|&&i| i >= self.models.len()) {
            Some(&index) => Err(CardError::DanglingModelRef {
                path: path(),
                index,
                count: self.models.len(),
            }),
            None => Ok(()),
        }
    }

    fn check_entry(&self, taxonomy: &Taxonomy, entry: &UsageEntry) -> Result<(), CardError> {
        let def = taxonomy
            .lookup_subcategory(&entry.subcategory_id)
            .ok()
            .filter(|d| d.is_usage())
            .ok_or_else(|| CardError::UnknownSubcategory(entry.subcategory_id.clone()))?;
        if entry.used {
            if entry.detail.trim().is_empty() {
                return Err(CardError::EmptyDetail(entry.subcategory_id.clone()));
            }
            if let Some(&classification) = entry
                .classifications
                .iter()
                .find(|c| !def.allowed_classifications.contains(c))
            {
                return Err(CardError::ClassificationNotAllowed {
                    subcategory: entry.subcategory_id.clone(),
                    classification,
                });
            }
            self.check_refs(&entry.model_refs, || {
                paths::entry(&entry.subcategory_id).push_field("models")
            })
        } else if entry.classifications.is_empty()
            && entry.model_refs.is_empty()
            && entry.detail.trim().is_empty()
        {
            Ok(())
        } else {
            Err(CardError::UnusedEntryNotEmpty(entry.subcategory_id.clone()))
        }
    }

    fn check_model(model: &ModelUsage, index: usize, today: NaiveDate) -> Result<(), CardError> {
        if model.name.trim().is_empty() {
            return Err(CardError::EmptyModelName(
                paths::model(index).push_field("name"),
            ));
        }
        if let Some(&date) = model.dates_used.iter().find(|&&d| d > today) {
            return Err(CardError::FutureDate {
                path: paths::model(index).push_field("dates"),
                date,
            });
        }
        Ok(())
    }

    /// Replaces one usage entry.
    pub fn set_entry(&self, taxonomy: &Taxonomy, entry: UsageEntry) -> Result<Card, CardError> {
        self.ensure_taxonomy(taxonomy)?;
        self.check_entry(taxonomy, &entry)?;
        let mut next = self.clone();
        next.entries.insert(entry.subcategory_id.clone(), entry);
        Ok(next)
    }

    /// Appends a model, returning the new card and the model's index.
    pub fn add_model(&self, model: ModelUsage) -> Result<(Card, usize), CardError> {
        self.add_model_as_of(model, Utc::now().date_naive())
    }

    /// Like [`Card::add_model`] with an explicit "today" for the future-date check.
    pub fn add_model_as_of(
        &self,
        model: ModelUsage,
        today: NaiveDate,
    ) -> Result<(Card, usize), CardError> {
        let index = self.models.len();
        Self::check_model(&model, index, today)?;
        let mut next = self.clone();
        next.models.push(model);
        Ok((next, index))
    }

    /// Records which models were used within a usage category.
    pub fn assign_models(
        &self,
        taxonomy: &Taxonomy,
        category_id: &str,
        model_refs: impl IntoIterator<Item = usize>,
    ) -> Result<Card, CardError> {
        self.ensure_taxonomy(taxonomy)?;
        if !taxonomy
            .lookup_category(category_id)
            .map(|c| c.is_usage())
            .unwrap_or(false)
        {
            return Err(CardError::UnknownCategory(category_id.to_string()));
        }
        let refs: BTreeSet<usize> = model_refs.into_iter().collect();
        self.check_refs(&refs, || paths::category_models(category_id))?;
        let mut next = self.clone();
        if refs.is_empty() {
            next.category_models.remove(category_id);
        } else {
            next.category_models.insert(category_id.to_string(), refs);
        }
        Ok(next)
    }

    pub fn with_project(&self, project: ProjectDetails) -> Card {
        Card {
            project,
            ..self.clone()
        }
    }

    pub fn with_ethics(&self, ethics: EthicsAnswers) -> Card {
        Card {
            ethics,
            ..self.clone()
        }
    }

    pub fn with_approval(&self, approval: bool) -> Card {
        Card {
            approval,
            ..self.clone()
        }
    }

    /// Checks every structural invariant against the taxonomy.
    pub fn check(&self, taxonomy: &Taxonomy) -> Result<(), CardError> {
        self.check_as_of(taxonomy, Utc::now().date_naive())
    }

    pub fn check_as_of(&self, taxonomy: &Taxonomy, today: NaiveDate) -> Result<(), CardError> {
        self.ensure_taxonomy(taxonomy)?;
        for (index, model) in self.models.iter().enumerate() {
            Self::check_model(model, index, today)?;
        }
        for (category, refs) in &self.category_models {
            if !taxonomy
                .lookup_category(category)
                .map(|c| c.is_usage())
                .unwrap_or(false)
            {
                return Err(CardError::UnknownCategory(category.clone()));
            }
            self.check_refs(refs, || paths::category_models(category))?;
        }
        for (key, entry) in &self.entries {
            if *key != entry.subcategory_id {
                return Err(CardError::EntryKeyMismatch {
                    key: key.clone(),
                    id: entry.subcategory_id.clone(),
                });
            }
            self.check_entry(taxonomy, entry)?;
        }
        Ok(())
    }

    /// Union of model references over the used entries of one category.
    pub fn referenced_models_in(&self, taxonomy: &Taxonomy, category_id: &str) -> BTreeSet<usize> {
        taxonomy
            .lookup_category(category_id)
            .map(|c| {
                c.subcategories
                    .iter()
                    .filter_map(|s| self.entries.get(&s.id))
                    .filter(|e| e.used)
                    .flat_map(|e| e.model_refs.iter().copied())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Lists every completeness condition the card fails.
    pub fn unmet_conditions(&self, taxonomy: &Taxonomy) -> Vec<Unmet> {
        let mut unmet = Vec::new();
        if let Err(e) = self.check(taxonomy) {
            unmet.push(Unmet::new(e.path(), e.to_string()));
        }
        if self.project.project_name.trim().is_empty() {
            unmet.push(Unmet::new(
                paths::project_name(),
                "project name is required",
            ));
        }
        if !self
            .project
            .correspondences
            .iter()
            .any(|c| !c.contact.trim().is_empty())
        {
            unmet.push(Unmet::new(
                paths::correspondences(),
                "at least one correspondence with a contact is required",
            ));
        }
        for (index, model) in self.models.iter().enumerate() {
            if model.name.trim().is_empty() {
                unmet.push(Unmet::new(
                    paths::model(index).push_field("name"),
                    "model name is required",
                ));
            }
            if model.dates_used.is_empty() {
                unmet.push(Unmet::new(
                    paths::model(index).push_field("dates"),
                    "at least one usage date is required",
                ));
            }
        }
        for (_, def) in taxonomy.usage_subcategories() {
            if let Some(entry) = self.entries.get(&def.id).filter(|e| e.used) {
                if entry.model_refs.is_empty() {
                    unmet.push(Unmet::new(
                        paths::entry(&def.id).push_field("models"),
                        "a used entry must reference at least one model",
                    ));
                }
            }
        }
        for category in taxonomy.usage_categories() {
            let assigned = self
                .category_models
                .get(&category.id)
                .cloned()
                .unwrap_or_default();
            if assigned != self.referenced_models_in(taxonomy, &category.id) {
                unmet.push(Unmet::new(
                    paths::category_models(&category.id),
                    "assigned models differ from the models referenced by its entries",
                ));
            }
        }
        if self.any_used() {
            let ethics = [
                ("implications", &self.ethics.implications),
                ("errorMitigation", &self.ethics.error_mitigation),
                ("harmMitigation", &self.ethics.harm_mitigation),
            ];
            for (field, answer) in ethics {
                if answer.trim().is_empty() {
                    unmet.push(Unmet::new(
                        paths::ethics(field),
                        "ethics answer is required when AI was used",
                    ));
                }
            }
        }
        unmet
    }

    /// Checks structural completeness and marks the card as finalized.
    pub fn finalize(&self, taxonomy: &Taxonomy) -> Result<FinalizedCard, CardError> {
        let unmet = self.unmet_conditions(taxonomy);
        if unmet.is_empty() {
            Ok(FinalizedCard(self.clone()))
        } else {
            Err(CardError::Incomplete(unmet))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::builtin_v1;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn chatgpt() -> ModelUsage {
        ModelUsage::new("ChatGPT", vec![date("2023-01-21")])
    }

    #[test]
    fn new_card_seeds_all_usage_entries() {
        let card = new_card(&Registry::builtin(), "1.0").unwrap();
        assert_eq!(card.entries.len(), 26);
        assert!(card.entries.values().all(|e| !e.used));
        assert!(!card.approval);
    }

    #[test]
    fn new_card_unknown_version() {
        assert_eq!(
            new_card(&Registry::builtin(), "9.9").unwrap_err(),
            CardError::Taxonomy(TaxonomyError::UnknownVersion("9.9".into()))
        );
    }

    #[test]
    fn add_model_indices_are_sequential() {
        let card = Card::new(&builtin_v1());
        let (card, first) = card.add_model(chatgpt()).unwrap();
        let (card, second) = card.add_model(chatgpt().with_version("4")).unwrap();
        assert_eq!((first, second), (0, 1));
        assert_eq!(card.models.len(), 2);
    }

    #[test]
    fn add_model_rejects_empty_name_and_future_dates() {
        let card = Card::new(&builtin_v1());
        assert!(matches!(
            card.add_model(ModelUsage::new("  ", vec![])),
            Err(CardError::EmptyModelName(_))
        ));
        let today = date("2024-05-01");
        assert!(matches!(
            card.add_model_as_of(ModelUsage::new("X", vec![date("2024-05-02")]), today),
            Err(CardError::FutureDate { .. })
        ));
        assert!(card
            .add_model_as_of(ModelUsage::new("X", vec![today]), today)
            .is_ok());
    }

    #[test]
    fn set_entry_accepts_reference_usage() {
        let t = builtin_v1();
        let (card, idx) = Card::new(&t).add_model(chatgpt()).unwrap();
        let entry = UsageEntry::used(
            "ideation.improving",
            [Classification::Revise],
            [idx],
            "Gathering more ideas for the name of AI Usage Cards.",
        );
        let next = card.set_entry(&t, entry.clone()).unwrap();
        assert_eq!(next.entries["ideation.improving"], entry);
        // the receiver is untouched
        assert!(!card.entries["ideation.improving"].used);
    }

    #[test]
    fn set_entry_errors() {
        let t = builtin_v1();
        let (card, _) = Card::new(&t).add_model(chatgpt()).unwrap();
        assert_eq!(
            card.set_entry(&t, UsageEntry::used("ideation.improving", [], [0], " ")),
            Err(CardError::EmptyDetail("ideation.improving".into()))
        );
        assert!(matches!(
            card.set_entry(&t, UsageEntry::used("ideation.improving", [], [5], "x")),
            Err(CardError::DanglingModelRef {
                index: 5,
                count: 1,
                ..
            })
        ));
        assert_eq!(
            card.set_entry(&t, UsageEntry::used("ideation.nope", [], [0], "x")),
            Err(CardError::UnknownSubcategory("ideation.nope".into()))
        );
        assert_eq!(
            card.set_entry(&t, UsageEntry::used("ethics.approval", [], [0], "x")),
            Err(CardError::UnknownSubcategory("ethics.approval".into()))
        );
        assert!(matches!(
            card.set_entry(
                &t,
                UsageEntry::used("ideation.improving", [Classification::New], [0], "x")
            ),
            Err(CardError::ClassificationNotAllowed { .. })
        ));
        let mut unused = UsageEntry::unused("ideation.improving");
        unused.detail = "leftover".into();
        assert_eq!(
            card.set_entry(&t, unused),
            Err(CardError::UnusedEntryNotEmpty("ideation.improving".into()))
        );
    }

    #[test]
    fn set_entry_is_idempotent() {
        let t = builtin_v1();
        let (card, _) = Card::new(&t).add_model(chatgpt()).unwrap();
        let entry = UsageEntry::used("writing.generating", [Classification::New], [0], "abstract");
        let once = card.set_entry(&t, entry.clone()).unwrap();
        let twice = once.set_entry(&t, entry).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn finalize_empty_usage_card() {
        let t = builtin_v1();
        let card = Card::new(&t)
            .with_project(ProjectDetails {
                correspondences: vec![Correspondence::new("A", "a@example.org", "Uni")],
                project_name: "No AI here".into(),
                key_applications: vec![],
            })
            .with_approval(true);
        let finalized = card.finalize(&t).unwrap();
        assert_eq!(finalized.card(), &card);
    }

    #[test]
    fn finalize_lists_every_unmet_condition() {
        let t = builtin_v1();
        let card = Card::new(&t)
            .set_entry(
                &t,
                UsageEntry::used("writing.generating", [Classification::New], [], "text"),
            )
            .unwrap();
        let CardError::Incomplete(unmet) = card.finalize(&t).unwrap_err() else {
            panic!("expected incompleteness");
        };
        let paths: Vec<String> = unmet.iter().map(|u| u.path.to_string()).collect();
        assert!(paths.contains(&"project.name".to_string()));
        assert!(paths.contains(&"project.correspondences".to_string()));
        assert!(paths.contains(&"entries[writing.generating].models".to_string()));
        assert!(paths.contains(&"ethics.implications".to_string()));
        assert!(paths.contains(&"ethics.errorMitigation".to_string()));
        assert!(paths.contains(&"ethics.harmMitigation".to_string()));
    }

    #[test]
    fn finalize_cross_checks_category_models() {
        let t = builtin_v1();
        let (card, _) = Card::new(&t).add_model(chatgpt()).unwrap();
        let card = card
            .set_entry(
                &t,
                UsageEntry::used("writing.generating", [Classification::New], [0], "text"),
            )
            .unwrap();
        let CardError::Incomplete(unmet) = card.finalize(&t).unwrap_err() else {
            panic!();
        };
        assert!(unmet
            .iter()
            .any(|u| u.path.to_string() == "categories[writing].models"));
        let fixed = card.assign_models(&t, "writing", [0]).unwrap();
        let CardError::Incomplete(unmet) = fixed.finalize(&t).unwrap_err() else {
            panic!();
        };
        assert!(!unmet
            .iter()
            .any(|u| u.path.to_string() == "categories[writing].models"));
    }

    #[test]
    fn assign_models_rejects_non_usage_categories() {
        let t = builtin_v1();
        let (card, _) = Card::new(&t).add_model(chatgpt()).unwrap();
        assert_eq!(
            card.assign_models(&t, "ethics", [0]),
            Err(CardError::UnknownCategory("ethics".into()))
        );
        assert!(matches!(
            card.assign_models(&t, "writing", [3]),
            Err(CardError::DanglingModelRef { .. })
        ));
    }

    #[test]
    fn check_detects_mismatched_taxonomy() {
        let mut other = builtin_v1();
        other.version = "2.0".into();
        let card = Card::new(&builtin_v1());
        assert!(matches!(
            card.check(&other),
            Err(CardError::TaxonomyMismatch { .. })
        ));
    }
}
