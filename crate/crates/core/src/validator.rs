//! Responsibility assessment of a card.
//!
//! A card is responsible when three independent dimensions hold at once:
//!
//! - **Transparency**: every usage is attributable to a declared, named and
//!   dated model.
//! - **Integrity**: the correspondents attest that they approved the AI
//!   content and state how errors and harms were mitigated. A program can
//!   only check that this attestation exists, not that the review happened.
//! - **Accountability**: at least one contactable correspondent is named.
//!
//! Findings carry a [`Severity`]; only errors make a dimension unsatisfied.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::card::{paths, Card};
use crate::path::FieldPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Transparency,
    Integrity,
    Accountability,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::Transparency,
        Dimension::Integrity,
        Dimension::Accountability,
    ];
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Closed set of finding codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingCode {
    /// A used entry references no model.
    UsageWithoutModel,
    /// A used entry references an index outside the model list.
    DanglingModelReference,
    /// A referenced model has an empty name.
    ModelMissingName,
    /// A referenced model has no usage dates.
    ModelMissingDates,
    /// A declared model is referenced by no used entry.
    ModelUnreferenced,
    /// AI content was used but not approved.
    ApprovalMissing,
    ErrorMitigationMissing,
    HarmMitigationMissing,
    ImplicationsMissing,
    NoCorrespondence,
    CorrespondenceMissingContact,
    CorrespondenceMissingName,
}

impl FindingCode {
    /// The dimension a code belongs to.
    pub fn dimension(self) -> Dimension {
        match self {
            Self::UsageWithoutModel
            | Self::DanglingModelReference
            | Self::ModelMissingName
            | Self::ModelMissingDates
            | Self::ModelUnreferenced => Dimension::Transparency,
            Self::ApprovalMissing
            | Self::ErrorMitigationMissing
            | Self::HarmMitigationMissing
            | Self::ImplicationsMissing => Dimension::Integrity,
            Self::NoCorrespondence
            | Self::CorrespondenceMissingContact
            | Self::CorrespondenceMissingName => Dimension::Accountability,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UsageWithoutModel => "usage-without-model",
            Self::DanglingModelReference => "dangling-model-reference",
            Self::ModelMissingName => "model-missing-name",
            Self::ModelMissingDates => "model-missing-dates",
            Self::ModelUnreferenced => "model-unreferenced",
            Self::ApprovalMissing => "approval-missing",
            Self::ErrorMitigationMissing => "error-mitigation-missing",
            Self::HarmMitigationMissing => "harm-mitigation-missing",
            Self::ImplicationsMissing => "implications-missing",
            Self::NoCorrespondence => "no-correspondence",
            Self::CorrespondenceMissingContact => "correspondence-missing-contact",
            Self::CorrespondenceMissingName => "correspondence-missing-name",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub message: String,
    pub path: FieldPath,
}

impl Finding {
    fn error(code: FindingCode, path: FieldPath, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            path,
        }
    }

    fn warning(code: FindingCode, path: FieldPath, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, path, message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionResult {
    pub dimension: Dimension,
    pub satisfied: bool,
    pub findings: Vec<Finding>,
}

impl DimensionResult {
    fn from_findings(dimension: Dimension, findings: Vec<Finding>) -> Self {
        Self {
            dimension,
            satisfied: !findings.iter().any(|f| f.severity == Severity::Error),
            findings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub dimensions: [DimensionResult; 3],
    pub responsible: bool,
}

impl ValidationReport {
    pub fn dimension(&self, dimension: Dimension) -> &DimensionResult {
        self.dimensions
            .iter()
            .find(|d| d.dimension == dimension)
            .expect("every dimension is present")
    }

    pub fn unsatisfied(&self) -> Vec<Dimension> {
        self.dimensions
            .iter()
            .filter(|d| !d.satisfied)
            .map(|d| d.dimension)
            .collect()
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.dimensions.iter().flat_map(|d| d.findings.iter())
    }
}

/// Venue policy layered on top of the base checks: the listed warning codes
/// are promoted to errors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Policy {
    pub promote: BTreeSet<FindingCode>,
}

pub fn check_transparency(card: &Card) -> DimensionResult {
    let mut findings = Vec::new();
    let mut referenced = BTreeSet::new();
    for entry in card.used_entries() {
        let path = paths::entry(&entry.subcategory_id).push_field("models");
        if entry.model_refs.is_empty() {
            findings.push(Finding::error(
                FindingCode::UsageWithoutModel,
                path.clone(),
                format!(
                    "`{}` does not name the model that was used",
                    entry.subcategory_id
                ),
            ));
        }
        for &index in &entry.model_refs {
            if index >= card.models.len() {
                findings.push(Finding::error(
                    FindingCode::DanglingModelReference,
                    path.clone(),
                    format!("model {index} is not declared"),
                ));
            } else {
                referenced.insert(index);
            }
        }
    }
    for (index, model) in card.models.iter().enumerate() {
        let path = paths::model(index);
        if !referenced.contains(&index) {
            findings.push(Finding::warning(
                FindingCode::ModelUnreferenced,
                path,
                format!(
                    "model `{}` is declared but no usage refers to it",
                    model.name
                ),
            ));
            continue;
        }
        if model.name.trim().is_empty() {
            findings.push(Finding::error(
                FindingCode::ModelMissingName,
                path.clone().push_field("name"),
                "a used model has no name",
            ));
        }
        if model.dates_used.is_empty() {
            findings.push(Finding::error(
                FindingCode::ModelMissingDates,
                path.push_field("dates"),
                format!("model `{}` has no usage dates", model.name),
            ));
        }
    }
    DimensionResult::from_findings(Dimension::Transparency, findings)
}

pub fn check_integrity(card: &Card) -> DimensionResult {
    let mut findings = Vec::new();
    if card.any_used() {
        if !card.approval {
            findings.push(Finding::error(
                FindingCode::ApprovalMissing,
                paths::approval(),
                "the correspondents have not approved the AI-generated content",
            ));
        }
        if card.ethics.error_mitigation.trim().is_empty() {
            findings.push(Finding::error(
                FindingCode::ErrorMitigationMissing,
                paths::ethics("errorMitigation"),
                "no steps to mitigate AI errors are stated",
            ));
        }
        if card.ethics.harm_mitigation.trim().is_empty() {
            findings.push(Finding::error(
                FindingCode::HarmMitigationMissing,
                paths::ethics("harmMitigation"),
                "no steps to minimize harm or misuse are stated",
            ));
        }
        if card.ethics.implications.trim().is_empty() {
            findings.push(Finding::warning(
                FindingCode::ImplicationsMissing,
                paths::ethics("implications"),
                "the implications of using AI are not described",
            ));
        }
    }
    DimensionResult::from_findings(Dimension::Integrity, findings)
}

pub fn check_accountability(card: &Card) -> DimensionResult {
    let mut findings = Vec::new();
    if card.project.correspondences.is_empty() {
        findings.push(Finding::error(
            FindingCode::NoCorrespondence,
            paths::correspondences(),
            "no corresponding author is named",
        ));
    }
    for (index, person) in card.project.correspondences.iter().enumerate() {
        if person.contact.trim().is_empty() {
            findings.push(Finding::error(
                FindingCode::CorrespondenceMissingContact,
                paths::correspondence(index).push_field("contact"),
                "corresponding author cannot be contacted",
            ));
        }
        if person.name.trim().is_empty() {
            findings.push(Finding::warning(
                FindingCode::CorrespondenceMissingName,
                paths::correspondence(index).push_field("name"),
                "corresponding author has no name",
            ));
        }
    }
    DimensionResult::from_findings(Dimension::Accountability, findings)
}

pub fn assess(card: &Card) -> ValidationReport {
    assess_with(card, &Policy::default())
}

pub fn assess_with(card: &Card, policy: &Policy) -> ValidationReport {
    let dimensions = [
        check_transparency(card),
        check_integrity(card),
        check_accountability(card),
    ]
    .map(|result| {
        let findings = result
            .findings
            .into_iter()
            .map(|mut f| {
                if policy.promote.contains(&f.code) {
                    f.severity = Severity::Error;
                }
                f
            })
            .collect();
        DimensionResult::from_findings(result.dimension, findings)
    });
    let responsible = dimensions.iter().all(|d| d.satisfied);
    ValidationReport {
        dimensions,
        responsible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{Correspondence, ModelUsage, ProjectDetails, UsageEntry};
    use crate::taxonomy::{builtin_v1, Classification};

    fn used_card() -> Card {
        let t = builtin_v1();
        let (card, _) = Card::new(&t)
            .add_model(ModelUsage::new("M", vec!["2023-01-01".parse().unwrap()]))
            .unwrap();
        card.set_entry(
            &t,
            UsageEntry::used("coding.generating", [Classification::New], [0], "helper"),
        )
        .unwrap()
    }

    #[test]
    fn empty_card_is_transparent_and_has_integrity() {
        let card = Card::new(&builtin_v1());
        let t = check_transparency(&card);
        assert!(t.satisfied);
        assert!(t.findings.is_empty());
        assert!(check_integrity(&card).satisfied);
    }

    #[test]
    fn unreferenced_model_is_only_a_warning() {
        let (card, _) = Card::new(&builtin_v1())
            .add_model(ModelUsage::new("Unused", vec![]))
            .unwrap();
        let result = check_transparency(&card);
        assert!(result.satisfied);
        assert_eq!(result.findings[0].code, FindingCode::ModelUnreferenced);
        assert_eq!(result.findings[0].severity, Severity::Warning);
    }

    #[test]
    fn policy_promotes_warnings() {
        let (card, _) = Card::new(&builtin_v1())
            .add_model(ModelUsage::new("Unused", vec![]))
            .unwrap();
        let policy = Policy {
            promote: BTreeSet::from([FindingCode::ModelUnreferenced]),
        };
        let report = assess_with(&card, &policy);
        assert!(!report.dimension(Dimension::Transparency).satisfied);
    }

    #[test]
    fn integrity_requires_approval_when_used() {
        let card = used_card();
        let result = check_integrity(&card);
        assert!(!result.satisfied);
        let codes: Vec<_> = result.findings.iter().map(|f| f.code).collect();
        assert!(codes.contains(&FindingCode::ApprovalMissing));
        assert!(codes.contains(&FindingCode::ErrorMitigationMissing));
    }

    #[test]
    fn accountability_needs_contact() {
        let card = Card::new(&builtin_v1()).with_project(ProjectDetails {
            correspondences: vec![Correspondence::new("A", "", "")],
            ..Default::default()
        });
        let result = check_accountability(&card);
        assert!(!result.satisfied);
        assert_eq!(
            result.findings[0].code,
            FindingCode::CorrespondenceMissingContact
        );
        let ok = card.with_project(ProjectDetails {
            correspondences: vec![Correspondence::new("A", "a@b.org", "U")],
            ..Default::default()
        });
        assert!(check_accountability(&ok).satisfied);
    }

    #[test]
    fn responsible_is_conjunction() {
        for card in [used_card(), Card::new(&builtin_v1())] {
            let report = assess(&card);
            assert_eq!(
                report.responsible,
                report.dimensions.iter().all(|d| d.satisfied)
            );
            assert_eq!(report, assess(&card.clone()));
        }
    }
}
