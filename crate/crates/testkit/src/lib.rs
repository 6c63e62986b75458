//! Fixtures and proptest generators shared by the workspace's tests and
//! benchmarks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use aiusage_core::questionnaire::{
    Answer, AnswerScript, DetailAnswer, SelectAnswer, Session, StepKind,
};
use aiusage_core::taxonomy::{AnswerKind, Block, Category, SubcategoryDef};
use aiusage_core::{
    builtin_v1, Card, Classification, Correspondence, EthicsAnswers, ModelUsage, ProjectDetails,
    Taxonomy, UsageEntry,
};
use chrono::NaiveDate;
use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use proptest::sample::subsequence;

pub const GOLDEN_PROJECT: &str = "AI Usage Cards for Responsibly Reporting Generated Content";

const REDACTED: &str = "Redacted for anonymity";

/// Directory holding the checked-in golden files.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn read_fixture(name: &str) -> String {
    let path = fixture(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden_project() -> ProjectDetails {
    ProjectDetails {
        correspondences: vec![Correspondence::new(REDACTED, REDACTED, REDACTED)],
        project_name: GOLDEN_PROJECT.to_string(),
        key_applications: vec![
            "Artificial Intelligence".into(),
            "Reporting".into(),
            "Responsible AI".into(),
        ],
    }
}

fn golden_ethics() -> EthicsAnswers {
    EthicsAnswers {
        implications: "Facilitate the AI usage in scientific work (reporting).".into(),
        error_mitigation: "Careful evaluation of any generated content from the AI model.".into(),
        harm_mitigation: "Documentation of suggested content in the scientific document.".into(),
    }
}

fn golden_model() -> ModelUsage {
    ModelUsage::new(
        "ChatGPT",
        vec![NaiveDate::from_ymd_opt(2023, 1, 21).unwrap()],
    )
}

const GOLDEN_USES: [(&str, &str, Classification, &str); 3] = [
    (
        "ideation",
        "ideation.improving",
        Classification::Revise,
        "Gathering more ideas for the name of AI Usage Cards.",
    ),
    (
        "methodology",
        "methodology.comparing",
        Classification::Compare,
        "Compare multiple versions of our theoretical model.",
    ),
    (
        "writing",
        "writing.generating",
        Classification::New,
        "Generated a first version of the abstract which was not used in the final manuscript.",
    ),
];

/// The reference card, built directly through card-model operations.
pub fn golden_card() -> Card {
    let taxonomy = builtin_v1();
    let (mut card, model) = Card::new(&taxonomy).add_model(golden_model()).unwrap();
    for (category, sub, class, detail) in GOLDEN_USES {
        card = card
            .set_entry(&taxonomy, UsageEntry::used(sub, [class], [model], detail))
            .unwrap()
            .assign_models(&taxonomy, category, [model])
            .unwrap();
    }
    card.with_project(golden_project())
        .with_ethics(golden_ethics())
        .with_approval(true)
}

/// Answers that walk the questionnaire to [`golden_card`].
pub fn golden_answers() -> Vec<Answer> {
    let mut answers = vec![
        Answer::ModelInfo(vec![golden_model()]),
        Answer::MainCategories(GOLDEN_USES.iter().map(|u| u.0.to_string()).collect()),
        Answer::ModelAssignment(
            GOLDEN_USES
                .iter()
                .map(|u| (u.0.to_string(), BTreeSet::from([0])))
                .collect(),
        ),
    ];
    for (category, sub, class, detail) in GOLDEN_USES {
        answers.push(Answer::SubcategorySelect(SelectAnswer {
            category: category.into(),
            selected: BTreeMap::from([(sub.to_string(), BTreeSet::from([class]))]),
        }));
        answers.push(Answer::SubcategoryDetail(DetailAnswer {
            subcategory: sub.into(),
            detail: detail.into(),
            models: None,
        }));
    }
    answers.extend([
        Answer::Ethics(golden_ethics()),
        Answer::Approval(true),
        Answer::ProjectDetails(golden_project()),
    ]);
    answers
}

pub fn golden_script() -> AnswerScript {
    AnswerScript::new("1.0", golden_answers())
}

/// A minimal valid answer for `kind` that selects `chosen` categories and
/// every subcategory inside them.
pub fn blanket_answer(
    taxonomy: &Taxonomy,
    session: &Session,
    kind: &StepKind,
    chosen: &[&str],
) -> Answer {
    match kind {
        StepKind::ModelInfo => Answer::ModelInfo(vec![ModelUsage::new(
            "M",
            vec![NaiveDate::from_ymd_opt(2024, 5, 1).unwrap()],
        )]),
        StepKind::MainCategories => {
            Answer::MainCategories(chosen.iter().map(|c| c.to_string()).collect())
        }
        StepKind::ModelAssignment => Answer::ModelAssignment(
            session
                .answers
                .categories
                .iter()
                .flatten()
                .map(|c| (c.clone(), BTreeSet::from([0])))
                .collect(),
        ),
        StepKind::SubcategorySelect { category } => Answer::SubcategorySelect(SelectAnswer {
            category: category.clone(),
            selected: taxonomy
                .lookup_category(category)
                .unwrap()
                .subcategories
                .iter()
                .map(|s| (s.id.clone(), BTreeSet::new()))
                .collect(),
        }),
        StepKind::SubcategoryDetail { subcategory } => Answer::SubcategoryDetail(DetailAnswer {
            subcategory: subcategory.clone(),
            detail: format!("used for {subcategory}"),
            models: None,
        }),
        StepKind::Ethics => Answer::Ethics(EthicsAnswers {
            implications: "i".into(),
            error_mitigation: "e".into(),
            harm_mitigation: "h".into(),
        }),
        StepKind::Approval => Answer::Approval(true),
        StepKind::ProjectDetails => Answer::ProjectDetails(ProjectDetails {
            project_name: "P".into(),
            correspondences: vec![Correspondence::new("A", "a@example.org", "")],
            key_applications: vec![],
        }),
        StepKind::Review => panic!("review takes no answer"),
    }
}

/// Text that stresses every export's escaping rules.
pub fn arb_text() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => "[A-Za-z0-9 ,.()-]{1,24}",
        1 => "[&<>\"'%$#_{}~^\\\\|;,\n\t éü中🙂=@]{1,16}",
        1 => Just("Not used".to_string()),
        1 => Just("a,\"b\";c\nd".to_string()),
    ]
    .prop_map(|s| s.trim().to_string())
    .prop_filter("non-empty after trimming", |s| !s.is_empty())
}

fn arb_optional_text() -> impl Strategy<Value = String> {
    prop_oneof![1 => Just(String::new()), 3 => arb_text()]
}

pub fn arb_date() -> impl Strategy<Value = NaiveDate> {
    (0i64..4000)
        .prop_map(|d| NaiveDate::from_ymd_opt(2015, 1, 1).unwrap() + chrono::Days::new(d as u64))
}

pub fn arb_model() -> impl Strategy<Value = ModelUsage> {
    (
        arb_text(),
        vec(arb_date(), 0..3),
        proptest::option::of(arb_text()),
    )
        .prop_map(|(name, dates, version)| ModelUsage {
            name,
            dates_used: dates,
            version: version.filter(|v| v != "Not used"),
        })
}

fn arb_correspondence() -> impl Strategy<Value = Correspondence> {
    (
        arb_optional_text(),
        arb_optional_text(),
        arb_optional_text(),
    )
        .prop_map(|(n, c, a)| Correspondence::new(n, c, a))
}

pub fn arb_project() -> impl Strategy<Value = ProjectDetails> {
    (
        vec(arb_correspondence(), 0..3),
        arb_optional_text(),
        vec(arb_text(), 0..3),
    )
        .prop_map(
            |(correspondences, project_name, key_applications)| ProjectDetails {
                correspondences,
                project_name,
                key_applications,
            },
        )
}

pub fn arb_ethics() -> impl Strategy<Value = EthicsAnswers> {
    (
        arb_optional_text(),
        arb_optional_text(),
        arb_optional_text(),
    )
        .prop_map(|(i, e, h)| EthicsAnswers {
            implications: i,
            error_mitigation: e,
            harm_mitigation: h,
        })
}

/// Structurally valid cards over `taxonomy`, not necessarily complete.
pub fn arb_card(taxonomy: Taxonomy) -> impl Strategy<Value = Card> {
    let subs: Vec<(String, String, Vec<Classification>)> = taxonomy
        .usage_subcategories()
        .map(|(c, s)| {
            (
                c.id.clone(),
                s.id.clone(),
                s.allowed_classifications.iter().copied().collect(),
            )
        })
        .collect();
    let categories: Vec<String> = taxonomy.usage_categories().map(|c| c.id.clone()).collect();
    (
        vec(arb_model(), 0..4),
        arb_project(),
        arb_ethics(),
        any::<bool>(),
        subsequence(subs.clone(), 0..=subs.len().min(8)),
        vec((arb_text(), any::<u64>(), any::<u64>()), 8),
        subsequence(categories, 0..=3),
        any::<u64>(),
    )
        .prop_map(
            move |(models, project, ethics, approval, used, details, extra_cats, seed)| {
                let mut card = Card::new(&taxonomy);
                card.models = models;
                card.project = project;
                card.ethics = ethics;
                card.approval = approval;
                let n = card.models.len();
                let pick = |bits: u64| -> BTreeSet<usize> {
                    (0..n).filter(|i| bits & (1 << i) != 0).collect()
                };
                for ((category, sub, allowed), (detail, refs, classes)) in
                    used.into_iter().zip(details)
                {
                    let classifications: BTreeSet<Classification> = allowed
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| classes & (1 << i) != 0)
                        .map(|(_, c)| *c)
                        .collect();
                    let refs = pick(refs);
                    card.category_models
                        .entry(category)
                        .or_default()
                        .extend(refs.iter().copied());
                    card.entries.insert(
                        sub.clone(),
                        UsageEntry::used(sub, classifications, refs, detail),
                    );
                }
                for (i, category) in extra_cats.into_iter().enumerate() {
                    let refs = pick(seed.rotate_left(i as u32 * 7));
                    card.category_models
                        .entry(category)
                        .or_default()
                        .extend(refs);
                }
                card.category_models.retain(|_, refs| !refs.is_empty());
                card
            },
        )
}

/// Cards that pass finalize: complete project, dated models, consistent
/// category assignments and ethics answers whenever something is used.
pub fn arb_complete_card(taxonomy: Taxonomy) -> impl Strategy<Value = Card> {
    let tax = taxonomy.clone();
    (
        arb_card(taxonomy),
        arb_text(),
        arb_text(),
        arb_date(),
        (arb_text(), arb_text(), arb_text()),
    )
        .prop_map(move |(mut card, name, contact, date, (i, e, h))| {
            if card.project.project_name.is_empty() {
                card.project.project_name = name;
            }
            if !card
                .project
                .correspondences
                .iter()
                .any(|c| !c.contact.is_empty())
            {
                card.project
                    .correspondences
                    .push(Correspondence::new("", contact, ""));
            }
            for model in &mut card.models {
                if model.dates_used.is_empty() {
                    model.dates_used.push(date);
                }
            }
            if card.models.is_empty() {
                for entry in card.entries.values_mut() {
                    *entry = UsageEntry::unused(&entry.subcategory_id);
                }
            } else {
                for entry in card.entries.values_mut().filter(|e| e.used) {
                    if entry.model_refs.is_empty() {
                        entry.model_refs.insert(0);
                    }
                }
            }
            card.category_models = tax
                .usage_categories()
                .map(|c| (c.id.clone(), card.referenced_models_in(&tax, &c.id)))
                .filter(|(_, refs)| !refs.is_empty())
                .collect();
            if card.any_used() {
                let fill = |slot: &mut String, text: String| {
                    if slot.is_empty() {
                        *slot = text;
                    }
                };
                fill(&mut card.ethics.implications, i);
                fill(&mut card.ethics.error_mitigation, e);
                fill(&mut card.ethics.harm_mitigation, h);
            }
            card
        })
}

fn arb_id() -> impl Strategy<Value = String> {
    "[a-z]{2,8}"
}

fn arb_subcategory(prefix: String, index: usize) -> impl Strategy<Value = SubcategoryDef> {
    (
        arb_text(),
        arb_text(),
        btree_set(prop::sample::select(Classification::ALL.to_vec()), 1..=3),
    )
        .prop_map(move |(title, description, allowed)| SubcategoryDef {
            id: format!("{prefix}.s{index}"),
            title,
            description,
            allowed_classifications: allowed,
            answer_kind: AnswerKind::UsageDetail,
        })
}

fn arb_category(id: String, size: usize) -> impl Strategy<Value = Category> {
    let subs: Vec<_> = (0..size).map(|i| arb_subcategory(id.clone(), i)).collect();
    (arb_text(), subs).prop_map(move |(title, subcategories)| Category {
        id: id.clone(),
        title,
        subcategories,
    })
}

/// Taxonomies satisfying the general invariants: unique ids, one or two
/// categories per block, non-empty allowed classifications.
pub fn arb_taxonomy() -> impl Strategy<Value = Taxonomy> {
    (
        "[2-9]\\.[0-9]{1,2}",
        btree_set(arb_id(), 2..8),
        vec((1usize..=2, 1usize..=4), 1..5),
    )
        .prop_flat_map(|(version, ids, shapes)| {
            let mut ids = ids.into_iter();
            let blocks: Vec<_> = shapes
                .into_iter()
                .enumerate()
                .map(|(b, (count, size))| {
                    let cats: Vec<_> = (0..count)
                        .map(|c| {
                            let id = ids.next().unwrap_or_else(|| format!("cat{b}x{c}"));
                            arb_category(id, size)
                        })
                        .collect();
                    (arb_text(), cats).prop_map(move |(title, categories)| Block {
                        id: format!("block-{b}"),
                        title,
                        categories,
                    })
                })
                .collect();
            (Just(version), blocks)
        })
        .prop_map(|(version, blocks)| Taxonomy { version, blocks })
}

/// A complete answer script over the builtin taxonomy together with the
/// card the same choices produce through direct card-model operations.
pub fn arb_script_and_card() -> impl Strategy<Value = (AnswerScript, Card)> {
    let taxonomy = builtin_v1();
    let categories: Vec<String> = taxonomy.usage_categories().map(|c| c.id.clone()).collect();
    (
        vec(arb_model(), 1..3),
        arb_date(),
        subsequence(categories, 0..=8),
        any::<u64>(),
        vec(arb_text(), 26),
        arb_ethics(),
        any::<bool>(),
        arb_project(),
    )
        .prop_map(
            move |(models, date, chosen, bits, texts, ethics, approval, project)| {
                let models: Vec<ModelUsage> = models
                    .into_iter()
                    .map(|mut m| {
                        if m.dates_used.is_empty() {
                            m.dates_used.push(date);
                        }
                        m
                    })
                    .collect();
                let mut answers = vec![
                    Answer::ModelInfo(models.clone()),
                    Answer::MainCategories(chosen.iter().cloned().collect()),
                ];
                let mut card = Card::new(&taxonomy);
                let mut indices = Vec::new();
                for model in &models {
                    let (next, index) = card.add_model(model.clone()).unwrap();
                    card = next;
                    indices.push(index);
                }
                if !chosen.is_empty() {
                    answers.push(Answer::ModelAssignment(
                        chosen
                            .iter()
                            .map(|c| (c.clone(), indices.iter().copied().collect()))
                            .collect(),
                    ));
                }
                let mut texts = texts.into_iter();
                let mut bit = 0;
                for category in taxonomy.usage_categories() {
                    if !chosen.contains(&category.id) {
                        continue;
                    }
                    let mut selected = BTreeMap::new();
                    for (i, sub) in category.subcategories.iter().enumerate() {
                        bit += 1;
                        if i == 0 || bits & (1 << (bit % 64)) != 0 {
                            selected.insert(sub.id.clone(), sub.allowed_classifications.clone());
                        }
                    }
                    answers.push(Answer::SubcategorySelect(SelectAnswer {
                        category: category.id.clone(),
                        selected: selected.clone(),
                    }));
                    let mut referenced = BTreeSet::new();
                    for sub in category
                        .subcategories
                        .iter()
                        .filter(|s| selected.contains_key(&s.id))
                    {
                        let detail = texts.next().expect("one text per subcategory");
                        let models = if indices.len() > 1 && bits & (1 << 63) != 0 {
                            Some(BTreeSet::from([indices[0]]))
                        } else {
                            None
                        };
                        let refs = models
                            .clone()
                            .unwrap_or_else(|| indices.iter().copied().collect());
                        referenced.extend(refs.iter().copied());
                        answers.push(Answer::SubcategoryDetail(DetailAnswer {
                            subcategory: sub.id.clone(),
                            detail: detail.clone(),
                            models,
                        }));
                        card = card
                            .set_entry(
                                &taxonomy,
                                UsageEntry::used(
                                    &sub.id,
                                    selected[&sub.id].iter().copied(),
                                    refs,
                                    detail,
                                ),
                            )
                            .unwrap();
                    }
                    card = card
                        .assign_models(&taxonomy, &category.id, indices.iter().copied())
                        .unwrap();
                }
                answers.extend([
                    Answer::Ethics(ethics.clone()),
                    Answer::Approval(approval),
                    Answer::ProjectDetails(project.clone()),
                ]);
                let card = card
                    .with_ethics(ethics)
                    .with_approval(approval)
                    .with_project(project);
                (AnswerScript::new("1.0", answers), card)
            },
        )
}
