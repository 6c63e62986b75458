//! Flat single-table CSV.
//!
//! Header: `section,field,category,subcategory,classifications,models,value`.
//! Rows in order:
//!
//! | section          | field                                   | notes                                  |
//! |------------------|-----------------------------------------|----------------------------------------|
//! | `meta`           | `taxonomy-version`                      | always first                           |
//! | `project`        | `name`, `key-application`               | one row per key application            |
//! | `correspondence` | `name`, `contact`, `affiliation`        | three consecutive rows per person      |
//! | `model`          | `name`, `dates`, `version`              | `models` holds the index; dates `;`-joined |
//! | `category`       | `models`                                | assigned model indices, names in value |
//! | `usage`          | `used` / `not-used`                     | one row per usage subcategory          |
//! | `ethics`         | `implications`, `error-mitigation`, `harm-mitigation` |                          |
//! | `approval`       | `approved`                              | `Yes` or `No`                          |
//! | `meta`           | `license`                               | always last                            |
//!
//! List cells (`classifications`, `models`, dates) are joined with `;`.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::card::{Card, Correspondence, ModelUsage, UsageEntry};
use crate::taxonomy::{ethics_ids, Classification, Registry, Taxonomy};

use super::{canonicalize, finish, resolve, CodecError, LICENSE, NOT_USED};

pub const CSV_HEADER: [&str; 7] = [
    "section",
    "field",
    "category",
    "subcategory",
    "classifications",
    "models",
    "value",
];

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

struct Rows(Vec<[String; 7]>);

impl Rows {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        section: &str,
        field: &str,
        category: &str,
        subcategory: &str,
        classifications: String,
        models: String,
        value: &str,
    ) {
        self.0.push([
            section.to_string(),
            field.to_string(),
            category.to_string(),
            subcategory.to_string(),
            classifications,
            models,
            value.to_string(),
        ]);
    }

    fn simple(&mut self, section: &str, field: &str, value: &str) {
        self.push(section, field, "", "", String::new(), String::new(), value);
    }
}

pub fn encode_csv(taxonomy: &Taxonomy, card: &Card) -> String {
    let card = canonicalize(card);
    let mut rows = Rows(Vec::new());
    rows.simple("meta", "taxonomy-version", &card.taxonomy_version);
    rows.simple("project", "name", &card.project.project_name);
    for app in &card.project.key_applications {
        rows.simple("project", "key-application", app);
    }
    for person in &card.project.correspondences {
        rows.simple("correspondence", "name", &person.name);
        rows.simple("correspondence", "contact", &person.contact);
        rows.simple("correspondence", "affiliation", &person.affiliation);
    }
    for (index, model) in card.models.iter().enumerate() {
        let idx = index.to_string();
        rows.push(
            "model",
            "name",
            "",
            "",
            String::new(),
            idx.clone(),
            &model.name,
        );
        rows.push(
            "model",
            "dates",
            "",
            "",
            String::new(),
            idx.clone(),
            &join(&model.dates_used),
        );
        let version = model.version.as_deref().unwrap_or(NOT_USED);
        rows.push("model", "version", "", "", String::new(), idx, version);
    }
    for category in taxonomy.usage_categories() {
        let refs = card.category_models.get(&category.id);
        let names = refs
            .map(|r| {
                r.iter()
                    .filter_map(|&i| card.models.get(i).map(|m| m.name.as_str()))
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .unwrap_or_else(|| NOT_USED.to_string());
        rows.push(
            "category",
            "models",
            &category.id,
            "",
            String::new(),
            join(refs.into_iter().flatten()),
            &names,
        );
        for def in category.subcategories.iter().filter(|s| s.is_usage()) {
            match card.entries.get(&def.id).filter(|e| e.used) {
                Some(entry) => rows.push(
                    "usage",
                    "used",
                    &category.id,
                    &def.id,
                    join(&entry.classifications),
                    join(&entry.model_refs),
                    &entry.detail,
                ),
                None => rows.push(
                    "usage",
                    "not-used",
                    &category.id,
                    &def.id,
                    String::new(),
                    String::new(),
                    NOT_USED,
                ),
            }
        }
    }
    let ethics = [
        (
            "implications",
            ethics_ids::IMPLICATIONS,
            &card.ethics.implications,
        ),
        (
            "error-mitigation",
            ethics_ids::ERROR_MITIGATION,
            &card.ethics.error_mitigation,
        ),
        (
            "harm-mitigation",
            ethics_ids::HARM_MITIGATION,
            &card.ethics.harm_mitigation,
        ),
    ];
    for (field, id, answer) in ethics {
        rows.push(
            "ethics",
            field,
            "ethics",
            id,
            String::new(),
            String::new(),
            answer,
        );
    }
    rows.push(
        "approval",
        "approved",
        "ethics",
        ethics_ids::APPROVAL,
        String::new(),
        String::new(),
        if card.approval { "Yes" } else { "No" },
    );
    rows.simple("meta", "license", LICENSE);

    let mut writer = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for row in &rows.0 {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}

fn shape(row: usize, message: impl Into<String>) -> CodecError {
    CodecError::RowShape {
        row,
        message: message.into(),
    }
}

fn split<T>(
    cell: &str,
    row: usize,
    what: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>, CodecError> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';')
        .map(|part| {
            parse(part.trim()).ok_or_else(|| shape(row, format!("`{part}` is not a valid {what}")))
        })
        .collect()
}

fn indices(cell: &str, row: usize) -> Result<BTreeSet<usize>, CodecError> {
    Ok(split(cell, row, "model index", |s| s.parse().ok())?
        .into_iter()
        .collect())
}

pub fn decode_csv(registry: &Registry, text: &str) -> Result<Card, CodecError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records().enumerate().map(|(i, r)| {
        let row = i + 1;
        r.map(|rec| (row, rec)).map_err(|e| CodecError::RowShape {
            row: e.position().map(|p| p.line() as usize).unwrap_or(row),
            message: e.to_string(),
        })
    });

    let header = match records.next() {
        Some(r) => r?.1,
        None => {
            return Err(CodecError::HeaderMismatch {
                expected: CSV_HEADER.join(","),
                found: String::new(),
            })
        }
    };
    if header.iter().ne(CSV_HEADER) {
        return Err(CodecError::HeaderMismatch {
            expected: CSV_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut card: Option<(&Taxonomy, Card)> = None;
    let mut pending_person: Option<(usize, Correspondence, u8)> = None;
    let mut saw_license = false;

    for record in records {
        let (row, rec) = record?;
        if rec.len() != CSV_HEADER.len() {
            return Err(shape(
                row,
                format!("expected 7 columns, found {}", rec.len()),
            ));
        }
        let cell = |i: usize| rec.get(i).unwrap_or_default();
        let (section, field, category, subcategory, classes, models, value) = (
            cell(0),
            cell(1),
            cell(2),
            cell(3),
            cell(4),
            cell(5),
            cell(6),
        );
        if saw_license {
            return Err(shape(row, "rows after the license row"));
        }

        let Some((taxonomy, card)) = card.as_mut() else {
            if (section, field) != ("meta", "taxonomy-version") {
                return Err(shape(row, "the first row must be `meta,taxonomy-version`"));
            }
            let taxonomy = resolve(registry, value)?;
            card = Some((taxonomy, Card::new(taxonomy)));
            continue;
        };

        if section != "correspondence" {
            if let Some((start, _, _)) = pending_person {
                return Err(shape(
                    start,
                    "incomplete correspondence (name, contact, affiliation)",
                ));
            }
        }

        match (section, field) {
            ("project", "name") => card.project.project_name = value.to_string(),
            ("project", "key-application") => card.project.key_applications.push(value.to_string()),
            ("correspondence", _) => {
                let expected = pending_person.as_ref().map(|p| p.2).unwrap_or(0);
                let names = ["name", "contact", "affiliation"];
                if field != names[expected as usize] {
                    return Err(shape(
                        row,
                        format!(
                            "expected correspondence field `{}`",
                            names[expected as usize]
                        ),
                    ));
                }
                let (start, mut person, _) =
                    pending_person
                        .take()
                        .unwrap_or((row, Correspondence::default(), 0));
                match expected {
                    0 => person.name = value.to_string(),
                    1 => person.contact = value.to_string(),
                    _ => person.affiliation = value.to_string(),
                }
                if expected == 2 {
                    card.project.correspondences.push(person);
                } else {
                    pending_person = Some((start, person, expected + 1));
                }
            }
            ("model", _) => {
                let index: usize = models
                    .parse()
                    .map_err(|_| shape(row, format!("`{models}` is not a model index")))?;
                if field == "name" {
                    if index != card.models.len() {
                        return Err(shape(row, format!("model {index} out of sequence")));
                    }
                    card.models.push(ModelUsage::new(value, Vec::new()));
                    continue;
                }
                let count = card.models.len();
                let model = card
                    .models
                    .last_mut()
                    .filter(|_| index + 1 == count)
                    .ok_or_else(|| {
                        shape(row, format!("model {index} has no preceding name row"))
                    })?;
                match field {
                    "dates" => {
                        model.dates_used = split(value, row, "YYYY-MM-DD date", |s| {
                            NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
                        })?
                    }
                    "version" => model.version = Some(value.to_string()),
                    other => return Err(shape(row, format!("unknown model field `{other}`"))),
                }
            }
            ("category", "models") => {
                match taxonomy.lookup_category(category) {
                    Ok(c) if c.is_usage() => {}
                    _ => return Err(shape(row, format!("unknown usage category `{category}`"))),
                }
                card.category_models
                    .insert(category.to_string(), indices(models, row)?);
            }
            ("usage", "used" | "not-used") => {
                let owner = taxonomy
                    .category_of(subcategory)
                    .ok()
                    .filter(|_| {
                        taxonomy
                            .lookup_subcategory(subcategory)
                            .map(|d| d.is_usage())
                            .unwrap_or(false)
                    })
                    .ok_or_else(|| CodecError::UnknownSubcategory {
                        row,
                        id: subcategory.to_string(),
                    })?;
                if owner.id != category {
                    return Err(shape(
                        row,
                        format!(
                            "`{subcategory}` belongs to `{}`, not `{category}`",
                            owner.id
                        ),
                    ));
                }
                let used = field == "used";
                let classifications = split(classes, row, "classification", Classification::parse)?
                    .into_iter()
                    .collect();
                let detail = if !used && value == NOT_USED {
                    ""
                } else {
                    value
                };
                card.entries.insert(
                    subcategory.to_string(),
                    UsageEntry {
                        subcategory_id: subcategory.to_string(),
                        used,
                        classifications,
                        model_refs: indices(models, row)?,
                        detail: detail.to_string(),
                    },
                );
            }
            ("ethics", "implications") => card.ethics.implications = value.to_string(),
            ("ethics", "error-mitigation") => card.ethics.error_mitigation = value.to_string(),
            ("ethics", "harm-mitigation") => card.ethics.harm_mitigation = value.to_string(),
            ("approval", "approved") => {
                card.approval = match value {
                    "Yes" => true,
                    "No" => false,
                    other => {
                        return Err(shape(
                            row,
                            format!("approval must be Yes or No, not `{other}`"),
                        ))
                    }
                }
            }
            ("meta", "license") => saw_license = true,
            (section, field) => {
                return Err(shape(row, format!("unknown row kind `{section},{field}`")))
            }
        }
    }

    if let Some((start, _, _)) = pending_person {
        return Err(shape(
            start,
            "incomplete correspondence (name, contact, affiliation)",
        ));
    }
    let (taxonomy, card) = card.ok_or_else(|| shape(2, "missing `meta,taxonomy-version` row"))?;
    finish(taxonomy, card)
}
