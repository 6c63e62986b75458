use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::card::{Card, Correspondence, EthicsAnswers, ModelUsage, UsageEntry};
use crate::path::FieldPath;
use crate::taxonomy::{Classification, Registry, Taxonomy};

use super::{canonicalize, finish, resolve, CodecError, Format, LICENSE, NOT_USED};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CardDoc<'a> {
    version: &'a str,
    project: ProjectDoc<'a>,
    models: Vec<ModelDoc<'a>>,
    categories: Vec<CategoryDoc<'a>>,
    ethics: &'a EthicsAnswers,
    approval: bool,
    license: &'static str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ProjectDoc<'a> {
    name: &'a str,
    key_applications: &'a [String],
    correspondences: &'a [Correspondence],
}

#[derive(Serialize)]
struct ModelDoc<'a> {
    name: &'a str,
    dates: &'a [NaiveDate],
    version: &'a str,
}

#[derive(Serialize)]
struct CategoryDoc<'a> {
    id: &'a str,
    models: Vec<usize>,
    subcategories: Vec<SubcategoryDoc<'a>>,
}

#[derive(Serialize)]
struct SubcategoryDoc<'a> {
    id: &'a str,
    used: bool,
    classifications: Vec<Classification>,
    models: Vec<usize>,
    detail: &'a str,
}

/// Pretty-printed JSON with a fixed key order, terminated by a newline.
pub fn encode_json(taxonomy: &Taxonomy, card: &Card) -> String {
    let card = canonicalize(card);
    let categories = taxonomy
        .usage_categories()
        .map(|category| CategoryDoc {
            id: &category.id,
            models: card
                .category_models
                .get(&category.id)
                .map(|refs| refs.iter().copied().collect())
                .unwrap_or_default(),
            subcategories: category
                .subcategories
                .iter()
                .filter(|s| s.is_usage())
                .map(|def| match card.entries.get(&def.id).filter(|e| e.used) {
                    Some(entry) => SubcategoryDoc {
                        id: &def.id,
                        used: true,
                        classifications: entry.classifications.iter().copied().collect(),
                        models: entry.model_refs.iter().copied().collect(),
                        detail: &entry.detail,
                    },
                    None => SubcategoryDoc {
                        id: &def.id,
                        used: false,
                        classifications: Vec::new(),
                        models: Vec::new(),
                        detail: NOT_USED,
                    },
                })
                .collect(),
        })
        .collect();
    let doc = CardDoc {
        version: &card.taxonomy_version,
        project: ProjectDoc {
            name: &card.project.project_name,
            key_applications: &card.project.key_applications,
            correspondences: &card.project.correspondences,
        },
        models: card
            .models
            .iter()
            .map(|m| ModelDoc {
                name: &m.name,
                dates: &m.dates_used,
                version: m.version.as_deref().unwrap_or(NOT_USED),
            })
            .collect(),
        categories,
        ethics: &card.ethics,
        approval: card.approval,
        license: LICENSE,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("card document is serializable");
    out.push('\n');
    out
}

/// Typed, path-tracking view over a JSON object.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: FieldPath,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, path: FieldPath) -> Result<Self, CodecError> {
        value
            .as_object()
            .map(|map| Obj {
                map,
                path: path.clone(),
            })
            .ok_or_else(|| CodecError::schema(path, "expected an object"))
    }

    fn only(&self, allowed: &[&str]) -> Result<(), CodecError> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(key) => Err(CodecError::schema(
                self.path.clone().push_field(key.as_str()),
                "unexpected field",
            )),
            None => Ok(()),
        }
    }

    fn at(&self, key: &str) -> FieldPath {
        self.path.clone().push_field(key)
    }

    fn get(&self, key: &str) -> Result<&'a Value, CodecError> {
        self.map
            .get(key)
            .ok_or_else(|| CodecError::schema(self.at(key), "missing field"))
    }

    fn string(&self, key: &str) -> Result<String, CodecError> {
        string(self.get(key)?, self.at(key))
    }

    fn boolean(&self, key: &str) -> Result<bool, CodecError> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| CodecError::schema(self.at(key), "expected a boolean"))
    }

    fn array(&self, key: &str) -> Result<impl Iterator<Item = (&'a Value, FieldPath)>, CodecError> {
        let path = self.at(key);
        let items = self
            .get(key)?
            .as_array()
            .ok_or_else(|| CodecError::schema(path.clone(), "expected an array"))?;
        Ok(items
            .iter()
            .enumerate()
            .map(move |(i, v)| (v, path.clone().push_index(i))))
    }

    fn object(&self, key: &str) -> Result<Obj<'a>, CodecError> {
        Obj::new(self.get(key)?, self.at(key))
    }

    fn indices(&self, key: &str) -> Result<BTreeSet<usize>, CodecError> {
        self.array(key)?
            .map(|(v, path)| {
                v.as_u64()
                    .map(|n| n as usize)
                    .ok_or_else(|| CodecError::schema(path, "expected a model index"))
            })
            .collect()
    }
}

fn string(value: &Value, path: FieldPath) -> Result<String, CodecError> {
    value
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| CodecError::schema(path, "expected a string"))
}

fn parse_date(text: &str, path: FieldPath) -> Result<NaiveDate, CodecError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| CodecError::schema(path, format!("`{text}` is not a YYYY-MM-DD date")))
}

pub fn decode_json(registry: &Registry, text: &str) -> Result<Card, CodecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CodecError::Syntax {
        format: Format::Json,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = Obj::new(&value, FieldPath::root())?;
    root.only(&[
        "version",
        "project",
        "models",
        "categories",
        "ethics",
        "approval",
        "license",
    ])?;
    let version = root.string("version")?;
    let taxonomy = resolve(registry, &version)?;
    let mut card = Card::new(taxonomy);

    let project = root.object("project")?;
    project.only(&["name", "keyApplications", "correspondences"])?;
    card.project.project_name = project.string("name")?;
    card.project.key_applications = project
        .array("keyApplications")?
        .map(|(v, path)| string(v, path))
        .collect::<Result<_, _>>()?;
    for (value, path) in project.array("correspondences")? {
        let person = Obj::new(value, path)?;
        person.only(&["name", "contact", "affiliation"])?;
        card.project.correspondences.push(Correspondence {
            name: person.string("name")?,
            contact: person.string("contact")?,
            affiliation: person.string("affiliation")?,
        });
    }

    for (value, path) in root.array("models")? {
        let model = Obj::new(value, path)?;
        model.only(&["name", "dates", "version"])?;
        let dates_used = model
            .array("dates")?
            .map(|(v, path)| parse_date(&string(v, path.clone())?, path))
            .collect::<Result<_, _>>()?;
        let version = match model.map.get("version") {
            None | Some(Value::Null) => None,
            Some(v) => Some(string(v, model.at("version"))?),
        };
        card.models.push(ModelUsage {
            name: model.string("name")?,
            dates_used,
            version,
        });
    }

    for (value, path) in root.array("categories")? {
        let category = Obj::new(value, path)?;
        category.only(&["id", "models", "subcategories"])?;
        let id = category.string("id")?;
        match taxonomy.lookup_category(&id) {
            Ok(c) if c.is_usage() => {}
            _ => {
                return Err(CodecError::schema(
                    category.at("id"),
                    format!("unknown usage category `{id}`"),
                ))
            }
        }
        card.category_models
            .insert(id.clone(), category.indices("models")?);
        for (value, path) in category.array("subcategories")? {
            let sub = Obj::new(value, path)?;
            sub.only(&["id", "used", "classifications", "models", "detail"])?;
            let sub_id = sub.string("id")?;
            if taxonomy
                .category_of(&sub_id)
                .map(|c| c.id != id)
                .unwrap_or(true)
            {
                return Err(CodecError::schema(
                    sub.at("id"),
                    format!("`{sub_id}` is not a subcategory of `{id}`"),
                ));
            }
            let used = sub.boolean("used")?;
            let classifications = sub
                .array("classifications")?
                .map(|(v, path)| {
                    let name = string(v, path.clone())?;
                    Classification::parse(&name).ok_or_else(|| {
                        CodecError::schema(path, format!("unknown classification `{name}`"))
                    })
                })
                .collect::<Result<_, _>>()?;
            let mut detail = sub.string("detail")?;
            if !used && detail == NOT_USED {
                detail.clear();
            }
            card.entries.insert(
                sub_id.clone(),
                UsageEntry {
                    subcategory_id: sub_id,
                    used,
                    classifications,
                    model_refs: sub.indices("models")?,
                    detail,
                },
            );
        }
    }

    let ethics = root.object("ethics")?;
    ethics.only(&["implications", "errorMitigation", "harmMitigation"])?;
    card.ethics = EthicsAnswers {
        implications: ethics.string("implications")?,
        error_mitigation: ethics.string("errorMitigation")?,
        harm_mitigation: ethics.string("harmMitigation")?,
    };
    card.approval = root.boolean("approval")?;

    finish(taxonomy, card)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::builtin_v1;

    #[test]
    fn empty_card_round_trip() {
        let registry = Registry::builtin();
        let card = Card::new(&builtin_v1());
        let text = encode_json(&builtin_v1(), &card);
        assert_eq!(decode_json(&registry, &text).unwrap(), card);
    }

    #[test]
    fn top_level_key_order() {
        let text = encode_json(&builtin_v1(), &Card::new(&builtin_v1()));
        let positions: Vec<usize> = [
            "\"version\"",
            "\"project\"",
            "\"models\"",
            "\"categories\"",
            "\"ethics\"",
            "\"approval\"",
        ]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = decode_json(&Registry::builtin(), "{\n  \"version\": }").unwrap_err();
        assert!(matches!(err, CodecError::Syntax { line: 2, .. }));
    }

    #[test]
    fn unknown_version() {
        let text = encode_json(&builtin_v1(), &Card::new(&builtin_v1()))
            .replace("\"version\": \"1.0\"", "\"version\": \"9.9\"");
        assert_eq!(
            decode_json(&Registry::builtin(), &text),
            Err(CodecError::UnknownVersion("9.9".into()))
        );
    }

    #[test]
    fn schema_error_carries_path() {
        let text = encode_json(&builtin_v1(), &Card::new(&builtin_v1()))
            .replace("\"approval\": false", "\"approval\": \"no\"");
        match decode_json(&Registry::builtin(), &text).unwrap_err() {
            CodecError::Schema { path, .. } => assert_eq!(path.to_string(), "approval"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_reference_is_schema_error() {
        let text = encode_json(&builtin_v1(), &Card::new(&builtin_v1())).replacen(
            "\"models\": []",
            "\"models\": [3]",
            2,
        );
        assert!(matches!(
            decode_json(&Registry::builtin(), &text),
            Err(CodecError::Schema { .. })
        ));
    }
}
