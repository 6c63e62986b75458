use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::NaiveDate;
use roxmltree::{Document, Node};

use crate::card::{Card, Correspondence, ModelUsage, UsageEntry};
use crate::path::FieldPath;
use crate::taxonomy::{Classification, Registry, Taxonomy};

use super::{canonicalize, finish, resolve, CodecError, Format, LICENSE, NOT_USED};

const ROOT: &str = "aiUsageCard";

/// Escapes text for element content and attribute values.
fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // would otherwise be normalized away by XML end-of-line handling
            '\r' => out.push_str("&#xD;"),
            c => out.push(c),
        }
    }
    out
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn open(&mut self, tag: &str, attrs: &[(&str, &str)]) {
        self.indent();
        let _ = write!(self.out, "<{tag}");
        for (name, value) in attrs {
            let _ = write!(self.out, " {name}=\"{}\"", escape(value));
        }
        self.out.push_str(">\n");
        self.depth += 1;
    }

    fn close(&mut self, tag: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.out, "</{tag}>");
    }

    fn leaf(&mut self, tag: &str, text: &str) {
        self.indent();
        let _ = writeln!(self.out, "<{tag}>{}</{tag}>", escape(text));
    }

    fn list<T: ToString>(&mut self, tag: &str, item: &str, values: impl IntoIterator<Item = T>) {
        let values: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
        if values.is_empty() {
            self.indent();
            let _ = writeln!(self.out, "<{tag}/>");
            return;
        }
        self.open(tag, &[]);
        for value in values {
            self.leaf(item, &value);
        }
        self.close(tag);
    }
}

/// Indented XML document with root `aiUsageCard`, elements in taxonomy order.
pub fn encode_xml(taxonomy: &Taxonomy, card: &Card) -> String {
    let card = canonicalize(card);
    let mut w = Writer {
        out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
        depth: 0,
    };
    let _ = writeln!(w.out, "<!-- License: {LICENSE} -->");
    w.open(ROOT, &[("version", &card.taxonomy_version)]);

    w.open("project", &[]);
    w.leaf("name", &card.project.project_name);
    w.list(
        "keyApplications",
        "application",
        &card.project.key_applications,
    );
    if card.project.correspondences.is_empty() {
        w.list::<&str>("correspondences", "correspondence", []);
    } else {
        w.open("correspondences", &[]);
        for person in &card.project.correspondences {
            w.open("correspondence", &[]);
            w.leaf("name", &person.name);
            w.leaf("contact", &person.contact);
            w.leaf("affiliation", &person.affiliation);
            w.close("correspondence");
        }
        w.close("correspondences");
    }
    w.close("project");

    if card.models.is_empty() {
        w.list::<&str>("models", "model", []);
    } else {
        w.open("models", &[]);
        for (index, model) in card.models.iter().enumerate() {
            w.open("model", &[("index", &index.to_string())]);
            w.leaf("name", &model.name);
            w.list("dates", "date", &model.dates_used);
            w.leaf("version", model.version.as_deref().unwrap_or(NOT_USED));
            w.close("model");
        }
        w.close("models");
    }

    w.open("categories", &[]);
    for category in taxonomy.usage_categories() {
        w.open("category", &[("id", &category.id)]);
        w.list(
            "models",
            "ref",
            card.category_models.get(&category.id).into_iter().flatten(),
        );
        for def in category.subcategories.iter().filter(|s| s.is_usage()) {
            match card.entries.get(&def.id).filter(|e| e.used) {
                Some(entry) => {
                    w.open("subcategory", &[("id", &def.id), ("used", "true")]);
                    w.list("classifications", "classification", &entry.classifications);
                    w.list("models", "ref", &entry.model_refs);
                    w.leaf("detail", &entry.detail);
                    w.close("subcategory");
                }
                None => {
                    w.open("subcategory", &[("id", &def.id), ("used", "false")]);
                    w.leaf("detail", NOT_USED);
                    w.close("subcategory");
                }
            }
        }
        w.close("category");
    }
    w.close("categories");

    w.open("ethics", &[]);
    w.leaf("implications", &card.ethics.implications);
    w.leaf("errorMitigation", &card.ethics.error_mitigation);
    w.leaf("harmMitigation", &card.ethics.harm_mitigation);
    w.close("ethics");
    w.leaf("approval", if card.approval { "true" } else { "false" });
    w.close(ROOT);
    w.out
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

fn child<'a, 'i>(
    node: Node<'a, 'i>,
    tag: &str,
    path: &FieldPath,
) -> Result<Node<'a, 'i>, CodecError> {
    let mut matches = elements(node).filter(|n| n.has_tag_name(tag));
    let found = matches
        .next()
        .ok_or_else(|| CodecError::schema(path.clone().push_field(tag), "missing element"))?;
    if matches.next().is_some() {
        return Err(CodecError::schema(
            path.clone().push_field(tag),
            "element appears more than once",
        ));
    }
    Ok(found)
}

fn only(node: Node, allowed: &[&str], path: &FieldPath) -> Result<(), CodecError> {
    match elements(node).find(|n| !allowed.contains(&n.tag_name().name())) {
        Some(n) => Err(CodecError::schema(
            path.clone().push_field(n.tag_name().name()),
            "unexpected element",
        )),
        None => Ok(()),
    }
}

/// Concatenated text content of a leaf element.
fn text(node: Node, path: &FieldPath) -> Result<String, CodecError> {
    if elements(node).next().is_some() {
        return Err(CodecError::schema(path.clone(), "expected text content"));
    }
    Ok(node
        .children()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect())
}

fn leaf(node: Node, tag: &str, path: &FieldPath) -> Result<String, CodecError> {
    text(child(node, tag, path)?, &path.clone().push_field(tag))
}

fn items(node: Node, item: &str, path: &FieldPath) -> Result<Vec<(String, FieldPath)>, CodecError> {
    only(node, &[item], path)?;
    elements(node)
        .enumerate()
        .map(|(i, n)| {
            let p = path.clone().push_index(i);
            text(n, &p).map(|t| (t, p))
        })
        .collect()
}

fn indices(node: Node, path: &FieldPath) -> Result<BTreeSet<usize>, CodecError> {
    items(node, "ref", path)?
        .into_iter()
        .map(|(t, p)| {
            t.trim()
                .parse()
                .map_err(|_| CodecError::schema(p, format!("`{t}` is not a model index")))
        })
        .collect()
}

fn attr<'a>(node: Node<'a, '_>, name: &str, path: &FieldPath) -> Result<&'a str, CodecError> {
    node.attribute(name).ok_or_else(|| {
        CodecError::schema(
            path.clone().push_field(format!("@{name}")),
            "missing attribute",
        )
    })
}

pub fn decode_xml(registry: &Registry, text_in: &str) -> Result<Card, CodecError> {
    let doc = Document::parse(text_in).map_err(|e| {
        let pos = e.pos();
        CodecError::Syntax {
            format: Format::Xml,
            line: pos.row as usize,
            column: pos.col as usize,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    let path = FieldPath::root();
    if !root.has_tag_name(ROOT) {
        return Err(CodecError::schema(
            path.push_field(root.tag_name().name()),
            format!("root element must be `{ROOT}`"),
        ));
    }
    only(
        root,
        &["project", "models", "categories", "ethics", "approval"],
        &path,
    )?;
    let version = attr(root, "version", &path)?;
    let taxonomy = resolve(registry, version)?;
    let mut card = Card::new(taxonomy);

    let project_path = FieldPath::field("project");
    let project = child(root, "project", &path)?;
    only(
        project,
        &["name", "keyApplications", "correspondences"],
        &project_path,
    )?;
    card.project.project_name = leaf(project, "name", &project_path)?;
    let apps_path = project_path.clone().push_field("keyApplications");
    card.project.key_applications = items(
        child(project, "keyApplications", &project_path)?,
        "application",
        &apps_path,
    )?
    .into_iter()
    .map(|(t, _)| t)
    .collect();
    let people_path = project_path.clone().push_field("correspondences");
    let people = child(project, "correspondences", &project_path)?;
    only(people, &["correspondence"], &people_path)?;
    for (i, person) in elements(people).enumerate() {
        let p = people_path.clone().push_index(i);
        only(person, &["name", "contact", "affiliation"], &p)?;
        card.project.correspondences.push(Correspondence {
            name: leaf(person, "name", &p)?,
            contact: leaf(person, "contact", &p)?,
            affiliation: leaf(person, "affiliation", &p)?,
        });
    }

    let models_path = FieldPath::field("models");
    let models = child(root, "models", &path)?;
    only(models, &["model"], &models_path)?;
    for (i, model) in elements(models).enumerate() {
        let p = models_path.clone().push_index(i);
        only(model, &["name", "dates", "version"], &p)?;
        if let Some(index) = model.attribute("index") {
            if index != i.to_string() {
                return Err(CodecError::schema(
                    p.push_field("@index"),
                    format!("model index {index} out of sequence"),
                ));
            }
        }
        let dates_path = p.clone().push_field("dates");
        let dates_used = items(child(model, "dates", &p)?, "date", &dates_path)?
            .into_iter()
            .map(|(t, dp)| {
                NaiveDate::parse_from_str(&t, "%Y-%m-%d")
                    .map_err(|_| CodecError::schema(dp, format!("`{t}` is not a YYYY-MM-DD date")))
            })
            .collect::<Result<_, _>>()?;
        let version = match elements(model).find(|n| n.has_tag_name("version")) {
            Some(v) => Some(text(v, &p.clone().push_field("version"))?),
            None => None,
        };
        card.models.push(ModelUsage {
            name: leaf(model, "name", &p)?,
            dates_used,
            version,
        });
    }

    let categories_path = FieldPath::field("categories");
    let categories = child(root, "categories", &path)?;
    only(categories, &["category"], &categories_path)?;
    for category in elements(categories) {
        let id = attr(category, "id", &categories_path)?;
        let p = categories_path.clone().push_key(id);
        match taxonomy.lookup_category(id) {
            Ok(c) if c.is_usage() => {}
            _ => {
                return Err(CodecError::schema(
                    p,
                    format!("unknown usage category `{id}`"),
                ))
            }
        }
        only(category, &["models", "subcategory"], &p)?;
        card.category_models.insert(
            id.to_string(),
            indices(
                child(category, "models", &p)?,
                &p.clone().push_field("models"),
            )?,
        );
        for sub in elements(category).filter(|n| n.has_tag_name("subcategory")) {
            let sub_id = attr(sub, "id", &p)?;
            let sp = FieldPath::field("entries").push_key(sub_id);
            if taxonomy
                .category_of(sub_id)
                .map(|c| c.id != id)
                .unwrap_or(true)
            {
                return Err(CodecError::schema(
                    sp,
                    format!("`{sub_id}` is not a subcategory of `{id}`"),
                ));
            }
            let used = match attr(sub, "used", &sp)? {
                "true" => true,
                "false" => false,
                other => {
                    return Err(CodecError::schema(
                        sp.push_field("@used"),
                        format!("`{other}` is not a boolean"),
                    ))
                }
            };
            only(sub, &["classifications", "models", "detail"], &sp)?;
            let classifications = match elements(sub).find(|n| n.has_tag_name("classifications")) {
                Some(node) => items(
                    node,
                    "classification",
                    &sp.clone().push_field("classifications"),
                )?
                .into_iter()
                .map(|(t, cp)| {
                    Classification::parse(&t).ok_or_else(|| {
                        CodecError::schema(cp, format!("unknown classification `{t}`"))
                    })
                })
                .collect::<Result<_, _>>()?,
                None => BTreeSet::new(),
            };
            let model_refs = match elements(sub).find(|n| n.has_tag_name("models")) {
                Some(node) => indices(node, &sp.clone().push_field("models"))?,
                None => BTreeSet::new(),
            };
            let mut detail = leaf(sub, "detail", &sp)?;
            if !used && detail == NOT_USED {
                detail.clear();
            }
            card.entries.insert(
                sub_id.to_string(),
                UsageEntry {
                    subcategory_id: sub_id.to_string(),
                    used,
                    classifications,
                    model_refs,
                    detail,
                },
            );
        }
    }

    let ethics_path = FieldPath::field("ethics");
    let ethics = child(root, "ethics", &path)?;
    only(
        ethics,
        &["implications", "errorMitigation", "harmMitigation"],
        &ethics_path,
    )?;
    card.ethics.implications = leaf(ethics, "implications", &ethics_path)?;
    card.ethics.error_mitigation = leaf(ethics, "errorMitigation", &ethics_path)?;
    card.ethics.harm_mitigation = leaf(ethics, "harmMitigation", &ethics_path)?;
    card.approval = match leaf(root, "approval", &path)?.trim() {
        "true" => true,
        "false" => false,
        other => {
            return Err(CodecError::schema(
                FieldPath::field("approval"),
                format!("`{other}` is not a boolean"),
            ))
        }
    };

    finish(taxonomy, card)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::builtin_v1;

    #[test]
    fn root_carries_version() {
        let text = encode_xml(&builtin_v1(), &Card::new(&builtin_v1()));
        assert!(text.contains("<aiUsageCard version=\"1.0\">"));
        assert!(text.ends_with("</aiUsageCard>\n"));
    }

    #[test]
    fn ampersand_survives() {
        let t = builtin_v1();
        let (card, _) = Card::new(&t)
            .add_model(ModelUsage::new("R&D <model>", vec![]))
            .unwrap();
        let card = card
            .set_entry(
                &t,
                UsageEntry::used(
                    "coding.comparing",
                    [Classification::Compare],
                    [0],
                    "A & B\n\"q\"",
                ),
            )
            .unwrap();
        let text = encode_xml(&t, &card);
        assert!(text.contains("A &amp; B"));
        let back = decode_xml(&Registry::builtin(), &text).unwrap();
        assert_eq!(back, card);
    }

    #[test]
    fn malformed_markup_reports_position() {
        let err = decode_xml(
            &Registry::builtin(),
            "<aiUsageCard version=\"1.0\">\n<project>",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            CodecError::Syntax {
                format: Format::Xml,
                ..
            }
        ));
    }

    #[test]
    fn wrong_root_is_schema_error() {
        assert!(matches!(
            decode_xml(&Registry::builtin(), "<card/>"),
            Err(CodecError::Schema { .. })
        ));
    }
}
