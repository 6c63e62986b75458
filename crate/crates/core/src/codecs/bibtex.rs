use std::fmt::Write as _;

use crate::card::FinalizedCard;
use crate::taxonomy::Taxonomy;

use super::latex::escape_tex;
use super::{canonicalize, LICENSE};

/// Citation key derived from a project name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('-');
            }
            gap = false;
            out.push(c.to_ascii_lowercase());
        } else {
            gap = true;
        }
    }
    if out.is_empty() {
        "ai-usage-card".to_string()
    } else {
        out
    }
}

fn field(out: &mut String, name: &str, value: &str) {
    let _ = writeln!(out, "  {name} = {{{}}},", escape_tex(value, " "));
}

/// A `@misc` entry citing the card.
pub fn encode_bibtex(taxonomy: &Taxonomy, card: &FinalizedCard) -> String {
    let card = canonicalize(card.card());
    let mut out = String::new();
    let _ = writeln!(out, "% License: {LICENSE}");
    let _ = writeln!(out, "@misc{{{},", slug(&card.project.project_name));
    field(
        &mut out,
        "title",
        &format!("AI Usage Card for {}", card.project.project_name),
    );
    let authors: Vec<&str> = card
        .project
        .correspondences
        .iter()
        .map(|p| p.name.as_str())
        .filter(|n| !n.is_empty())
        .collect();
    if !authors.is_empty() {
        field(&mut out, "author", &authors.join(" and "));
    }
    if let Some(first) = card.models.iter().flat_map(|m| m.dates_used.iter()).min() {
        field(&mut out, "year", &first.format("%Y").to_string());
    }
    field(
        &mut out,
        "note",
        &format!("Generated with AI Usage Cards v{}", card.taxonomy_version),
    );
    let mut models: Vec<&str> = Vec::new();
    for model in &card.models {
        if !models.contains(&model.name.as_str()) {
            models.push(&model.name);
        }
    }
    if !models.is_empty() {
        field(&mut out, "aiusage-models", &models.join(", "));
    }
    let categories: Vec<&str> = taxonomy
        .usage_categories()
        .filter(|c| {
            c.subcategories
                .iter()
                .any(|s| card.entries.get(&s.id).is_some_and(|e| e.used))
        })
        .map(|c| c.title.as_str())
        .collect();
    if !categories.is_empty() {
        field(&mut out, "aiusage-categories", &categories.join(", "));
    }
    out.push_str("}\n");
    out
}
