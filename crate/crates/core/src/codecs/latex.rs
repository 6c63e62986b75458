use std::fmt::Write as _;

use crate::card::{Card, FinalizedCard};
use crate::taxonomy::{ethics_ids, Category, Taxonomy};

use super::{canonicalize, Format, LICENSE, NOT_USED};

/// Escapes text for LaTeX running text; newlines become `\newline`.
pub fn escape_latex(text: &str) -> String {
    escape_tex(text, " \\newline ")
}

pub(crate) fn escape_tex(text: &str, newline: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '{' => out.push_str("\\{"),
            '}' => out.push_str("\\}"),
            '$' => out.push_str("\\$"),
            '&' => out.push_str("\\&"),
            '%' => out.push_str("\\%"),
            '#' => out.push_str("\\#"),
            '_' => out.push_str("\\_"),
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            '<' => out.push_str("\\textless{}"),
            '>' => out.push_str("\\textgreater{}"),
            '"' => out.push_str("\\textquotedbl{}"),
            '|' => out.push_str("\\textbar{}"),
            '\r' => {}
            '\n' => out.push_str(newline),
            c => out.push(c),
        }
    }
    out
}

fn or_not_used(text: String) -> String {
    if text.trim().is_empty() {
        NOT_USED.to_string()
    } else {
        text
    }
}

fn cell(label: &str, content: &str) -> String {
    format!(
        "{{\\color{{LightBlue}} {}}} \\newline {}",
        escape_latex(&label.to_uppercase()),
        content
    )
}

fn model_names(card: &Card, refs: impl IntoIterator<Item = usize>) -> String {
    let mut names: Vec<&str> = Vec::new();
    for index in refs {
        if let Some(model) = card.models.get(index) {
            if !names.contains(&model.name.as_str()) {
                names.push(&model.name);
            }
        }
    }
    escape_latex(&names.join(", "))
}

fn usage_cell(card: &Card, taxonomy: &Taxonomy, id: &str) -> String {
    let title = taxonomy
        .lookup_subcategory(id)
        .map(|d| d.title.as_str())
        .unwrap_or(id);
    let content = match card.entries.get(id).filter(|e| e.used) {
        Some(entry) if entry.classifications.is_empty() => escape_latex(&entry.detail),
        Some(entry) => format!(
            "{} \\newline \\textit{{{}}}",
            escape_latex(&entry.detail),
            entry
                .classifications
                .iter()
                .map(|c| c.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        None => NOT_USED.to_string(),
    };
    cell(title, &content)
}

/// Writes label cell plus subcategory cells, two per table row.
fn category_rows(out: &mut String, label: String, cells: Vec<String>) {
    let mut first = true;
    for pair in cells.chunks(2) {
        if first {
            let _ = writeln!(out, "          {label}");
        }
        first = false;
        let last = pair.len() - 1;
        for (i, c) in pair.iter().enumerate() {
            let end = if i == last { " \\\\\\\\" } else { "" };
            let _ = writeln!(out, "          & {c}{end}");
        }
    }
    if first {
        let _ = writeln!(out, "          {label} \\\\\\\\");
    }
}

fn ethics_title(taxonomy: &Taxonomy, id: &str, fallback: &str) -> String {
    taxonomy
        .lookup_subcategory(id)
        .map(|d| d.title.clone())
        .unwrap_or_else(|_| fallback.to_string())
}

fn category_label(card: &Card, category: &Category) -> String {
    let models = card
        .category_models
        .get(&category.id)
        .map(|refs| model_names(card, refs.iter().copied()))
        .unwrap_or_default();
    cell(&category.title, &models)
}

/// LaTeX fragment laid out like the printed card template.
///
/// The fragment expects `xcolor`, `longtable`, `booktabs`, `hyperref` and
/// `tcolorbox` (with the `most` option) in the including document's preamble.
pub fn encode_latex(taxonomy: &Taxonomy, card: &FinalizedCard) -> String {
    let card = canonicalize(card.card());
    let mut out = String::new();
    let version = escape_latex(&card.taxonomy_version);
    let _ = writeln!(out, "% AI Usage Card v{version}");
    let _ = writeln!(out, "% License: {LICENSE}");
    out.push_str(
        "% Requires in the preamble: \\usepackage{xcolor,longtable,booktabs,hyperref}\n\
         % and \\usepackage[most]{tcolorbox}.\n\
         \\providecolor{LightBlue}{rgb}{0.29,0.56,0.89}\n",
    );
    let links = [
        ("pdf", "PDF"),
        (Format::Bib.extension(), "BibTeX"),
        (Format::Xml.extension(), "XML"),
        (Format::Json.extension(), "JSON"),
        (Format::Csv.extension(), "CSV"),
    ]
    .iter()
    .map(|(ext, label)| format!("\\href{{card.{ext}}}{{{label}}}"))
    .collect::<Vec<_>>()
    .join(" | ");
    let _ = write!(
        out,
        "{{\\sffamily\n\
         \x20 \\centering\n\
         \x20 \\tcbset{{colback=white!10!white}}\n\
         \x20 \\begin{{tcolorbox}}[\n\
         \x20   title={{\\large \\vspace{{3mm}} \\textbf{{AI Usage Card for \\textit{{{project}}}}}\\vspace{{3mm}}}},\n\
         \x20   breakable,\n\
         \x20   boxrule=0.7pt,\n\
         \x20   width=.8\\paperwidth,\n\
         \x20   center,\n\
         \x20   skin=bicolor,\n\
         \x20   segmentation empty,\n\
         \x20   before lower={{\\footnotesize{{AI Usage Card v{version} \\hfill {links}}}}},\n\
         \x20   halign lower=center,\n\
         \x20   collower=white,\n\
         \x20   colbacklower=tcbcolframe]\n\
         \x20   \\footnotesize{{\n\
         \x20     \\begin{{longtable}}{{p{{.15\\paperwidth}} p{{.275\\paperwidth}} p{{.275\\paperwidth}}}}\n",
        project = escape_latex(&card.project.project_name),
    );

    let people = &card.project.correspondences;
    let column = |f: fn(&crate::card::Correspondence) -> &str| {
        or_not_used(
            people
                .iter()
                .map(|p| escape_latex(f(p)))
                .collect::<Vec<_>>()
                .join(" \\newline "),
        )
    };
    let _ = writeln!(
        out,
        "          {}",
        cell("Correspondence(s)", &column(|p| &p.name))
    );
    let _ = writeln!(
        out,
        "          & {}",
        cell("Contact(s)", &column(|p| &p.contact))
    );
    let _ = writeln!(
        out,
        "          & {} \\\\\\\\",
        cell("Affiliation(s)", &column(|p| &p.affiliation))
    );
    let _ = writeln!(
        out,
        "          & {}",
        cell("Project Name", &escape_latex(&card.project.project_name))
    );
    let _ = writeln!(
        out,
        "          & {} \\\\\\\\",
        cell(
            "Key Application(s)",
            &or_not_used(escape_latex(&card.project.key_applications.join(", ")))
        )
    );

    let names = or_not_used(
        card.models
            .iter()
            .map(|m| escape_latex(&m.name))
            .collect::<Vec<_>>()
            .join(" \\newline "),
    );
    let dates = or_not_used(
        card.models
            .iter()
            .map(|m| {
                or_not_used(
                    m.dates_used
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                )
            })
            .collect::<Vec<_>>()
            .join(" \\newline "),
    );
    let versions = or_not_used(
        card.models
            .iter()
            .map(|m| {
                m.version
                    .as_deref()
                    .map(escape_latex)
                    .unwrap_or_else(|| NOT_USED.to_string())
            })
            .collect::<Vec<_>>()
            .join(" \\newline "),
    );
    let _ = writeln!(out, "          {}", cell("Model(s)", &names));
    let _ = writeln!(out, "          & {}", cell("Date(s) Used", &dates));
    let _ = writeln!(
        out,
        "          & {} \\\\\\\\",
        cell("Version(s)", &versions)
    );
    let _ = writeln!(out, "          \\cmidrule{{2-3}}\\\\");

    for block in taxonomy.blocks.iter().filter(|b| b.is_usage()) {
        for category in block.categories.iter().filter(|c| c.is_usage()) {
            let cells = category
                .subcategories
                .iter()
                .filter(|s| s.is_usage())
                .map(|s| usage_cell(&card, taxonomy, &s.id))
                .collect();
            category_rows(&mut out, category_label(&card, category), cells);
        }
        let _ = writeln!(out, "          \\cmidrule{{2-3}}\\\\");
    }

    let all_used = model_names(
        &card,
        card.used_entries()
            .flat_map(|e| e.model_refs.iter().copied())
            .collect::<std::collections::BTreeSet<_>>(),
    );
    let answer = |text: &str| or_not_used(escape_latex(text));
    let ethics_cells = vec![
        cell(
            &ethics_title(taxonomy, ethics_ids::IMPLICATIONS, "Implications"),
            &answer(&card.ethics.implications),
        ),
        cell(
            &ethics_title(taxonomy, ethics_ids::ERROR_MITIGATION, "Error mitigation"),
            &answer(&card.ethics.error_mitigation),
        ),
        cell(
            &ethics_title(taxonomy, ethics_ids::HARM_MITIGATION, "Harm mitigation"),
            &answer(&card.ethics.harm_mitigation),
        ),
        cell(
            &ethics_title(taxonomy, ethics_ids::APPROVAL, "Approval"),
            if card.approval { "Yes" } else { "No" },
        ),
    ];
    category_rows(&mut out, cell("Ethics", &all_used), ethics_cells);

    out.push_str(
        "        \\end{longtable}\n\
         \x20   }\n\
         \x20   \\tcblower\n\
         \x20 \\end{tcolorbox}\n\
         }\n",
    );
    out
}
