use crate::card::Card;

use super::NOT_USED;

fn representable(c: char) -> bool {
    matches!(c, '\n' | '\t') || !(c.is_control() || c == '\u{FFFE}' || c == '\u{FFFF}')
}

/// Line endings become `\n`, characters no export can carry are dropped and
/// surrounding whitespace is trimmed.
fn trim_in_place(text: &mut String) {
    if text.contains('\r') || !text.chars().all(representable) {
        *text = text
            .replace("\r\n", "\n")
            .replace('\r', "\n")
            .chars()
            .filter(|&c| representable(c))
            .collect();
    }
    let trimmed = text.trim();
    if trimmed.len() != text.len() {
        *text = trimmed.to_string();
    }
}

/// Normal form every encoder starts from.
///
/// Free text has line endings normalized to `\n`, control characters other
/// than tab and newline removed and surrounding whitespace trimmed; absent optionals
/// are represented as `None` (an empty or `Not used` version is absent),
/// empty category assignments are dropped, and unused entries are cleared.
/// Model references and classifications are kept in sorted sets, so their
/// order is already fixed. The function is idempotent.
pub fn canonicalize(card: &Card) -> Card {
    let mut card = card.clone();
    trim_in_place(&mut card.taxonomy_version);
    trim_in_place(&mut card.project.project_name);
    card.project
        .key_applications
        .iter_mut()
        .for_each(trim_in_place);
    for person in &mut card.project.correspondences {
        trim_in_place(&mut person.name);
        trim_in_place(&mut person.contact);
        trim_in_place(&mut person.affiliation);
    }
    for model in &mut card.models {
        trim_in_place(&mut model.name);
        model.version = model
            .version
            .take()
            .map(|mut v| {
                trim_in_place(&mut v);
                v
            })
            .filter(|v| !v.is_empty() && v != NOT_USED);
    }
    card.category_models.retain(|_, refs| !refs.is_empty());
    for entry in card.entries.values_mut() {
        if entry.used {
            trim_in_place(&mut entry.detail);
        } else {
            entry.classifications.clear();
            entry.model_refs.clear();
            entry.detail.clear();
        }
    }
    trim_in_place(&mut card.ethics.implications);
    trim_in_place(&mut card.ethics.error_mitigation);
    trim_in_place(&mut card.ethics.harm_mitigation);
    card
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{ModelUsage, UsageEntry};
    use crate::taxonomy::{builtin_v1, Classification};

    fn sample() -> Card {
        let t = builtin_v1();
        let (card, _) = Card::new(&t)
            .add_model(ModelUsage::new(" A ", vec![]).with_version("Not used"))
            .unwrap();
        let (card, _) = card.add_model(ModelUsage::new("B", vec![])).unwrap();
        card.set_entry(
            &t,
            UsageEntry::used("data.cleaning", [Classification::Revise], [1, 0], "  x "),
        )
        .unwrap()
    }

    #[test]
    fn cleans_line_endings_and_controls() {
        let mut text = " a\r\nb\rc\u{7}\td ".to_string();
        trim_in_place(&mut text);
        assert_eq!(text, "a\nb\nc\td");
    }

    #[test]
    fn trims_and_sorts() {
        let canon = canonicalize(&sample());
        let entry = &canon.entries["data.cleaning"];
        assert_eq!(entry.detail, "x");
        assert_eq!(
            entry.model_refs.iter().copied().collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(canon.models[0].name, "A");
        assert_eq!(canon.models[0].version, None);
    }

    #[test]
    fn idempotent() {
        let once = canonicalize(&sample());
        assert_eq!(canonicalize(&once), once);
    }
}
