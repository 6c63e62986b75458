//! Line-oriented terminal renderer over the questionnaire step machine.
//!
//! At any prompt `:back` returns to the previous step and `:quit` (or end
//! of input) aborts. After going back, the previous answer can be kept.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use aiusage_core::questionnaire::{
    Choice, DetailAnswer, ModelOption, SelectAnswer, StepSchema, SubcategoryChoice,
};
use aiusage_core::{
    Answer, Classification, Correspondence, EthicsAnswers, FinalizedCard, ModelUsage,
    ProjectDetails, Registry, Session, SessionError, Step, StepKind, Taxonomy,
};

/// How a wizard run ended.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum WizardOutcome {
    Finished(Session, FinalizedCard),
    Aborted(StepKind),
}

enum Flow<T> {
    Value(T),
    Back,
    Quit,
}

use Flow::{Back, Quit, Value};

macro_rules! take {
    ($e:expr) => {
        match $e? {
            Value(v) => v,
            Back => return Ok(Back),
            Quit => return Ok(Quit),
        }
    };
}

struct Term<'a, R, W> {
    input: &'a mut R,
    out: &'a mut W,
}

impl<R: BufRead, W: Write> Term<'_, R, W> {
    fn ask(&mut self, prompt: &str) -> io::Result<Flow<String>> {
        write!(self.out, "{prompt} ")?;
        self.out.flush()?;
        let mut line = String::new();
        if self.input.read_line(&mut line)? == 0 {
            writeln!(self.out)?;
            return Ok(Quit);
        }
        let line = line.trim();
        Ok(match line {
            ":back" | ":b" => Back,
            ":quit" | ":q" => Quit,
            _ => Value(line.to_string()),
        })
    }

    fn yes_no(&mut self, prompt: &str, default: Option<bool>) -> io::Result<Flow<bool>> {
        loop {
            let text = take!(self.ask(prompt));
            match (text.to_ascii_lowercase().as_str(), default) {
                ("y" | "yes", _) => return Ok(Value(true)),
                ("n" | "no", _) => return Ok(Value(false)),
                ("", Some(d)) => return Ok(Value(d)),
                _ => writeln!(self.out, "  please answer y or n")?,
            }
        }
    }

    /// Reads a comma-separated list of option numbers or ids.
    fn pick(
        &mut self,
        prompt: &str,
        ids: &[String],
        allow_empty: bool,
    ) -> io::Result<Flow<Vec<String>>> {
        'outer: loop {
            let text = take!(self.ask(prompt));
            let mut picked = Vec::new();
            for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let id = match token.parse::<usize>() {
                    Ok(n) if (1..=ids.len()).contains(&n) => ids[n - 1].clone(),
                    _ if ids.iter().any(|i| i == token) => token.to_string(),
                    _ => {
                        writeln!(self.out, "  `{token}` is not one of the options")?;
                        continue 'outer;
                    }
                };
                if !picked.contains(&id) {
                    picked.push(id);
                }
            }
            if picked.is_empty() && !allow_empty {
                writeln!(self.out, "  pick at least one")?;
                continue;
            }
            return Ok(Value(picked));
        }
    }

    fn models(&mut self) -> io::Result<Flow<Answer>> {
        let mut models = Vec::new();
        loop {
            let name = take!(self.ask(&format!(
                "Model {} name (empty to finish):",
                models.len() + 1
            )));
            if name.is_empty() {
                return Ok(Value(Answer::ModelInfo(models)));
            }
            let dates = loop {
                let text = take!(self.ask("  dates used (YYYY-MM-DD, comma separated):"));
                let parsed: Result<Vec<_>, _> = text
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<chrono::NaiveDate>().map_err(|_| t.to_string()))
                    .collect();
                match parsed {
                    Ok(d) if !d.is_empty() => break d,
                    Ok(_) => writeln!(self.out, "  give at least one date")?,
                    Err(t) => writeln!(self.out, "  `{t}` is not a YYYY-MM-DD date")?,
                }
            };
            let version = take!(self.ask("  version (empty if unknown):"));
            let mut model = ModelUsage::new(name, dates);
            if !version.is_empty() {
                model = model.with_version(version);
            }
            models.push(model);
        }
    }

    fn list_choices(&mut self, options: &[Choice]) -> io::Result<Vec<String>> {
        for (i, c) in options.iter().enumerate() {
            writeln!(self.out, "  {:>2}. {} ({})", i + 1, c.title, c.id)?;
        }
        Ok(options.iter().map(|c| c.id.clone()).collect())
    }

    fn list_models(&mut self, models: &[ModelOption]) -> io::Result<Vec<String>> {
        for m in models {
            writeln!(self.out, "  {:>2}. {}", m.index + 1, m.name)?;
        }
        // Numbers shown are model positions, so ids are the same numbers.
        Ok(models.iter().map(|m| (m.index + 1).to_string()).collect())
    }

    fn pick_models(
        &mut self,
        prompt: &str,
        models: &[ModelOption],
    ) -> io::Result<Flow<BTreeSet<usize>>> {
        let ids = self.list_models(models)?;
        let picked = take!(self.pick(prompt, &ids, true));
        let set: BTreeSet<usize> = if picked.is_empty() {
            models.iter().map(|m| m.index).collect()
        } else {
            picked
                .iter()
                .map(|n| n.parse::<usize>().expect("numeric ids") - 1)
                .collect()
        };
        Ok(Value(set))
    }

    fn assignment(
        &mut self,
        categories: &[Choice],
        models: &[ModelOption],
    ) -> io::Result<Flow<Answer>> {
        let mut map = BTreeMap::new();
        if let [only] = models {
            writeln!(self.out, "  every selected category uses {}", only.name)?;
            for c in categories {
                map.insert(c.id.clone(), BTreeSet::from([only.index]));
            }
            return Ok(Value(Answer::ModelAssignment(map)));
        }
        for c in categories {
            let set = take!(self.pick_models(
                &format!("Models for {} (numbers, empty for all):", c.title),
                models
            ));
            map.insert(c.id.clone(), set);
        }
        Ok(Value(Answer::ModelAssignment(map)))
    }

    fn classifications(
        &mut self,
        choice: &SubcategoryChoice,
    ) -> io::Result<Flow<BTreeSet<Classification>>> {
        if choice.allowed_classifications.len() <= 1 {
            return Ok(Value(choice.allowed_classifications.clone()));
        }
        let names: Vec<&str> = choice
            .allowed_classifications
            .iter()
            .map(|c| c.as_str())
            .collect();
        loop {
            let text = take!(self.ask(&format!(
                "  how did AI contribute to {}? ({}; empty for all):",
                choice.title,
                names.join(", ")
            )));
            let parsed: Option<BTreeSet<Classification>> = text
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(Classification::parse)
                .collect();
            match parsed {
                Some(set)
                    if set
                        .iter()
                        .all(|c| choice.allowed_classifications.contains(c)) =>
                {
                    return Ok(Value(set))
                }
                _ => writeln!(self.out, "  choose from {}", names.join(", "))?,
            }
        }
    }

    fn select(
        &mut self,
        category: &Choice,
        options: &[SubcategoryChoice],
    ) -> io::Result<Flow<Answer>> {
        for (i, s) in options.iter().enumerate() {
            let kinds: Vec<&str> = s
                .allowed_classifications
                .iter()
                .map(|c| c.as_str())
                .collect();
            writeln!(
                self.out,
                "  {:>2}. {} [{}] ({})",
                i + 1,
                s.title,
                kinds.join("/"),
                s.id
            )?;
            if !s.description.is_empty() {
                writeln!(self.out, "      {}", s.description)?;
            }
        }
        let ids: Vec<String> = options.iter().map(|s| s.id.clone()).collect();
        let picked = take!(self.pick(
            "Subcategories (numbers or ids, comma separated):",
            &ids,
            false
        ));
        let mut selected = BTreeMap::new();
        for id in picked {
            let choice = options
                .iter()
                .find(|s| s.id == id)
                .expect("picked from options");
            selected.insert(id, take!(self.classifications(choice)));
        }
        Ok(Value(Answer::SubcategorySelect(SelectAnswer {
            category: category.id.clone(),
            selected,
        })))
    }

    fn detail(
        &mut self,
        sub: &SubcategoryChoice,
        models: &[ModelOption],
    ) -> io::Result<Flow<Answer>> {
        let detail = take!(self.ask("Detail:"));
        let models = if models.len() > 1 {
            Some(take!(self.pick_models(
                "Models used here (numbers, empty for all assigned):",
                models
            )))
        } else {
            None
        };
        Ok(Value(Answer::SubcategoryDetail(DetailAnswer {
            subcategory: sub.id.clone(),
            detail,
            models,
        })))
    }

    fn ethics(&mut self, questions: &[Choice]) -> io::Result<Flow<Answer>> {
        let mut answers = EthicsAnswers::default();
        for q in questions {
            let text = take!(self.ask(&format!("{}:", q.title)));
            match q.id.as_str() {
                "implications" => answers.implications = text,
                "errorMitigation" => answers.error_mitigation = text,
                _ => answers.harm_mitigation = text,
            }
        }
        Ok(Value(Answer::Ethics(answers)))
    }

    fn project(&mut self) -> io::Result<Flow<Answer>> {
        let project_name = take!(self.ask("Project name:"));
        let key_applications = take!(self.ask("Key applications (comma separated):"))
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let mut correspondences = Vec::new();
        loop {
            let name = take!(self.ask(&format!(
                "Correspondence {} name (empty to finish):",
                correspondences.len() + 1
            )));
            if name.is_empty() {
                break;
            }
            let contact = take!(self.ask("  contact:"));
            let affiliation = take!(self.ask("  affiliation:"));
            correspondences.push(Correspondence::new(name, contact, affiliation));
        }
        Ok(Value(Answer::ProjectDetails(ProjectDetails {
            correspondences,
            project_name,
            key_applications,
        })))
    }

    /// Collects an answer for `step`; `Ok(Value(None))` means finalize.
    fn answer(&mut self, step: &Step) -> io::Result<Flow<Option<Answer>>> {
        if let Some(prefill) = &step.prefill {
            writeln!(self.out, "  previous answer: {}", summarize(prefill))?;
            if take!(self.yes_no("Keep it? [Y/n]", Some(true))) {
                return Ok(Value(Some(prefill.clone())));
            }
        }
        let answer = match &step.schema {
            StepSchema::ModelList => take!(self.models()),
            StepSchema::CategorySet { options } => {
                let ids = self.list_choices(options)?;
                let picked = take!(self.pick(
                    "Categories (numbers or ids, comma separated; empty for none):",
                    &ids,
                    true
                ));
                Answer::MainCategories(picked.into_iter().collect())
            }
            StepSchema::ModelAssignment { categories, models } => {
                take!(self.assignment(categories, models))
            }
            StepSchema::SubcategorySet { category, options } => {
                take!(self.select(category, options))
            }
            StepSchema::Detail {
                subcategory,
                models,
                ..
            } => take!(self.detail(subcategory, models)),
            StepSchema::Ethics { questions } => take!(self.ethics(questions)),
            StepSchema::Approval { statement } => {
                Answer::Approval(take!(self.yes_no(&format!("{statement} [y/n]"), None)))
            }
            StepSchema::ProjectDetails => take!(self.project()),
            StepSchema::Review { missing, .. } => {
                if missing.is_empty() {
                    writeln!(self.out, "  the card is complete")?;
                } else {
                    writeln!(self.out, "  still missing:")?;
                    for u in missing {
                        writeln!(self.out, "    {}: {}", u.path, u.message)?;
                    }
                }
                return Ok(if take!(self.yes_no("Finalize the card? [y/n]", None)) {
                    Value(None)
                } else {
                    Back
                });
            }
        };
        Ok(Value(Some(answer)))
    }
}

fn summarize(answer: &Answer) -> String {
    let value = serde_json::to_value(answer).expect("answers serialize");
    value["payload"].to_string()
}

fn header(step: &Step, total: usize) -> String {
    let title = match &step.kind {
        StepKind::SubcategorySelect { category } => format!("Subcategories: {category}"),
        StepKind::SubcategoryDetail { subcategory } => format!("Detail: {subcategory}"),
        other => other.name().to_string(),
    };
    format!("[{}/{}] {title}", step.index + 1, total)
}

/// Drives a session from the first step to a finalized card.
pub fn run_wizard<R: BufRead, W: Write>(
    registry: &Registry,
    taxonomy_version: &str,
    input: &mut R,
    out: &mut W,
) -> Result<WizardOutcome, crate::CliError> {
    let taxonomy: &Taxonomy = registry
        .get(taxonomy_version)
        .map_err(|e| crate::CliError::Usage(e.to_string()))?;
    let mut session = Session::start(registry, taxonomy_version)
        .map_err(|e| crate::CliError::Usage(e.to_string()))?;
    let mut term = Term { input, out };
    writeln!(
        term.out,
        "AI Usage Card questionnaire (taxonomy {taxonomy_version})"
    )?;
    writeln!(
        term.out,
        "Type :back to return to the previous step, :quit to abort."
    )?;
    loop {
        let step = session
            .current_step(taxonomy)
            .map_err(crate::CliError::Session)?;
        let total = session.steps(taxonomy).len();
        writeln!(term.out)?;
        writeln!(term.out, "{}", header(&step, total))?;
        writeln!(term.out, "{}", step.prompt)?;
        match term.answer(&step)? {
            Quit => {
                writeln!(term.out, "aborted")?;
                return Ok(WizardOutcome::Aborted(step.kind));
            }
            Back => match session.go_back(taxonomy) {
                Ok(s) => session = s,
                Err(e) => writeln!(term.out, "  {e}")?,
            },
            Value(Some(answer)) => match session.submit(taxonomy, answer) {
                Ok(s) => session = s,
                Err(e) => writeln!(term.out, "  {e}")?,
            },
            Value(None) => match session.finalize(taxonomy) {
                Ok((s, card)) => return Ok(WizardOutcome::Finished(s, card)),
                Err(SessionError::Incomplete { unmet, revisit }) => {
                    for u in &unmet {
                        writeln!(term.out, "  {}: {}", u.path, u.message)?;
                    }
                    writeln!(term.out, "  returning to {revisit}")?;
                    while session.current_kind(taxonomy) != revisit {
                        match session.go_back(taxonomy) {
                            Ok(s) => session = s,
                            Err(_) => break,
                        }
                    }
                }
                Err(e) => return Err(crate::CliError::Session(e)),
            },
        }
    }
}
