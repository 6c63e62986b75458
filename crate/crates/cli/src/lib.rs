//! The `aiusage` command.
//!
//! Exit codes: 0 when the card is responsible (or the command succeeded),
//! 1 when the card is valid but not responsible or the wizard was aborted,
//! 2 on usage, parse or I/O errors.

pub mod wizard;

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use aiusage_core::codecs::{decode, encode, ExportBundle, Format};
use aiusage_core::questionnaire::ScriptError;
use aiusage_core::{
    assess, load_taxonomy, serialize_taxonomy, AnswerScript, Card, Registry, SessionError,
    ValidationReport,
};
use clap::{Args, Parser, Subcommand};

pub use wizard::{run_wizard, WizardOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_RESPONSIBLE: u8 = 1;
pub const EXIT_FAILURE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "aiusage",
    version,
    about = "Build, validate and convert AI Usage Cards"
)]
pub struct Cli {
    /// Load an additional taxonomy document.
    #[arg(long, global = true, value_name = "PATH")]
    pub taxonomy: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fill in a card interactively.
    New {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay an answer script and export the card.
    Build {
        answers: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check a card and print the validation report.
    Validate {
        card: PathBuf,
        /// Input format; guessed from the extension when omitted.
        #[arg(long)]
        from: Option<Format>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Convert a card to another format.
    Convert {
        input: PathBuf,
        #[arg(long)]
        to: Format,
        #[arg(long)]
        from: Option<Format>,
        /// Output directory; the file is named card.<ext>.
        #[arg(long, env = "AIUSAGE_OUT", default_value = ".")]
        out: PathBuf,
        /// Write to this file instead (`-` for standard output).
        #[arg(short, long, conflicts_with = "out")]
        output: Option<PathBuf>,
    },
    /// Print a taxonomy.
    Taxonomy {
        #[arg(long = "version", short = 'V', default_value = "1.0")]
        taxonomy_version: String,
        /// Print the JSON document instead of the outline.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for card.<ext> files.
    #[arg(long, env = "AIUSAGE_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Formats to write, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "json,xml,csv,bib,tex")]
    pub format: Vec<Format>,
    /// Print the validation report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Session(SessionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn registry(extra: Option<&Path>) -> Result<Registry, CliError> {
    let mut registry = Registry::builtin();
    if let Some(path) = extra {
        let taxonomy = load_taxonomy(&read(path)?).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        registry.register(taxonomy).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    Ok(registry)
}

fn input_format(path: &Path, given: Option<Format>) -> Result<Format, CliError> {
    let format = given.or_else(|| Format::from_path(path)).ok_or_else(|| {
        CliError::Usage(format!(
            "cannot tell the format of {}; pass --from",
            path.display()
        ))
    })?;
    if !format.is_lossless() {
        return Err(CliError::Usage(format!(
            "{format} files cannot be read back; use json, xml or csv"
        )));
    }
    Ok(format)
}

fn read_card(registry: &Registry, path: &Path, given: Option<Format>) -> Result<Card, CliError> {
    let format = input_format(path, given)?;
    decode(registry, format, &read(path)?).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes the chosen members of `bundle` as `dir/card.<ext>`.
pub fn write_bundle(
    dir: &Path,
    bundle: &ExportBundle,
    formats: &[Format],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for format in Format::ALL {
        if formats.contains(&format) {
            let path = dir.join(format!("card.{}", format.extension()));
            fs::write(&path, bundle.get(format))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn print_report(
    out: &mut impl Write,
    report: &ValidationReport,
    json: bool,
) -> std::io::Result<()> {
    if json {
        return writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(report).expect("reports serialize")
        );
    }
    for d in &report.dimensions {
        let state = if d.satisfied {
            "satisfied"
        } else {
            "NOT satisfied"
        };
        writeln!(out, "{}: {state}", d.dimension.to_string().to_lowercase())?;
        for f in &d.findings {
            let severity = format!("{:?}", f.severity).to_lowercase();
            writeln!(out, "  {severity} {} at {}: {}", f.code, f.path, f.message)?;
        }
    }
    let verdict = if report.responsible {
        "responsible"
    } else {
        "not responsible"
    };
    writeln!(out, "verdict: {verdict}")
}

fn verdict_code(report: &ValidationReport) -> u8 {
    if report.responsible {
        EXIT_OK
    } else {
        EXIT_NOT_RESPONSIBLE
    }
}

fn export(
    registry: &Registry,
    card: &Card,
    output: &OutputArgs,
    out: &mut impl Write,
) -> Result<u8, CliError> {
    if output.format.is_empty() {
        return Err(CliError::Usage("--format needs at least one format".into()));
    }
    let taxonomy = registry
        .get(&card.taxonomy_version)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let bundle = ExportBundle::build(taxonomy, card).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = assess(card);
    for path in write_bundle(&output.out, &bundle, &output.format)? {
        if !output.json {
            writeln!(out, "wrote {}", path.display())?;
        }
    }
    print_report(out, &report, output.json)?;
    Ok(verdict_code(&report))
}

fn describe_script_error(e: &ScriptError) -> String {
    match e {
        ScriptError::Step {
            index,
            step,
            source,
        } => {
            format!("answer {index} does not fit step {step}: {source}")
        }
        ScriptError::Truncated { index, step } => {
            format!("script ends after {index} answers; step {step} is unanswered")
        }
        ScriptError::Session(SessionError::Incomplete { unmet, revisit }) => {
            let paths: Vec<String> = unmet.iter().map(|u| u.path.to_string()).collect();
            format!(
                "card is incomplete ({}); revisit step {revisit}",
                paths.join(", ")
            )
        }
        other => other.to_string(),
    }
}

fn execute<R: BufRead, W: Write>(cli: Cli, input: &mut R, out: &mut W) -> Result<u8, CliError> {
    let registry = registry(cli.taxonomy.as_deref())?;
    match cli.command {
        Command::New { output } => {
            let version = match &cli.taxonomy {
                Some(path) => load_taxonomy(&read(path)?)
                    .map(|t| t.version)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                None => aiusage_core::taxonomy::V1.to_string(),
            };
            match run_wizard(&registry, &version, input, out)? {
                WizardOutcome::Finished(_, card) => export(&registry, card.card(), &output, out),
                WizardOutcome::Aborted(_) => Ok(EXIT_NOT_RESPONSIBLE),
            }
        }
        Command::Build { answers, output } => {
            let text = read(&answers)?;
            let script = AnswerScript::parse(&text).map_err(|e| CliError::Input {
                path: answers.clone(),
                message: e.to_string(),
            })?;
            let (_, card) = script.replay(&registry).map_err(|e| CliError::Input {
                path: answers.clone(),
                message: describe_script_error(&e),
            })?;
            export(&registry, card.card(), &output, out)
        }
        Command::Validate { card, from, json } => {
            let card = read_card(&registry, &card, from)?;
            let report = assess(&card);
            print_report(out, &report, json)?;
            Ok(verdict_code(&report))
        }
        Command::Convert {
            input: path,
            to,
            from,
            out: dir,
            output,
        } => {
            let card = read_card(&registry, &path, from)?;
            let taxonomy = registry
                .get(&card.taxonomy_version)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let text = encode(taxonomy, &card, to).map_err(|e| CliError::Input {
                path: path.clone(),
                message: e.to_string(),
            })?;
            match output {
                Some(p) if p.as_os_str() == "-" => out.write_all(text.as_bytes())?,
                Some(p) => fs::write(p, text)?,
                None => {
                    fs::create_dir_all(&dir)?;
                    let target = dir.join(format!("card.{}", to.extension()));
                    fs::write(&target, text)?;
                    writeln!(out, "wrote {}", target.display())?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Taxonomy {
            taxonomy_version,
            json,
        } => {
            let taxonomy = registry
                .get(&taxonomy_version)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if json {
                out.write_all(serialize_taxonomy(taxonomy).as_bytes())?;
                return Ok(EXIT_OK);
            }
            writeln!(out, "AI Usage Card taxonomy {}", taxonomy.version)?;
            for block in &taxonomy.blocks {
                writeln!(out, "{} ({})", block.title, block.id)?;
                for category in &block.categories {
                    writeln!(out, "  {} ({})", category.title, category.id)?;
                    for sub in &category.subcategories {
                        let kinds: Vec<&str> = sub
                            .allowed_classifications
                            .iter()
                            .map(|c| c.as_str())
                            .collect();
                        if kinds.is_empty() {
                            writeln!(out, "    {} ({})", sub.title, sub.id)?;
                        } else {
                            writeln!(out, "    {} [{}] ({})", sub.title, kinds.join("/"), sub.id)?;
                        }
                    }
                }
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T, R, W, E>(args: I, input: &mut R, out: &mut W, err: &mut E) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    R: BufRead,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            };
        }
    };
    match execute(cli, input, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "aiusage: {e}");
            EXIT_FAILURE
        }
    }
}
