use std::io::Cursor;
use std::path::Path;
use std::process::{Command, Stdio};

use aiusage_cli::{run, run_wizard, WizardOutcome, EXIT_FAILURE, EXIT_NOT_RESPONSIBLE, EXIT_OK};
use aiusage_core::codecs::{canonicalize, encode_json, ExportBundle, Format};
use aiusage_core::{builtin_v1, Registry};
use aiusage_testkit::{fixture, golden_card, golden_script, read_fixture};

/// Keystrokes that reproduce the golden card through the wizard.
pub const GOLDEN_KEYS: &str = "\
ChatGPT
2023-01-21


ideation,methodology,writing
ideation.improving
Gathering more ideas for the name of AI Usage Cards.
methodology.comparing
Compare multiple versions of our theoretical model.
writing.generating
Generated a first version of the abstract which was not used in the final manuscript.
Facilitate the AI usage in scientific work (reporting).
Careful evaluation of any generated content from the AI model.
Documentation of suggested content in the scientific document.
y
AI Usage Cards for Responsibly Reporting Generated Content
Artificial Intelligence, Reporting, Responsible AI
Redacted for anonymity
Redacted for anonymity
Redacted for anonymity

y
";

struct Outcome {
    code: u8,
    stdout: String,
    stderr: String,
}

fn aiusage(args: &[&str], stdin: &str) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("aiusage").chain(args.iter().copied());
    let code = run(argv, &mut Cursor::new(stdin.as_bytes()), &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|d| {
            d.map(|e| e.unwrap().file_name().into_string().unwrap())
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn wizard_reproduces_the_golden_card() {
    let dir = tempfile::tempdir().unwrap();
    let result = aiusage(&["new", "--out", path(dir.path())], GOLDEN_KEYS);
    assert_eq!(result.code, EXIT_OK, "{}{}", result.stdout, result.stderr);
    assert_eq!(
        files(dir.path()),
        ["card.bib", "card.csv", "card.json", "card.tex", "card.xml"]
    );
    for ext in ["json", "xml", "csv", "bib", "tex"] {
        let written = std::fs::read_to_string(dir.path().join(format!("card.{ext}"))).unwrap();
        assert_eq!(written, read_fixture(&format!("card.{ext}")), "{ext}");
    }
    assert!(result.stdout.contains("verdict: responsible"));
}

#[test]
fn wizard_abort_at_ethics_writes_nothing() {
    let upto_ethics: String = GOLDEN_KEYS
        .lines()
        .take(11)
        .map(|l| format!("{l}\n"))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let result = aiusage(
        &["new", "--out", path(&out)],
        &format!("{upto_ethics}:quit\n"),
    );
    assert_eq!(result.code, EXIT_NOT_RESPONSIBLE);
    assert!(!out.exists());

    let mut input = Cursor::new(upto_ethics.into_bytes());
    match run_wizard(&Registry::builtin(), "1.0", &mut input, &mut Vec::new()).unwrap() {
        WizardOutcome::Aborted(step) => assert_eq!(step, aiusage_core::StepKind::Ethics),
        other => panic!("{other:?}"),
    }
}

#[test]
fn wizard_single_format() {
    let dir = tempfile::tempdir().unwrap();
    let result = aiusage(
        &["new", "--out", path(dir.path()), "--format", "json"],
        GOLDEN_KEYS,
    );
    assert_eq!(result.code, EXIT_OK);
    assert_eq!(files(dir.path()), ["card.json"]);
}

#[test]
fn wizard_back_keeps_answers_and_reprompts_on_errors() {
    // Go back from the category step, keep the models, pick a bad option
    // first, then continue as in the golden run.
    let keys = GOLDEN_KEYS.replacen(
        "ideation,methodology,writing\n",
        ":back\ny\nbogus\nideation,methodology,writing\n",
        1,
    );
    let mut input = Cursor::new(keys.into_bytes());
    let mut transcript = Vec::new();
    match run_wizard(&Registry::builtin(), "1.0", &mut input, &mut transcript).unwrap() {
        WizardOutcome::Finished(_, card) => assert_eq!(card.card(), &golden_card()),
        other => panic!("{other:?}"),
    }
    let transcript = String::from_utf8(transcript).unwrap();
    assert!(transcript.contains("previous answer"));
    assert!(transcript.contains("`bogus` is not one of the options"));
}

#[test]
fn build_matches_the_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let result = aiusage(
        &[
            "build",
            path(&fixture("answers.json")),
            "--out",
            path(dir.path()),
        ],
        "",
    );
    assert_eq!(result.code, EXIT_OK, "{}", result.stderr);
    let expected = ExportBundle::build(&builtin_v1(), &golden_card()).unwrap();
    for format in Format::ALL {
        let written = std::fs::read_to_string(dir.path().join(format!("card.{format}"))).unwrap();
        assert_eq!(written, expected.get(format));
    }
}

#[test]
fn build_failures_exit_two_and_name_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut script = golden_script();
    script.answers.pop();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, script.to_json()).unwrap();
    let out = dir.path().join("out");
    let result = aiusage(&["build", path(&truncated), "--out", path(&out)], "");
    assert_eq!(result.code, EXIT_FAILURE);
    assert!(
        result.stderr.contains("projectDetails"),
        "{}",
        result.stderr
    );
    assert!(result.stderr.contains("11"), "{}", result.stderr);
    assert!(!out.exists());

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let result = aiusage(&["build", path(&empty), "--out", path(&out)], "");
    assert_eq!(result.code, EXIT_FAILURE);
    assert!(
        result.stderr.contains("not valid JSON"),
        "{}",
        result.stderr
    );

    let mut swapped = golden_script();
    swapped.answers.swap(9, 10);
    let misordered = dir.path().join("misordered.json");
    std::fs::write(&misordered, swapped.to_json()).unwrap();
    let result = aiusage(&["build", path(&misordered)], "");
    assert_eq!(result.code, EXIT_FAILURE);
    assert!(result.stderr.contains("answer 9"), "{}", result.stderr);
}

#[test]
fn build_of_a_not_responsible_card_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut script = golden_script();
    script.answers[10] = aiusage_core::Answer::Approval(false);
    let file = dir.path().join("unapproved.json");
    std::fs::write(&file, script.to_json()).unwrap();
    let result = aiusage(
        &["build", path(&file), "--out", path(dir.path()), "--json"],
        "",
    );
    assert_eq!(result.code, EXIT_NOT_RESPONSIBLE);
    let report: serde_json::Value = serde_json::from_str(&result.stdout).unwrap();
    assert_eq!(report["responsible"], false);
    assert!(dir.path().join("card.tex").exists());
}

#[test]
fn validate_exit_codes() {
    let result = aiusage(&["validate", path(&fixture("card.json"))], "");
    assert_eq!(result.code, EXIT_OK);
    assert!(result.stdout.contains("verdict: responsible"));
    for name in ["card.xml", "card.csv"] {
        assert_eq!(
            aiusage(&["validate", path(&fixture(name))], "").code,
            EXIT_OK,
            "{name}"
        );
    }

    let dir = tempfile::tempdir().unwrap();
    let mut card = golden_card();
    card.approval = false;
    let stripped = dir.path().join("stripped.json");
    std::fs::write(&stripped, encode_json(&builtin_v1(), &card)).unwrap();
    let result = aiusage(&["validate", path(&stripped)], "");
    assert_eq!(result.code, EXIT_NOT_RESPONSIBLE);
    assert!(
        result.stdout.contains("integrity: NOT satisfied"),
        "{}",
        result.stdout
    );
    assert!(
        result.stdout.contains("approval-missing"),
        "{}",
        result.stdout
    );

    let text = read_fixture("card.json");
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert_eq!(
        aiusage(&["validate", path(&truncated)], "").code,
        EXIT_FAILURE
    );

    let json = aiusage(&["validate", "--json", path(&stripped)], "");
    let report: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(report["responsible"], false);

    let unknown = dir.path().join("card.txt");
    std::fs::write(&unknown, &text).unwrap();
    assert_eq!(
        aiusage(&["validate", path(&unknown)], "").code,
        EXIT_FAILURE
    );
    assert_eq!(
        aiusage(&["validate", "--from", "json", path(&unknown)], "").code,
        EXIT_OK
    );
    assert_eq!(
        aiusage(&["validate", path(&fixture("card.tex"))], "").code,
        EXIT_FAILURE
    );
    assert_eq!(
        aiusage(&["validate", "/nonexistent/card.json"], "").code,
        EXIT_FAILURE
    );
}

#[test]
fn convert_round_trips_through_xml() {
    let dir = tempfile::tempdir().unwrap();
    let xml_dir = dir.path().join("xml");
    let back_dir = dir.path().join("back");
    let r = aiusage(
        &[
            "convert",
            path(&fixture("card.json")),
            "--to",
            "xml",
            "--out",
            path(&xml_dir),
        ],
        "",
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let r = aiusage(
        &[
            "convert",
            path(&xml_dir.join("card.xml")),
            "--to",
            "json",
            "--out",
            path(&back_dir),
        ],
        "",
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let canonical = encode_json(&builtin_v1(), &canonicalize(&golden_card()));
    assert_eq!(
        std::fs::read_to_string(back_dir.join("card.json")).unwrap(),
        canonical
    );
}

#[test]
fn convert_csv_to_tex_prints_not_used() {
    let r = aiusage(
        &[
            "convert",
            path(&fixture("card.csv")),
            "--to",
            "tex",
            "--output",
            "-",
        ],
        "",
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("Not used"));
    assert_eq!(r.stdout, read_fixture("card.tex"));
}

#[test]
fn convert_errors() {
    let r = aiusage(&["convert", path(&fixture("card.json")), "--to", "pdf"], "");
    assert_eq!(r.code, EXIT_FAILURE);
    assert!(r.stderr.contains("pdf"), "{}", r.stderr);

    let dir = tempfile::tempdir().unwrap();
    let mut card = golden_card();
    card.project.correspondences.clear();
    let partial = dir.path().join("partial.json");
    std::fs::write(&partial, encode_json(&builtin_v1(), &card)).unwrap();
    for to in ["bib", "tex"] {
        let r = aiusage(
            &[
                "convert",
                path(&partial),
                "--to",
                to,
                "--out",
                path(dir.path()),
            ],
            "",
        );
        assert_eq!(r.code, EXIT_FAILURE, "{to}");
        assert!(r.stderr.contains("project.correspondences"), "{}", r.stderr);
    }
    let r = aiusage(
        &["convert", path(&partial), "--to", "csv", "--output", "-"],
        "",
    );
    assert_eq!(r.code, EXIT_OK);
}

#[test]
fn taxonomy_command() {
    let r = aiusage(&["taxonomy"], "");
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("ideation.improving"));
    let r = aiusage(&["taxonomy", "--json"], "");
    assert_eq!(r.stdout, aiusage_core::serialize_taxonomy(&builtin_v1()));
    assert_eq!(
        aiusage(&["taxonomy", "--version", "9.9"], "").code,
        EXIT_FAILURE
    );
}

#[test]
fn custom_taxonomy_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let mut tax = builtin_v1();
    tax.version = "1.1".into();
    let file = dir.path().join("tax.json");
    std::fs::write(&file, aiusage_core::serialize_taxonomy(&tax)).unwrap();
    let r = aiusage(
        &["--taxonomy", path(&file), "taxonomy", "--version", "1.1"],
        "",
    );
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    std::fs::write(&file, "{").unwrap();
    assert_eq!(
        aiusage(&["--taxonomy", path(&file), "taxonomy"], "").code,
        EXIT_FAILURE
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(aiusage(&["frobnicate"], "").code, EXIT_FAILURE);
    assert_eq!(aiusage(&[], "").code, EXIT_FAILURE);
    assert_eq!(aiusage(&["--help"], "").code, EXIT_OK);
}

#[test]
fn binary_honours_the_output_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_aiusage"))
        .args([
            "build",
            path(&fixture("answers.json")),
            "--format",
            "bib,tex",
        ])
        .env("AIUSAGE_OUT", dir.path())
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(files(dir.path()), ["card.bib", "card.tex"]);

    let status = Command::new(env!("CARGO_BIN_EXE_aiusage"))
        .args(["validate", "/nonexistent.json"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
