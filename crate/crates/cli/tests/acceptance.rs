//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so each criterion reports its own
//! timing; the process exits non-zero when any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use aiusage_core::codecs::{canonicalize, decode, encode, encode_latex, Format};
use aiusage_core::validator::{assess, Dimension};
use aiusage_core::{builtin_v1, AnswerScript, Card, Registry, Session, StepKind};
use aiusage_service::{router, AppState, FileStore, OutboxDispatcher};
use aiusage_testkit::{
    arb_card, arb_script_and_card, blanket_answer, fixture, golden_answers, golden_card,
    read_fixture,
};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use serde_json::{json, Value};
use tower::ServiceExt;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn runner(seed: u8) -> TestRunner {
    TestRunner::new_with_rng(
        Config::default(),
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

fn draw<S: Strategy>(strategy: &S, runner: &mut TestRunner) -> S::Value {
    strategy
        .new_tree(runner)
        .expect("strategy yields")
        .current()
}

/// Raw taxonomy document, read without the typed model.
fn raw_taxonomy() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/taxonomy-v1.0.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn usage_titles(doc: &Value) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for block in doc["blocks"].as_array().unwrap() {
        for category in block["categories"].as_array().unwrap() {
            for sub in category["subcategories"].as_array().unwrap() {
                if sub["answerKind"] == "usage-detail" {
                    out.push((
                        sub["id"].as_str().unwrap().to_string(),
                        sub["title"].as_str().unwrap().to_uppercase(),
                    ));
                }
            }
        }
    }
    out
}

fn golden_reproduction() -> Result<(), String> {
    let started = Instant::now();
    let script = AnswerScript::parse(&read_fixture("answers.json")).map_err(|e| e.to_string())?;
    let (_, card) = script
        .replay(&Registry::builtin())
        .map_err(|e| e.to_string())?;
    let tex = encode_latex(&builtin_v1(), &card);
    let elapsed = started.elapsed();

    for needle in [
        "AI Usage Cards for Responsibly Reporting Generated Content",
        "ChatGPT",
        "2023-01-21",
        "Gathering more ideas for the name of AI Usage Cards.",
        "Compare multiple versions of our theoretical model.",
        "Generated a first version of the abstract which was not used in the final manuscript.",
        "Facilitate the AI usage in scientific work (reporting).",
        "Careful evaluation of any generated content from the AI model.",
        "Documentation of suggested content in the scientific document.",
        "AI-GENERATED CONTENT} \\newline Yes",
    ] {
        ensure!(tex.contains(needle), "LaTeX lacks `{needle}`");
    }
    let used = [
        "ideation.improving",
        "methodology.comparing",
        "writing.generating",
    ];
    let mut unused = 0;
    for (id, title) in usage_titles(&raw_taxonomy()) {
        let cell = format!("{{\\color{{LightBlue}} {title}}} \\newline Not used");
        let shows_not_used = tex.contains(&cell);
        ensure!(
            shows_not_used != used.contains(&id.as_str()),
            "{id}: Not used cell is {}",
            if shows_not_used { "present" } else { "missing" }
        );
        unused += usize::from(shows_not_used);
    }
    ensure!(
        unused == 23,
        "{unused} unused subcategories rendered, expected 23"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(())
}

fn taxonomy_conformance() -> Result<(), String> {
    let doc = raw_taxonomy();
    let blocks = doc["blocks"].as_array().unwrap();
    ensure!(blocks.len() == 6, "{} blocks", blocks.len());
    let per_block: Vec<usize> = blocks
        .iter()
        .map(|b| {
            b["categories"]
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|c| c["subcategories"].as_array().unwrap())
                .filter(|s| s["answerKind"] == "usage-detail")
                .count()
        })
        .filter(|&n| n > 0)
        .collect();
    ensure!(per_block == [7, 6, 7, 6], "per-block totals {per_block:?}");
    ensure!(
        per_block.iter().all(|n| (6..=7).contains(n)),
        "bound violated"
    );
    let usage = usage_titles(&doc);
    ensure!(usage.len() == 26, "{} usage subcategories", usage.len());

    let (mut block_ids, mut category_ids, mut sub_ids) =
        (HashSet::new(), HashSet::new(), HashSet::new());
    for block in blocks {
        ensure!(
            block_ids.insert(block["id"].to_string()),
            "duplicate block {}",
            block["id"]
        );
        for category in block["categories"].as_array().unwrap() {
            ensure!(
                category_ids.insert(category["id"].to_string()),
                "duplicate category {}",
                category["id"]
            );
            for sub in category["subcategories"].as_array().unwrap() {
                ensure!(
                    sub_ids.insert(sub["id"].to_string()),
                    "duplicate subcategory {}",
                    sub["id"]
                );
            }
        }
    }
    let typed = builtin_v1();
    ensure!(
        typed.usage_subcategories().count() == 26,
        "typed model disagrees"
    );
    ensure!(
        aiusage_core::load_taxonomy(&doc.to_string()).map_err(|e| e.to_string())? == typed,
        "data file and builtin differ"
    );
    Ok(())
}

fn codec_round_trip() -> Result<(), String> {
    const SPECIALS: [char; 7] = ['"', ',', '<', '&', '%', '{', '\n'];
    let started = Instant::now();
    let tax = builtin_v1();
    let registry = Registry::builtin();
    let strategy = arb_card(builtin_v1());
    let mut runner = runner(1);
    let mut seen: BTreeSet<char> = BTreeSet::new();
    let mut cards: Vec<Card> = (0..1000).map(|_| draw(&strategy, &mut runner)).collect();

    // Plus one card carrying every special character in several fields.
    let nasty = "a\"b,c<d&e%f{g\nh";
    let mut card = golden_card();
    card.project.project_name = nasty.into();
    card.project.key_applications = vec![nasty.into(), nasty.into()];
    card.project.correspondences[0].affiliation = nasty.into();
    card.models[0].version = Some(nasty.into());
    card.ethics.implications = nasty.into();
    card.entries.get_mut("ideation.improving").unwrap().detail = nasty.into();
    cards.push(card);

    for card in &cards {
        let text = user_text(card);
        seen.extend(SPECIALS.iter().filter(|c| text.contains(**c)));
        let expected = canonicalize(card);
        for format in Format::LOSSLESS {
            let text = encode(&tax, card, format).map_err(|e| e.to_string())?;
            let back = decode(&registry, format, &text).map_err(|e| format!("{format}: {e}"))?;
            ensure!(back == expected, "{format} round trip differs");
        }
    }
    ensure!(seen.len() == SPECIALS.len(), "specials covered: {seen:?}");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(())
}

/// Every free-text field of a card, concatenated.
fn user_text(card: &Card) -> String {
    let mut parts = vec![
        card.project.project_name.clone(),
        card.ethics.implications.clone(),
        card.ethics.error_mitigation.clone(),
        card.ethics.harm_mitigation.clone(),
    ];
    parts.extend(card.project.key_applications.iter().cloned());
    for c in &card.project.correspondences {
        parts.extend([c.name.clone(), c.contact.clone(), c.affiliation.clone()]);
    }
    for m in &card.models {
        parts.push(m.name.clone());
        parts.extend(m.version.clone());
    }
    parts.extend(card.entries.values().map(|e| e.detail.clone()));
    parts.concat()
}

fn dimension_independence() -> Result<(), String> {
    type Mutation = (&'static str, Dimension, fn(&mut Card), fn(&mut Card, &Card));
    let mutations: [Mutation; 3] = [
        (
            "remove approval",
            Dimension::Integrity,
            |c| c.approval = false,
            |c, g| c.approval = g.approval,
        ),
        (
            "remove correspondences",
            Dimension::Accountability,
            |c| c.project.correspondences.clear(),
            |c, g| c.project.correspondences = g.project.correspondences.clone(),
        ),
        (
            "strip model dates",
            Dimension::Transparency,
            |c| c.models.iter_mut().for_each(|m| m.dates_used.clear()),
            |c, g| c.models = g.models.clone(),
        ),
    ];
    let golden = golden_card();
    ensure!(
        assess(&golden).responsible,
        "golden card is not responsible"
    );
    for (name, dimension, mutate, restore) in mutations {
        let mut card = golden.clone();
        mutate(&mut card);
        let report = assess(&card);
        ensure!(!report.responsible, "{name}: verdict did not flip");
        ensure!(
            report.unsatisfied() == vec![dimension],
            "{name}: unsatisfied {:?}",
            report.unsatisfied()
        );
        restore(&mut card, &golden);
        ensure!(
            assess(&card).responsible,
            "{name}: restoring did not restore"
        );
    }
    Ok(())
}

const ORDER: [&str; 8] = [
    "ideation",
    "literature-review",
    "methodology",
    "experiments",
    "writing",
    "presentation",
    "coding",
    "data",
];

fn wizard_soundness() -> Result<(), String> {
    let tax = builtin_v1();
    let registry = Registry::builtin();
    let doc = raw_taxonomy();
    let usage = usage_titles(&doc);
    let mut longest = 0;
    for mask in 0u32..256 {
        let chosen: Vec<&str> = ORDER
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, c)| *c)
            .collect();
        let mut session = Session::start(&registry, "1.0").unwrap();
        let mut visited = Vec::new();
        loop {
            let kind = session.current_kind(&tax);
            visited.push(kind.clone());
            if kind == StepKind::Review {
                break;
            }
            let answer = blanket_answer(&tax, &session, &kind, &chosen);
            session = session
                .submit(&tax, answer)
                .map_err(|e| format!("mask {mask}: {e}"))?;
            ensure!(visited.len() <= 100, "mask {mask}: no end");
        }
        let details: Vec<String> = visited
            .iter()
            .filter_map(|k| match k {
                StepKind::SubcategoryDetail { subcategory } => Some(subcategory.clone()),
                _ => None,
            })
            .collect();
        let expected: Vec<String> = usage
            .iter()
            .map(|(id, _)| id.clone())
            .filter(|id| chosen.iter().any(|c| id.starts_with(&format!("{c}."))))
            .collect();
        ensure!(
            details == expected,
            "mask {mask:08b}: detail steps {details:?}"
        );
        longest = longest.max(visited.len() - 1);
    }
    ensure!(longest <= 40, "maximal path has {longest} steps");

    let strategy = arb_script_and_card();
    let mut runner = runner(2);
    for case in 0..200 {
        let (script, card) = draw(&strategy, &mut runner);
        let reparsed = AnswerScript::parse(&script.to_json()).map_err(|e| e.to_string())?;
        let session = reparsed
            .apply(&tax, &Session::start(&registry, "1.0").unwrap())
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            session.card(&tax) == canonicalize(&card),
            "case {case}: cards differ"
        );
        let first = script.replay(&registry).map(|(_, c)| c);
        let second = reparsed.replay(&registry).map(|(_, c)| c);
        ensure!(first == second, "case {case}: replay not deterministic");
    }
    Ok(())
}

async fn call(
    app: &axum::Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(
            body.map(|b| Body::from(b.to_string()))
                .unwrap_or_else(Body::empty),
        )
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (
        status,
        response
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec(),
    )
}

fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

async fn service_flow(dir: &Path) -> Result<(), String> {
    let store = FileStore::open(dir.join("data")).map_err(|e| e.to_string())?;
    let outbox = OutboxDispatcher::new(dir.join("outbox")).map_err(|e| e.to_string())?;
    let public = "http://acceptance.test";
    let app = router(AppState::new(
        Registry::builtin(),
        store,
        Box::new(outbox),
        public,
    ));

    let (status, body) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({"taxonomyVersion": "1.0"})),
    )
    .await;
    ensure!(status == StatusCode::CREATED, "create: {status}");
    let id = json_of(&body)["id"].as_str().unwrap().to_string();
    for (revision, answer) in golden_answers().iter().enumerate() {
        let (status, body) = call(
            &app,
            Method::POST,
            &format!("/v1/sessions/{id}/answers"),
            Some(json!({"revision": revision, "answer": answer})),
        )
        .await;
        ensure!(
            status == StatusCode::OK,
            "answer {revision}: {status} {}",
            String::from_utf8_lossy(&body)
        );
    }
    let (status, body) = call(
        &app,
        Method::POST,
        &format!("/v1/sessions/{id}/finalize"),
        None,
    )
    .await;
    ensure!(status == StatusCode::CREATED, "finalize: {status}");
    let body = json_of(&body);
    ensure!(body["report"]["responsible"] == true, "not responsible");
    let links = body["links"].as_object().unwrap();
    ensure!(links.len() == 5, "{} links", links.len());

    let cli_out = dir.join("cli");
    let code = aiusage_cli::run(
        [
            "aiusage",
            "build",
            fixture("answers.json").to_str().unwrap(),
            "--out",
            cli_out.to_str().unwrap(),
        ],
        &mut Cursor::new(Vec::new()),
        &mut Vec::new(),
        &mut Vec::new(),
    );
    ensure!(code == 0, "cli build exited {code}");
    for (ext, url) in links {
        let path = url.as_str().unwrap().strip_prefix(public).unwrap();
        let (status, served) = call(&app, Method::GET, path, None).await;
        ensure!(status == StatusCode::OK, "{path}: {status}");
        let built = std::fs::read(cli_out.join(format!("card.{ext}"))).unwrap();
        ensure!(
            served == built,
            "card.{ext} differs between service and cli"
        );
    }

    let (_, body) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({"taxonomyVersion": "1.0"})),
    )
    .await;
    let id = json_of(&body)["id"].as_str().unwrap().to_string();
    let uri = format!("/v1/sessions/{id}/answers");
    let answer = json!({"revision": 0, "answer": golden_answers()[0]});
    let (a, b) = tokio::join!(
        call(&app, Method::POST, &uri, Some(answer.clone())),
        call(&app, Method::POST, &uri, Some(answer)),
    );
    let mut statuses = [a.0, b.0];
    statuses.sort();
    ensure!(
        statuses == [StatusCode::OK, StatusCode::CONFLICT],
        "double submit gave {statuses:?}"
    );
    let (_, view) = call(&app, Method::GET, &format!("/v1/sessions/{id}"), None).await;
    ensure!(json_of(&view)["revision"] == 1, "stored revision is not 1");
    Ok(())
}

fn service_end_to_end() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap()
        .block_on(service_flow(dir.path()))
}

fn main() {
    let criteria: [(&str, Check); 6] = [
        ("golden card reproduction", golden_reproduction),
        ("taxonomy conformance", taxonomy_conformance),
        ("codec round-trip (1000 cards)", codec_round_trip),
        ("validator dimension independence", dimension_independence),
        ("wizard soundness", wizard_soundness),
        ("service end-to-end", service_end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  {name} ({secs:.3} s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.3} s): {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
