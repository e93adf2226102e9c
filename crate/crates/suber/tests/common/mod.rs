#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde::Deserialize;
use suber_core::prompting::{PromptConfig, ScaleEncoding, SystemPromptKind};
use suber_core::{Domain, ItemRecord, RetrievedItem, UserRecord};

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn data_dir(domain: &str) -> PathBuf {
    crate_dir().join("data").join(domain)
}

pub fn config_path(domain: &str) -> PathBuf {
    data_dir(domain).join("config.json")
}

pub fn suber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suber"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) {
    let out = suber(args);
    assert!(
        out.status.success(),
        "suber {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).expect("report exists")).expect("valid JSON")
}

#[derive(Deserialize)]
struct GoldenCase {
    user: UserRecord,
    history: Vec<(ItemRecord, u8)>,
    item: ItemRecord,
}

#[derive(Deserialize)]
struct GoldenInputs {
    movie: GoldenCase,
    book: GoldenCase,
}

fn golden_inputs() -> GoldenInputs {
    let path = crate_dir().join("tests/golden/inputs.json");
    serde_json::from_slice(&fs::read(path).expect("inputs exist")).expect("valid inputs")
}

/// The movie listing's user.
pub fn golden_user() -> UserRecord {
    golden_inputs().movie.user
}

/// The movie listing's queried item.
pub fn golden_item() -> ItemRecord {
    golden_inputs().movie.item
}

/// The listings: golden file, encoding, and the rating the
/// listing's answer starts with.
pub const LISTINGS: [(&str, ScaleEncoding, &str); 4] = [
    ("listing_digits_0_9.txt", ScaleEncoding::Digits0To9, "7"),
    ("listing_digits_1_10.txt", ScaleEncoding::Digits1To10, "8"),
    (
        "listing_words_one_ten.txt",
        ScaleEncoding::WordsOneTen,
        "eight",
    ),
    ("listing_book_1_5.txt", ScaleEncoding::Digits1To5, "5"),
];

const HEADER: &str = "[system prompt]\n[few shot prompts]\n";

/// Renders one listing's query from `golden/inputs.json` and compares the
/// question body and answer prefix byte for byte.
///
/// The listings mark turns slightly differently (the book one has no `Q:` on
/// the question and `Q:` on the answer), so markers and the blank line
/// between turns are layout, not template text.
pub fn check_listing(file: &str, encoding: ScaleEncoding, rating: &str) -> Result<(), String> {
    let dir = crate_dir().join("tests/golden");
    let inputs = golden_inputs();
    let golden = fs::read_to_string(dir.join(file)).map_err(|e| e.to_string())?;
    let body = golden
        .strip_prefix(HEADER)
        .ok_or("golden file lacks the placeholder header")?;

    let domain = encoding.domain();
    let case = match domain {
        Domain::Movie => &inputs.movie,
        Domain::Book => &inputs.book,
    };
    let retrieved: Vec<RetrievedItem<'_>> = case
        .history
        .iter()
        .enumerate()
        .map(|(step, (item, rating))| RetrievedItem {
            item,
            rating: *rating,
            step: step as u64,
        })
        .collect();
    let config = PromptConfig {
        scale_encoding: encoding,
        n_shot: 2,
        system_prompt: SystemPromptKind::Custom,
        domain,
    };
    let prompt =
        suber_core::prompting::render_query(&config, &case.user, &retrieved, &case.item, 1)
            .map_err(|e| e.to_string())?;

    let answer_at = ["\nA: ", "\nQ: "]
        .iter()
        .filter_map(|m| body.rfind(m))
        .max()
        .ok_or("no answer line")?;
    let question = body[..answer_at].trim_end_matches('\n');
    let question = question.strip_prefix("Q: ").unwrap_or(question);
    let answer = &body[answer_at + 4..];

    if question != prompt.query {
        return Err(format!(
            "query differs\n--- golden\n{question}\n--- rendered\n{}",
            prompt.query
        ));
    }
    let expected_answer = format!("{}{rating}", prompt.answer_prefix);
    if !answer.starts_with(&expected_answer) {
        return Err(format!(
            "answer {answer:?} does not start with {expected_answer:?}"
        ));
    }
    Ok(())
}
