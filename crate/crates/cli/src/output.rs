//! Rendering of CSV and JSON artifacts.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}` for CSV,
//! ryu for JSON): parsing the text back yields the identical `f64`, so no
//! digits are lost at any magnitude. Every artifact starts with the
//! resolved scenario, the seed and the generator name; in CSV these are
//! `# `-prefixed comment lines ahead of the header row.

use aoi_mpr::sim::RNG_ALGORITHM;
use serde::Serialize;

use crate::scenario::Scenario;

pub const TOOL: &str = "aoi-mpr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn float(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// `# `-prefixed provenance lines.
pub fn csv_preamble(command: &str, scenario: &Scenario) -> String {
    format!(
        "# {TOOL} {VERSION} {command}\n# seed: {}\n# rng: {RNG_ALGORITHM}\n# scenario: {scenario}\n",
        scenario.sim.seed
    )
}

/// A CSV table with LF line endings, preceded by the provenance preamble.
pub fn csv_document(command: &str, scenario: &Scenario, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    let body = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    csv_preamble(command, scenario) + &body
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    rng: &'static str,
    scenario: &'a Scenario,
    result: T,
}

pub fn json_document<T: Serialize>(command: &str, scenario: &Scenario, result: T) -> String {
    let envelope = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        seed: scenario.sim.seed,
        rng: RNG_ALGORITHM,
        scenario,
        result,
    };
    let mut text = serde_json::to_string_pretty(&envelope).expect("serializable output");
    text.push('\n');
    text
}

/// Pulls the resolved scenario back out of a JSON artifact.
pub fn embedded_scenario(json: &str) -> Option<Scenario> {
    let value: serde_json::Value = serde_json::from_str(json).ok()?;
    serde_json::from_value(value.get("scenario")?.clone()).ok()
}
