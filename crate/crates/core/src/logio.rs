//! On-disk formats: JSON Lines run logs and the JSON workflow spec.
//!
//! Run log: one [`RunRecord`] object per line, UTF-8, LF. An optional first
//! line `{"format_version":"1"}` is accepted and checked. Records are written
//! with keys in the fixed order `run_id, model, scenario, repeat, trajectory,
//! success, meta`, and `meta` is omitted when absent.
//!
//! Workflow spec: a single JSON document with `agents`, `scenarios`, and an
//! optional `sim` block and `format_version`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentId, Trajectory};
use crate::sim::SimSettings;

pub const FORMAT_VERSION: &str = "1";

/// One execution instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub run_id: String,
    pub model: String,
    pub scenario: String,
    pub repeat: u32,
    pub trajectory: Trajectory,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

/// A parsed record with its 1-based line number in the source log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub line: usize,
    pub record: RunRecord,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Strictness {
    /// Stop at the first malformed line.
    #[default]
    FailFast,
    /// Skip malformed lines and report them alongside the parsed records.
    SkipWithReport,
}

#[derive(Debug, Default)]
pub struct ParsedLog {
    pub entries: Vec<LogEntry>,
    /// Line errors for skipped lines; always empty under [`Strictness::FailFast`].
    pub skipped: Vec<Error>,
}

impl ParsedLog {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.entries.iter().map(|e| &e.record)
    }

    pub fn into_records(self) -> Vec<RunRecord> {
        self.entries.into_iter().map(|e| e.record).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionHeader {
    format_version: String,
}

/// Streaming run-log reader. Holds one line in memory at a time (plus the set
/// of run ids seen so far, for the uniqueness check).
pub struct RunLogReader<R> {
    input: R,
    buf: String,
    line: usize,
    seen_content: bool,
    run_ids: HashSet<String>,
    done: bool,
}

impl<R: BufRead> RunLogReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            buf: String::new(),
            line: 0,
            seen_content: false,
            run_ids: HashSet::new(),
            done: false,
        }
    }

    fn parse_line(&mut self) -> Result<Option<RunRecord>> {
        let text = self.buf.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            return Ok(None);
        }
        let first = !self.seen_content;
        self.seen_content = true;
        if first {
            if let Ok(header) = serde_json::from_str::<VersionHeader>(text) {
                if header.format_version != FORMAT_VERSION {
                    return Err(Error::UnsupportedFormatVersion(header.format_version));
                }
                return Ok(None);
            }
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let record: RunRecord = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::from_json(e.into_inner(), path)
        })?;
        if !self.run_ids.insert(record.run_id.clone()) {
            return Err(Error::DuplicateRunId(record.run_id));
        }
        Ok(Some(record))
    }
}

impl<R: BufRead> Iterator for RunLogReader<R> {
    type Item = Result<LogEntry>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line += 1;
                    match self.parse_line() {
                        Ok(Some(record)) => {
                            return Some(Ok(LogEntry {
                                line: self.line,
                                record,
                            }))
                        }
                        Ok(None) => {}
                        Err(e) => return Some(Err(e.at_line(self.line))),
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::Io(e).at_line(self.line + 1)));
                }
            }
        }
        None
    }
}

/// Reads a whole run log. I/O errors are fatal regardless of `strictness`.
pub fn parse_run_log<R: BufRead>(input: R, strictness: Strictness) -> Result<ParsedLog> {
    let mut parsed = ParsedLog::default();
    for item in RunLogReader::new(input) {
        match item {
            Ok(entry) => parsed.entries.push(entry),
            Err(e) if strictness == Strictness::SkipWithReport && !is_io(&e) => {
                parsed.skipped.push(e)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(parsed)
}

fn is_io(e: &Error) -> bool {
    match e {
        Error::Io(_) => true,
        Error::Line { source, .. } => is_io(source),
        _ => false,
    }
}

pub fn write_run_log<'a, W, I>(records: I, mut sink: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RunRecord>,
{
    for record in records {
        serde_json::to_writer(&mut sink, record).map_err(|e| Error::from_json(e, "record"))?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub expected: Trajectory,
    #[serde(default)]
    pub description: String,
}

/// Expected workflows per scenario, the agent roster, and optional
/// simulator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowSpec {
    agents: Vec<AgentId>,
    scenarios: IndexMap<String, Scenario>,
    sim: Option<SimSettings>,
}

impl WorkflowSpec {
    /// Validates roster cross-references and the simulator block.
    pub fn new(
        agents: Vec<AgentId>,
        scenarios: IndexMap<String, Scenario>,
        sim: Option<SimSettings>,
    ) -> Result<Self> {
        let mut roster = HashSet::new();
        for agent in &agents {
            if !roster.insert(agent) {
                return Err(Error::Schema {
                    path: "agents".into(),
                    message: format!("duplicate agent {agent}"),
                });
            }
        }
        for (id, scenario) in &scenarios {
            if let Some(agent) = scenario
                .expected
                .steps()
                .iter()
                .find(|a| !roster.contains(a))
            {
                return Err(Error::UnknownAgent {
                    scenario: id.clone(),
                    agent: agent.to_string(),
                });
            }
        }
        let spec = Self {
            agents,
            scenarios,
            sim,
        };
        if let Some(sim) = &spec.sim {
            sim.validate(&spec)?;
        }
        Ok(spec)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn contains_agent(&self, agent: &AgentId) -> bool {
        self.agents.contains(agent)
    }

    pub fn scenario(&self, id: &str) -> Option<&Scenario> {
        self.scenarios.get(id)
    }

    pub fn expected(&self, id: &str) -> Option<&Trajectory> {
        self.scenarios.get(id).map(|s| &s.expected)
    }

    /// Scenario ids in document order.
    pub fn scenario_ids(&self) -> impl Iterator<Item = &str> {
        self.scenarios.keys().map(String::as_str)
    }

    pub fn scenarios(&self) -> impl Iterator<Item = (&str, &Scenario)> {
        self.scenarios.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn sim(&self) -> Option<&SimSettings> {
        self.sim.as_ref()
    }

    /// The bundled default: four card/payment scenarios and simulator settings.
    pub fn default_spec() -> Self {
        parse_workflow_spec(DEFAULT_SPEC_JSON).expect("bundled default spec is valid")
    }
}

/// Source text of the bundled default workflow spec.
pub const DEFAULT_SPEC_JSON: &str = include_str!("../data/default_spec.json");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    format_version: Option<String>,
    agents: Vec<AgentId>,
    scenarios: UniqueMap<Scenario>,
    #[serde(default)]
    sim: Option<SimSettings>,
}

/// A JSON object that rejects repeated keys and keeps document order.
pub(crate) struct UniqueMap<V>(pub(crate) IndexMap<String, V>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for UniqueMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct UniqueVisitor<V>(std::marker::PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for UniqueVisitor<V> {
            type Value = UniqueMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with unique keys")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut map = IndexMap::new();
                while let Some(key) = access.next_key::<String>()? {
                    if map.contains_key(&key) {
                        return Err(de::Error::custom(format!("duplicate key {key:?}")));
                    }
                    let value = access.next_value()?;
                    map.insert(key, value);
                }
                Ok(UniqueMap(map))
            }
        }

        deserializer.deserialize_map(UniqueVisitor(std::marker::PhantomData))
    }
}

pub fn parse_workflow_spec(text: &str) -> Result<WorkflowSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::from_json(e.into_inner(), path)
    })?;
    if let Some(v) = raw.format_version {
        if v != FORMAT_VERSION {
            return Err(Error::UnsupportedFormatVersion(v));
        }
    }
    WorkflowSpec::new(raw.agents, raw.scenarios.0, raw.sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_util::traj;
    use proptest::prelude::*;

    fn record(id: &str, steps: &[&str]) -> RunRecord {
        RunRecord {
            run_id: id.into(),
            model: "m".into(),
            scenario: "T3".into(),
            repeat: 0,
            trajectory: traj(steps),
            success: true,
            meta: None,
        }
    }

    #[test]
    fn parses_single_line() {
        let line = r#"{"run_id":"r1","model":"m","scenario":"T3","repeat":0,"trajectory":["CPA","PaySup"],"success":true}"#;
        let log = parse_run_log(line.as_bytes(), Strictness::FailFast).unwrap();
        assert_eq!(log.entries.len(), 1);
        assert_eq!(log.entries[0].line, 1);
        assert_eq!(log.entries[0].record, record("r1", &["CPA", "PaySup"]));
    }

    #[test]
    fn empty_input_is_empty_log() {
        let log = parse_run_log(&b""[..], Strictness::FailFast).unwrap();
        assert!(log.entries.is_empty());
        let log = parse_run_log(&b"\n\n"[..], Strictness::FailFast).unwrap();
        assert!(log.entries.is_empty());
    }

    #[test]
    fn empty_trajectory_names_line() {
        let text = concat!(
            r#"{"run_id":"r1","model":"m","scenario":"T3","repeat":0,"trajectory":["CPA"],"success":true}"#,
            "\n",
            r#"{"run_id":"r2","model":"m","scenario":"T3","repeat":0,"trajectory":[],"success":true}"#,
            "\n"
        );
        let err = parse_run_log(text.as_bytes(), Strictness::FailFast).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains("at least one agent"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        let err = parse_run_log(&b"{not json\n"[..], Strictness::FailFast).unwrap_err();
        assert!(matches!(&err, Error::Line { line: 1, .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_field_and_bad_agent_are_schema_errors() {
        let missing = r#"{"run_id":"r1","model":"m","repeat":0,"trajectory":["A"],"success":true}"#;
        let err = parse_run_log(missing.as_bytes(), Strictness::FailFast).unwrap_err();
        assert!(err.to_string().contains("scenario"), "{err}");
        assert_eq!(err.exit_code(), 1);

        let bad = r#"{"run_id":"r1","model":"m","scenario":"T1","repeat":0,"trajectory":["A B"],"success":true}"#;
        let err = parse_run_log(bad.as_bytes(), Strictness::FailFast).unwrap_err();
        assert!(err.to_string().contains("trajectory"), "{err}");
    }

    #[test]
    fn skip_mode_reports_and_continues() {
        let good = r#"{"run_id":"r1","model":"m","scenario":"T3","repeat":0,"trajectory":["CPA"],"success":true}"#;
        let text = format!("{good}\nnope\n{}\n", good.replace("r1", "r2"));
        let log = parse_run_log(text.as_bytes(), Strictness::SkipWithReport).unwrap();
        assert_eq!(log.entries.len(), 2);
        assert_eq!(log.entries[1].line, 3);
        assert_eq!(log.skipped.len(), 1);
        assert!(matches!(log.skipped[0], Error::Line { line: 2, .. }));
    }

    #[test]
    fn duplicate_run_id_rejected() {
        let good = r#"{"run_id":"r1","model":"m","scenario":"T3","repeat":0,"trajectory":["CPA"],"success":true}"#;
        let text = format!("{good}\n{good}\n");
        let err = parse_run_log(text.as_bytes(), Strictness::FailFast).unwrap_err();
        assert!(err.to_string().contains("duplicate run id"), "{err}");
    }

    #[test]
    fn version_header_is_checked() {
        let good = r#"{"run_id":"r1","model":"m","scenario":"T3","repeat":0,"trajectory":["CPA"],"success":true}"#;
        let ok = format!("{{\"format_version\":\"1\"}}\n{good}\n");
        assert_eq!(
            parse_run_log(ok.as_bytes(), Strictness::FailFast)
                .unwrap()
                .entries
                .len(),
            1
        );
        let bad = format!("{{\"format_version\":\"2\"}}\n{good}\n");
        assert!(parse_run_log(bad.as_bytes(), Strictness::FailFast).is_err());
    }

    #[test]
    fn writer_uses_fixed_key_order_and_omits_absent_meta() {
        let mut r = record("r1", &["CPA", "PaySup"]);
        let mut out = Vec::new();
        write_run_log([&r], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"run_id\":\"r1\",\"model\":\"m\",\"scenario\":\"T3\",\"repeat\":0,\"trajectory\":[\"CPA\",\"PaySup\"],\"success\":true}\n"
        );
        r.meta = Some(BTreeMap::from([("k".to_string(), "v".to_string())]));
        let mut out = Vec::new();
        write_run_log([&r], &mut out).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .ends_with(",\"success\":true,\"meta\":{\"k\":\"v\"}}\n"));
    }

    #[test]
    fn default_spec_shape() {
        let spec = WorkflowSpec::default_spec();
        assert_eq!(
            spec.scenario_ids().collect::<Vec<_>>(),
            ["T1", "T2", "T3", "T4"]
        );
        assert_eq!(spec.expected("T3").unwrap().len(), 11);
        assert_eq!(spec.expected("T3").unwrap().transitions().total_size(), 10);
        assert_eq!(spec.expected("T4").unwrap().len(), 1);
        assert_eq!(spec.agents().len(), 8);
        assert!(spec.sim().is_some());
    }

    #[test]
    fn unknown_agent_in_expected_is_rejected() {
        let text = r#"{"agents":["A"],"scenarios":{"S":{"expected":["A","B"]}}}"#;
        let err = parse_workflow_spec(text).unwrap_err();
        assert!(
            matches!(err, Error::UnknownAgent { ref agent, .. } if agent == "B"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_scenario_is_a_schema_error() {
        let text =
            r#"{"agents":["A"],"scenarios":{"S":{"expected":["A"]},"S":{"expected":["A"]}}}"#;
        let err = parse_workflow_spec(text).unwrap_err();
        match err {
            Error::Schema { path, message } => {
                assert!(path.starts_with("scenarios"), "{path}");
                assert!(message.contains("duplicate key"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let text = r#"{"agents":["A"],"scenarios":{"S":{"expected":"A"}}}"#;
        match parse_workflow_spec(text).unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "scenarios.S.expected"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_record() -> impl Strategy<Value = RunRecord> {
        let agent = prop::sample::select(vec!["CPA", "PaySup", "Cart_Ag", "x-1"]);
        (
            "[a-z0-9]{1,8}",
            "[ -~]{0,12}",
            prop::collection::vec(agent, 1..8),
            any::<u32>(),
            any::<bool>(),
            prop::option::of(prop::collection::btree_map("[a-z]{1,4}", "\\PC{0,6}", 0..3)),
        )
            .prop_map(|(run_id, model, steps, repeat, success, meta)| RunRecord {
                run_id,
                model,
                scenario: "T1".into(),
                repeat,
                trajectory: traj(&steps),
                success,
                meta,
            })
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(records in prop::collection::vec(arb_record(), 0..6)) {
            let mut unique = Vec::new();
            let mut ids = HashSet::new();
            for r in records {
                if ids.insert(r.run_id.clone()) {
                    unique.push(r);
                }
            }
            let mut first = Vec::new();
            write_run_log(&unique, &mut first).unwrap();
            let mut second = Vec::new();
            write_run_log(&unique, &mut second).unwrap();
            prop_assert_eq!(&first, &second);
            let parsed = parse_run_log(&first[..], Strictness::FailFast).unwrap().into_records();
            prop_assert_eq!(parsed, unique);
        }
    }
}
