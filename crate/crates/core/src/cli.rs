//! `asr` command line: simulate, score, diagnose, report-delta.
//!
//! Exit codes: 0 success, 1 validation or schema error (including usage
//! errors), 2 I/O or parse error. Diagnostics go to stderr; data only to the
//! `--out` file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{checkpoint_coverage, cluster_patterns};
use crate::error::{Error, Result};
use crate::logio::{
    parse_run_log, parse_workflow_spec, write_run_log, LogEntry, Strictness, WorkflowSpec,
};
use crate::report::{
    aggregate, compare_delta, read_value_table, render, render_delta, Format, Highlight, Metric,
    ScoredRun, SortKey,
};
use crate::sim::{parse_profiles, SimConfig, Simulator};

#[derive(Debug, Parser)]
#[command(
    name = "asr",
    version,
    about = "Transition-level conformance scoring for multi-agent traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic run log from fault profiles.
    Simulate(SimulateArgs),
    /// Score run logs and write the aggregate table.
    Score(ScoreArgs),
    /// Cluster deviant trajectories and report checkpoint coverage.
    Diagnose(DiagnoseArgs),
    /// Compare a baseline table against ours.
    ReportDelta(DeltaArgs),
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Workflow spec JSON; the bundled default when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    /// JSON list of model profiles; defaults to the spec's sim.profiles.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Runs per (model, scenario, repeat).
    #[arg(long, default_value_t = 250)]
    pub runs: usize,
    /// Independent repeats per (model, scenario).
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Base seed; each run derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict to these scenarios (repeatable).
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
    /// Output JSON Lines file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    /// Run log(s) in JSON Lines (repeatable).
    #[arg(long, required = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    /// Skip malformed lines and unknown scenarios instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: LogArgs,
    /// Output table (.csv or .md).
    #[arg(long)]
    pub out: PathBuf,
    /// csv or md; inferred from the --out extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Only score these scenarios (repeatable).
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: LogArgs,
    /// Scenario to analyse; every scenario when omitted.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Output markdown report.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// Baseline table (CSV with model, scenario and a value column).
    #[arg(long)]
    pub baseline: PathBuf,
    /// Our table, typically the CSV written by `score`.
    #[arg(long)]
    pub ours: PathBuf,
    /// Output table (.csv or .md).
    #[arg(long)]
    pub out: PathBuf,
    /// csv or md; inferred from the --out extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Metric to compare: tsr, hf1 or asr.
    #[arg(long, default_value = "tsr")]
    pub metric: String,
    /// Decimal places for baseline, ours and the delta.
    #[arg(long, default_value_t = 1)]
    pub decimals: usize,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    1
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Score(args) => score(args),
        Command::Diagnose(args) => diagnose(args),
        Command::ReportDelta(args) => report_delta(args),
    }
}

fn in_file(err: Error, path: &Path) -> Error {
    match err {
        Error::Io(e) => Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )),
        other => other,
    }
}

fn load_spec(arg: &SpecArg) -> Result<WorkflowSpec> {
    match &arg.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| in_file(e.into(), path))?;
            parse_workflow_spec(&text)
        }
        None => Ok(WorkflowSpec::default_spec()),
    }
}

fn output_format(explicit: Option<&str>, out: &Path) -> Result<Format> {
    match explicit {
        Some(f) => f.parse(),
        None => match out.extension().and_then(|e| e.to_str()) {
            Some("md") | Some("markdown") => Ok(Format::Markdown),
            _ => Ok(Format::Csv),
        },
    }
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| in_file(e.into(), path))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let profiles = match &args.profiles {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| in_file(e.into(), path))?;
            parse_profiles(&text)?
        }
        None => spec.sim().map(|s| s.profiles.clone()).unwrap_or_default(),
    };
    if profiles.is_empty() {
        return Err(Error::Config(
            "no profiles: pass --profiles or add sim.profiles to the spec".into(),
        ));
    }
    let config = SimConfig {
        seed: args.seed,
        runs_per_scenario: args.runs,
        repeats: args.repeats,
        scenarios: args.scenarios,
    };
    let records = Simulator::new(&spec)?.corpus_par(&profiles, &config)?;
    let file = File::create(&args.out).map_err(|e| in_file(e.into(), &args.out))?;
    write_run_log(&records, std::io::BufWriter::new(file)).map_err(|e| in_file(e, &args.out))?;
    eprintln!("wrote {} runs to {}", records.len(), args.out.display());
    Ok(())
}

/// Reads every log, attaching the file name to line errors.
fn load_logs(args: &LogArgs) -> Result<Vec<(PathBuf, LogEntry)>> {
    let strictness = if args.skip_invalid {
        Strictness::SkipWithReport
    } else {
        Strictness::FailFast
    };
    let mut out = Vec::new();
    for path in &args.logs {
        let file = File::open(path).map_err(|e| in_file(e.into(), path))?;
        let parsed = parse_run_log(BufReader::new(file), strictness).map_err(|e| {
            eprintln!("{}: {e}", path.display());
            e
        })?;
        for skipped in &parsed.skipped {
            eprintln!("warning: {}: skipped {skipped}", path.display());
        }
        out.extend(parsed.entries.into_iter().map(|e| (path.clone(), e)));
    }
    Ok(out)
}

fn score(args: ScoreArgs) -> Result<()> {
    let spec = load_spec(&args.input.spec)?;
    let format = output_format(args.format.as_deref(), &args.out)?;
    let entries = load_logs(&args.input)?;
    let mut scores = Vec::with_capacity(entries.len());
    for (path, entry) in &entries {
        if !args.scenarios.is_empty() && !args.scenarios.contains(&entry.record.scenario) {
            continue;
        }
        match ScoredRun::from_record(&entry.record, &spec) {
            Ok(s) => scores.push(s),
            Err(e) if args.input.skip_invalid => {
                eprintln!(
                    "warning: {}: skipped line {}: {e}",
                    path.display(),
                    entry.line
                );
            }
            Err(e) => {
                eprintln!("{}: line {}: {e}", path.display(), entry.line);
                return Err(e.at_line(entry.line));
            }
        }
    }
    let rows = aggregate(&scores)?;
    let text = render(
        &rows,
        format,
        &SortKey::default(),
        Highlight::HiddenDeviation,
    )?;
    write_out(&args.out, &text)?;
    eprintln!("scored {} runs into {} rows", scores.len(), rows.len());
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let spec = load_spec(&args.input.spec)?;
    let entries = load_logs(&args.input)?;
    let mut records = Vec::with_capacity(entries.len());
    for (path, entry) in &entries {
        if args
            .scenario
            .as_ref()
            .is_some_and(|s| s != &entry.record.scenario)
        {
            continue;
        }
        if spec.scenario(&entry.record.scenario).is_none() {
            let err = Error::UnknownScenario {
                scenario: entry.record.scenario.clone(),
                run_id: entry.record.run_id.clone(),
            };
            if args.input.skip_invalid {
                eprintln!(
                    "warning: {}: skipped line {}: {err}",
                    path.display(),
                    entry.line
                );
                continue;
            }
            eprintln!("{}: line {}: {err}", path.display(), entry.line);
            return Err(err.at_line(entry.line));
        }
        records.push(&entry.record);
    }
    let scenarios: Vec<String> = match &args.scenario {
        Some(s) => {
            if spec.scenario(s).is_none() {
                return Err(Error::Config(format!(
                    "scenario {s:?} is not in the workflow spec"
                )));
            }
            vec![s.clone()]
        }
        None => spec.scenario_ids().map(String::from).collect(),
    };

    let clusters = cluster_patterns(records.iter().copied(), &spec)?;
    let deviant: usize = clusters.iter().map(|c| c.count).sum();
    let mut md = String::from("# Deviation diagnostics\n\n");
    let _ = writeln!(
        md,
        "Runs: {}. Non-conforming sequences: {deviant}. Patterns: {}.\n",
        records.len(),
        clusters.len()
    );
    md.push_str("## Deviant trajectory patterns\n\n");
    if clusters.is_empty() {
        md.push_str("No deviant trajectories.\n");
    } else {
        md.push_str(
            "| # | Count | Scenarios | Models | Missing | Surplus | Order-only | Trajectory |\n",
        );
        md.push_str("|---:|---:|---|---|---|---|---|---|\n");
        for (i, c) in clusters.iter().enumerate() {
            let join = |s: &std::collections::BTreeSet<String>| {
                s.iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
                    .replace('|', "\\|")
            };
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                i + 1,
                c.count,
                join(&c.scenarios),
                join(&c.models),
                c.deviation.missing,
                c.deviation.surplus,
                if c.order_only { "yes" } else { "no" },
                c.trajectory
            );
        }
    }
    for scenario in &scenarios {
        let table = checkpoint_coverage(records.iter().copied(), &spec, scenario)?;
        let _ = writeln!(
            md,
            "\n## Checkpoint coverage: {scenario} (n = {})\n",
            table.n_runs
        );
        if table.n_runs == 0 {
            md.push_str("No runs.\n");
            continue;
        }
        md.push_str("| Transition | Occurrence | Covered | Coverage |\n|---|---:|---:|---:|\n");
        for row in &table.rows {
            let frac = row
                .fraction
                .map(|f| crate::report::pct(100.0 * f))
                .unwrap_or_default();
            let _ = writeln!(
                md,
                "| {} | {} | {} | {frac}% |",
                row.transition, row.occurrence, row.covered
            );
        }
        let low = table.least_covered();
        if !low.is_empty() {
            let names: Vec<String> = low
                .iter()
                .map(|r| format!("{} #{}", r.transition, r.occurrence))
                .collect();
            let _ = writeln!(md, "\nLeast covered: {}", names.join("; "));
        }
    }
    write_out(&args.out, &md)?;
    eprintln!(
        "{} deviant pattern(s) across {} runs",
        clusters.len(),
        records.len()
    );
    Ok(())
}

fn report_delta(args: DeltaArgs) -> Result<()> {
    let metric: Metric = args.metric.parse()?;
    let format = output_format(args.format.as_deref(), &args.out)?;
    let read = |path: &Path| -> Result<_> {
        let file = File::open(path).map_err(|e| in_file(e.into(), path))?;
        read_value_table(BufReader::new(file), metric)
    };
    let baseline = read(&args.baseline)?;
    let ours = read(&args.ours)?;
    let report = compare_delta(&baseline, &ours)?;
    for (model, scenario, side) in &report.unmatched {
        eprintln!("warning: {model} / {scenario} only present in {side:?} table");
    }
    let text = render_delta(&report, format, args.decimals)?;
    write_out(&args.out, &text)
}
