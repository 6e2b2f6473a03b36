use std::path::{Path, PathBuf};

use aoi_mpr::markov::{self, OptimalRate};
use aoi_mpr::opt::{self, Axis, Problem, Solution, SweepSpec};
use aoi_mpr::sim::{self, PacketRecord, Replicated};
use aoi_mpr::{AnalyticReport, SimReport};
use clap::ValueEnum;
use serde::Serialize;

use crate::output::{csv_document, float, json_document, opt_float};
use crate::scenario::{parse_scenario, Scenario, ScenarioError};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AOI_MPR_OUT_DIR";

pub const SWEEP_COLUMNS: [&str; 10] = [
    "lambda", "q_pr", "q_s", "N", "mu", "mu_s", "mu_total", "delta", "feasible", "binding",
];
pub const TRACE_COLUMNS: [&str; 5] = ["slot_generated", "slot_delivered", "Y", "W", "T"];
pub const VALIDATE_COLUMNS: [&str; 6] = ["metric", "analytic", "simulated", "std_error", "z", "pass"];

/// A simulated value passes validation within this many standard errors.
pub const VALIDATE_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Analytic,
    Simulate,
    OptimizeAge,
    OptimizeThroughput,
    Sweep,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analytic => "analytic",
            Command::Simulate => "simulate",
            Command::OptimizeAge => "optimize-age",
            Command::OptimizeThroughput => "optimize-throughput",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Sweep | Command::Validate => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] aoi_mpr::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_infeasible() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The optimization has no feasible point.
    Infeasible,
    /// At least one validation row fell outside the tolerance.
    ValidationFailed,
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Infeasible => 2,
            Status::ValidationFailed => 1,
        }
    }
}

/// The rendered result of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub format: Format,
    pub body: String,
    /// Secondary files as `(suffix, contents)`, e.g. packet traces.
    pub extras: Vec<(String, String)>,
    /// One-line human summary for stderr.
    pub summary: String,
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Measured slots; the horizon becomes warmup plus this.
    pub slots: Option<u64>,
    pub reps: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, scenario: &mut Scenario) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            scenario.sim.seed = seed;
        }
        if let Some(slots) = self.slots {
            if slots == 0 {
                return Err(CliError::Usage("--slots must be positive".into()));
            }
            scenario.sim.horizon = scenario.sim.warmup + slots;
        }
        if let Some(reps) = self.reps {
            if reps == 0 {
                return Err(CliError::Usage("--reps must be positive".into()));
            }
            scenario.sim.replications = reps;
        }
        Ok(())
    }
}

/// Runs `command` on an already loaded scenario and renders the result.
pub fn execute(command: Command, scenario: &Scenario, format: Option<Format>) -> Result<Outcome, CliError> {
    let format = format.unwrap_or(command.default_format());
    match command {
        Command::Analytic => analytic(scenario, format),
        Command::Simulate => simulate(scenario, format),
        Command::OptimizeAge | Command::OptimizeThroughput => optimize(command, scenario, format),
        Command::Sweep => sweep(scenario, format),
        Command::Validate => validate(scenario, format),
    }
}

#[derive(Serialize)]
struct AnalyticOutput {
    report: AnalyticReport,
    optimal_arrival_rate: OptimalRate,
}

fn analytic(scenario: &Scenario, format: Format) -> Result<Outcome, CliError> {
    let report = markov::analyze(&scenario.topology, &scenario.access)?;
    let optimal = markov::optimal_arrival_rate(report.service_rate)?;
    let summary = format!(
        "mu = {}, delta = {}, mu_total = {}",
        float(report.service_rate),
        float(report.age.average_age),
        float(report.throughput.aggregate)
    );
    let body = match format {
        Format::Json => json_document(
            Command::Analytic.name(),
            scenario,
            AnalyticOutput {
                report,
                optimal_arrival_rate: optimal,
            },
        ),
        Format::Csv => {
            let a = &scenario.access;
            let row = vec![
                float(a.arrival_rate),
                float(a.primary_access_prob),
                float(a.secondary_access_prob),
                report.n_secondary.to_string(),
                float(report.service_rate),
                float(report.throughput.secondary_per_node),
                float(report.throughput.aggregate),
                float(report.age.average_age),
                float(report.prob_empty),
                float(report.mean_system_time),
                float(optimal.lambda),
            ];
            csv_document(
                Command::Analytic.name(),
                scenario,
                &[
                    "lambda",
                    "q_pr",
                    "q_s",
                    "N",
                    "mu",
                    "mu_s",
                    "mu_total",
                    "delta",
                    "pi_0",
                    "mean_system_time",
                    "optimal_lambda",
                ],
                &[row],
            )
        }
    };
    Ok(Outcome {
        status: Status::Success,
        format,
        body,
        extras: Vec::new(),
        summary,
    })
}

fn trace_csv(scenario: &Scenario, records: &[PacketRecord]) -> String {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.slot_generated.to_string(),
                r.slot_delivered.to_string(),
                r.interarrival.to_string(),
                r.wait.to_string(),
                r.system_time.to_string(),
            ]
        })
        .collect();
    csv_document("trace", scenario, &TRACE_COLUMNS, &rows)
}

fn simulate(scenario: &Scenario, format: Format) -> Result<Outcome, CliError> {
    let Replicated { summary, mut reports } = sim::replicate(&scenario.topology, &scenario.access, &scenario.sim)?;
    let mut extras = Vec::new();
    if scenario.sim.record_packets {
        let single = reports.len() == 1;
        for (i, r) in reports.iter_mut().enumerate() {
            let suffix = if single {
                "trace.csv".to_string()
            } else {
                format!("rep{i}.trace.csv")
            };
            extras.push((suffix, trace_csv(scenario, &r.per_packet_records)));
            r.per_packet_records = Vec::new();
        }
    }
    let text = format!(
        "age = {} over {} replication(s)",
        float(summary.age.mean),
        summary.replications
    );
    let body = match format {
        Format::Json if reports.len() == 1 => json_document(Command::Simulate.name(), scenario, &reports[0]),
        Format::Json => json_document(Command::Simulate.name(), scenario, Replicated { summary, reports }),
        Format::Csv => {
            let rows: Vec<Vec<String>> = if reports.len() == 1 {
                let r: &SimReport = &reports[0];
                let se = r.std_errors;
                vec![
                    ("service_rate", r.empirical_service_rate, Some(se.service_rate)),
                    ("secondary_throughput", r.empirical_secondary_throughput, Some(se.secondary_throughput)),
                    ("delivered_rate", r.delivered_rate, None),
                    ("prob_empty", r.prob_empty, Some(se.prob_empty)),
                    ("mean_system_time", r.mean_system_time, Some(se.mean_system_time)),
                    ("average_age", r.empirical_age, Some(se.age)),
                    ("reassembled_age", r.reassembled_age.unwrap_or(f64::NAN), None),
                ]
                .into_iter()
                .map(|(m, v, se)| vec![m.to_string(), float(v), opt_float(se)])
                .collect()
            } else {
                let s = &summary;
                [
                    ("service_rate", &s.service_rate),
                    ("secondary_throughput", &s.secondary_throughput),
                    ("delivered_rate", &s.delivered_rate),
                    ("prob_empty", &s.prob_empty),
                    ("mean_system_time", &s.mean_system_time),
                    ("average_age", &s.age),
                    ("reassembled_age", &s.reassembled_age),
                ]
                .into_iter()
                .map(|(m, v)| vec![m.to_string(), float(v.mean), opt_float(v.std_error)])
                .collect()
            };
            csv_document(Command::Simulate.name(), scenario, &["metric", "value", "std_error"], &rows)
        }
    };
    Ok(Outcome {
        status: Status::Success,
        format,
        body,
        extras,
        summary: text,
    })
}

fn lambdas(scenario: &Scenario) -> Vec<f64> {
    scenario
        .sweep
        .lambda
        .clone()
        .map(|a| a.0)
        .unwrap_or_else(|| vec![scenario.access.arrival_rate])
}

fn populations(scenario: &Scenario) -> Vec<usize> {
    scenario
        .sweep
        .n_secondary
        .clone()
        .unwrap_or_else(|| vec![scenario.topology.n_secondary])
}

fn optimize(command: Command, scenario: &Scenario, format: Format) -> Result<Outcome, CliError> {
    let (name, values) = match command {
        Command::OptimizeAge => ("mu_min", scenario.sweep.mu_min.clone().or(scenario.constraints.mu_min.map(|v| vec![v]))),
        _ => (
            "delta_max",
            scenario.sweep.delta_max.clone().or(scenario.constraints.delta_max.map(|v| vec![v])),
        ),
    };
    let values = values.ok_or_else(|| {
        CliError::Usage(format!(
            "{} needs constraints.{name} (or sweep.{name}) in the scenario",
            command.name()
        ))
    })?;
    let mut solutions: Vec<(f64, Solution)> = Vec::new();
    for &value in &values {
        let problem = match command {
            Command::OptimizeAge => Problem::MinAge { mu_min: value },
            _ => Problem::MaxThroughput { delta_max: value },
        };
        let batch = opt::solve_sweep(
            &scenario.topology,
            problem,
            &populations(scenario),
            &lambdas(scenario),
            &scenario.grid,
        )?;
        solutions.extend(batch.into_iter().map(|s| (value, s)));
    }
    let feasible = solutions.iter().filter(|(_, s)| s.feasible).count();
    let single = solutions.len() == 1;
    let status = if single && feasible == 0 {
        Status::Infeasible
    } else {
        Status::Success
    };
    let summary = if single {
        let s = &solutions[0].1;
        if s.feasible {
            format!(
                "q_pr* = {}, q_s* = {}, objective = {}",
                opt_float(s.q_pr_opt),
                opt_float(s.q_s_opt),
                opt_float(s.objective)
            )
        } else {
            let why: Vec<&str> = s.binding_constraints.iter().map(|c| c.as_str()).collect();
            format!("infeasible ({})", why.join(";"))
        }
    } else {
        format!("{feasible} of {} instances feasible", solutions.len())
    };
    let body = match format {
        Format::Json if single => json_document(command.name(), scenario, &solutions[0].1),
        Format::Json => {
            let list: Vec<&Solution> = solutions.iter().map(|(_, s)| s).collect();
            json_document(command.name(), scenario, list)
        }
        Format::Csv => {
            let header = [
                "lambda",
                "N",
                name,
                "q_pr_opt",
                "q_s_opt",
                "objective",
                "mu",
                "mu_s",
                "mu_total",
                "delta",
                "feasible",
                "binding",
            ];
            let rows: Vec<Vec<String>> = solutions
                .iter()
                .map(|(value, s)| {
                    let at = s.at_optimum;
                    let binding: Vec<&str> = s.binding_constraints.iter().map(|c| c.as_str()).collect();
                    vec![
                        float(s.lambda),
                        s.n_secondary.to_string(),
                        float(*value),
                        opt_float(s.q_pr_opt),
                        opt_float(s.q_s_opt),
                        opt_float(s.objective),
                        opt_float(at.map(|e| e.mu)),
                        opt_float(at.and_then(|e| e.mu_s)),
                        opt_float(at.and_then(|e| e.mu_total)),
                        opt_float(at.and_then(|e| e.delta)),
                        s.feasible.to_string(),
                        binding.join(";"),
                    ]
                })
                .collect();
            csv_document(command.name(), scenario, &header, &rows)
        }
    };
    Ok(Outcome {
        status,
        format,
        body,
        extras: Vec::new(),
        summary,
    })
}

pub fn sweep_spec(scenario: &Scenario) -> SweepSpec {
    let a = &scenario.access;
    let axes = &scenario.sweep;
    SweepSpec {
        lambda: axes.lambda.clone().unwrap_or(Axis::fixed(a.arrival_rate)),
        q_pr: axes.q_pr.clone().unwrap_or(Axis::fixed(a.primary_access_prob)),
        q_s: axes.q_s.clone().unwrap_or(Axis::fixed(a.secondary_access_prob)),
        n_secondary: populations(scenario),
        mu_min: scenario.constraints.mu_min,
        delta_max: scenario.constraints.delta_max,
    }
}

fn sweep(scenario: &Scenario, format: Format) -> Result<Outcome, CliError> {
    let rows = opt::sweep(&scenario.topology, &sweep_spec(scenario))?;
    let feasible = rows.iter().filter(|r| r.feasible).count();
    let summary = format!("{} points, {feasible} feasible", rows.len());
    let body = match format {
        Format::Json => json_document(Command::Sweep.name(), scenario, &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        float(r.lambda),
                        float(r.q_pr),
                        float(r.q_s),
                        r.n_secondary.to_string(),
                        float(r.mu),
                        opt_float(r.mu_s),
                        opt_float(r.mu_total),
                        opt_float(r.delta),
                        r.feasible.to_string(),
                        r.binding.map(|c| c.as_str().to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            csv_document(Command::Sweep.name(), scenario, &SWEEP_COLUMNS, &table)
        }
    };
    Ok(Outcome {
        status: Status::Success,
        format,
        body,
        extras: Vec::new(),
        summary,
    })
}

/// One analytic-versus-simulated comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub metric: &'static str,
    pub analytic: f64,
    pub simulated: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
}

impl ValidationRow {
    fn new(metric: &'static str, analytic: f64, simulated: f64, std_error: f64) -> Self {
        let diff = (simulated - analytic).abs();
        let z = if std_error > 0.0 {
            diff / std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            metric,
            analytic,
            simulated,
            std_error,
            z,
            pass: z <= VALIDATE_Z,
        }
    }
}

pub fn validation_rows(scenario: &Scenario) -> Result<Vec<ValidationRow>, CliError> {
    let analytic = markov::analyze(&scenario.topology, &scenario.access)?;
    let replicated = sim::replicate(&scenario.topology, &scenario.access, &scenario.sim)?;
    // One run: batch-means errors. Several: spread across replications.
    let (sim_vals, se) = if replicated.reports.len() == 1 {
        let r = &replicated.reports[0];
        let e = r.std_errors;
        (
            [
                r.empirical_service_rate,
                r.empirical_secondary_throughput,
                r.prob_empty,
                r.mean_system_time,
                r.empirical_age,
            ],
            [e.service_rate, e.secondary_throughput, e.prob_empty, e.mean_system_time, e.age],
        )
    } else {
        let s = &replicated.summary;
        let m = [s.service_rate, s.secondary_throughput, s.prob_empty, s.mean_system_time, s.age];
        (m.map(|v| v.mean), m.map(|v| v.std_error.unwrap_or(0.0)))
    };
    let exact = [
        analytic.service_rate,
        analytic.throughput.secondary_per_node,
        analytic.prob_empty,
        analytic.mean_system_time,
        analytic.age.average_age,
    ];
    let names = ["service_rate", "secondary_throughput", "prob_empty", "mean_system_time", "average_age"];
    Ok((0..5).map(|i| ValidationRow::new(names[i], exact[i], sim_vals[i], se[i])).collect())
}

fn validate(scenario: &Scenario, format: Format) -> Result<Outcome, CliError> {
    let rows = validation_rows(scenario)?;
    let passed = rows.iter().filter(|r| r.pass).count();
    let status = if passed == rows.len() {
        Status::Success
    } else {
        Status::ValidationFailed
    };
    let summary = format!("{passed}/{} rows within {VALIDATE_Z} standard errors", rows.len());
    let body = match format {
        Format::Json => json_document(Command::Validate.name(), scenario, &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.metric.to_string(),
                        float(r.analytic),
                        float(r.simulated),
                        float(r.std_error),
                        float(r.z),
                        if r.pass { "pass" } else { "fail" }.to_string(),
                    ]
                })
                .collect();
            csv_document(Command::Validate.name(), scenario, &VALIDATE_COLUMNS, &table)
        }
    };
    Ok(Outcome {
        status,
        format,
        body,
        extras: Vec::new(),
        summary,
    })
}

/// Where the primary artifact goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// `--out` wins; otherwise a file in the directory named by
/// [`OUT_DIR_ENV`]; otherwise stdout.
pub fn destination(
    out: Option<&Path>,
    out_dir: Option<&Path>,
    scenario_path: &Path,
    command: Command,
    format: Format,
) -> Destination {
    if let Some(out) = out {
        return Destination::File(out.to_path_buf());
    }
    match out_dir {
        Some(dir) => {
            let stem = scenario_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            Destination::File(dir.join(format!("{stem}.{}.{}", command.name(), format.extension())))
        }
        None => Destination::Stdout,
    }
}

/// `run.json` + `trace.csv` -> `run.trace.csv`.
pub fn extra_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    primary.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads the scenario, applies overrides, executes and writes artifacts.
/// Returns the outcome and the files written.
pub fn run(
    command: Command,
    scenario_path: &Path,
    out: Option<&Path>,
    overrides: &Overrides,
    format: Option<Format>,
) -> Result<(Outcome, Vec<PathBuf>), CliError> {
    let mut scenario = parse_scenario(scenario_path)?;
    overrides.apply(&mut scenario)?;
    let outcome = execute(command, &scenario, format)?;
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let mut written = Vec::new();
    match destination(out, out_dir.as_deref(), scenario_path, command, outcome.format) {
        Destination::Stdout => {
            print!("{}", outcome.body);
            if !outcome.extras.is_empty() {
                eprintln!("note: {} extra file(s) not written; pass --out to keep them", outcome.extras.len());
            }
        }
        Destination::File(path) => {
            write_file(&path, &outcome.body)?;
            for (suffix, contents) in &outcome.extras {
                let extra = extra_path(&path, suffix);
                write_file(&extra, contents)?;
                written.push(extra);
            }
            written.insert(0, path);
        }
    }
    Ok((outcome, written))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario_str;

    fn scenario(extra: &str) -> Scenario {
        let text = format!(
            r#"
[topology]
n_secondary = 2
path_loss_exponent = 4.0
primary_tx_power_mw = 10.0
secondary_tx_power_mw = 0.1

[topology.distance_m]
primary_link = 150.0
secondary_link = 40.0
secondary_to_primary_rx = 60.0
primary_to_secondary_rx = 150.0
secondary_cross = 40.0

[channel]
sinr_threshold_db = 5.0
noise_dbm = -121.0

[access]
lambda = 0.2
q_pr = 0.8
q_s = 0.3

[sim]
horizon = 200000
warmup = 1000
seed = 5
{extra}"#
        );
        parse_scenario_str(&text, "test").unwrap()
    }

    #[test]
    fn overrides() {
        let mut s = scenario("");
        Overrides {
            seed: Some(9),
            slots: Some(5000),
            reps: Some(3),
        }
        .apply(&mut s)
        .unwrap();
        assert_eq!((s.sim.seed, s.sim.horizon, s.sim.replications), (9, 6000, 3));
        assert!(Overrides {
            reps: Some(0),
            ..Default::default()
        }
        .apply(&mut s)
        .is_err());
    }

    #[test]
    fn unstable_analytic_is_exit_two() {
        let mut s = scenario("");
        s.access.arrival_rate = 0.95;
        let err = execute(Command::Analytic, &s, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("unstable: lambda >= mu"), "{err}");
    }

    #[test]
    fn sweep_csv_columns() {
        let s = scenario("[sweep]\nq_s = [0.0, 0.5, 1.0]\n");
        let out = execute(Command::Sweep, &s, None).unwrap();
        let header = out.body.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "lambda,q_pr,q_s,N,mu,mu_s,mu_total,delta,feasible,binding");
        assert_eq!(out.body.lines().filter(|l| !l.starts_with('#')).count(), 4);
        assert!(!out.body.contains('\r'));
    }

    #[test]
    fn optimize_requires_constraint() {
        let s = scenario("");
        assert!(matches!(
            execute(Command::OptimizeAge, &s, None),
            Err(CliError::Usage(_))
        ));
        let s = scenario("[constraints]\nmu_min = 50.0\n");
        let out = execute(Command::OptimizeAge, &s, None).unwrap();
        assert_eq!(out.status, Status::Infeasible);
        assert_eq!(out.status.exit_code(), 2);
        let s = scenario("[constraints]\ndelta_max = 8.0\n");
        let out = execute(Command::OptimizeThroughput, &s, None).unwrap();
        assert_eq!(out.status, Status::Success);
        assert!(out.body.contains("\"q_pr_opt\": 1.0"));
    }

    #[test]
    fn trace_has_header_and_rows() {
        let s = scenario("record_packets = true\n");
        let out = execute(Command::Simulate, &s, None).unwrap();
        assert_eq!(out.extras.len(), 1);
        let (suffix, trace) = &out.extras[0];
        assert_eq!(suffix, "trace.csv");
        let mut lines = trace.lines().filter(|l| !l.starts_with('#'));
        assert_eq!(lines.next(), Some("slot_generated,slot_delivered,Y,W,T"));
        for line in lines.take(100) {
            let v: Vec<u64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(v[4], v[1] - v[0] + 1);
            assert!(v[3] < v[4]);
        }
        assert!(!out.body.contains("per_packet_records"));
    }

    #[test]
    fn destinations() {
        let p = Path::new("scenarios/fig3.scenario");
        assert_eq!(destination(None, None, p, Command::Sweep, Format::Csv), Destination::Stdout);
        assert_eq!(
            destination(None, Some(Path::new("/o")), p, Command::Sweep, Format::Csv),
            Destination::File(PathBuf::from("/o/fig3.sweep.csv"))
        );
        assert_eq!(
            destination(Some(Path::new("x.json")), Some(Path::new("/o")), p, Command::Sweep, Format::Csv),
            Destination::File(PathBuf::from("x.json"))
        );
        assert_eq!(extra_path(Path::new("d/run.json"), "trace.csv"), PathBuf::from("d/run.trace.csv"));
    }
}
