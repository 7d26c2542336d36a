//! Command line entry points. Exit status: 0 on success, 2 on bad input or
//! usage, 1 on internal failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riskpref_core::elicitation::{
    avg_safe, consistency, count_safe, record_likert, ChoiceSheet, LikertAnswers, TASK_COUNT,
};
use riskpref_core::evaluation::{
    distribution_csv, distribution_json, fold_distribution, lasso_importance, leaderboard, rfecv, CvOptions, Metric,
    MIN_SCORES,
};
use riskpref_core::models::{self, Family, GridManifest, ModelSpec};
use riskpref_core::preprocess::{iterative_impute, prepare, ImputeConfig, PipelineConfig, PreparedData};
use riskpref_core::synthdata::{
    apply_missingness, generate, read_csv, register_schema, to_csv_string, ColumnValues, DataTable, GenConfig,
    TargetKind, TargetSelection,
};
use serde::Deserialize;
use serde_json::json;

use crate::service::{self, BIND_ENV, DEFAULT_BIND};
use crate::session::SessionStore;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<riskpref_core::Error> for CliError {
    fn from(e: riskpref_core::Error) -> Self {
        if e.is_validation() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "riskpref", version, about = "Risk-preference elicitation and prediction workbench")]
struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic register dataset as CSV.
    Generate(GenerateArgs),
    /// Fill missing numerical cells of a CSV by iterative imputation.
    Impute(ImputeArgs),
    /// Fit one model spec and score it on the held-out split.
    Train(TrainArgs),
    /// Tune and rank every model family.
    Leaderboard(LeaderboardArgs),
    /// Recursive feature elimination with cross-validation.
    Rfecv(RfecvArgs),
    /// Score MPL choice sheets.
    ScoreMpl(ScoreArgs),
    /// Run the elicitation HTTP service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    Both,
    MplAvgSafe,
    RiskGrq,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Both)]
    target: TargetArg,
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Skip the missingness pass.
    #[arg(long)]
    complete: bool,
    /// Add an `id` column.
    #[arg(long)]
    ids: bool,
    /// Also write the feature dictionary as JSON.
    #[arg(long)]
    schema_out: Option<PathBuf>,
    /// Also write the planted coefficients as JSON.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ImputeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Write the imputation report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_target, default_value = "mpl_avg_safe")]
    target: TargetKind,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Hyperparameter as NAME=VALUE; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Write the fitted model as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long, value_parser = parse_metric, default_value = "mape")]
    metric: Metric,
    #[arg(long, default_value_t = 10)]
    folds: usize,
}

#[derive(Args, Debug)]
struct LeaderboardArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    cv: CvArgs,
    /// Families to rank; all by default. The dummy baseline is always added.
    #[arg(long, value_parser = parse_family, value_delimiter = ',')]
    families: Vec<Family>,
    /// JSON file replacing default grids, e.g. `{"lasso": [{"alpha": 0.1}]}`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RfecvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    cv: CvArgs,
    #[arg(long, value_parser = parse_family, default_value = "lasso")]
    family: Family,
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Sheet file: lines like `1:AAAABBBBBB`, or JSON
    /// `{"sheets": [{"task_id": 1, "choices": [...]}], "likert": {...}}`.
    file: PathBuf,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, env = BIND_ENV, default_value = DEFAULT_BIND)]
    bind: String,
    /// Event log replayed at start-up and appended to afterwards.
    #[arg(long, env = "RISKPREF_LOG", default_value = "riskpref-events.jsonl")]
    log: PathBuf,
    /// Keep sessions in memory only.
    #[arg(long)]
    ephemeral: bool,
}

fn parse_target(s: &str) -> std::result::Result<TargetKind, String> {
    s.parse().map_err(|e: riskpref_core::Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: riskpref_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: riskpref_core::Error| e.to_string())
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), v))
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => cmd_generate(a, seed, out),
        Command::Impute(a) => cmd_impute(a, seed, out),
        Command::Train(a) => cmd_train(a, seed, out),
        Command::Leaderboard(a) => cmd_leaderboard(a, seed, out),
        Command::Rfecv(a) => cmd_rfecv(a, seed, out),
        Command::ScoreMpl(a) => cmd_score(a, out),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

/// Writes to `path`, or to `out` when no path is given.
fn write_or_emit(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => emit(out, text),
    }
}

fn load_table(path: &Path) -> Result<DataTable> {
    let text = read_input(path)?;
    Ok(read_csv(text.as_bytes(), Some(&register_schema()))?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Internal(e.to_string()))
}

fn cmd_generate(a: GenerateArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let schema = register_schema();
    let mut config = GenConfig::default_with_seed(seed);
    config.n_rows = a.rows;
    config.target = match a.target {
        TargetArg::Both => TargetSelection::Both,
        TargetArg::MplAvgSafe => TargetSelection::MplAvgSafe,
        TargetArg::RiskGrq => TargetSelection::RiskGrq,
    };
    if let Some(sd) = a.noise_sd {
        config.noise_sd = sd;
    }
    let (mut table, truth) = generate(&schema, &config)?;
    if !a.complete {
        table = apply_missingness(&table, &schema, seed)?;
    }
    if a.ids {
        table = table.with_ids((1..=a.rows).map(|i| format!("syn-{i}")).collect())?;
    }
    if let Some(p) = &a.schema_out {
        write_file(p, &(schema.to_json() + "\n"))?;
    }
    if let Some(p) = &a.truth_out {
        write_file(p, &to_json(&truth)?)?;
    }
    write_or_emit(a.out.as_deref(), out, &to_csv_string(&table)?)
}

/// Imputes the numerical columns only; missing categorical cells stay as
/// their own level for the encoder.
fn cmd_impute(a: ImputeArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let mut table = load_table(&a.data)?;
    let config = ImputeConfig { max_rounds: a.max_rounds, tol: a.tol, ..ImputeConfig::default() };
    let numeric: Vec<_> = table
        .columns()
        .iter()
        .filter(|c| matches!(c.values, ColumnValues::Numerical(_)))
        .cloned()
        .collect();
    let (filled, report) = iterative_impute(&DataTable::new(table.n_rows(), numeric, None, None)?, &config, seed)?;
    for col in table.columns_mut() {
        if let Some(f) = filled.column(&col.name) {
            *col = f.clone();
        }
    }
    if let Some(p) = &a.report {
        write_file(p, &to_json(&report)?)?;
    }
    write_or_emit(a.out.as_deref(), out, &to_csv_string(&table)?)
}

fn prepared(d: &DataArgs, seed: u64) -> Result<PreparedData> {
    let table = load_table(&d.data)?;
    Ok(prepare(&table, &PipelineConfig::new(d.target, seed))?)
}

fn spec_from(family: Family, params: &[(String, f64)], seed: u64) -> Result<ModelSpec> {
    let spec = params.iter().fold(ModelSpec::new(family).with_seed(seed), |s, (k, v)| s.with(k, *v));
    spec.validate()?;
    Ok(spec)
}

fn cmd_train(a: TrainArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let spec = spec_from(a.family, &a.params, seed)?;
    let data = prepared(&a.data, seed)?;
    let model = models::fit(&spec, &data.x_train, &data.y_train)?;
    let pred = model.predict(&data.x_test)?;
    let test = riskpref_core::evaluation::metrics(&data.y_test, &pred)?;
    if let Some(p) = &a.out {
        write_file(p, &(model.to_json()? + "\n"))?;
    }
    emit(
        out,
        &to_json(&json!({
            "spec": spec,
            "target": a.data.target,
            "n_train": data.y_train.len(),
            "n_test": data.y_test.len(),
            "iterations": model.meta.iterations,
            "converged": model.meta.converged,
            "test": test,
        }))?,
    )
}

fn cmd_leaderboard(a: LeaderboardArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let mut grids = GridManifest::default();
    if let Some(p) = &a.config {
        grids = grids.with_overrides(&read_input(p)?)?;
    }
    let families: Vec<Family> = if a.families.is_empty() { Family::LEADERBOARD.to_vec() } else { a.families };
    let data = prepared(&a.data, seed)?;
    let opts = CvOptions { k: a.cv.folds, seed, metric: a.cv.metric };
    let report = leaderboard(&families, &grids, &data.x_train, &data.y_train, &data.x_test, &data.y_test, &opts)?;
    if let Some(dir) = &a.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("leaderboard.csv"), &report.to_csv()?)?;
        write_file(&dir.join("leaderboard.txt"), &report.to_text())?;
        write_file(&dir.join("leaderboard.json"), &(report.to_json()? + "\n"))?;
        let groups: Vec<(String, Vec<f64>)> = report
            .rows
            .iter()
            .filter(|r| r.fold_scores.len() >= MIN_SCORES)
            .map(|r| (r.model.clone(), r.fold_scores.clone()))
            .collect();
        let boxes = fold_distribution(&groups)?;
        write_file(&dir.join("folds.csv"), &distribution_csv(&boxes)?)?;
        write_file(&dir.join("folds.json"), &(distribution_json(&boxes)? + "\n"))?;
        if let Some(spec) = report.row(Family::Lasso).and_then(|r| r.spec.clone()) {
            let lasso = models::fit(&spec, &data.x_train, &data.y_train)?;
            write_file(&dir.join("lasso_coefficients.csv"), &lasso_importance(&lasso, &data.feature_names)?.to_csv()?)?;
        }
    }
    emit(out, &report.to_text())
}

fn cmd_rfecv(a: RfecvArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let spec = spec_from(a.family, &a.params, seed)?;
    let data = prepared(&a.data, seed)?;
    let opts = CvOptions { k: a.cv.folds, seed, metric: a.cv.metric };
    let result = rfecv(&spec, &data.x_train, &data.y_train, &data.feature_names, &opts)?;
    let mut text = format!(
        "selected {} of {} features ({} {:.4})\n",
        result.selected().len(),
        data.feature_names.len(),
        opts.metric,
        result.steps[result.selected_index].mean
    );
    for name in result.selected() {
        text.push_str(&format!("  {name}\n"));
    }
    if let Some(dir) = &a.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("rfecv.json"), &to_json(&result)?)?;
        let mut curve = String::from("n_features,mean");
        for f in 1..=opts.k {
            curve.push_str(&format!(",fold_{f}"));
        }
        curve.push('\n');
        for s in &result.steps {
            let folds: Vec<String> = s.fold_scores.iter().map(f64::to_string).collect();
            curve.push_str(&format!("{},{},{}\n", s.features.len(), s.mean, folds.join(",")));
        }
        write_file(&dir.join("rfecv_curve.csv"), &curve)?;
        if result.selected_fold_scores().len() >= MIN_SCORES {
            let label = format!("{} ({} features)", spec.family.display_name(), result.selected().len());
            let boxes = fold_distribution(&[(label, result.selected_fold_scores().to_vec())])?;
            write_file(&dir.join("rfecv_folds.csv"), &distribution_csv(&boxes)?)?;
        }
    }
    emit(out, &text)
}

#[derive(Deserialize)]
struct SheetFile {
    sheets: Vec<ChoiceSheet>,
    #[serde(default)]
    likert: Option<LikertAnswers>,
}

fn parse_sheets(text: &str) -> Result<SheetFile> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).map_err(|e| CliError::Invalid(format!("sheet file: {e}")));
    }
    if trimmed.starts_with('[') {
        let sheets = serde_json::from_str(trimmed).map_err(|e| CliError::Invalid(format!("sheet file: {e}")))?;
        return Ok(SheetFile { sheets, likert: None });
    }
    let sheets = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| l.parse::<ChoiceSheet>().map_err(|e| CliError::Invalid(format!("line {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SheetFile { sheets, likert: None })
}

/// Prints the mean safe count of the sheets in the file. With all five lists
/// present this is `mpl_avg_safe`; a partial file is scored over the lists
/// it contains and flagged on the JSON report.
fn cmd_score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let file = parse_sheets(&read_input(&a.file)?)?;
    if file.sheets.is_empty() {
        return Err(CliError::Invalid("sheet file holds no sheets".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut counts = Vec::new();
    for s in &file.sheets {
        if !seen.insert(s.task_id()) {
            return Err(CliError::Invalid(format!("duplicate sheet for task {}", s.task_id())));
        }
        counts.push(count_safe(s)?);
    }
    let complete = file.sheets.len() == TASK_COUNT;
    let score = if complete {
        avg_safe(&file.sheets)?
    } else {
        counts.iter().map(|&c| f64::from(c)).sum::<f64>() / counts.len() as f64
    };
    let likert = file.likert.as_ref().map(record_likert).transpose()?;
    if a.json {
        let per_task: Vec<_> = file
            .sheets
            .iter()
            .zip(&counts)
            .map(|(s, c)| Ok(json!({ "task_id": s.task_id(), "count_safe": c, "consistency": consistency(s)? })))
            .collect::<Result<Vec<_>>>()?;
        emit(
            out,
            &to_json(&json!({
                "mpl_avg_safe": score,
                "complete": complete,
                "risk_grq": likert.map(|l| l.risk_grq),
                "likert": likert,
                "tasks": per_task,
            }))?,
        )
    } else {
        let mut text = format!("{score:?}\n");
        if let Some(l) = likert {
            text.push_str(&format!("risk_grq {}\n", l.risk_grq));
        }
        emit(out, &text)
    }
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let store = if a.ephemeral {
        SessionStore::in_memory()
    } else {
        SessionStore::open(&a.log).map_err(|e| CliError::Internal(e.to_string()))?
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime
        .block_on(service::serve(Arc::new(store), &a.bind))
        .map_err(|e| CliError::Internal(format!("{}: {e}", a.bind)))
}
