//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{FkrfeError, Result};
use crate::io::{parse_csv, DnSetting, Feature, ResponseSelector, RunConfig, SelectOutput};
use crate::rfe::{fkrfe_select, FkrfeConfig, TaskOverride};
use crate::sim::{holdout_repeated, run_benchmark, ExampleSpec, HoldoutReport, HoldoutSummary};

#[derive(Debug, Parser)]
#[command(name = "fkrfe", version, about = "Fused Kolmogorov filter + random-forest RFE feature selection")]
pub struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true, env = "FKRFE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select features from a CSV file.
    Select(SelectArgs),
    /// Run the simulation benchmark for one of the five designs.
    Simulate(SimulateArgs),
    /// Append noise features, select on a training split and score a test split.
    Holdout(HoldoutArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Screening threshold d_n ("auto" or a count; clamped to p).
    #[arg(long)]
    pub dn: Option<String>,
    /// Number of trees per forest.
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub min_node: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Slice counts of the response partitions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub slices: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Auto,
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum SelectFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Response column: header name or 0-based column index.
    #[arg(long)]
    pub response: String,
    /// Treat the response as class labels.
    #[arg(long)]
    pub categorical: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: SelectFormat,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design number, 1 to 5.
    #[arg(long)]
    pub example: u8,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct HoldoutArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long)]
    pub categorical: bool,
    /// Rows used for selection and fitting; the rest form the test set.
    #[arg(long)]
    pub train_n: usize,
    /// Standard-normal noise features appended before splitting.
    #[arg(long, default_value_t = 0)]
    pub noise_p: usize,
    /// Independent splits to average over.
    #[arg(long, default_value_t = 1)]
    pub splits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub model: ModelArgs,
}

impl ModelArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dn) = &self.dn {
            c.d_n = match dn.as_str() {
                "auto" => DnSetting::Auto,
                s => DnSetting::Fixed(s.parse().map_err(|_| {
                    FkrfeError::ConfigInvalid(format!("--dn expects \"auto\" or a count, got {s:?}"))
                })?),
            };
        }
        if let Some(t) = self.trees {
            c.n_trees = t;
        }
        if self.mtry.is_some() {
            c.mtry = self.mtry;
        }
        if self.min_node.is_some() {
            c.min_node_size = self.min_node;
        }
        if self.max_depth.is_some() {
            c.max_depth = self.max_depth;
        }
        if let Some(s) = &self.slices {
            c.slice_counts = s.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.task {
            c.task = match t {
                TaskArg::Auto => TaskOverride::Auto,
                TaskArg::Regression => TaskOverride::Regression,
                TaskArg::Classification => TaskOverride::Classification,
            };
        }
        c.check()?;
        Ok(c)
    }
}

/// Parse `args`, run, and return the process exit code: 0 on success, 2 for
/// usage and input errors, 1 when a run fails.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        Some(t) => builder = builder.num_threads(t),
        None => {}
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Select(a) => cmd_select(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Holdout(a) => cmd_holdout(a),
    }
}

fn warn_clamp(config: &FkrfeConfig, n: usize, p: usize) -> Result<()> {
    let r = config.resolve_dn(n, p)?;
    if let Some(wanted) = r.clamped_from {
        eprintln!("warning: d_n = {wanted} exceeds p = {p}; clamped to {}", r.d_n);
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| FkrfeError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("outputs contain only serializable data") + "\n"
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let rc = a.model.run_config()?;
    let ds = parse_csv(&a.input, &ResponseSelector::parse(&a.response), a.categorical)?;
    let config = rc.selection();
    warn_clamp(&config, ds.n(), ds.p())?;
    let result = fkrfe_select(&ds, &config, rc.seed())?;
    let out = SelectOutput::new(&ds, result, rc);
    let text = match a.format {
        SelectFormat::Json => to_json(&out),
        SelectFormat::Csv => out.trace_csv()?,
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut rc = a.model.run_config()?;
    if let Some(r) = a.reps {
        rc.reps = r;
        rc.check()?;
    }
    let spec = ExampleSpec::new(a.example, a.n, a.p)?;
    let config = rc.selection();
    warn_clamp(&config, spec.n, spec.p)?;
    let report = run_benchmark(a.example, a.n, a.p, rc.reps, &config, rc.seed())?;
    let mut text = String::new();
    match a.format {
        ReportFormat::Json => {
            for r in &report.records {
                text += &serde_json::to_string(r).expect("records serialize");
                text.push('\n');
            }
            text += &serde_json::to_string(&serde_json::json!({ "aggregate": report.row }))
                .expect("row serializes");
            text.push('\n');
        }
        ReportFormat::Table => {
            for r in &report.records {
                text += &format!(
                    "rep {:>3}  selected {:?}  TPR {:.3}  TNR {:.3}  BA {:.3}  size {}\n",
                    r.rep,
                    r.selected.indices(),
                    r.tpr,
                    r.tnr,
                    r.balanced_accuracy,
                    r.model_size
                );
            }
            text += &format!("{}\n", report.row);
        }
    }
    emit(a.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct HoldoutSplitOut<'a> {
    selected_features: Vec<Feature>,
    #[serde(flatten)]
    report: &'a HoldoutReport,
}

#[derive(Debug, Serialize)]
struct HoldoutOut<'a> {
    train_n: usize,
    noise_p: usize,
    splits: Vec<HoldoutSplitOut<'a>>,
    model_size: crate::sim::MeanStd,
    wrong_selection: crate::sim::MeanStd,
    train_risk: crate::sim::MeanStd,
    test_risk: crate::sim::MeanStd,
    train_mse: Option<crate::sim::MeanStd>,
    train_mae: Option<crate::sim::MeanStd>,
    train_mape: Option<crate::sim::MeanStd>,
    test_mse: Option<crate::sim::MeanStd>,
    test_mae: Option<crate::sim::MeanStd>,
    test_mape: Option<crate::sim::MeanStd>,
    run_config: &'a RunConfig,
}

fn augmented_name(ds: &Dataset, j: usize) -> String {
    if j < ds.p() {
        ds.feature_name(j)
    } else {
        format!("noise_{}", j - ds.p() + 1)
    }
}

fn holdout_table(s: &HoldoutSummary) -> String {
    let opt = |m: &Option<crate::sim::MeanStd>| m.map_or("-".to_string(), |m| m.to_string());
    let mut t = String::new();
    t += "Model size | Wrong selection | Train risk | Test risk | Train MSE | Train MAE | Train MAPE | Test MSE | Test MAE | Test MAPE\n";
    t += &format!(
        "{:.2} | {:.2} | {} | {} | {} | {} | {} | {} | {} | {}\n",
        s.model_size,
        s.wrong_selection,
        s.train_risk,
        s.test_risk,
        opt(&s.train_mse),
        opt(&s.train_mae),
        opt(&s.train_mape),
        opt(&s.test_mse),
        opt(&s.test_mae),
        opt(&s.test_mape)
    );
    t
}

fn cmd_holdout(a: &HoldoutArgs) -> Result<()> {
    let rc = a.model.run_config()?;
    let ds = parse_csv(&a.input, &ResponseSelector::parse(&a.response), a.categorical)?;
    let config = rc.selection();
    warn_clamp(&config, a.train_n, ds.p() + a.noise_p)?;
    let s = holdout_repeated(&ds, a.train_n, a.noise_p, a.splits, rc.seed(), &config)?;
    let text = match a.format {
        ReportFormat::Json => to_json(&HoldoutOut {
            train_n: a.train_n,
            noise_p: a.noise_p,
            splits: s
                .splits
                .iter()
                .map(|r| HoldoutSplitOut {
                    selected_features: r
                        .selected
                        .iter()
                        .map(|j| Feature { index: j, name: augmented_name(&ds, j) })
                        .collect(),
                    report: r,
                })
                .collect(),
            model_size: s.model_size,
            wrong_selection: s.wrong_selection,
            train_risk: s.train_risk,
            test_risk: s.test_risk,
            train_mse: s.train_mse,
            train_mae: s.train_mae,
            train_mape: s.train_mape,
            test_mse: s.test_mse,
            test_mae: s.test_mae,
            test_mape: s.test_mape,
            run_config: &rc,
        }),
        ReportFormat::Table => holdout_table(&s),
    };
    emit(a.out.as_deref(), &text)
}
