//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or configuration error,
//! 3 runtime failure (including unwritable output).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::causal::identify_bias;
use crate::data::{encode, load_dataset, synth_biased, Dataset, EncodeOptions, Schema, SynthSpec};
use crate::decorrelate::MutationStrategy;
use crate::error::{Error, Result};
use crate::evaluate::{
    apply_fitness, fairea_baseline, fairea_verdicts, repeat_seed, repeat_spec, repeat_split, run_experiment,
    ExperimentConfig, FaireaOptions, Method, RunReport,
};
use crate::metrics::metric_bundle;
use crate::models::{self, ClassifierKind};
use crate::optimize::{ObjectiveWeights, PsoParams};
use crate::report::{write_report, write_run_csv, Document, FaireaDocument, IdentifyDocument};
use crate::seed;

/// Environment variable naming the directory for reports when `--out` is
/// not given.
pub const OUT_DIR_ENV: &str = "FITNESS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "fitness",
    version,
    about = "Causal de-correlation bias mitigation for tabular classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the causal effect of each protected feature on the label.
    Identify(IdentifyArgs),
    /// Compare FITNESS (and optionally other methods) against the default model.
    Run(RunArgs),
    /// Build the Fairea trade-off baseline and classify a FITNESS model against it.
    Fairea(FaireaArgs),
    /// Run every method with Fairea classification.
    Compare(RunArgs),
    /// Write a synthetic biased dataset and its schema.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file, or `synthetic` together with --synth.
    #[arg(long)]
    data: String,
    /// Preset name (adult, compas, german, bank) or schema file.
    #[arg(long)]
    schema: Option<String>,
    /// Synthetic dataset spec, e.g. `n=2000,p_priv=0.5,pf1=0.8,pf0=0.2`.
    #[arg(long)]
    synth: Option<String>,
    /// Protected features to use (default: all declared).
    #[arg(long, value_delimiter = ',')]
    protected: Vec<String>,
    /// Adjustment columns for the causal estimate (overrides the schema).
    #[arg(long, value_delimiter = ',')]
    strata: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct IdentifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Laplace smoothing for stratum frequencies.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value = "lr")]
    model: ClassifierKind,
    /// Objective weights as performance:fairness.
    #[arg(long, default_value = "1:1")]
    weights: ObjectiveWeights,
    #[arg(long, default_value = "flip-sensitive")]
    strategy: MutationStrategy,
    #[arg(long, default_value_t = 10)]
    population: usize,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Score the objective with k-fold averaging instead of one hold-out.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    /// Methods besides the default model: fitness, rew, roc.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, default_value_t = 0.1)]
    roc_theta: f64,
    /// Classify FITNESS results against the Fairea baseline.
    #[arg(long)]
    fairea: bool,
    #[arg(long, default_value_t = 10)]
    fairea_repeats: usize,
    /// Report path; a CSV sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FaireaArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 10)]
    fairea_repeats: usize,
    /// Only build the baseline, without a FITNESS model.
    #[arg(long)]
    baseline_only: bool,
    /// Write the default model's parameters to this file.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    synth: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; the schema is written next to it with a `.schema` extension.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                3
            }
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Identify(a) => identify(a),
        Command::Run(a) => run(a, false),
        Command::Compare(a) => run(a, true),
        Command::Fairea(a) => fairea(a),
        Command::Synth(a) => synth(a),
    }
}

fn load(args: &DataArgs, seed: u64) -> CliResult<Dataset> {
    let with_overrides = |schema: Schema| -> Result<Schema> {
        let schema = schema.with_protected(&args.protected)?;
        match &args.strata {
            Some(s) => schema.with_strata(s.clone()),
            None => Ok(schema),
        }
    };
    if args.data == "synthetic" {
        let text = args
            .synth
            .as_deref()
            .ok_or_else(|| Failure::Usage("--data synthetic requires --synth".into()))?;
        let spec = SynthSpec::parse(text)?;
        let ds = synth_biased(&spec, seed::derive(seed, "synth", 0))?;
        let schema = with_overrides(ds.schema().clone())?;
        return Ok(ds.with_schema(schema)?);
    }
    let name = args
        .schema
        .as_deref()
        .ok_or_else(|| Failure::Usage("--schema is required with a CSV file".into()))?;
    let schema = with_overrides(Schema::resolve(name)?)?;
    Ok(load_dataset(Path::new(&args.data), &schema)?)
}

/// Explicit path, else `$FITNESS_OUT_DIR/<default_name>`, else nothing.
fn output_path(out: Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(default_name))
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "undef".into())
}

fn identify(a: IdentifyArgs) -> CliResult<()> {
    if !(a.lambda >= 0.0 && a.lambda.is_finite()) {
        return Err(Failure::Usage(format!("--lambda must be >= 0, got {}", a.lambda)));
    }
    let ds = load(&a.data, a.seed)?;
    let encoded = encode(&ds, EncodeOptions::default())?;
    let report = identify_bias(&encoded, a.lambda)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} rows ({} dropped), {} strata, lambda {}",
        report.n,
        ds.dropped(),
        report.strata,
        report.lambda
    );
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9} {:>8}",
        "feature", "n_priv", "n_unpr", "ACE(1)", "ACE(0)", "ACD", "gap", "simpson"
    );
    for f in &report.features {
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            f.feature,
            f.group_sizes[1],
            f.group_sizes[0],
            f.ace[1][1],
            f.ace[0][1],
            f.acd,
            f.marginal_gap,
            if f.simpson_reversal { "yes" } else { "no" }
        );
    }
    print!("{out}");

    if let Some(path) = output_path(a.out, "identify.json") {
        let doc = IdentifyDocument {
            dataset: ds.source_name().to_owned(),
            schema: ds.schema().name.clone(),
            rows: ds.len(),
            dropped_rows: ds.dropped(),
            strata_columns: ds.schema().strata_columns.clone(),
            report,
        };
        write_report(&Document::Identify(&doc), &path)?;
    }
    Ok(())
}

fn pso_params(s: &SearchArgs) -> PsoParams {
    PsoParams {
        population: s.population,
        iterations: s.iterations,
        ..PsoParams::default()
    }
}

fn experiment_config(s: &SearchArgs) -> ExperimentConfig {
    ExperimentConfig {
        weights: s.weights,
        pso: pso_params(s),
        strategy: s.strategy,
        lambda: s.lambda,
        folds: s.folds,
        test_fraction: s.test_fraction,
        seed: s.seed,
        ..ExperimentConfig::new(s.model)
    }
}

fn run(a: RunArgs, compare: bool) -> CliResult<()> {
    let ds = load(&a.data, a.search.seed)?;
    let mut config = experiment_config(&a.search);
    config.repeats = a.repeats;
    config.roc_theta = a.roc_theta;
    config.fairea = a.fairea || compare;
    config.fairea_repeats = a.fairea_repeats;
    config.methods = match (a.methods, compare) {
        (Some(m), _) => m,
        (None, true) => Method::ALL.to_vec(),
        (None, false) => vec![Method::Default, Method::Fitness],
    };
    config.validate()?;
    let report = run_experiment(&ds, &config)?;
    print!("{}", summary(&report));

    let kind = if compare { "compare" } else { "run" };
    if let Some(path) = output_path(a.out, &format!("{kind}.json")) {
        let doc = if compare {
            Document::Compare(&report)
        } else {
            Document::Run(&report)
        };
        write_report(&doc, &path)?;
        write_run_csv(&report, &path.with_extension("csv"))?;
    }
    Ok(())
}

fn summary(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {} repeats ({} failed), model {}",
        report.dataset.name,
        report.repeats.len(),
        report.failed_repeats,
        report.config.model
    );
    let _ = writeln!(
        out,
        "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}",
        "method", "acc", "f1", "|spd|", "|aod|", "|eod|", "prec", "composite"
    );
    for g in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}",
            g.method.to_string(),
            fmt_opt(g.accuracy.mean),
            fmt_opt(g.f1.mean),
            fmt_opt(g.abs_spd.mean),
            fmt_opt(g.abs_aod.mean),
            fmt_opt(g.abs_eod.mean),
            fmt_opt(g.precision.mean),
            fmt_opt(g.composite_fairness.mean)
        );
    }
    for s in &report.significance {
        let cell = |t: &Option<crate::evaluate::SignificanceTest>| match t {
            Some(t) => format!("p={:.4}{}", t.p, if t.significant { " *" } else { "" }),
            None => "n/a".into(),
        };
        let _ = writeln!(
            out,
            "{} vs default: fairness {}, accuracy {}",
            s.method,
            cell(&s.composite_fairness),
            cell(&s.accuracy)
        );
    }
    if let Some(f) = &report.fairea {
        let _ = writeln!(
            out,
            "fairea: {}/{} cases beat the baseline, {}/{} models",
            f.case_beats, f.cases, f.model_beats, f.models
        );
    }
    out
}

fn fairea(a: FaireaArgs) -> CliResult<()> {
    let ds = load(&a.data, a.search.seed)?;
    let mut config = experiment_config(&a.search);
    config.fairea_repeats = a.fairea_repeats;
    config.validate()?;
    if a.fairea_repeats == 0 {
        return Err(Failure::Usage("--fairea-repeats must be >= 1".into()));
    }
    let encoded = encode(
        &ds,
        EncodeOptions {
            include_sensitive: true,
        },
    )?;
    let rseed = repeat_seed(config.seed, 0);
    let pair = repeat_split(&encoded, config.test_fraction, rseed)?;
    let spec = repeat_spec(config.model, rseed);
    let model = models::fit(&spec, &pair.train, None)?;
    if let Some(path) = &a.dump_model {
        std::fs::write(path, model.dump()).map_err(|source| Error::Write {
            path: path.clone(),
            source,
        })?;
    }
    let x_test = pair.test.features().view();
    let original = metric_bundle(
        pair.test.label(),
        &models::predict(&model, x_test)?,
        pair.test.sensitive(),
    )?;
    let options = FaireaOptions {
        repeats: config.fairea_repeats,
        seed: seed::derive(rseed, "fairea", 0),
        ..FaireaOptions::default()
    };
    let baselines = fairea_baseline(&model, &pair.test, &options)?;

    let (mitigated, alpha, verdicts) = if a.baseline_only {
        (None, None, Vec::new())
    } else {
        let (fitted, detail) = apply_fitness(&pair.train, &spec, &config, rseed)?;
        let bundle = metric_bundle(
            pair.test.label(),
            &models::predict(&fitted, x_test)?,
            pair.test.sensitive(),
        )?;
        let verdicts = fairea_verdicts(&baselines, &bundle)?;
        (Some(bundle), Some(detail.alpha), verdicts)
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "original: acc {:.4} |spd| {} |aod| {} |eod| {}",
        original.accuracy,
        fmt_opt(original.spd.map(f64::abs)),
        fmt_opt(original.aod.map(f64::abs)),
        fmt_opt(original.eod.map(f64::abs))
    );
    for v in &verdicts {
        let _ = writeln!(
            out,
            "{:<10} {:<4} {:<10} point ({:.4}, {:.4}) baseline {:.4}",
            v.performance_metric.to_string(),
            v.fairness_metric.to_string(),
            v.region.to_string(),
            v.fairness,
            v.performance,
            v.baseline_performance
        );
    }
    print!("{out}");

    if let Some(path) = output_path(a.out, "fairea.json") {
        let doc = FaireaDocument {
            dataset: ds.source_name().to_owned(),
            model: config.model.to_string(),
            seed: config.seed,
            test_rows: pair.test.n(),
            original,
            baselines,
            mitigated,
            alpha,
            verdicts,
        };
        write_report(&Document::Fairea(&doc), &path)?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let spec = SynthSpec::parse(&a.synth)?;
    let ds = synth_biased(&spec, seed::derive(a.seed, "synth", 0))?;
    let werr = |path: &Path| {
        let path = path.to_owned();
        move |source| Error::Write { path, source }
    };
    let file = std::fs::File::create(&a.out).map_err(werr(&a.out))?;
    ds.write_csv(file)?;
    let schema_path = a.out.with_extension("schema");
    std::fs::write(&schema_path, ds.schema().to_text()).map_err(werr(&schema_path))?;
    println!(
        "wrote {} rows to {} and schema {}",
        ds.len(),
        a.out.display(),
        schema_path.display()
    );
    Ok(())
}
