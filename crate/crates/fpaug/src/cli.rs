//! Command-line entry point wiring datasets, augmentation, and evaluation
//! into reproducible batch runs.
//!
//! Logging goes to stderr; machine-readable results go to files or stdout.
//! Exit codes: 0 success, 1 validation/input error, 2 numerical failure (or
//! partial partition failures under --strict).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use fpaug_core::{fit, FitOptions, GpError, KernelSpec};

use crate::augment::{
    augment, plan_unknown_keys, AugmentError, AugmentationPlan, FitConfig,
};
use crate::checkpoint::{
    save_checkpoint, CheckpointError, ModelCheckpoint, CHECKPOINT_FORMAT_VERSION,
};
use crate::dataset::{
    compute_stats, load_csv, make_partition, write_csv, ApFilter, DatasetError,
    PartitionStrategy, SchemaOptions,
};
use crate::evaluate::{
    compare_runs, localize_all, render_comparison, score, split_half, EvalError,
    EvaluationReport, MetricOpts, REPORT_SCHEMA_VERSION,
};
use crate::provenance::{sha256_file, Provenance};

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("strict mode: {0}")]
    Strict(String),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Gp(GpError::Factorization { .. } | GpError::FitFailed { .. }) => 2,
            CmdError::Augment(AugmentError::AllPartitionsFailed(_)) => 2,
            CmdError::Augment(AugmentError::Gp(
                GpError::Factorization { .. } | GpError::FitFailed { .. },
            )) => 2,
            CmdError::Strict(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fpaug",
    version,
    about = "Augment multi-building multi-floor Wi-Fi RSSI fingerprint datasets with multi-output GP regression and evaluate the result"
)]
pub struct Cli {
    /// Seed for every stochastic choice; randomized (and echoed) if absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap (default: FPAUG_JOBS or all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Escalate warnings (unknown plan fields, partial failures) to errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// More logging on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StrategyArg {
    SingleFloor,
    NeighboringFloors,
    SingleBuilding,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KernelArg {
    Matern52,
    Rbf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SplitTake {
    First,
    Second,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Kernel family for the latent functions.
    #[arg(long, value_enum, default_value = "matern52")]
    pub kernel: KernelArg,
    /// Initial length-scale (standardized input units).
    #[arg(long, default_value_t = 1.0)]
    pub length_scale: f64,
    /// Latent components (1 = intrinsic coregionalization).
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// Freeze the coregionalization diagonal at its initial value.
    #[arg(long)]
    pub no_kappa: bool,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 150)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Cap on observed scalar entries (points x APs) per fit.
    #[arg(long, default_value_t = 20_000)]
    pub budget: usize,
}

impl FitArgs {
    fn config(&self, seed: u64) -> FitConfig {
        let kernel = match self.kernel {
            KernelArg::Matern52 => KernelSpec::matern52(self.length_scale),
            KernelArg::Rbf => KernelSpec::rbf(self.length_scale),
        };
        FitConfig {
            kernel,
            rank: self.rank,
            learn_kappa: !self.no_kappa,
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            budget: self.budget,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dataset statistics as JSON (record counts, reference points, AP
    /// detection rates per building and floor).
    Stats {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one coregionalized GP on a partition and write a model
    /// checkpoint.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        building: i32,
        /// Required for single_floor / neighboring_floors.
        #[arg(long)]
        floor: Option<i32>,
        #[arg(long, default_value_t = 0.05)]
        min_detection_rate: f64,
        #[arg(long, default_value_t = 20)]
        min_detections: usize,
        #[arg(long, default_value_t = 4.0)]
        floor_height: f64,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate fake fingerprints per an augmentation plan and merge them
    /// with the originals.
    Augment {
        csv: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localize a test set with the k-NN baseline and report the metrics.
    Evaluate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 4.0)]
        floor_height: f64,
        /// Split the test CSV into two seeded halves and evaluate one.
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, value_enum, default_value = "second")]
        split_take: SplitTake,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare evaluation reports computed on the same query set
    /// (baseline first).
    Compare {
        #[arg(num_args = 2.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };

    let seed = cli.seed.unwrap_or_else(rand::random::<u64>);
    eprintln!("fpaug: seed = {seed}");

    let jobs = cli.jobs.or_else(|| {
        std::env::var("FPAUG_JOBS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = jobs {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }

    match dispatch(&cli, seed) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("fpaug: error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("fpaug:   caused by: {cause}");
                source = cause.source();
            }
            err.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, seed: u64) -> Result<(), CmdError> {
    match &cli.command {
        Command::Stats { csv, out } => run_stats(csv, out.as_deref(), seed),
        Command::Fit {
            csv,
            strategy,
            building,
            floor,
            min_detection_rate,
            min_detections,
            floor_height,
            fit,
            out,
        } => run_fit(
            csv,
            *strategy,
            *building,
            *floor,
            ApFilter {
                min_detection_rate: *min_detection_rate,
                min_detections: *min_detections,
            },
            *floor_height,
            fit,
            out,
            seed,
        ),
        Command::Augment { csv, plan, fit, out } => {
            run_augment(csv, plan, fit, out, seed, cli.strict, cli.verbose)
        }
        Command::Evaluate { train, test, k, floor_height, split_seed, split_take, out } => {
            run_evaluate(
                train,
                test,
                *k,
                *floor_height,
                *split_seed,
                *split_take,
                out.as_deref(),
                seed,
            )
        }
        Command::Compare { reports, out } => run_compare(reports, out.as_deref(), seed),
    }
}

fn write_json_result(out: Option<&Path>, value: &serde_json::Value) -> Result<(), CmdError> {
    let text = serde_json::to_string_pretty(value).expect("serializable result");
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())
            .map_err(|e| CmdError::Io { path: path.to_path_buf(), source: e }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_stats(csv: &Path, out: Option<&Path>, seed: u64) -> Result<(), CmdError> {
    let dataset = load_csv(csv, &SchemaOptions::default())?;
    let stats = compute_stats(&dataset);
    let provenance = Provenance::new("stats", seed, serde_json::json!({"input": csv}))
        .with_input("input", sha256_file(csv).map_err(|e| CmdError::Io {
            path: csv.to_path_buf(),
            source: e,
        })?);
    let report = serde_json::json!({
        "schema_version": 1,
        "stats": stats,
        "provenance": provenance,
    });
    write_json_result(out, &report)
}

#[allow(clippy::too_many_arguments)]
fn run_fit(
    csv: &Path,
    strategy: StrategyArg,
    building: i32,
    floor: Option<i32>,
    filter: ApFilter,
    floor_height: f64,
    fit_args: &FitArgs,
    out: &Path,
    seed: u64,
) -> Result<(), CmdError> {
    let dataset = load_csv(csv, &SchemaOptions::default())?;
    let strategy = resolve_strategy(strategy, building, floor)?;
    let partition = make_partition(&dataset, strategy, &filter, floor_height)?;
    let cfg = fit_args.config(seed);

    let n = partition.record_indices.len();
    let m = partition.selected_aps.len();
    if n * m > cfg.budget {
        return Err(CmdError::Validation(format!(
            "partition has {n} points x {m} APs = {} scalar entries, over the budget of {} \
             (raise --budget, tighten the AP filter, or use `augment`, which fits AP chunks)",
            n * m,
            cfg.budget
        )));
    }

    let data = crate::augment::partition_training_set(&dataset, &partition)?;
    let template = crate::augment::fit_template(&cfg, m, partition.input_dim);
    let opts = FitOptions {
        restarts: cfg.restarts,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        seed,
        learn_kappa: cfg.learn_kappa,
        ..Default::default()
    };
    let (model, report) = fit(&template, &data, &opts)?;
    eprintln!(
        "fpaug: fitted {} ({} points, {} APs): log marginal {:.3}, {} iterations, restart {}{}",
        strategy.describe(),
        n,
        m,
        report.log_marginal,
        report.iterations,
        report.restart,
        if report.converged { "" } else { " (not converged)" }
    );

    let provenance = Provenance::new(
        "fit",
        seed,
        serde_json::json!({
            "input": csv,
            "strategy": strategy,
            "ap_filter": filter,
            "floor_height": floor_height,
            "fit": cfg,
        }),
    )
    .with_input("input", sha256_file(csv).map_err(|e| CmdError::Io {
        path: csv.to_path_buf(),
        source: e,
    })?);
    let checkpoint = ModelCheckpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        model,
        output_ids: data.output_ids().to_vec(),
        fit: report,
        provenance,
    };
    save_checkpoint(out, &checkpoint)?;
    Ok(())
}

fn resolve_strategy(
    strategy: StrategyArg,
    building: i32,
    floor: Option<i32>,
) -> Result<PartitionStrategy, CmdError> {
    Ok(match strategy {
        StrategyArg::SingleFloor => PartitionStrategy::SingleFloor {
            building,
            floor: floor.ok_or_else(|| {
                CmdError::Validation("--floor is required for single_floor".into())
            })?,
        },
        StrategyArg::NeighboringFloors => PartitionStrategy::NeighboringFloors {
            building,
            floor: floor.ok_or_else(|| {
                CmdError::Validation("--floor is required for neighboring_floors".into())
            })?,
        },
        StrategyArg::SingleBuilding => PartitionStrategy::SingleBuilding { building },
    })
}

fn run_augment(
    csv: &Path,
    plan_path: &Path,
    fit_args: &FitArgs,
    out: &Path,
    seed: u64,
    strict: bool,
    verbose: u8,
) -> Result<(), CmdError> {
    let dataset = load_csv(csv, &SchemaOptions::default())?;
    let plan_text = std::fs::read_to_string(plan_path)
        .map_err(|e| CmdError::Io { path: plan_path.to_path_buf(), source: e })?;
    let plan_value: serde_json::Value = serde_json::from_str(&plan_text)
        .map_err(|e| CmdError::Json { path: plan_path.to_path_buf(), source: e })?;
    let unknown = plan_unknown_keys(&plan_value);
    if !unknown.is_empty() {
        if strict {
            return Err(CmdError::Strict(format!(
                "plan has unknown fields: {}",
                unknown.join(", ")
            )));
        }
        for key in &unknown {
            eprintln!("fpaug: warning: ignoring unknown plan field `{key}`");
        }
    }
    let plan: AugmentationPlan = serde_json::from_value(plan_value)
        .map_err(|e| CmdError::Json { path: plan_path.to_path_buf(), source: e })?;
    let cfg = fit_args.config(seed);

    let outcome = augment(&dataset, &plan, &cfg)?;
    for report in &outcome.reports {
        if report.chunks > 1 {
            eprintln!(
                "fpaug: warning: {} exceeded the {}-entry budget; fitted {} AP chunks \
                 (cross-chunk correlations are not modeled)",
                report.strategy, cfg.budget, report.chunks
            );
        }
        if verbose > 0 {
            eprintln!(
                "fpaug: {} -> {} generated from {} records, {} APs, {} chunk(s)",
                report.strategy,
                report.n_generated,
                report.n_records,
                report.n_aps_selected,
                report.chunks
            );
        }
    }
    if !outcome.failures.is_empty() {
        eprintln!("fpaug: warning: {} partition(s) failed:", outcome.failures.len());
        for f in &outcome.failures {
            eprintln!("fpaug:   {}: {}", f.context, f.error);
        }
    }

    write_csv(&outcome.dataset, out, &SchemaOptions::default())?;

    let provenance = Provenance::new(
        "augment",
        seed,
        serde_json::json!({
            "input": csv,
            "plan_file": plan_path,
            "fit": cfg,
        }),
    )
    .with_input("input", sha256_file(csv).map_err(|e| CmdError::Io {
        path: csv.to_path_buf(),
        source: e,
    })?)
    .with_input("plan", sha256_file(plan_path).map_err(|e| CmdError::Io {
        path: plan_path.to_path_buf(),
        source: e,
    })?);
    let sidecar = serde_json::json!({
        "schema_version": 1,
        "plan": plan,
        "generated": outcome.generated,
        "original_records": dataset.records.len(),
        "partitions": outcome.reports,
        "failures": outcome.failures,
        "provenance": provenance,
    });
    let sidecar_path = sidecar_path_for(out);
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("serializable sidecar"),
    )
    .map_err(|e| CmdError::Io { path: sidecar_path.clone(), source: e })?;

    eprintln!(
        "fpaug: wrote {} records ({} generated) to {} (+ {})",
        outcome.dataset.records.len(),
        outcome.generated,
        out.display(),
        sidecar_path.display()
    );
    if strict && !outcome.failures.is_empty() {
        return Err(CmdError::Strict(format!(
            "{} partition(s) failed",
            outcome.failures.len()
        )));
    }
    Ok(())
}

pub fn sidecar_path_for(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".provenance.json");
    PathBuf::from(os)
}

#[allow(clippy::too_many_arguments)]
fn run_evaluate(
    train: &Path,
    test: &Path,
    k: usize,
    floor_height: f64,
    split_seed: Option<u64>,
    split_take: SplitTake,
    out: Option<&Path>,
    seed: u64,
) -> Result<(), CmdError> {
    let train_ds = load_csv(train, &SchemaOptions::default())?;
    let test_ds = load_csv(test, &SchemaOptions::default())?;
    if train_ds.ap_ids != test_ds.ap_ids {
        return Err(CmdError::Validation(
            "train and test CSVs carry different AP columns".into(),
        ));
    }

    let mut warnings = Vec::new();
    let queries = match split_seed {
        Some(s) => {
            let take_second = matches!(split_take, SplitTake::Second);
            split_half(&test_ds.records, s, take_second)
        }
        None => test_ds.records.clone(),
    };
    if queries.is_empty() {
        return Err(CmdError::Validation("no query records to evaluate".into()));
    }
    if k > train_ds.records.len() {
        warnings.push(format!(
            "k = {k} exceeds the training set size {}; clamped",
            train_ds.records.len()
        ));
    }

    let opts = MetricOpts { k, floor_height, ..Default::default() };
    let preds = localize_all(&train_ds, &queries, &opts)?;
    let metrics = score(&preds, &queries, floor_height)?;

    let mut hashes = BTreeMap::new();
    hashes.insert(
        "train".to_string(),
        sha256_file(train).map_err(|e| CmdError::Io { path: train.to_path_buf(), source: e })?,
    );
    hashes.insert(
        "test".to_string(),
        sha256_file(test).map_err(|e| CmdError::Io { path: test.to_path_buf(), source: e })?,
    );
    if let Some(s) = split_seed {
        let take = match split_take {
            SplitTake::First => "first",
            SplitTake::Second => "second",
        };
        hashes.insert("test_split".to_string(), format!("seed={s},take={take}"));
        // The split descriptor is part of the query-set identity.
        let test_hash = hashes.get("test").cloned().unwrap_or_default();
        hashes.insert("test".to_string(), format!("{test_hash}:{}", hashes["test_split"]));
    }

    let provenance = Provenance::new(
        "evaluate",
        seed,
        serde_json::json!({
            "train": train,
            "test": test,
            "k": k,
            "floor_height": floor_height,
            "split_seed": split_seed,
        }),
    );
    let report = EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metrics,
        config: opts,
        dataset_hashes: hashes,
        queries: queries.len(),
        warnings: warnings.clone(),
        provenance,
    };
    for w in &warnings {
        eprintln!("fpaug: warning: {w}");
    }
    eprintln!(
        "fpaug: building hit {:.2}%, floor hit {:.2}%, mean 3D error {:.3} m over {} queries",
        metrics.building_hit_pct,
        metrics.floor_hit_pct,
        metrics.mean_3d_error_m,
        queries.len()
    );
    write_json_result(out, &serde_json::to_value(&report).expect("serializable report"))
}

fn run_compare(reports: &[PathBuf], out: Option<&Path>, seed: u64) -> Result<(), CmdError> {
    let mut loaded = Vec::new();
    for path in reports {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Io { path: path.clone(), source: e })?;
        let report: EvaluationReport = serde_json::from_str(&text)
            .map_err(|e| CmdError::Json { path: path.clone(), source: e })?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        loaded.push((label, report));
    }
    let comparison = compare_runs(&loaded)?;
    eprint!("{}", render_comparison(&comparison));

    let provenance = Provenance::new(
        "compare",
        seed,
        serde_json::json!({"reports": reports}),
    );
    let value = serde_json::json!({
        "schema_version": 1,
        "comparison": comparison,
        "provenance": provenance,
    });
    write_json_result(out, &value)
}
