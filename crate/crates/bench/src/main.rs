use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reptensor::synthetic::SyntheticConfig;
use reptensor_bench::config::{ExperimentConfig, Mode};
use reptensor_bench::dataset::{load_dataset, save_dataset, ImageDataset};
use reptensor_bench::error::{BenchError, Result};
use reptensor_bench::experiment::{fit_method, run_experiment, FittedModel, ResultTable};
use reptensor_bench::output::{emit_results, format_g6, Format};
use reptensor_bench::synthetic_dataset;
use serde_json::json;

/// Two-dimensional supervised projections with repulsion: fitting,
/// evaluation and seeded recognition benchmarks on graymap datasets.
#[derive(Parser)]
#[command(name = "reptensor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one method on every image of the dataset and write the projectors.
    Fit(RunArgs),
    /// Print mean test error per method and dimension.
    Eval(RunArgs),
    /// Like eval, with fit timings; writes result files when --out is given.
    Bench(RunArgs),
    /// Run the full experiment and write csv, plot series and metadata to --out.
    Sweep(RunArgs),
    /// Write the synthetic confusable-class dataset as graymaps.
    GenSynthetic(SynthArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat TOML file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with one subdirectory of .pgm images per class.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Method names, comma separated (e.g. 2D-PCA,2D-OLPP-R,LDA).
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, value_parser = clap::value_parser!(Mode))]
    mode: Option<Mode>,
    /// Projection dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    train_per_class: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repulsion strength.
    #[arg(long)]
    beta: Option<f64>,
    /// Neighbours per node in the kNN graph.
    #[arg(long)]
    knn: Option<usize>,
    /// Gaussian kernel width.
    #[arg(long)]
    t: Option<f64>,
    /// 2D-PCA reduction `p1,p2` applied before 2D methods.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    preprocess: Option<Vec<usize>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Resize images to `rows,cols` while loading.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    resize: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = SyntheticConfig::default().per_class)]
    per_class: usize,
}

fn pair(v: Option<Vec<usize>>, flag: &str) -> Result<Option<[usize; 2]>> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some([a, b])),
        Some(_) => Err(BenchError::Config(format!("--{flag} takes two values"))),
    }
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.dataset.is_some() {
            cfg.dataset = self.dataset;
        }
        if !self.methods.is_empty() {
            cfg.methods = self.methods;
        }
        if !self.dims.is_empty() {
            cfg.dims = self.dims;
        }
        cfg.mode = self.mode.unwrap_or(cfg.mode);
        cfg.train_per_class = self.train_per_class.unwrap_or(cfg.train_per_class);
        cfg.realizations = self.realizations.unwrap_or(cfg.realizations);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.max_iter = self.max_iter.unwrap_or(cfg.max_iter);
        cfg.beta = self.beta.or(cfg.beta);
        cfg.knn = self.knn.or(cfg.knn);
        cfg.t = self.t.or(cfg.t);
        cfg.jobs = self.jobs.or(cfg.jobs);
        cfg.out = self.out.or(cfg.out);
        cfg.preprocess = pair(self.preprocess, "preprocess")?.or(cfg.preprocess);
        cfg.resize = pair(self.resize, "resize")?.or(cfg.resize);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(cfg: &ExperimentConfig) -> Result<ImageDataset> {
    let root = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| BenchError::Config("no dataset given (--dataset or `dataset` in the config)".into()))?;
    load_dataset(root, cfg.resize.map(|[h, w]| (h, w)))
}

fn matrix_json(m: &reptensor::Matrix) -> serde_json::Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn cmd_fit(cfg: &ExperimentConfig) -> Result<()> {
    let methods = cfg.parsed_methods()?;
    let (&[method], &[d]) = (methods.as_slice(), cfg.dims.as_slice()) else {
        return Err(BenchError::Config("fit takes exactly one method and one dimension".into()));
    };
    let ds = load(cfg)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let model = fit_method(&ds, &all, method, cfg.mode, d, cfg)?;
    let doc = match &model {
        FittedModel::Matrix(r) => json!({
            "method": method.name(),
            "mode": cfg.mode.as_str(),
            "u": matrix_json(&r.pair.u),
            "v": matrix_json(&r.pair.v),
            "objectives": r.trace.objectives,
            "iterations": r.trace.iterations,
            "converged": r.trace.converged,
            "ridge_shifts": r.trace.ridge_shifts,
        }),
        FittedModel::Vector(p) => json!({
            "method": method.name(),
            "basis": matrix_json(&p.basis),
        }),
    };
    let text = serde_json::to_string_pretty(&doc).expect("plain JSON") + "\n";
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| BenchError::Io { path: dir.clone(), source: e })?;
            let path = dir.join("projector.json");
            std::fs::write(&path, text).map_err(|e| BenchError::Io { path: path.clone(), source: e })?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn print_table(table: &ResultTable, timings: bool) {
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{:<12} {:<4} {:>5} {:>10} {:>10}", "method", "mode", "dim", "mean_err", "std_err");
    let _ = writeln!(out, "{}", if timings { format!(" {:>12}", "fit_seconds") } else { String::new() });
    for r in &table.rows {
        let _ = write!(
            out,
            "{:<12} {:<4} {:>5} {:>10} {:>10}",
            r.method,
            r.mode,
            r.dimension,
            format_g6(r.mean_error),
            format_g6(r.std_error)
        );
        if timings {
            let _ = write!(out, " {:>12}", format_g6(r.mean_fit_seconds));
        }
        if r.failures > 0 {
            let _ = write!(out, "  ({} of {} realizations failed)", r.failures, r.failures + r.completed);
        }
        let _ = writeln!(out);
    }
}

fn experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ds = load(cfg)?;
    let table = run_experiment(cfg, &ds)?;
    if let Some(failures) = table.metadata.get("failures").and_then(|f| f.as_array()) {
        for f in failures {
            eprintln!("warning: {}", f.as_str().unwrap_or_default());
        }
    }
    Ok(table)
}

fn write_files(table: &ResultTable, cfg: &ExperimentConfig) -> Result<()> {
    if let Some(dir) = &cfg.out {
        for path in emit_results(table, dir, &[Format::Csv, Format::PlotData])? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args.resolve()?),
        Command::Eval(args) => {
            let cfg = args.resolve()?;
            print_table(&experiment(&cfg)?, false);
            Ok(())
        }
        Command::Bench(args) => {
            let cfg = args.resolve()?;
            let table = experiment(&cfg)?;
            print_table(&table, true);
            write_files(&table, &cfg)
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            if cfg.out.is_none() {
                return Err(BenchError::Config("sweep needs --out".into()));
            }
            write_files(&experiment(&cfg)?, &cfg)
        }
        Command::GenSynthetic(args) => {
            let ds = synthetic_dataset(&SyntheticConfig {
                seed: args.seed,
                per_class: args.per_class,
                ..SyntheticConfig::default()
            })?;
            save_dataset(&ds, &args.out)?;
            eprintln!("wrote {} images in {} classes to {}", ds.len(), ds.class_names.len(), args.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
