use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecsdbn_bench::aggregate::{aggregate, format_table, write_summaries};
use ecsdbn_bench::bundle::ModelBundle;
use ecsdbn_bench::catalog::read_catalog;
use ecsdbn_bench::compare::compare;
use ecsdbn_bench::config::{parse_list, Method, RunSettings};
use ecsdbn_bench::keel::read_keel;
use ecsdbn_bench::record::{read_records, write_records};
use ecsdbn_bench::runner::run_benchmark;
use ecsdbn_bench::split::MinMax;
use ecsdbn_bench::BenchError;
use ecsdbn_core::metrics::{confusion, gmean};
use ecsdbn_core::rng::RngStream;
use ecsdbn_core::trainer::train;

#[derive(Parser)]
#[command(
    name = "ecsdbn",
    version,
    about = "Evolutionary cost-sensitive deep belief networks on KEEL data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (data set x method x trial x fold) benchmark grid.
    Run(RunArgs),
    /// Summarize a runs CSV as mean and standard deviation per cell.
    Aggregate {
        runs: PathBuf,
        /// Write the summary CSV here instead of printing tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a control method against the others in a runs CSV.
    Compare {
        runs: PathBuf,
        #[arg(long, default_value = "ecs-dbn")]
        control: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Also write the comparison as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the schema and class balance of a KEEL file.
    InspectDataset { path: PathBuf },
    /// Train an ECS-DBN on a whole KEEL file and save it as JSON.
    Train {
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Label a KEEL file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        data: PathBuf,
        /// Write `row,predicted,actual` CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct ModelArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    finetune_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    finetune_lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// DE population size.
    #[arg(long)]
    population: Option<usize>,
    /// Maximum DE generations.
    #[arg(long)]
    generations: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` settings file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Comma-separated: ecs-dbn, dbn.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// keel (catalog train/test pairs) or cv (stratified k-fold).
    #[arg(long)]
    split: Option<String>,
    /// fixed (use --layers) or random (widths drawn from [5, 50]).
    #[arg(long)]
    hidden: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
}

impl ModelArgs {
    fn apply(&self, s: &mut RunSettings) -> Result<(), BenchError> {
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = &self.layers {
            s.layers = parse_list("layers", v)?;
        }
        if let Some(v) = self.pretrain_epochs {
            s.pretrain_epochs = v;
        }
        if let Some(v) = self.finetune_epochs {
            s.finetune_epochs = v;
        }
        if let Some(v) = self.learning_rate {
            s.learning_rate = v;
        }
        if let Some(v) = self.finetune_lr {
            s.finetune_lr = v;
        }
        if let Some(v) = self.batch_size {
            s.batch_size = v;
        }
        if let Some(v) = self.population {
            s.population = v;
        }
        if let Some(v) = self.generations {
            s.generations = v;
        }
        Ok(())
    }
}

impl RunArgs {
    fn settings(&self) -> Result<RunSettings, BenchError> {
        let mut s = RunSettings::default();
        if let Some(path) = &self.config {
            s.apply_config_file(path)?;
        }
        if let Some(v) = &self.catalog {
            s.catalog = Some(v.clone());
        }
        if let Some(v) = &self.methods {
            s.set("methods", v)?;
        }
        if let Some(v) = self.trials {
            s.trials = v;
        }
        if let Some(v) = self.folds {
            s.folds = v;
        }
        if let Some(v) = &self.split {
            s.set("split", v)?;
        }
        if let Some(v) = &self.hidden {
            s.set("hidden", v)?;
        }
        if let Some(v) = &self.out {
            s.out = v.clone();
        }
        if let Some(v) = self.jobs {
            s.jobs = v;
        }
        self.model.apply(&mut s)?;
        s.validate()?;
        Ok(s)
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(BenchError),
    Runtime(BenchError),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    File::create(path).map(BufWriter::new).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn open(path: &Path) -> Result<File, BenchError> {
    File::open(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn stdout_err(e: io::Error) -> BenchError {
    BenchError::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

/// Returns whether every data set and run succeeded.
fn cmd_run(args: &RunArgs) -> Result<bool, Failure> {
    let settings = args.settings()?;
    let catalog = settings
        .catalog
        .clone()
        .ok_or_else(|| BenchError::Config("--catalog is required (flag or config file)".into()))?;
    let entries = read_catalog(&catalog).map_err(Failure::Config)?;
    if entries.is_empty() {
        return Err(BenchError::Config(format!("{}: catalog lists no data sets", catalog.display())).into());
    }
    std::fs::create_dir_all(&settings.out).map_err(|e| BenchError::Io {
        path: settings.out.clone(),
        source: e,
    })?;

    log::info!(
        "{} data sets, methods {:?}, {} trials x {} folds, seed {}",
        entries.len(),
        settings.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        settings.trials,
        settings.folds,
        settings.seed
    );
    let report = run_benchmark(&entries, &settings)?;
    for f in &report.failures {
        match f.run {
            Some((t, k)) => eprintln!("failed: {} trial {t} fold {k}: {}", f.dataset, f.message),
            None => eprintln!("failed: {}: {}", f.dataset, f.message),
        }
    }

    let runs_path = settings.out.join("runs.csv");
    write_records(create(&runs_path)?, &report.records)?;
    println!("wrote {} records to {}", report.records.len(), runs_path.display());
    if report.records.is_empty() {
        return Ok(false);
    }

    let summaries = aggregate(&report.records)?;
    write_summaries(create(&settings.out.join("summary.csv"))?, &summaries)?;
    println!("{}", format_table(&summaries, "gmean"));

    if settings.methods.len() >= 2 {
        let control = if settings.methods.contains(&Method::EcsDbn) {
            Method::EcsDbn
        } else {
            settings.methods[0]
        };
        let cmp = compare(&report.records, control.name(), settings.alpha)?;
        cmp.write_csv(create(&settings.out.join("compare.csv"))?)?;
        let text = cmp.to_text();
        std::fs::write(settings.out.join("compare.txt"), &text).map_err(|e| BenchError::Io {
            path: settings.out.join("compare.txt"),
            source: e,
        })?;
    }
    Ok(report.failures.is_empty())
}

fn cmd_aggregate(runs: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let records = read_records(open(runs)?)?;
    let summaries = aggregate(&records)?;
    match out {
        Some(path) => write_summaries(create(path)?, &summaries)?,
        None => {
            let mut stdout = io::stdout().lock();
            for metric in ecsdbn_bench::record::METRIC_NAMES {
                writeln!(stdout, "{}", format_table(&summaries, metric)).map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

fn cmd_compare(runs: &Path, control: &str, alpha: f64, csv: Option<&Path>) -> Result<(), Failure> {
    let records = read_records(open(runs)?)?;
    let report = compare(&records, control, alpha)?;
    if let Some(path) = csv {
        report.write_csv(create(path)?)?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<(), Failure> {
    let ds = read_keel(path)?;
    println!("name:        {}", ds.name);
    println!("samples:     {}", ds.n_samples());
    println!(
        "attributes:  {} ({} encoded features)",
        ds.n_attributes(),
        ds.features.cols()
    );
    for (name, count) in ds.class_names.iter().zip(ds.class_counts()) {
        println!("class {name:<12} {count}");
    }
    println!("minority:    {}", ds.class_names[ds.minority_class]);
    println!("IR:          {:.4}", ds.imbalance_ratio()?);
    Ok(())
}

fn cmd_train(data: &Path, out: &Path, args: &ModelArgs) -> Result<(), Failure> {
    let mut settings = RunSettings::default();
    args.apply(&mut settings)?;
    settings.validate()?;
    let ds = read_keel(data)?;
    let scaler = MinMax::fit(&ds.features);
    let x = scaler.apply(&ds.features)?;
    let cfg = settings.dbn_config(ds.n_classes(), settings.seed, settings.layers.clone());
    let model = train(
        &x,
        &ds.labels,
        &cfg,
        settings.de_params(),
        &RngStream::new(settings.seed, 0xDE),
    )
    .map_err(BenchError::from)?;
    println!(
        "training G-mean {:.4} (best initial {:.4}), costs {:?}",
        model.training_fitness,
        model.initial_best_fitness,
        model.best_costs.as_slice()
    );
    ModelBundle::new(&ds, scaler, model).save(out)?;
    println!("saved {}", out.display());
    Ok(())
}

fn cmd_predict(model: &Path, data: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let bundle = ModelBundle::load(model)?;
    let ds = read_keel(data)?;
    let predicted = bundle.predict(&ds)?;
    let mut w: Box<dyn Write> = match out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["row", "predicted", "actual"])
        .map_err(BenchError::from)?;
    for (i, (p, &y)) in predicted.iter().zip(&ds.labels).enumerate() {
        csv.write_record([i.to_string().as_str(), p, &ds.class_names[y]])
            .map_err(BenchError::from)?;
    }
    csv.flush().map_err(stdout_err)?;
    drop(csv);

    let mapped: Option<Vec<(usize, usize)>> = predicted
        .iter()
        .zip(&ds.labels)
        .map(|(p, &y)| {
            let truth = bundle.class_names.iter().position(|c| c == &ds.class_names[y])?;
            let pred = bundle.class_names.iter().position(|c| c == p)?;
            Some((truth, pred))
        })
        .collect();
    if let Some(pairs) = mapped {
        let (truth, pred): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let cm = confusion(&truth, &pred, bundle.class_names.len()).map_err(BenchError::from)?;
        match gmean(&cm) {
            Ok(g) => eprintln!("G-mean on {}: {g:.4}", data.display()),
            Err(e) => eprintln!("G-mean undefined: {e}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|ok| if ok { 0 } else { 1 }),
        Command::Aggregate { runs, out } => cmd_aggregate(runs, out.as_deref()).map(|_| 0),
        Command::Compare {
            runs,
            control,
            alpha,
            csv,
        } => cmd_compare(runs, control, *alpha, csv.as_deref()).map(|_| 0),
        Command::InspectDataset { path } => cmd_inspect(path).map(|_| 0),
        Command::Train { data, out, model } => cmd_train(data, out, model).map(|_| 0),
        Command::Predict { model, data, out } => cmd_predict(model, data, out.as_deref()).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
