//! `vdeh` command-line driver.
//!
//! Every command prints its resolved configuration before doing any work.
//! Failures print one `error: <kind>: <message>` line and exit nonzero.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vdeh::eval::{
    bit_independence_test, evaluate_model, exact_knn, grid_search_psi, occupancy_stats,
    run_protocol, sample_training_set, EvalReport, PairKind, Split,
};
use vdeh::io::{
    load_codes, load_model, read_dataset, save_codes, save_model, write_dataset, DataFormat,
    RunConfig,
};
use vdeh::synth::{self, GaussianMixture};
use vdeh::{AnyModel, Encoder, Error, Matrix, Metric, ModelKind};

const ALPHA: f64 = 0.001;

#[derive(Parser)]
#[command(name = "vdeh", version, about = "Voronoi diagram encoded hashing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model on a (sampled) training set and save it.
    Build(BuildArgs),
    /// Encode a dataset with a saved model into a code database.
    Encode(EncodeArgs),
    /// Rank a code database against query vectors.
    Query(QueryArgs),
    /// Run the retrieval protocol and write a report with CSV plot data.
    Eval(EvalArgs),
    /// Cell occupancy and bit independence of a model on a dataset.
    Stats(StatsArgs),
    /// Write a deterministic synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input vectors (.fvecs or .csv).
    #[arg(long)]
    data: PathBuf,
    /// Overrides the format implied by the file extension.
    #[arg(long)]
    format: Option<DataFormat>,
    /// The CSV input starts with a header row.
    #[arg(long)]
    header: bool,
}

impl DataArgs {
    fn format(&self) -> Result<DataFormat, Error> {
        resolve_format(&self.data, self.format)
    }

    fn read(&self) -> Result<Matrix<f32>, Error> {
        read_dataset(&self.data, self.format()?, self.header)
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Vdeh)]
    model_kind: KindArg,
    /// Anchors per table; must be a power of two.
    #[arg(long, default_value_t = 16)]
    psi: usize,
    /// Code length in bits.
    #[arg(long, default_value_t = 128)]
    bits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rows sampled for training; all rows by default.
    #[arg(long)]
    train_size: Option<usize>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Code database file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Query vectors.
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Code database produced by `encode`.
    #[arg(long)]
    db: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// CSV file for the results; stdout by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Queries drawn from the data and held out of the database.
    #[arg(long, default_value_t = 500)]
    queries: usize,
    /// Exact Euclidean neighbours counted as relevant.
    #[arg(long, default_value_t = 100)]
    gt_k: usize,
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Use this query file instead of holding queries out; the whole
    /// `--data` set then serves as the database.
    #[arg(long)]
    query_data: Option<PathBuf>,
    /// Evaluate a saved model instead of building one.
    #[arg(long, conflicts_with = "grid_psi")]
    model_file: Option<PathBuf>,
    /// Repeat the run for every psi from 4 to 256 compatible with --bits.
    #[arg(long)]
    grid_psi: bool,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Directory for report.txt and independence.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::GaussianMixture)]
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    /// Per-coordinate standard deviation around each centre.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Centres are drawn uniformly from [-range, range]^d.
    #[arg(long, default_value_t = 10.0)]
    center_range: f64,
    /// Bounds of the uniform kind.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    low: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    high: f64,
    #[arg(long)]
    format: Option<DataFormat>,
    /// Also write the mixture centres as CSV.
    #[arg(long)]
    centers: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Vdeh,
    Lsh,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Vdeh => ModelKind::Vdeh,
            KindArg::Lsh => ModelKind::Lsh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Vdeh,
    Hamming,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Vdeh => Metric::Vdeh,
            MetricArg::Hamming => Metric::Hamming,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Uniform,
    GaussianMixture,
}

fn resolve_format(path: &Path, explicit: Option<DataFormat>) -> Result<DataFormat, Error> {
    explicit
        .or_else(|| DataFormat::from_path(path))
        .ok_or_else(|| {
            Error::param(format!(
                "cannot infer the format of {}; pass --format",
                path.display()
            ))
        })
}

/// Projection codes have one-bit blocks, so both metrics coincide there;
/// the default follows the model kind.
fn default_metric(kind: ModelKind) -> Metric {
    match kind {
        ModelKind::Vdeh => Metric::Vdeh,
        ModelKind::Lsh => Metric::Hamming,
    }
}

fn run_config(data: &DataArgs, model: &ModelArgs, out: Option<&Path>) -> Result<RunConfig, Error> {
    let kind = ModelKind::from(model.model_kind);
    Ok(RunConfig {
        model_kind: kind,
        psi: model.psi,
        code_bits: model.bits,
        seed: model.seed,
        metric: default_metric(kind),
        train_size: model.train_size,
        data_path: Some(data.data.clone()),
        format: Some(data.format()?),
        out: out.map(Path::to_path_buf),
        ..Default::default()
    })
}

fn print_config(cfg: &RunConfig) {
    println!("[config]\n{cfg}\n");
}

fn cmd_build(args: &BuildArgs) -> Result<(), Error> {
    let cfg = run_config(&args.data, &args.model, Some(&args.out))?;
    print_config(&cfg);
    cfg.validate()?;
    let data = args.data.read()?;
    let (train, _) = sample_training_set(&data, cfg.train_size, cfg.seed)?;
    let start = Instant::now();
    let model = vdeh::eval::build_model(&cfg, &train)?;
    let elapsed = start.elapsed();
    save_model(&args.out, &model)?;
    println!("train_rows = {}", train.rows());
    println!("build_ms = {:.3}", elapsed.as_secs_f64() * 1e3);
    println!("model = {}", args.out.display());
    Ok(())
}

fn print_model(model: &AnyModel<f32>, path: &Path) {
    println!("[model]");
    println!("file = {}", path.display());
    println!("model_kind = {}", model.kind());
    if let AnyModel::Vdeh(m) = model {
        println!("psi = {}", m.psi());
    }
    println!("code_bits = {}", model.layout().code_bits());
    println!("dim = {}", model.dim());
    println!("seed = {}\n", model.seed());
}

fn cmd_encode(args: &EncodeArgs) -> Result<(), Error> {
    let model: AnyModel<f32> = load_model(&args.model)?;
    print_model(&model, &args.model);
    println!(
        "[config]\ndata = {}\nformat = {}\nout = {}\n",
        args.data.data.display(),
        args.data.format()?,
        args.out.display()
    );
    let data = args.data.read()?;
    let start = Instant::now();
    let db = model.encode_dataset(&data)?;
    let elapsed = start.elapsed();
    save_codes(&args.out, &db)?;
    println!("codes = {}", db.len());
    println!("encode_ms = {:.3}", elapsed.as_secs_f64() * 1e3);
    Ok(())
}

fn cmd_query(args: &QueryArgs) -> Result<(), Error> {
    let model: AnyModel<f32> = load_model(&args.model)?;
    let metric = args
        .metric
        .map_or(default_metric(model.kind()), Metric::from);
    print_model(&model, &args.model);
    println!(
        "[config]\ndata = {}\ndb = {}\nk = {}\nmetric = {metric}\n",
        args.data.data.display(),
        args.db.display(),
        args.k
    );
    let db = load_codes(&args.db)?;
    if db.layout() != model.layout() {
        return Err(Error::param(
            "code database layout does not match the model",
        ));
    }
    let queries = args.data.read()?;
    let codes: Vec<_> = model.encode_dataset(&queries)?.iter().collect();
    let results = db.batch_knn(&codes, args.k, metric)?;

    let mut csv = String::from("query,rank,row_id,distance\n");
    for (q, hits) in results.iter().enumerate() {
        for (rank, h) in hits.iter().enumerate() {
            let _ = writeln!(csv, "{q},{},{},{}", rank + 1, h.row_id, h.distance);
        }
    }
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| Error::io(path, e))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let mut cfg = run_config(&args.data, &args.model, Some(&args.out))?;
    cfg.query_count = args.queries;
    cfg.ground_truth_k = args.gt_k;
    if let Some(m) = args.metric {
        cfg.metric = m.into();
    }
    let data = args.data.read()?;

    let loaded = match &args.model_file {
        Some(path) => {
            let model: AnyModel<f32> = load_model(path)?;
            cfg.model_kind = model.kind();
            cfg.code_bits = model.layout().code_bits();
            cfg.seed = model.seed();
            if let AnyModel::Vdeh(m) = &model {
                cfg.psi = m.psi();
            }
            Some(model)
        }
        None => None,
    };

    let explicit = match &args.query_data {
        Some(path) => {
            let queries: Matrix<f32> = read_dataset(
                path,
                resolve_format(path, args.data.format)?,
                args.data.header,
            )?;
            cfg.query_count = queries.rows();
            let (database, rows) = sample_training_set(&data, cfg.train_size, cfg.seed)?;
            Some(Split {
                database,
                database_rows: rows,
                query_rows: (0..queries.rows()).collect(),
                queries,
            })
        }
        None => None,
    };
    print_config(&cfg);
    cfg.validate()?;

    if args.grid_psi {
        let reports = match &explicit {
            Some(split) => grid_on_split(split, &cfg)?,
            None => grid_search_psi(&data, &cfg)?,
        };
        return write_grid(&reports, &args.out);
    }

    let report = match (&explicit, &loaded) {
        (None, None) => run_protocol(&data, &cfg)?,
        (split, model) => {
            let split = match split {
                Some(s) => s.clone(),
                None => {
                    vdeh::eval::split_dataset(&data, cfg.query_count, cfg.train_size, cfg.seed)?
                }
            };
            let gt = exact_knn(&split.database, &split.queries, cfg.ground_truth_k)?;
            match model {
                Some(m) => evaluate_model(m, &split, &gt, &cfg)?,
                None => vdeh::eval::evaluate_split(&split, &gt, &cfg)?,
            }
        }
    };
    report.write_to_dir(&args.out)?;
    print_summary(&report);
    Ok(())
}

fn grid_on_split(split: &Split<f32>, cfg: &RunConfig) -> Result<Vec<EvalReport>, Error> {
    let gt = exact_knn(&split.database, &split.queries, cfg.ground_truth_k)?;
    vdeh::eval::psi_grid(cfg.code_bits)
        .into_iter()
        .map(|psi| vdeh::eval::evaluate_split(split, &gt, &RunConfig { psi, ..cfg.clone() }))
        .collect()
}

fn write_grid(reports: &[EvalReport], out: &Path) -> Result<(), Error> {
    let best = reports
        .iter()
        .max_by(|a, b| a.map.total_cmp(&b.map))
        .ok_or_else(|| {
            Error::param("no psi in 4..=256 has a bit width dividing the code length")
        })?;
    let mut csv = String::from("psi,map,build_ms\n");
    for r in reports {
        let _ = writeln!(
            csv,
            "{},{},{:.3}",
            r.config.psi,
            r.map,
            r.timings.build.as_secs_f64() * 1e3
        );
        r.write_to_dir(&out.join(format!("psi_{}", r.config.psi)))?;
    }
    let path = out.join("grid.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    for r in reports {
        println!("psi = {} map = {:.6}", r.config.psi, r.map);
    }
    println!("best_psi = {}", best.config.psi);
    println!("best_map = {:.6}", best.map);
    Ok(())
}

fn print_summary(r: &EvalReport) {
    println!("method = {}", r.method);
    println!("database_size = {}", r.database_size);
    println!("query_count = {}", r.query_count);
    println!("map = {:.6}", r.map);
    println!("build_ms = {:.3}", r.timings.build.as_secs_f64() * 1e3);
    println!("encode_ms = {:.3}", r.timings.encode.as_secs_f64() * 1e3);
    println!("query_ms = {:.3}", r.timings.query.as_secs_f64() * 1e3);
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Error> {
    let model: AnyModel<f32> = load_model(&args.model)?;
    print_model(&model, &args.model);
    println!(
        "[config]\ndata = {}\nformat = {}\n",
        args.data.data.display(),
        args.data.format()?
    );
    let data = args.data.read()?;
    let db = model.encode_dataset(&data)?;

    let mut text = String::new();
    if let AnyModel::Vdeh(m) = &model {
        let occ = occupancy_stats(m, &data)?;
        let _ = writeln!(text, "[occupancy]");
        let _ = writeln!(text, "tables = {}", occ.tables.len());
        let _ = writeln!(text, "mean_entropy_bits = {:.6}", occ.mean_entropy_bits());
        let _ = writeln!(text, "alpha = {ALPHA}");
        let _ = writeln!(text, "uniform_not_rejected = {}\n", occ.non_rejected(ALPHA));
    }
    let ind = bit_independence_test(&db)?;
    let _ = writeln!(text, "[independence]");
    let _ = writeln!(text, "samples = {}", ind.samples);
    let _ = writeln!(text, "degenerate_pairs = {}", ind.degenerate());
    for (label, kind) in [
        ("all", None),
        ("intra_block", Some(PairKind::IntraBlock)),
        ("inter_block", Some(PairKind::InterBlock)),
    ] {
        let _ = writeln!(text, "{label}.tested = {}", ind.tested(kind));
        let _ = writeln!(
            text,
            "{label}.non_rejection_rate = {:.6}",
            ind.non_rejection_rate(ALPHA, kind)
        );
    }
    print!("{text}");

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.txt");
        fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        let mut csv = String::from("first,second,kind,statistic,p_value\n");
        for p in &ind.pairs {
            let kind = match p.kind {
                PairKind::IntraBlock => "intra",
                PairKind::InterBlock => "inter",
            };
            let _ = match p.test {
                Some(t) => writeln!(
                    csv,
                    "{},{},{kind},{},{}",
                    p.first, p.second, t.statistic, t.p_value
                ),
                None => writeln!(csv, "{},{},{kind},,", p.first, p.second),
            };
        }
        let path = dir.join("independence.csv");
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Error> {
    let format = resolve_format(&args.out, args.format)?;
    let kind = match args.kind {
        SynthKind::Uniform => "uniform",
        SynthKind::GaussianMixture => "gaussian-mixture",
    };
    println!(
        "[config]\nkind = {kind}\nn = {}\nd = {}\nseed = {}",
        args.n, args.d, args.seed
    );
    match args.kind {
        SynthKind::Uniform => println!("low = {}\nhigh = {}", args.low, args.high),
        SynthKind::GaussianMixture => println!(
            "clusters = {}\nspread = {}\ncenter_range = {}",
            args.clusters, args.spread, args.center_range
        ),
    }
    println!("format = {format}\nout = {}\n", args.out.display());

    let data: Matrix<f32> = match args.kind {
        SynthKind::Uniform => synth::uniform(args.n, args.d, args.low, args.high, args.seed)?,
        SynthKind::GaussianMixture => {
            let gm = GaussianMixture {
                clusters: args.clusters,
                spread: args.spread,
                center_range: args.center_range,
            };
            let sample = gm.sample(args.n, args.d, args.seed)?;
            if let Some(path) = &args.centers {
                write_dataset(path, DataFormat::Csv, &sample.centers)?;
            }
            sample.data
        }
    };
    write_dataset(&args.out, format, &data)?;
    println!("rows = {}", data.rows());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
