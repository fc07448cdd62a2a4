use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use laap::checkpoint::{load_arima, load_lstm, save_arima, save_lstm};
use laap::config::{parse_horizons, RunConfig};
use laap::error::{CliError, Result};
use laap::formats::{
    read_events, read_series, write_histogram_csv, write_indexed_csv, write_json, write_report_csv, write_series,
    write_trace_csv, write_training_log_csv, EventsSidecar,
};
use laap::pipeline::{self, worker_threads};
use laap_core::datagen::generate;
use laap_core::detect::{absolute_detect, laap_detect};
use laap_core::eval::{compare_detectors, EventList};
use laap_core::series::compute_stats;

#[derive(Parser)]
#[command(name = "laap", version, about = "Forecast bursty time series and flag anomalies with local statistics")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic series and its event sidecar.
    Generate(GenerateArgs),
    /// Validate an external series and rewrite it as canonical CSV.
    Ingest(IngestArgs),
    /// Train one LSTM per horizon plus the ARIMA baseline.
    Train(TrainArgs),
    /// Run checkpoints over every window of a series.
    Predict(PredictArgs),
    /// Run the LAAP and absolute detectors over a series.
    Detect(DetectArgs),
    /// Score checkpoints on the test split and compare detectors.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Series file (`.csv` or `.jsonl`).
    #[arg(long, short)]
    out: PathBuf,
    /// Event sidecar; defaults to `<out stem>.events.json`.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    length: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Series file; falls back to `paths.data`.
    #[arg(long, short)]
    data: Option<PathBuf>,
    /// Output directory; falls back to `paths.out_dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    io: DataArgs,
    /// Comma list with ranges, e.g. `4,6,8,10` or `1-10`.
    #[arg(long)]
    horizons: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    input_length: Option<usize>,
    /// Skip fitting the ARIMA baseline.
    #[arg(long)]
    no_arima: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    io: DataArgs,
    #[arg(long = "model", short, required = true)]
    models: Vec<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Values to scan, e.g. a prediction file.
    #[arg(long, short)]
    input: PathBuf,
    /// Series whose training prefix supplies the zone thresholds; defaults
    /// to `--input`.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// True onsets for a detector comparison.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Source index of the first input value, used to align `--events`.
    #[arg(long, default_value_t = 0)]
    first_index: usize,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    window_length: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    io: DataArgs,
    #[arg(long = "model", short, required = true)]
    models: Vec<PathBuf>,
    /// ARIMA checkpoint; fitted on the training prefix when absent.
    #[arg(long)]
    arima: Option<PathBuf>,
    /// Event sidecar; falls back to `paths.events`, then to zone 1/4 onsets.
    #[arg(long)]
    events: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(&mut config, a),
        Command::Ingest(a) => cmd_ingest(&config, a),
        Command::Train(a) => cmd_train(&mut config, a),
        Command::Predict(a) => cmd_predict(&config, a),
        Command::Detect(a) => cmd_detect(&mut config, a),
        Command::Evaluate(a) => cmd_evaluate(&mut config, a),
    }
}

fn data_path(config: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| config.paths.data.clone())
        .ok_or_else(|| CliError::Config("no data file: pass --data or set paths.data".into()))
}

fn out_dir(config: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| config.paths.out_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set paths.out_dir".into()))
}

fn write_config_copy(dir: &Path, config: &RunConfig) -> Result<()> {
    let path = dir.join("config.toml");
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    std::fs::write(&path, config.to_toml()).map_err(|e| CliError::io(path, e))
}

fn print_stats(label: &str, values: &[f64]) -> Result<()> {
    let s = compute_stats(values)?;
    println!(
        "{label}: {} points, mean {:.6}, std {:.6}, zone thresholds [{:.6}, {:.6}]",
        values.len(),
        s.mean,
        s.std,
        s.lower_threshold,
        s.upper_threshold
    );
    Ok(())
}

fn cmd_generate(config: &mut RunConfig, a: GenerateArgs) -> Result<()> {
    if let Some(seed) = a.seed {
        config.generator.seed = seed;
    }
    if let Some(length) = a.length {
        config.generator.length = length;
    }
    config.validate()?;
    let synthetic = generate(&config.generator)?;
    write_series(&a.out, synthetic.series.values())?;
    let events_path = a.events.unwrap_or_else(|| {
        let stem = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
        a.out.with_file_name(format!("{stem}.events.json"))
    });
    write_json(
        &events_path,
        &EventsSidecar {
            events: synthetic.events.clone(),
            amplitudes: synthetic.amplitudes,
            generator: config.generator.clone(),
        },
    )?;
    print_stats("generated", synthetic.series.values())?;
    println!("{} events -> {}", synthetic.events.len(), events_path.display());
    Ok(())
}

fn cmd_ingest(config: &RunConfig, a: IngestArgs) -> Result<()> {
    let series = read_series(&a.input)?;
    write_series(&a.out, series.values())?;
    let prepared = pipeline::prepare(series.values(), config.window.split_ratio)?;
    print_stats("ingested", series.values())?;
    println!(
        "training prefix: {} points, mean {:.6}, normalizer shift {:.6} scale {:.6}",
        prepared.train_points, prepared.stats.mean, prepared.normalizer.shift, prepared.normalizer.scale
    );
    Ok(())
}

fn cmd_train(config: &mut RunConfig, a: TrainArgs) -> Result<()> {
    if let Some(h) = &a.horizons {
        config.window.horizons = parse_horizons(h)?;
    }
    if let Some(e) = a.epochs {
        config.train.epochs = e;
    }
    if let Some(s) = a.seed {
        config.train.seed = s;
    }
    if let Some(t) = a.input_length {
        config.window.input_length = t;
    }
    config.validate()?;
    let data = data_path(config, a.io.data)?;
    let dir = out_dir(config, a.io.out)?;
    let series = read_series(&data)?;
    let values = series.values();

    let threads = worker_threads();
    eprintln!("training {} horizon(s) on {threads} thread(s)", config.window.horizons.len());
    let models = pipeline::train_horizons(values, config, threads)?;
    for m in &models {
        let path = dir.join(format!("lstm_h{}.json", m.horizon));
        save_lstm(&path, m)?;
        let last = m.training_log.last().map_or(f64::NAN, |e| e.loss);
        println!("horizon {:>2}: final loss {last:.6e} -> {}", m.horizon, path.display());
    }
    let logs: Vec<(usize, &[_])> = models.iter().map(|m| (m.horizon, m.training_log.as_slice())).collect();
    write_training_log_csv(&dir.join("training_log.csv"), &logs)?;
    if !a.no_arima {
        let arima = pipeline::fit_arima(values, config)?;
        let path = dir.join("arima.json");
        save_arima(&path, &arima)?;
        println!(
            "arima({},{},{}): ar {:?} ma {:?} sigma2 {:.6e} -> {}",
            arima.spec.p,
            arima.spec.d,
            arima.spec.q,
            arima.ar,
            arima.ma,
            arima.sigma2,
            path.display()
        );
    }
    write_config_copy(&dir, config)
}

fn cmd_predict(config: &RunConfig, a: PredictArgs) -> Result<()> {
    let data = data_path(config, a.io.data)?;
    let dir = out_dir(config, a.io.out)?;
    let series = read_series(&data)?;
    for path in &a.models {
        let m = load_lstm(path)?;
        let predictions = m.predict_series(series.values())?;
        let out = dir.join(format!("predictions_h{}.csv", m.horizon));
        write_indexed_csv(&out, m.input_length + m.horizon - 1, predictions.values())?;
        println!("horizon {:>2}: {} predictions -> {}", m.horizon, predictions.len(), out.display());
    }
    Ok(())
}

fn cmd_detect(config: &mut RunConfig, a: DetectArgs) -> Result<()> {
    if let Some(alpha) = a.alpha {
        config.detect.alpha = alpha;
    }
    if let Some(w) = a.window_length {
        config.detect.window_length = w;
    }
    config.validate()?;
    let input = read_series(&a.input)?;
    let reference = match &a.reference {
        Some(p) => read_series(p)?,
        None => input.clone(),
    };
    let stats = pipeline::prepare(reference.values(), config.window.split_ratio)?.stats;
    let laap = laap_detect(input.values(), &config.detect.laap())?;
    let absolute = absolute_detect(input.values(), &stats);
    write_trace_csv(&a.out.join("laap_trace.csv"), &laap, a.first_index)?;
    write_trace_csv(&a.out.join("absolute_trace.csv"), &absolute, a.first_index)?;
    println!("laap: {} flagged, {} events", laap.flagged(), laap.events().len());
    println!("absolute: {} flagged, {} events", absolute.flagged(), absolute.events().len());
    if let Some(events) = &a.events {
        let truth = EventList::new(read_events(events)?).rebase(a.first_index..a.first_index + input.len());
        let cmp = compare_detectors(("laap", &laap), ("absolute", &absolute), &truth, config.eval.bin_width)?;
        write_json(&a.out.join("comparison.json"), &cmp)?;
        write_histogram_csv(&a.out.join("histogram_laap.csv"), &cmp.first.distribution.histogram)?;
        write_histogram_csv(&a.out.join("histogram_absolute.csv"), &cmp.second.distribution.histogram)?;
        print_comparison(&cmp);
    }
    write_config_copy(&a.out, config)
}

fn print_comparison(cmp: &laap_core::eval::DetectorComparison) {
    for s in [&cmp.first, &cmp.second] {
        println!(
            "{:<9} events {:>4}  zero-error {:>4}  range {}",
            s.name,
            s.event_count,
            s.zero_error_count,
            s.error_range.map_or("none".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"))
        );
    }
    println!("winner: {:?}", cmp.winner);
}

fn cmd_evaluate(config: &mut RunConfig, a: EvaluateArgs) -> Result<()> {
    let data = data_path(config, a.io.data)?;
    let dir = out_dir(config, a.io.out)?;
    let series = read_series(&data)?;
    let values = series.values();
    let models = a.models.iter().map(|p| load_lstm(p)).collect::<Result<Vec<_>>>()?;
    if let Some(m) = models.first() {
        config.window.input_length = m.input_length;
    }
    config.window.horizons = models.iter().map(|m| m.horizon).collect();
    config.validate()?;
    let arima = match &a.arima {
        Some(p) => load_arima(p)?,
        None => pipeline::fit_arima(values, config)?,
    };
    let events = match a.events.or_else(|| config.paths.events.clone()) {
        Some(p) => Some(read_events(&p)?),
        None => None,
    };
    let eval = pipeline::evaluate(values, events.as_deref(), &models, &arima, config)?;

    write_json(&dir.join("report.json"), &eval.report)?;
    write_report_csv(&dir.join("report.csv"), &eval.report)?;
    for o in &eval.outcomes {
        write_indexed_csv(&dir.join(format!("lstm_h{}.csv", o.horizon)), o.first_target, &o.lstm)?;
        write_indexed_csv(&dir.join(format!("arima_h{}.csv", o.horizon)), o.first_target, &o.arima)?;
    }
    println!("horizon  rmse_lstm    rmse_arima   zone1    zone4");
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    for h in &eval.report.horizons {
        println!(
            "{:>7}  {:<11.6} {:<11.6}  {:<7}  {:<7}",
            h.horizon,
            h.rmse_lstm,
            h.rmse_arima,
            opt(h.zone1_accuracy),
            opt(h.zone4_accuracy)
        );
    }
    match &eval.detection {
        Some(d) => {
            write_trace_csv(&dir.join("laap_trace.csv"), &d.laap, d.first_index)?;
            write_trace_csv(&dir.join("absolute_trace.csv"), &d.absolute, d.first_index)?;
            let cmp = &d.report.comparison;
            write_histogram_csv(&dir.join("histogram_laap.csv"), &cmp.first.distribution.histogram)?;
            write_histogram_csv(&dir.join("histogram_absolute.csv"), &cmp.second.distribution.histogram)?;
            println!("detection on horizon {} with {} true events", d.report.horizon, d.report.true_events);
            print_comparison(cmp);
        }
        None => println!("no model for detect.horizon {}; detection skipped", config.detect.horizon),
    }
    write_config_copy(&dir, config)
}
