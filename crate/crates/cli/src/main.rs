//! `labelforge` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use labelforge_core::io::{self, LabelDefaults};
use labelforge_core::parallel::completion_time;
use labelforge_core::{run_pipeline, synthetic, InitMode, PipelineConfig, PipelineError, PipelineOutcome};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Worker(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Worker(_) => 4,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Config(m),
            PipelineError::Data(m) => CliError::Data(m),
            PipelineError::Worker(m) => CliError::Worker(m),
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "labelforge", version, about = "Place map labels for point, line and area features")]
struct Cli {
    /// Log more (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a placement and write the report and map.
    Place(PlaceArgs),
    /// Write the best fitness of every generation as CSV.
    Trace(TraceArgs),
    /// Run the pipeline for several worker counts and tabulate the results.
    Bench(BenchArgs),
    /// Write a synthetic GeoJSON fixture.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Elite,
    Random,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Input GeoJSON FeatureCollection.
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
    #[arg(short = 'w', long, env = "LABELFORGE_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    crossover_rate: Option<f64>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// Share of each generation produced by crossover; the rest is DDE.
    #[arg(long)]
    ga_fraction: Option<f64>,
    #[arg(long)]
    dde_scale: Option<f64>,
    /// Quality weights as w1,w2,w3,w4.
    #[arg(long, value_parser = parse_list::<4>)]
    weights: Option<[f64; 4]>,
    #[arg(long)]
    exchange_interval: Option<usize>,
    /// Layer radii as r1,r2,r3 (multiples of the label height unless the
    /// config sets map units).
    #[arg(long, value_parser = parse_list::<3>)]
    layer_radii: Option<[f64; 3]>,
    /// Sliding margin in map units.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    init_mode: Option<InitArg>,
    /// Drop the extensions beyond the published method.
    #[arg(long)]
    strict_paper: bool,
    /// Skip the sliding repair pass.
    #[arg(long)]
    no_sliding: bool,
    /// Character width used when a feature has no label_char_width.
    #[arg(long, default_value_t = LabelDefaults::default().char_width)]
    char_width: f64,
    /// Label height used when a feature has no label_height.
    #[arg(long, default_value_t = LabelDefaults::default().height)]
    label_height: f64,
}

#[derive(Args, Debug)]
struct PlaceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// JSON placement report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// SVG map of the final placement.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Worker counts to compare.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
    worker_counts: Vec<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Fixture {
    Washington,
    Dense,
    Shortcut,
    Cluster,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    fixture: Fixture,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature count for the cluster fixture.
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long)]
    output: PathBuf,
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {}", parts.len()));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
    }
    Ok(out)
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        let o = &mut cfg.optimizer;
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.iterations {
            o.iterations = v;
        }
        if let Some(v) = self.population {
            o.population_size = v;
        }
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = self.crossover_rate {
            o.crossover_rate = v;
        }
        if let Some(v) = self.mutation_rate {
            o.mutation_rate = v;
        }
        if let Some(v) = self.ga_fraction {
            o.ga_fraction = v;
        }
        if let Some(v) = self.dde_scale {
            o.dde_scale = v;
        }
        if let Some(m) = self.init_mode {
            o.init_mode = match m {
                InitArg::Elite => InitMode::Elite,
                InitArg::Random => InitMode::Random,
            };
        }
        if let Some([w1, w2, w3, w4]) = self.weights {
            cfg.weights = labelforge_core::QualityWeights { w1, w2, w3, w4 };
        }
        if let Some(v) = self.exchange_interval {
            cfg.exchange_interval = v;
        }
        if let Some(r) = self.layer_radii {
            cfg.layers.radii = r;
        }
        if let Some(e) = self.epsilon {
            cfg.sliding.epsilon = Some(e);
        }
        cfg.strict_paper |= self.strict_paper;
        if self.no_sliding {
            cfg.sliding_enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn defaults(&self) -> Result<LabelDefaults, CliError> {
        if !(self.char_width > 0.0 && self.label_height > 0.0) {
            return Err(CliError::Config("--char-width and --label-height must be positive".into()));
        }
        Ok(LabelDefaults { char_width: self.char_width, height: self.label_height })
    }

    /// Effective configuration, or `None` once `--dump-config` has printed it.
    fn prepare(&self) -> Result<Option<(PipelineConfig, PathBuf)>, CliError> {
        let cfg = self.config()?;
        if self.dump_config {
            print!("{}", toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?);
            return Ok(None);
        }
        let input = self.input.clone().ok_or_else(|| CliError::Config("--input is required".into()))?;
        Ok(Some((cfg, input)))
    }

    fn execute(&self, cfg: &PipelineConfig, input: &Path) -> Result<PipelineOutcome, CliError> {
        let ds = io::read_geojson(input, self.defaults()?)?;
        Ok(run_pipeline(ds.features, cfg)?)
    }
}

fn place(args: &PlaceArgs) -> Result<(), CliError> {
    let Some((cfg, input)) = args.run.prepare()? else {
        return Ok(());
    };
    let out = args.run.execute(&cfg, &input)?;
    let report = out.report(&cfg, args.timings);
    if let Some(path) = &args.report {
        io::write_report(&report, path)?;
    }
    if let Some(path) = &args.svg {
        let scorer = cfg.scorer(&out.problem.features);
        io::write_svg(&out.problem.features, &out.after, &scorer, path)?;
    }
    let lowest = out.islands.traces.iter().map(|t| t.final_best()).fold(f64::INFINITY, f64::min);
    println!(
        "features={} searched={} conflicts={} lowest_score={:.6} iterations={} obtained_score={:.6} time_min={:.2}",
        out.problem.len(),
        out.problem.q(),
        out.after_score.lf_conflict_count + out.after_score.ll_conflict_count,
        lowest,
        out.generations(),
        out.after_score.fitness,
        out.wall.as_secs_f64() / 60.0
    );
    Ok(())
}

fn trace(args: &TraceArgs) -> Result<(), CliError> {
    let Some((cfg, input)) = args.run.prepare()? else {
        return Ok(());
    };
    let out = args.run.execute(&cfg, &input)?;
    let sink: Box<dyn std::io::Write> = match &args.output {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let traces = &out.islands.traces;
    let mut header = vec!["generation".to_string(), "best_fitness".to_string(), "exchange".to_string()];
    header.extend((0..traces.len()).map(|k| format!("worker{k}")));
    let csv_err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    let exchanged: std::collections::BTreeSet<u32> = out.islands.exchanges.iter().map(|e| e.generation).collect();
    for g in 0..out.generations() {
        let per: Vec<Option<f64>> = traces.iter().map(|t| t.best.get(g).copied()).collect();
        let best = per.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let generation = g + 1;
        let mut row = vec![
            generation.to_string(),
            format!("{best:.6}"),
            u8::from(exchanged.contains(&(generation as u32))).to_string(),
        ];
        row.extend(per.iter().map(|v| v.map(|x| format!("{x:.6}")).unwrap_or_default()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let Some((base, input)) = args.run.prepare()? else {
        return Ok(());
    };
    println!(
        "{:>7} {:>14} {:>12} {:>9} {:>9} {:>10} {:>11}",
        "workers", "best_fitness", "rho2", "lf", "ll", "wall_s", "makespan_s"
    );
    for &w in &args.worker_counts {
        let cfg = PipelineConfig { workers: w, ..base.clone() };
        cfg.validate()?;
        let out = args.run.execute(&cfg, &input)?;
        println!(
            "{:>7} {:>14.6} {:>12.6} {:>9} {:>9} {:>10.3} {:>11.3}",
            w,
            out.best.fitness,
            out.after_score.rho2,
            out.after_score.lf_conflict_count,
            out.after_score.ll_conflict_count,
            out.wall.as_secs_f64(),
            completion_time(&out.timing).makespan
        );
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let features = match args.fixture {
        Fixture::Washington => synthetic::washington(args.seed),
        Fixture::Dense => synthetic::dense(args.seed),
        Fixture::Shortcut => synthetic::shortcut_fixture(),
        Fixture::Cluster => synthetic::cluster(args.seed, args.count),
    };
    io::write_geojson(&features, &args.output)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Place(a) => place(a),
        Command::Trace(a) => trace(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("labelforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
