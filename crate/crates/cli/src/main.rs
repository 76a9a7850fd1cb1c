use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rowgame::harness::{emit_report, plot_csv, prepare_game, records_from_csv, solve, summarize};
use rowgame::scenario::expand_sweep;
use rowgame::taxonomy::classify_annotated;
use rowgame::{
    node_value, run_batch, verify_epsilon_equilibrium, Concept, ExperimentConfig, RowStatus,
    StrategyProfile, SymbolSequence,
};

/// Right-of-way conflict games: batch runs, strategy classification and
/// equilibrium checks.
#[derive(Parser, Debug)]
#[command(name = "rowgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve every game of the sweep and write games.csv, summary.json and plot.csv.
    Run(RunArgs),
    /// Label symbol sequences read from a CSV; labels go to standard output.
    Classify(ClassifyArgs),
    /// Solve one game for the SPεNE and check it with the brute-force oracle.
    Verify(VerifyArgs),
    /// Recompute summary.json and plot.csv from a games.csv.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set game.epsilon=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Solution concept; overrides `solver.concept`.
    #[arg(long, value_parser = ["spene", "qlk"])]
    concept: Option<String>,
    /// Master seed; overrides `sweep.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// CSV with columns game_id, agent_id, row_status, symbols[, alternate_path].
    input: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Index of the game in sweep order.
    #[arg(long, default_value_t = 0)]
    game_index: usize,
    /// Test hook: give agent 1 its worst action at every node before checking.
    #[arg(long, hide = true)]
    inject_deviation: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Per-game CSV written by `run`.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Config to echo into the summary.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig> {
    if !args.config.is_file() {
        bail!(rowgame::Error::Validation(format!(
            "config file {} not found",
            args.config.display()
        )));
    }
    let mut overrides = args.overrides.clone();
    if let Some(c) = &args.concept {
        overrides.push(format!("solver.concept=\"{c}\""));
    }
    if let Some(s) = args.seed {
        overrides.push(format!("sweep.seed={s}"));
    }
    ExperimentConfig::load(&args.config, &overrides)
        .with_context(|| format!("loading {}", args.config.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load(&args.config)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = run_batch(&cfg, cfg.solver.concept, workers)?;
    let summary = summarize(&records, Some(&cfg))?;
    let files = emit_report(&records, &summary, &args.output)
        .with_context(|| format!("writing reports to {}", args.output.display()))?;
    println!(
        "{} games ({} failed, fallback rate {:.3}) -> {}",
        summary.records,
        summary.failed,
        summary.fallback_rate,
        files.games.display()
    );
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let stdout = io::stdout();
    let mut out = csv::Writer::from_writer(stdout.lock());
    out.write_record(["game_id", "agent_id", "category"])?;
    for (i, row) in rdr.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| rowgame::Error::MalformedRow {
            row: line,
            message: e.to_string(),
        })?;
        if i == 0 && row.get(0) == Some("game_id") {
            continue;
        }
        let bad = |message: String| rowgame::Error::MalformedRow { row: line, message };
        if !(4..=5).contains(&row.len()) {
            return Err(bad(format!("expected 4 or 5 columns, got {}", row.len())).into());
        }
        let status: RowStatus = row[2]
            .parse()
            .map_err(|e: rowgame::Error| bad(e.to_string()))?;
        let seq = SymbolSequence::from_tokens(&row[3]).map_err(|e| bad(e.to_string()))?;
        let alternate = match row.get(4).map(str::trim) {
            None | Some("") | Some("false") | Some("0") => false,
            Some("true") | Some("1") | Some("fp") => true,
            Some(other) => return Err(bad(format!("alternate_path flag `{other}`")).into()),
        };
        let label = classify_annotated(&seq, status, alternate);
        out.write_record([&row[0], &row[1], label.category.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let cfg = load(&args.config)?;
    if cfg.solver.concept != Concept::Spene {
        bail!(rowgame::Error::Validation(
            "verify needs solver.concept = \"spene\"".into()
        ));
    }
    let scenario = cfg.scenario()?;
    let setups = expand_sweep(&scenario, &cfg.sweep)?;
    let Some(setup) = setups.get(args.game_index) else {
        bail!(rowgame::Error::Validation(format!(
            "game index {} out of range (sweep has {} games)",
            args.game_index,
            setups.len()
        )));
    };
    let game = prepare_game(&cfg, &scenario, setup)?;
    let result = solve(&game, &cfg, Concept::Spene);
    let mut profile = result.profile.resolve();
    if args.inject_deviation {
        // agent 1 plays its worst action at every node, deepest first
        for node in game.payoffs.shape.bottom_up() {
            let mut worst = (f64::INFINITY, 0);
            for a in 0..game.payoffs.shape.node(node).actions[0] {
                let mut p = profile.clone();
                p.set_agent(0, node, a);
                let v = node_value(&game.payoffs, node, &StrategyProfile::Pure(p), 0, &cfg.game)?;
                if v < worst.0 {
                    worst = (v, a);
                }
            }
            profile.set_agent(0, node, worst.1);
        }
    }
    let report = verify_epsilon_equilibrium(
        &game.payoffs,
        &StrategyProfile::Pure(profile),
        &cfg.game,
        cfg.game.epsilon,
    )?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "game {} speeds {:?} gammas {:?}: fallback nodes {}",
        setup.index,
        setup.speeds,
        setup.gammas,
        result.diagnostics.fallback_nodes.len()
    )?;
    match &report.worst {
        Some(d) => writeln!(
            out,
            "worst deviation: node {} agent {} actions {:?} gain {:.6} (ε = {})",
            d.node,
            d.agent + 1,
            d.actions,
            d.gain(),
            report.epsilon
        )?,
        None => writeln!(out, "no decision nodes")?,
    }
    writeln!(out, "{}", if report.holds { "ok" } else { "FAILED" })?;
    Ok(report.holds)
}

fn report(args: ReportArgs) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let records = records_from_csv(file)?;
    let cfg = match &args.config {
        Some(p) => Some(ExperimentConfig::load(p, &[])?),
        None => None,
    };
    let summary = summarize(&records, cfg.as_ref())?;
    write_summary(&args.output, &summary)?;
    println!(
        "{} games summarized -> {}",
        summary.records,
        args.output.display()
    );
    Ok(())
}

fn write_summary(dir: &Path, summary: &rowgame::Summary) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    std::fs::write(dir.join("plot.csv"), plot_csv(summary)?)?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<rowgame::Error>() {
            return match e {
                rowgame::Error::Io(_) => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if e.is_io_error() { 3 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Classify(a) => classify(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
