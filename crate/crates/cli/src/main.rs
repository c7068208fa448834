//! `trustgame`: simulate, score, analyze and compare repeated trust games.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use trustgame::analysis::analyze;
use trustgame::io::{
    comparison_text_table, load_params, parse_round_log, sha256_hex, write_comparison_csv,
    write_json, write_measures_csv, write_round_log, write_tests_csv, write_trajectories,
    write_zero_rates_csv, Provenance,
};
use trustgame::{
    parse_roster, predictive_comparison, run_game, score_log, Agent, Error, GameCondition,
    GameConfig, RosterEntry, Stakes, Strategy, TrustParams,
};

#[derive(Parser)]
#[command(name = "trustgame", version, about = "Pairwise trust scoring for repeated trust games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a seeded game for a roster of scripted agents.
    Simulate(SimulateArgs),
    /// Replay a round log into trust and reputation trajectories.
    Score(ScoreArgs),
    /// Sending-proportion measures, zero-send rates and condition tests.
    Analyze(AnalyzeArgs),
    /// Per-round regressions of behavior on trust and on reputation.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn ext(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Args)]
struct Output {
    /// Directory for output files; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args, Serialize)]
struct StakeArgs {
    #[arg(long, default_value_t = 10)]
    endowment: u32,
    #[arg(long, default_value_t = 3)]
    multiplier: u32,
}

impl StakeArgs {
    fn stakes(&self) -> Stakes {
        Stakes {
            endowment: self.endowment,
            multiplier: self.multiplier,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON array of {agent_id, kind, params}.
    #[arg(long)]
    roster: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// simple, identity, score, combined, or all (one session over the four games).
    #[arg(long, default_value = "simple", value_parser = parse_conditions)]
    condition: Conditions,
    /// Parameter file, or `default`.
    #[arg(long, default_value = "default")]
    params: String,
    #[arg(long, default_value_t = 5)]
    rounds_per_pair: u32,
    #[arg(long, default_value = "s1")]
    session: String,
    #[command(flatten)]
    stakes: StakeArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ScoreArgs {
    /// Round log CSV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "default")]
    params: String,
    #[command(flatten)]
    stakes: StakeArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    stakes: StakeArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    start_round: u32,
    #[arg(long, default_value = "default")]
    params: String,
    #[command(flatten)]
    stakes: StakeArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone)]
struct Conditions(Vec<GameCondition>);

fn parse_conditions(s: &str) -> Result<Conditions, String> {
    if s == "all" {
        return Ok(Conditions(GameCondition::ALL.to_vec()));
    }
    s.parse::<GameCondition>()
        .map(|c| Conditions(vec![c]))
        .map_err(|e| e.to_string())
}

/// Collects output files and their hashes for the run manifest.
struct Emitter {
    dir: PathBuf,
    provenance: Provenance,
    outputs: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    provenance: &'a Provenance,
    outputs: &'a BTreeMap<String, String>,
}

impl Emitter {
    fn new(dir: &Path, provenance: Provenance) -> trustgame::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            outputs: BTreeMap::new(),
        })
    }

    fn emit(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> trustgame::Result<()>,
    ) -> trustgame::Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        fs::write(self.dir.join(name), &buf)?;
        self.outputs.insert(name.to_string(), sha256_hex(&buf));
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, name: &str, report: &T) -> trustgame::Result<()> {
        let provenance = self.provenance.clone();
        self.emit(name, |buf| write_json(buf, &provenance, report))
    }

    fn finish(self) -> trustgame::Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(
            &mut w,
            &Manifest {
                provenance: &self.provenance,
                outputs: &self.outputs,
            },
        )?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn input_digest(path: &Path) -> trustgame::Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

fn read_log(path: &Path, stakes: Stakes) -> trustgame::Result<Vec<trustgame::RoundRecord>> {
    let parsed = parse_round_log(path, stakes)?;
    for w in &parsed.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(parsed.records)
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    game: &'a GameConfig,
    conditions: &'a [GameCondition],
    roster: &'a [RosterEntry],
}

#[derive(Serialize)]
struct Simulation<'a> {
    records: &'a [trustgame::RoundRecord],
    trajectories: &'a [trustgame::TrajectoryRow],
}

fn simulate(args: SimulateArgs) -> trustgame::Result<()> {
    let roster = parse_roster(&fs::read_to_string(&args.roster)?)?;
    let game = GameConfig {
        session_id: args.session,
        endowment: args.stakes.endowment,
        multiplier: args.stakes.multiplier,
        group_size: roster.len(),
        rounds_per_pair: args.rounds_per_pair,
        condition: args.condition.0[0],
        rng_seed: args.seed,
        trust_params: load_params(&args.params)?,
    };
    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    for &condition in &args.condition.0 {
        let config = GameConfig {
            condition,
            ..game.clone()
        };
        let mut agents: Vec<Box<dyn Strategy>> = Agent::from_roster(&roster, args.seed)
            .into_iter()
            .map(|a| Box::new(a) as Box<dyn Strategy>)
            .collect();
        let out = run_game(&config, &mut agents)?;
        records.extend(out.records);
        trajectories.extend(out.trajectories);
    }

    let run_config = SimulateConfig {
        game: &game,
        conditions: &args.condition.0,
        roster: &roster,
    };
    let provenance = Provenance::new("simulate", &run_config, Some(args.seed))?;
    let mut emitter = Emitter::new(&args.output.out, provenance)?;
    emitter.emit("rounds.csv", |b| write_round_log(b, &records))?;
    match args.output.format {
        OutputFormat::Csv => emitter.emit("trajectories.csv", |b| write_trajectories(b, &trajectories))?,
        OutputFormat::Json => emitter.emit_json(
            "simulation.json",
            &Simulation {
                records: &records,
                trajectories: &trajectories,
            },
        )?,
    }
    emitter.finish()
}

#[derive(Serialize)]
struct LogConfig<'a, T: Serialize> {
    input: String,
    input_sha256: String,
    stakes: &'a StakeArgs,
    #[serde(flatten)]
    extra: T,
}

#[derive(Serialize)]
struct WithParams {
    trust_params: TrustParams,
}

#[derive(Serialize)]
struct CompareExtra {
    trust_params: TrustParams,
    start_round: u32,
}

fn log_config<'a, T: Serialize>(
    input: &Path,
    stakes: &'a StakeArgs,
    extra: T,
) -> trustgame::Result<LogConfig<'a, T>> {
    Ok(LogConfig {
        input: input.display().to_string(),
        input_sha256: input_digest(input)?,
        stakes,
        extra,
    })
}

fn score(args: ScoreArgs) -> trustgame::Result<()> {
    let params = load_params(&args.params)?;
    let log = read_log(&args.input, args.stakes.stakes())?;
    let scored = score_log(&log, args.stakes.stakes(), &params)?;
    let config = log_config(&args.input, &args.stakes, WithParams { trust_params: params })?;
    let mut emitter = Emitter::new(&args.output.out, Provenance::new("score", &config, None)?)?;
    let name = format!("trajectories.{}", args.output.format.ext());
    match args.output.format {
        OutputFormat::Csv => emitter.emit(&name, |b| write_trajectories(b, &scored.trajectory))?,
        OutputFormat::Json => emitter.emit_json(&name, &scored.trajectory)?,
    }
    emitter.finish()
}

fn analyze_cmd(args: AnalyzeArgs) -> trustgame::Result<()> {
    let log = read_log(&args.input, args.stakes.stakes())?;
    let report = analyze(&log, args.stakes.stakes());
    let config = log_config(&args.input, &args.stakes, ())?;
    let mut emitter = Emitter::new(&args.output.out, Provenance::new("analyze", &config, None)?)?;
    match args.output.format {
        OutputFormat::Csv => {
            emitter.emit("measures.csv", |b| write_measures_csv(b, &report))?;
            emitter.emit("zero_rates.csv", |b| write_zero_rates_csv(b, &report))?;
            emitter.emit("tests.csv", |b| write_tests_csv(b, &report))?;
        }
        OutputFormat::Json => emitter.emit_json("analysis.json", &report)?,
    }
    emitter.finish()
}

fn compare(args: CompareArgs) -> trustgame::Result<()> {
    let params = load_params(&args.params)?;
    let log = read_log(&args.input, args.stakes.stakes())?;
    let report = predictive_comparison(&log, args.stakes.stakes(), &params, args.start_round)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", comparison_text_table(&report));
    let extra = CompareExtra {
        trust_params: params,
        start_round: args.start_round,
    };
    let config = log_config(&args.input, &args.stakes, extra)?;
    let mut emitter = Emitter::new(&args.output.out, Provenance::new("compare", &config, None)?)?;
    match args.output.format {
        OutputFormat::Csv => emitter.emit("comparison.csv", |b| write_comparison_csv(b, &report))?,
        OutputFormat::Json => emitter.emit_json("comparison.json", &report)?,
    }
    emitter.finish()
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numeric() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Score(a) => score(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
