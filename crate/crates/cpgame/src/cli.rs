//! Command-line surface. [`run`] takes the full argument list (program name
//! first) so tests can drive it in-process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpgame_core::dynamics::{DynamicsKind, UpdateMode};
use cpgame_core::metrics::{summarize_sweep, SweepRow};

use crate::config::{load_config, AgentSection, GridSection, LoadedConfig, ScenarioFile};
use crate::error::AppError;
use crate::experiments::{
    convergence_label, ip_experiment, simulate, standard_fractions, sweep, two_interval_runs, ActionKind, IpPlan,
    ScheduleKind, SweepPlan,
};
use crate::io::{format_series, library_rows, peak_series_rows, trajectory_rows, OutputDir};
use crate::manifest::{inputs_hash, strip_out, Manifest, SCHEMA, TOOL};
use crate::presets::{cap_ratio_from_mw, Day, TwoIntervalCase, BUNDLED_DAY_SEED, RESPONSIVE_MW};
use crate::synthetic::{generate_synthetic_day, SyntheticProfileParams};

/// Master seed when neither `--seed` nor the scenario file gives one.
pub const DEFAULT_SEED: u64 = 2023;

#[derive(Debug, Parser)]
#[command(name = "cpgame", version, about = "Coincident-peak pricing game simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one BRD or FPD trajectory.
    Simulate(SimulateArgs),
    /// Run the cap × player-count grid for both dynamics.
    Sweep(SweepArgs),
    /// Information-provider population mix and scaling experiments.
    Ip(IpArgs),
    /// Two-interval games: the BRD oscillation and the three load regimes.
    Counterexample(CounterexampleArgs),
    /// Write a synthetic day (baseline, prices) and a scenario file using it.
    GenData(GenDataArgs),
    /// Render summary tables from results stored in a directory.
    Report(ReportArgs),
    /// Re-run the command recorded in a manifest and check its outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed for every stochastic step.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DynamicsArg {
    Brd,
    Fpd,
}

impl From<DynamicsArg> for DynamicsKind {
    fn from(d: DynamicsArg) -> Self {
        match d {
            DynamicsArg::Brd => DynamicsKind::BestResponse,
            DynamicsArg::Fpd => DynamicsKind::FictitiousPlay,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ActionsArg {
    Continuous,
    Coarse,
    Fine,
}

impl From<ActionsArg> for ActionKind {
    fn from(a: ActionsArg) -> Self {
        match a {
            ActionsArg::Continuous => ActionKind::Continuous,
            ActionsArg::Coarse => ActionKind::Coarse,
            ActionsArg::Fine => ActionKind::Fine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UpdateArg {
    Simultaneous,
    RoundRobin,
}

impl From<UpdateArg> for UpdateMode {
    fn from(u: UpdateArg) -> Self {
        match u {
            UpdateArg::Simultaneous => UpdateMode::Simultaneous,
            UpdateArg::RoundRobin => UpdateMode::RoundRobin,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Rolling,
    DayAhead,
    Repeated,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario file; without it the bundled synthetic day is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fpd")]
    pub dynamics: DynamicsArg,
    /// Per-player cap in MW at the five-player split (bundled day only; default 1500).
    #[arg(long)]
    pub cap: Option<f64>,
    /// Number of players sharing 5000 MW (bundled day only; default 5).
    #[arg(long)]
    pub players: Option<usize>,
    #[arg(long, value_enum, default_value = "continuous")]
    pub actions: ActionsArg,
    #[arg(long, value_enum, default_value = "simultaneous")]
    pub update: UpdateArg,
    /// Grid of the bundled day: 96 for continuous actions, 24 for libraries by default.
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long, value_enum, default_value = "rolling")]
    pub schedule: ScheduleArg,
    /// Update rounds for `--schedule repeated`.
    #[arg(long, default_value_t = 20)]
    pub rounds: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario file supplying the day; its agents are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Only this dynamics (default: both).
    #[arg(long, value_enum)]
    pub dynamics: Option<DynamicsArg>,
    /// Caps in MW at the five-player split; repeatable (default 1200, 1500, 1800).
    #[arg(long)]
    pub cap: Vec<f64>,
    /// Only this player count (default 2 through 15).
    #[arg(long)]
    pub players: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IpArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario file supplying the day; its agents are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub players: usize,
    #[arg(long, default_value_t = 1200.0)]
    pub cap: f64,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// A single aware fraction (default: 0, 0.1, ..., 1).
    #[arg(long)]
    pub aware_fraction: Option<f64>,
    /// Population sizes for the scaling experiment.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 20])]
    pub scaling_players: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    /// brd-oscillation, case1, case2, case3 or all.
    #[arg(long, default_value = "all")]
    pub case: String,
    #[arg(long, default_value_t = 12)]
    pub rounds: usize,
    /// Seeded random starting splits tried in case3.
    #[arg(long, default_value_t = 8)]
    pub inits: usize,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 96)]
    pub intervals: usize,
    #[arg(long, default_value_t = 85_000.0)]
    pub peak_mw: f64,
    #[arg(long, default_value_t = 55_000.0)]
    pub trough_mw: f64,
    #[arg(long, default_value_t = 17.0)]
    pub peak_hour: f64,
    #[arg(long, default_value_t = 25.0)]
    pub price_base: f64,
    #[arg(long, default_value_t = 3.0)]
    pub price_spike_factor: f64,
    #[arg(long, default_value_t = 150.0)]
    pub noise_mw: f64,
    /// Players written into the scenario file.
    #[arg(long, default_value_t = 5)]
    pub players: usize,
    /// Their cap in MW at the five-player split.
    #[arg(long, default_value_t = 1500.0)]
    pub cap: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding results of earlier commands.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// What a successful invocation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Text for standard output.
    pub message: String,
    pub out_dir: Option<PathBuf>,
    pub files: Vec<String>,
}

/// Parses and executes one invocation; `argv[0]` is the program name.
pub fn run(argv: &[String]) -> Result<Outcome, AppError> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Outcome {
                        message: e.to_string(),
                        out_dir: None,
                        files: Vec::new(),
                    })
                }
                _ => Err(AppError::Validation(
                    e.to_string().trim_start_matches("error: ").trim_end().to_string(),
                )),
            };
        }
    };
    match cli.command {
        Command::Replay(r) => replay(&r),
        command => execute(command, &argv[1..]),
    }
}

struct Context {
    seed: u64,
    config_hash: Option<String>,
}

fn execute(command: Command, raw_args: &[String]) -> Result<Outcome, AppError> {
    let (name, out_path) = match &command {
        Command::Simulate(a) => ("simulate", &a.common.out),
        Command::Sweep(a) => ("sweep", &a.common.out),
        Command::Ip(a) => ("ip", &a.common.out),
        Command::Counterexample(a) => ("counterexample", &a.common.out),
        Command::GenData(a) => ("gen-data", &a.common.out),
        Command::Report(a) => ("report", &a.out),
        Command::Replay(_) => unreachable!("handled by run"),
    };
    let mut out = OutputDir::create(out_path)?;
    let mut ctx = Context {
        seed: DEFAULT_SEED,
        config_hash: None,
    };
    let body = match &command {
        Command::Simulate(a) => cmd_simulate(a, &mut ctx, &mut out),
        Command::Sweep(a) => cmd_sweep(a, &mut ctx, &mut out),
        Command::Ip(a) => cmd_ip(a, &mut ctx, &mut out),
        Command::Counterexample(a) => cmd_counterexample(a, &mut ctx, &mut out),
        Command::GenData(a) => cmd_gen_data(a, &mut ctx, &mut out),
        Command::Report(a) => cmd_report(a, &mut out),
        Command::Replay(_) => unreachable!("handled by run"),
    };
    let message = match body.and_then(|m| write_manifest(name, raw_args, &ctx, &mut out).map(|()| m)) {
        Ok(m) => m,
        Err(e) => {
            out.discard();
            return Err(e);
        }
    };
    Ok(Outcome {
        message,
        out_dir: Some(out.root().to_path_buf()),
        files: out.written(),
    })
}

fn write_manifest(name: &str, raw_args: &[String], ctx: &Context, out: &mut OutputDir) -> Result<(), AppError> {
    let mut args = strip_out(raw_args);
    let has_seed = args.iter().any(|a| a == "--seed" || a.starts_with("--seed="));
    if !has_seed && name != "report" {
        args.push("--seed".into());
        args.push(ctx.seed.to_string());
    }
    let config_hash = ctx.config_hash.clone().unwrap_or_else(|| {
        let joined = args.join("\u{0}");
        inputs_hash([joined.as_bytes()])
    });
    let manifest = Manifest {
        schema: SCHEMA,
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        args,
        seed: ctx.seed,
        config_hash,
        outputs: Manifest::digest_outputs(out.root(), &out.written())?,
    };
    out.write(&Manifest::file_name(name), &manifest.to_json())
}

fn replay(args: &ReplayArgs) -> Result<Outcome, AppError> {
    let recorded = Manifest::read(&args.manifest)?;
    let mut argv = vec![TOOL.to_string()];
    argv.extend(recorded.args.iter().cloned());
    argv.push("--out".into());
    argv.push(args.out.display().to_string());
    let outcome = run(&argv)?;
    let fresh = Manifest::read(&args.out.join(Manifest::file_name(&recorded.command)))?;
    if fresh.config_hash != recorded.config_hash {
        return Err(AppError::Validation(
            "inputs differ from those recorded in the manifest".into(),
        ));
    }
    for (a, b) in recorded.outputs.iter().zip(&fresh.outputs) {
        if a != b {
            return Err(AppError::Validation(format!("replay diverged at {}", a.file)));
        }
    }
    if recorded.outputs.len() != fresh.outputs.len() {
        return Err(AppError::Validation("replay wrote a different set of files".into()));
    }
    let mut message = outcome.message;
    let _ = writeln!(message, "replay verified: {} files identical", fresh.outputs.len());
    Ok(Outcome { message, ..outcome })
}

fn load(config: &Option<PathBuf>, ctx: &mut Context, seed: Option<u64>) -> Result<Option<LoadedConfig>, AppError> {
    let loaded = config.as_deref().map(load_config).transpose()?;
    if let Some(cfg) = &loaded {
        ctx.config_hash = Some(inputs_hash(cfg.inputs.iter().map(|(_, b)| b.as_slice())));
    }
    ctx.seed = seed
        .or_else(|| loaded.as_ref().and_then(|c| c.file.seed))
        .unwrap_or(DEFAULT_SEED);
    Ok(loaded)
}

fn cmd_simulate(a: &SimulateArgs, ctx: &mut Context, out: &mut OutputDir) -> Result<String, AppError> {
    let cfg = load(&a.config, ctx, a.common.seed)?;
    let actions = ActionKind::from(a.actions);
    let scenario = match &cfg {
        Some(c) => {
            if a.players.is_some() || a.cap.is_some() || a.intervals.is_some() {
                return Err(AppError::Validation(
                    "--players, --cap and --intervals apply to the bundled day only".into(),
                ));
            }
            c.scenario()?
        }
        None => {
            let default_n = if actions == ActionKind::Continuous { 96 } else { 24 };
            Day::bundled(a.intervals.unwrap_or(default_n))?
                .with_flat_players(a.players.unwrap_or(5), cap_ratio_from_mw(a.cap.unwrap_or(1500.0)))?
        }
    };
    let schedule = match a.schedule {
        ScheduleArg::Rolling => ScheduleKind::Rolling,
        ScheduleArg::DayAhead => ScheduleKind::DayAhead,
        ScheduleArg::Repeated => ScheduleKind::Repeated(a.rounds),
    };
    let kind = DynamicsKind::from(a.dynamics);
    let r = simulate(&scenario, kind, actions, a.update.into(), schedule, ctx.seed)?;

    let ids: Vec<u32> = scenario.agents.iter().map(|s| s.id).collect();
    let bases: Vec<Vec<f64>> = scenario.agents.iter().map(|s| s.baseline.clone()).collect();
    out.write_csv("trajectory.csv", &["round", "agent", "interval", "x"], trajectory_rows(&r.trajectory, &ids, &bases))?;
    out.write_csv("peak_series.csv", &["round", "peak_mw"], peak_series_rows(&r.trajectory))?;
    out.write("final_profile.csv", &format_series(&r.trajectory.final_round().profile.load))?;
    if let Some(libs) = &r.libraries {
        let mut header = vec!["agent".to_string()];
        let mut rows = Vec::new();
        for (id, lib) in ids.iter().zip(libs) {
            let (h, body) = library_rows(lib);
            if header.len() == 1 {
                header.extend(h);
            }
            rows.extend(body.into_iter().map(|mut row| {
                row.insert(0, id.to_string());
                row
            }));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.write_csv("library.csv", &header, rows)?;
    }
    let held: usize = r.trajectory.rounds.iter().map(|s| s.held.iter().filter(|h| **h).count()).sum();
    let mut summary = String::new();
    let _ = writeln!(summary, "dynamics={}", kind.label());
    let _ = writeln!(summary, "actions={}", actions.label());
    if let Some(libs) = &r.libraries {
        let _ = writeln!(summary, "library_size={}", libs[0].len());
    }
    let _ = writeln!(summary, "players={}", scenario.agents.len());
    let _ = writeln!(summary, "intervals={}", scenario.intervals());
    let _ = writeln!(summary, "rounds={}", r.trajectory.rounds.len());
    let _ = writeln!(summary, "initial_peak_mw={}", r.initial_peak);
    let _ = writeln!(summary, "final_peak_mw={}", r.final_peak);
    let _ = writeln!(summary, "peak_reduction_pct={:.4}", r.reduction);
    let _ = writeln!(summary, "convergence={}", convergence_label(r.trajectory.convergence));
    let _ = writeln!(summary, "held_responses={held}");
    out.write("summary.txt", &summary)?;
    Ok(summary)
}

fn day_from(cfg: &Option<LoadedConfig>, intervals: usize) -> Result<Day, AppError> {
    match cfg {
        Some(c) => Ok(c.day.clone()),
        None => Day::bundled(intervals),
    }
}

const SWEEP_HEADER: [&str; 6] = ["dynamics", "cap_mw", "players", "initial_peak_mw", "final_peak_mw", "reduction_pct"];

fn sweep_table(rows: Vec<SweepRow>) -> Result<String, AppError> {
    let summary = summarize_sweep(rows)?;
    Ok(summary.render_table(RESPONSIVE_MW / 5.0))
}

fn cmd_sweep(a: &SweepArgs, ctx: &mut Context, out: &mut OutputDir) -> Result<String, AppError> {
    let cfg = load(&a.config, ctx, a.common.seed)?;
    let day = day_from(&cfg, 96)?;
    let mut plan = SweepPlan::table_one(ctx.seed);
    if let Some(d) = a.dynamics {
        plan.dynamics = vec![d.into()];
    }
    if !a.cap.is_empty() {
        plan.caps_mw = a.cap.clone();
    }
    if let Some(n) = a.players {
        plan.players = vec![n];
    }
    let result = sweep(&day, &plan)?;
    let cap_mw = |ratio: f64| ratio * RESPONSIVE_MW / 5.0;
    let rows: Vec<Vec<String>> = result
        .summary
        .rows
        .iter()
        .map(|r| {
            vec![
                r.kind.label().to_string(),
                cap_mw(r.cap_ratio).to_string(),
                r.players.to_string(),
                r.initial_peak.to_string(),
                r.final_peak.to_string(),
                r.reduction.to_string(),
            ]
        })
        .collect();
    out.write_csv("sweep.csv", &SWEEP_HEADER, rows)?;
    let mut peaks = Vec::new();
    for (r, series) in result.summary.rows.iter().zip(&result.peak_series) {
        for (round, p) in series.iter().enumerate() {
            peaks.push(vec![
                r.kind.label().to_string(),
                cap_mw(r.cap_ratio).to_string(),
                r.players.to_string(),
                round.to_string(),
                p.to_string(),
            ]);
        }
    }
    out.write_csv("sweep_peaks.csv", &["dynamics", "cap_mw", "players", "round", "peak_mw"], peaks)?;
    let table = result.summary.render_table(RESPONSIVE_MW / 5.0);
    out.write("table.txt", &table)?;
    Ok(table)
}

const IP_MIX_HEADER: [&str; 5] = ["fraction", "aware_agents", "mean_reduction_pct", "std_pct", "scaled_down"];

fn ip_table(rows: &[(String, String, String)]) -> String {
    let mut s = String::from("aware fraction | mean reduction % | std %\n");
    for (f, m, sd) in rows {
        let m: f64 = m.parse().unwrap_or(f64::NAN);
        let sd: f64 = sd.parse().unwrap_or(f64::NAN);
        let _ = writeln!(s, "{f:>14} | {m:>16.3} | {sd:>5.3}");
    }
    s
}

fn cmd_ip(a: &IpArgs, ctx: &mut Context, out: &mut OutputDir) -> Result<String, AppError> {
    let cfg = load(&a.config, ctx, a.common.seed)?;
    let day = day_from(&cfg, 24)?;
    let plan = IpPlan {
        players: a.players,
        cap_mw: a.cap,
        fractions: a.aware_fraction.map_or_else(standard_fractions, |f| vec![f]),
        runs: a.runs,
        scaling_players: a.scaling_players.clone(),
        seed: ctx.seed,
    };
    let result = ip_experiment(&day, &plan)?;
    let mut mix_rows = Vec::new();
    let mut run_rows = Vec::new();
    for (f, s) in &result.mix {
        let aware = (f * a.players as f64).round() as usize;
        mix_rows.push(vec![
            f.to_string(),
            aware.to_string(),
            s.mean.to_string(),
            s.std_dev.to_string(),
            s.scaled_down.to_string(),
        ]);
        for (run, (red, peak)) in s.per_run.iter().zip(&s.final_peaks).enumerate() {
            run_rows.push(vec![f.to_string(), run.to_string(), red.to_string(), peak.to_string()]);
        }
    }
    out.write_csv("ip_mix.csv", &IP_MIX_HEADER, mix_rows.clone())?;
    out.write_csv("ip_runs.csv", &["fraction", "run", "reduction_pct", "final_peak_mw"], run_rows)?;
    let scaling_rows: Vec<Vec<String>> = result
        .scaling
        .iter()
        .map(|(n, f, s)| vec![n.to_string(), f.to_string(), s.mean.to_string(), s.std_dev.to_string()])
        .collect();
    out.write_csv("ip_scaling.csv", &["players", "fraction", "mean_reduction_pct", "std_pct"], scaling_rows)?;
    if let Some((_, first)) = result.mix.first() {
        let rows: Vec<Vec<String>> = first
            .naive
            .intervals()
            .iter()
            .zip(first.aware.intervals())
            .enumerate()
            .map(|(r, (n, w))| vec![(r + 1).to_string(), (n + 1).to_string(), (w + 1).to_string()])
            .collect();
        out.write_csv("rankings.csv", &["rank", "naive_interval", "aware_interval"], rows)?;
    }
    let table_rows: Vec<(String, String, String)> =
        mix_rows.into_iter().map(|r| (r[0].clone(), r[2].clone(), r[3].clone())).collect();
    let table = ip_table(&table_rows);
    out.write("ip_table.txt", &table)?;
    Ok(table)
}

const CASE_HEADER: [&str; 6] = ["case", "dynamics", "init", "convergence", "rounds", "final_peak"];

fn cmd_counterexample(a: &CounterexampleArgs, ctx: &mut Context, out: &mut OutputDir) -> Result<String, AppError> {
    ctx.seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let cases: Vec<TwoIntervalCase> = if a.case == "all" {
        TwoIntervalCase::ALL.to_vec()
    } else {
        vec![TwoIntervalCase::parse(&a.case).ok_or_else(|| {
            AppError::Validation(format!(
                "unknown case `{}` (expected brd-oscillation, case1, case2, case3 or all)",
                a.case
            ))
        })?]
    };
    let mut rows = Vec::new();
    let mut peaks = Vec::new();
    let mut report = String::new();
    for case in cases {
        for run in two_interval_runs(case, a.rounds, a.inits, ctx.seed)? {
            let label = convergence_label(run.trajectory.convergence);
            let final_peak = run.trajectory.final_round().profile.peak_value;
            let _ = writeln!(
                report,
                "case={} dynamics={} init={} {label} final_peak={final_peak}",
                case.name(),
                run.kind.label(),
                run.init_label
            );
            rows.push(vec![
                case.name().to_string(),
                run.kind.label().to_string(),
                run.init_label.clone(),
                label,
                run.trajectory.rounds.len().to_string(),
                final_peak.to_string(),
            ]);
            for (r, p) in run.trajectory.peak_series.iter().enumerate() {
                peaks.push(vec![
                    case.name().to_string(),
                    run.kind.label().to_string(),
                    run.init_label.clone(),
                    r.to_string(),
                    p.to_string(),
                ]);
            }
        }
    }
    out.write_csv("counterexample.csv", &CASE_HEADER, rows)?;
    out.write_csv("counterexample_peaks.csv", &["case", "dynamics", "init", "round", "peak"], peaks)?;
    out.write("counterexample.txt", &report)?;
    Ok(report)
}

fn cmd_gen_data(a: &GenDataArgs, ctx: &mut Context, out: &mut OutputDir) -> Result<String, AppError> {
    ctx.seed = a.common.seed.unwrap_or(BUNDLED_DAY_SEED);
    let params = SyntheticProfileParams {
        intervals: a.intervals,
        peak_mw: a.peak_mw,
        trough_mw: a.trough_mw,
        peak_hour: a.peak_hour,
        price_base: a.price_base,
        price_spike_factor: a.price_spike_factor,
        noise_mw: a.noise_mw,
        ..Default::default()
    };
    if a.players == 0 {
        return Err(AppError::Validation("at least one player is required".into()));
    }
    let day = generate_synthetic_day(&params, ctx.seed)?;
    out.write("baseline.csv", &format_series(&day.baseline))?;
    out.write("prices.csv", &format_series(&day.prices))?;
    let level = RESPONSIVE_MW / a.players as f64;
    let file = ScenarioFile {
        seed: Some(ctx.seed),
        cost_c: crate::presets::DEFAULT_TOTAL_COST,
        tie_tolerance: cpgame_core::model::DEFAULT_TIE_TOLERANCE_MW,
        baseline_csv: "baseline.csv".into(),
        prices_csv: "prices.csv".into(),
        grid: GridSection {
            intervals: a.intervals,
            interval_minutes: (24 * 60 / a.intervals) as u32,
            label: "synthetic peak day".into(),
        },
        agents: (0..a.players as u32)
            .map(|id| AgentSection {
                id,
                level: Some(level),
                baseline_csv: None,
                lower: 0.0,
                upper: cap_ratio_from_mw(a.cap) * level,
            })
            .collect(),
    };
    let toml = toml::to_string(&file).map_err(|e| AppError::Format(e.to_string()))?;
    out.write("scenario.toml", &toml)?;
    let peak = day.baseline.iter().copied().fold(f64::MIN, f64::max);
    Ok(format!(
        "wrote {} intervals (peak {peak} MW) and a {}-player scenario to {}\n",
        a.intervals,
        a.players,
        out.root().display()
    ))
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, AppError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    let found = reader
        .headers()
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?
        .clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(AppError::Validation(format!("{}: unexpected header", path.display())));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| AppError::Validation(format!("{}: {e}", path.display()))))
        .collect()
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, path: &Path) -> Result<T, AppError> {
    record
        .get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| AppError::Validation(format!("{}: bad field {} in {:?}", path.display(), i + 1, record)))
}

fn cmd_report(a: &ReportArgs, out: &mut OutputDir) -> Result<String, AppError> {
    if !a.input.is_dir() {
        return Err(AppError::Validation(format!("{} is not a directory", a.input.display())));
    }
    let mut report = String::new();
    let sweep_path = a.input.join("sweep.csv");
    if sweep_path.exists() {
        let mut rows = Vec::new();
        for rec in read_table(&sweep_path, &SWEEP_HEADER)? {
            let kind = match rec.get(0) {
                Some("BRD") => DynamicsKind::BestResponse,
                Some("FPD") => DynamicsKind::FictitiousPlay,
                other => {
                    return Err(AppError::Validation(format!(
                        "{}: unknown dynamics {other:?}",
                        sweep_path.display()
                    )))
                }
            };
            let cap: f64 = parse_field(&rec, 1, &sweep_path)?;
            rows.push(SweepRow {
                kind,
                cap_ratio: cap_ratio_from_mw(cap),
                players: parse_field(&rec, 2, &sweep_path)?,
                initial_peak: parse_field(&rec, 3, &sweep_path)?,
                final_peak: parse_field(&rec, 4, &sweep_path)?,
                reduction: parse_field(&rec, 5, &sweep_path)?,
            });
        }
        report.push_str(&sweep_table(rows)?);
    }
    let ip_path = a.input.join("ip_mix.csv");
    if ip_path.exists() {
        let rows: Vec<(String, String, String)> = read_table(&ip_path, &IP_MIX_HEADER)?
            .iter()
            .map(|r| (r[0].to_string(), r[2].to_string(), r[3].to_string()))
            .collect();
        if !report.is_empty() {
            report.push('\n');
        }
        report.push_str(&ip_table(&rows));
    }
    let case_path = a.input.join("counterexample.txt");
    if case_path.exists() {
        if !report.is_empty() {
            report.push('\n');
        }
        report.push_str(&std::fs::read_to_string(&case_path).map_err(|e| AppError::io(&case_path, e))?);
    }
    if report.is_empty() {
        return Err(AppError::Validation(format!(
            "no stored results (sweep.csv, ip_mix.csv, counterexample.txt) in {}",
            a.input.display()
        )));
    }
    out.write("report.txt", &report)?;
    Ok(report)
}
