//! Experiment drivers. Each returns plain data; writing files is left to
//! the caller.

use cpgame_core::actions::{coarse_library, fine_library, ActionVector, FiniteActionLibrary};
use cpgame_core::dynamics::{
    make_rolling_schedule, run_dynamics, ActionSpace, Convergence, DynamicsConfig, DynamicsKind, Schedule,
    Trajectory, UpdateMode,
};
use cpgame_core::infoprovider::{run_ip_population, IpSummary, PopulationMix};
use cpgame_core::metrics::{peak_reduction, summarize_sweep, SweepRow, SweepSummary};
use cpgame_core::model::Scenario;

use crate::error::AppError;
use crate::presets::{all_or_nothing_library, cap_ratio_from_mw, random_split_init, two_interval, Day, TwoIntervalCase};

/// Longest shutdown (in intervals) in the coarse library.
pub const COARSE_MAX_SHUTDOWN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    Continuous,
    Coarse,
    Fine,
}

impl ActionKind {
    pub fn label(self) -> &'static str {
        match self {
            ActionKind::Continuous => "continuous",
            ActionKind::Coarse => "coarse",
            ActionKind::Fine => "fine",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// One epoch per interval, freezing realized intervals.
    Rolling,
    /// One update, nothing frozen.
    DayAhead,
    /// `n` updates over the whole horizon.
    Repeated(usize),
}

pub fn schedule_for(kind: ScheduleKind, scenario: &Scenario) -> Schedule {
    match kind {
        ScheduleKind::Rolling => make_rolling_schedule(&scenario.grid),
        ScheduleKind::DayAhead => Schedule::day_ahead(),
        ScheduleKind::Repeated(n) => Schedule::repeated(n),
    }
}

pub fn dynamics_config(scenario: &Scenario, update: UpdateMode, seed: u64) -> DynamicsConfig {
    let mut config = DynamicsConfig {
        update_mode: update,
        ..Default::default()
    };
    config.solver.tie_tolerance_mw = scenario.tie_tolerance_mw;
    config.solver.rng_seed = seed;
    config
}

/// Per-agent libraries of the requested resolution (`None` for continuous play).
pub fn libraries(scenario: &Scenario, kind: ActionKind) -> Result<Option<Vec<FiniteActionLibrary>>, AppError> {
    let reference = scenario.initial_load();
    let libs = match kind {
        ActionKind::Continuous => return Ok(None),
        ActionKind::Coarse => scenario
            .agents
            .iter()
            .map(|a| coarse_library(a, &scenario.prices, COARSE_MAX_SHUTDOWN))
            .collect(),
        ActionKind::Fine => scenario
            .agents
            .iter()
            .map(|a| fine_library(a, &reference, &scenario.prices))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(Some(libs))
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trajectory: Trajectory,
    pub libraries: Option<Vec<FiniteActionLibrary>>,
    pub initial_peak: f64,
    pub final_peak: f64,
    pub reduction: f64,
}

/// One BRD or FPD run from the zero action.
pub fn simulate(
    scenario: &Scenario,
    kind: DynamicsKind,
    actions: ActionKind,
    update: UpdateMode,
    schedule: ScheduleKind,
    seed: u64,
) -> Result<SimulationResult, AppError> {
    let libs = libraries(scenario, actions)?;
    let space = match &libs {
        Some(l) => ActionSpace::Finite(l.clone()),
        None => ActionSpace::Continuous,
    };
    let init: Vec<ActionVector> = scenario
        .agents
        .iter()
        .map(|_| ActionVector::zeros(scenario.intervals()))
        .collect();
    let trajectory = run_dynamics(
        kind,
        scenario,
        &schedule_for(schedule, scenario),
        &init,
        &space,
        &dynamics_config(scenario, update, seed),
    )?;
    let initial = scenario.initial_load();
    let final_load = &trajectory.final_round().profile.load;
    let reduction = peak_reduction(&initial, final_load)?;
    Ok(SimulationResult {
        initial_peak: trajectory.rounds[0].profile.peak_value,
        final_peak: trajectory.final_round().profile.peak_value,
        reduction,
        trajectory,
        libraries: libs,
    })
}

/// Sweep grid; caps are in MW at the five-player reference split.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub dynamics: Vec<DynamicsKind>,
    pub caps_mw: Vec<f64>,
    pub players: Vec<usize>,
    pub seed: u64,
}

impl SweepPlan {
    /// Both dynamics, caps 1200/1500/1800 MW, N = 2..=15.
    pub fn table_one(seed: u64) -> Self {
        Self {
            dynamics: vec![DynamicsKind::BestResponse, DynamicsKind::FictitiousPlay],
            caps_mw: vec![1200.0, 1500.0, 1800.0],
            players: (2..=15).collect(),
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub summary: SweepSummary,
    /// Peak series per row, aligned with `summary.rows`.
    pub peak_series: Vec<Vec<f64>>,
}

/// Continuous rolling-schedule runs over the plan's grid.
pub fn sweep(day: &Day, plan: &SweepPlan) -> Result<SweepResult, AppError> {
    if plan.dynamics.is_empty() || plan.caps_mw.is_empty() || plan.players.is_empty() {
        return Err(AppError::Validation("sweep grid is empty".into()));
    }
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &kind in &plan.dynamics {
        for &cap in &plan.caps_mw {
            for &n in &plan.players {
                let scenario = day.with_flat_players(n, cap_ratio_from_mw(cap))?;
                let r = simulate(
                    &scenario,
                    kind,
                    ActionKind::Continuous,
                    UpdateMode::Simultaneous,
                    ScheduleKind::Rolling,
                    plan.seed,
                )?;
                rows.push(SweepRow {
                    kind,
                    cap_ratio: cap_ratio_from_mw(cap),
                    players: n,
                    initial_peak: r.initial_peak,
                    final_peak: r.final_peak,
                    reduction: r.reduction,
                });
                series.push(r.trajectory.peak_series);
            }
        }
    }
    // Rows are generated in the summary's order already; keep series aligned.
    let summary = summarize_sweep(rows.clone())?;
    debug_assert_eq!(summary.rows, rows);
    Ok(SweepResult {
        summary,
        peak_series: series,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpPlan {
    pub players: usize,
    pub cap_mw: f64,
    pub fractions: Vec<f64>,
    pub runs: usize,
    pub scaling_players: Vec<usize>,
    pub seed: u64,
}

impl IpPlan {
    /// N = 10, cap 1200 MW, fractions 0, 0.1, ..., 1, 20 runs, scaling over 5/10/20.
    pub fn standard(seed: u64) -> Self {
        Self {
            players: 10,
            cap_mw: 1200.0,
            fractions: standard_fractions(),
            runs: 20,
            scaling_players: vec![5, 10, 20],
            seed,
        }
    }
}

pub fn standard_fractions() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone)]
pub struct IpResult {
    /// Per fraction, for the main population.
    pub mix: Vec<(f64, IpSummary)>,
    /// Per (players, fraction).
    pub scaling: Vec<(usize, f64, IpSummary)>,
}

pub fn ip_experiment(day: &Day, plan: &IpPlan) -> Result<IpResult, AppError> {
    if plan.fractions.is_empty() {
        return Err(AppError::Validation("no aware fractions given".into()));
    }
    let run = |players: usize, fraction: f64| -> Result<IpSummary, AppError> {
        let scenario = day.with_flat_players(players, cap_ratio_from_mw(plan.cap_mw))?;
        let mix = PopulationMix {
            n_agents: players,
            aware_fraction: fraction,
            runs: plan.runs,
            seed: plan.seed,
        };
        Ok(run_ip_population(&scenario, &mix)?)
    };
    let mix = plan
        .fractions
        .iter()
        .map(|&f| run(plan.players, f).map(|s| (f, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scaling = Vec::new();
    for &n in &plan.scaling_players {
        for &f in &plan.fractions {
            scaling.push((n, f, run(n, f)?));
        }
    }
    Ok(IpResult { mix, scaling })
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub case: TwoIntervalCase,
    pub kind: DynamicsKind,
    pub init_label: String,
    pub trajectory: Trajectory,
}

pub fn convergence_label(c: Convergence) -> String {
    match c {
        Convergence::Converged { at } => format!("converged_at={at}"),
        Convergence::Oscillation { period } => format!("oscillation_period={period}"),
        Convergence::None => "none".into(),
    }
}

/// Runs the two-interval games for `rounds` unfrozen updates. The
/// oscillation game is played with its two-entry library from the symmetric
/// and anti-symmetric starts under both dynamics; the three background-load
/// cases use continuous BRD from the even split and, for the mildly
/// imbalanced one, also from `random_inits` seeded random splits.
pub fn two_interval_runs(
    case: TwoIntervalCase,
    rounds: usize,
    random_inits: usize,
    seed: u64,
) -> Result<Vec<CaseRun>, AppError> {
    let scenario = two_interval(case)?;
    let schedule = Schedule::repeated(rounds);
    let config = dynamics_config(&scenario, UpdateMode::Simultaneous, seed);
    let mut out = Vec::new();
    match case {
        TwoIntervalCase::BrdOscillation => {
            let libs = (0..2)
                .map(|i| all_or_nothing_library(&scenario, i))
                .collect::<Result<Vec<_>, _>>()?;
            let space = ActionSpace::Finite(libs.clone());
            let inits = [
                ("symmetric", vec![libs[0].get(0).clone(), libs[1].get(0).clone()]),
                ("anti-symmetric", vec![libs[0].get(0).clone(), libs[1].get(1).clone()]),
            ];
            for kind in [DynamicsKind::BestResponse, DynamicsKind::FictitiousPlay] {
                for (label, init) in &inits {
                    let trajectory = run_dynamics(kind, &scenario, &schedule, init, &space, &config)?;
                    out.push(CaseRun {
                        case,
                        kind,
                        init_label: (*label).into(),
                        trajectory,
                    });
                }
            }
        }
        _ => {
            let even: Vec<ActionVector> = scenario.agents.iter().map(|_| ActionVector::zeros(2)).collect();
            let mut inits = vec![("even split".to_string(), even)];
            if case == TwoIntervalCase::MildlyImbalanced {
                for draw in 0..random_inits as u64 {
                    inits.push((format!("random #{draw}"), random_split_init(&scenario, seed, draw)));
                }
            }
            for (label, init) in inits {
                let trajectory = run_dynamics(
                    DynamicsKind::BestResponse,
                    &scenario,
                    &schedule,
                    &init,
                    &ActionSpace::Continuous,
                    &config,
                )?;
                out.push(CaseRun {
                    case,
                    kind: DynamicsKind::BestResponse,
                    init_label: label,
                    trajectory,
                });
            }
        }
    }
    Ok(out)
}
