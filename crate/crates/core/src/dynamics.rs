//! Repeated play: best-response and fictitious-play dynamics on a rolling
//! schedule with freezing of realized intervals.
//!
//! Round 0 of a [`Trajectory`] is the initial joint action. Each epoch of
//! the [`Schedule`] then produces one update round in which every agent
//! responds, subject to the intervals already realized at that epoch.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::actions::{restricted_indices, ActionVector, FiniteActionLibrary, FrozenPrefix};
use crate::allocation::{total_cost, ChargeBreakdown};
use crate::bestresponse::{
    best_response_among, best_response_continuous, expected_best_response_finite, BeliefProfile,
    OpponentAggregate, SolverParams,
};
use crate::model::{system_load, Scenario, SystemProfile, TimeGrid};
use crate::seed::derive_seed;
use crate::{CpError, Result};

/// Decision epochs and how many intervals are realized at each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    freeze: Vec<usize>,
}

impl Schedule {
    /// `freeze_map[e]` is the number of realized intervals at epoch `e`.
    pub fn from_freeze_map(freeze_map: Vec<usize>) -> Result<Self> {
        if freeze_map.first().is_some_and(|&f| f != 0) {
            return Err(CpError::InvalidParameter("the first epoch must freeze nothing".into()));
        }
        if freeze_map.windows(2).any(|w| w[1] < w[0]) {
            return Err(CpError::InvalidParameter("freeze map must be non-decreasing".into()));
        }
        Ok(Self { freeze: freeze_map })
    }

    /// A single epoch with nothing realized: the day-ahead one-shot update.
    pub fn day_ahead() -> Self {
        Self { freeze: vec![0] }
    }

    /// `rounds` epochs without freezing, for studying repeated play.
    pub fn repeated(rounds: usize) -> Self {
        Self {
            freeze: vec![0; rounds],
        }
    }

    pub fn epochs(&self) -> usize {
        self.freeze.len()
    }

    pub fn freeze_map(&self) -> &[usize] {
        &self.freeze
    }
}

/// One epoch per interval; epoch `τ` (0-based) has intervals `0..τ` realized.
pub fn make_rolling_schedule(grid: &TimeGrid) -> Schedule {
    Schedule {
        freeze: (0..grid.interval_count).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// Everyone responds to the previous round's actions.
    #[default]
    Simultaneous,
    /// Agents respond in ascending order to the most recent actions.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    BestResponse,
    FictitiousPlay,
}

impl DynamicsKind {
    pub fn label(self) -> &'static str {
        match self {
            DynamicsKind::BestResponse => "BRD",
            DynamicsKind::FictitiousPlay => "FPD",
        }
    }
}

/// Continuous actions or one finite library per agent.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    Continuous,
    Finite(Vec<FiniteActionLibrary>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    pub update_mode: UpdateMode,
    pub solver: SolverParams,
    pub convergence_window: usize,
    /// MW tolerance for treating two joint actions as equal.
    pub convergence_tol: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            update_mode: UpdateMode::Simultaneous,
            solver: SolverParams::default(),
            convergence_window: 6,
            convergence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub round: usize,
    /// Intervals realized when this round's actions were chosen.
    pub frozen_through: usize,
    pub actions: Vec<ActionVector>,
    /// Library indices in finite mode.
    pub choices: Option<Vec<usize>>,
    pub profile: SystemProfile,
    pub charges: Vec<ChargeBreakdown>,
    /// Agents that kept their action because no feasible continuation existed.
    pub held: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    /// Joint action unchanged from this update round on.
    Converged { at: usize },
    /// Joint action repeats with this period over the tail.
    Oscillation { period: usize },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: DynamicsKind,
    pub rounds: Vec<RoundState>,
    /// Peak of the scheduled full-horizon profile, per round.
    pub peak_series: Vec<f64>,
    pub convergence: Convergence,
}

impl Trajectory {
    pub fn final_round(&self) -> &RoundState {
        self.rounds.last().expect("trajectory holds at least the initial round")
    }
}

pub fn run_brd(
    scenario: &Scenario,
    schedule: &Schedule,
    init: &[ActionVector],
    space: &ActionSpace,
    config: &DynamicsConfig,
) -> Result<Trajectory> {
    Engine::new(scenario, space, config, DynamicsKind::BestResponse)?.run(schedule, init)
}

/// Fictitious play. Finite mode best-responds to empirical frequencies of
/// opponents' past library choices (the initial action counts as the first
/// observation); continuous mode to the mean of their past actions over the
/// unrealized intervals, with realized intervals taken as realized.
pub fn run_fpd(
    scenario: &Scenario,
    schedule: &Schedule,
    init: &[ActionVector],
    space: &ActionSpace,
    config: &DynamicsConfig,
) -> Result<Trajectory> {
    Engine::new(scenario, space, config, DynamicsKind::FictitiousPlay)?.run(schedule, init)
}

pub fn run_dynamics(
    kind: DynamicsKind,
    scenario: &Scenario,
    schedule: &Schedule,
    init: &[ActionVector],
    space: &ActionSpace,
    config: &DynamicsConfig,
) -> Result<Trajectory> {
    Engine::new(scenario, space, config, kind)?.run(schedule, init)
}

struct Engine<'a> {
    scenario: &'a Scenario,
    space: &'a ActionSpace,
    config: &'a DynamicsConfig,
    kind: DynamicsKind,
    /// Per agent: library choices so far (finite mode).
    choice_history: Vec<Vec<usize>>,
    /// Per agent: running sum of consumption over past rounds (continuous FPD).
    consumption_sum: Vec<Vec<f64>>,
    observations: usize,
}

impl<'a> Engine<'a> {
    fn new(
        scenario: &'a Scenario,
        space: &'a ActionSpace,
        config: &'a DynamicsConfig,
        kind: DynamicsKind,
    ) -> Result<Self> {
        config.solver.validate()?;
        if let ActionSpace::Finite(libs) = space {
            if libs.len() != scenario.agents.len() {
                return Err(CpError::DimensionMismatch {
                    what: "action libraries",
                    expected: scenario.agents.len(),
                    found: libs.len(),
                });
            }
        }
        let n = scenario.intervals();
        Ok(Self {
            scenario,
            space,
            config,
            kind,
            choice_history: vec![Vec::new(); scenario.agents.len()],
            consumption_sum: vec![vec![0.0; n]; scenario.agents.len()],
            observations: 0,
        })
    }

    fn run(mut self, schedule: &Schedule, init: &[ActionVector]) -> Result<Trajectory> {
        let agents = &self.scenario.agents;
        if init.len() != agents.len() {
            return Err(CpError::DimensionMismatch {
                what: "initial actions",
                expected: agents.len(),
                found: init.len(),
            });
        }
        let choices = match self.space {
            ActionSpace::Finite(libs) => Some(
                init.iter()
                    .zip(libs)
                    .zip(agents)
                    .map(|((a, lib), spec)| {
                        lib.index_of(a).ok_or_else(|| {
                            CpError::InvalidParameter(format!(
                                "agent {}: initial action is not in its library",
                                spec.id
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            ActionSpace::Continuous => None,
        };
        let first = self.record(0, 0, init.to_vec(), choices, vec![false; agents.len()])?;
        let mut rounds = vec![first];

        for (epoch, &frozen_through) in schedule.freeze_map().iter().enumerate() {
            let prev = rounds.last().expect("non-empty");
            let next = self.step(epoch + 1, frozen_through, prev)?;
            rounds.push(next);
        }

        let peak_series = rounds.iter().map(|r| r.profile.peak_value).collect();
        let mut traj = Trajectory {
            kind: self.kind,
            rounds,
            peak_series,
            convergence: Convergence::None,
        };
        traj.convergence =
            detect_convergence(&traj, self.config.convergence_window, self.config.convergence_tol);
        Ok(traj)
    }

    fn record(
        &mut self,
        round: usize,
        frozen_through: usize,
        actions: Vec<ActionVector>,
        choices: Option<Vec<usize>>,
        held: Vec<bool>,
    ) -> Result<RoundState> {
        let scenario = self.scenario;
        let profile = system_load(scenario, &actions)?;
        let charges = scenario
            .agents
            .iter()
            .zip(&actions)
            .map(|(spec, a)| total_cost(scenario, spec, a, &profile))
            .collect::<Result<Vec<_>>>()?;
        if let Some(c) = &choices {
            for (h, &i) in self.choice_history.iter_mut().zip(c) {
                h.push(i);
            }
        }
        for ((sum, spec), a) in self.consumption_sum.iter_mut().zip(&scenario.agents).zip(&actions) {
            for ((s, b), d) in sum.iter_mut().zip(&spec.baseline).zip(a.deltas()) {
                *s += b + d;
            }
        }
        self.observations += 1;
        Ok(RoundState {
            round,
            frozen_through,
            actions,
            choices,
            profile,
            charges,
            held,
        })
    }

    fn step(&mut self, round: usize, frozen_through: usize, prev: &RoundState) -> Result<RoundState> {
        let scenario = self.scenario;
        let agents = &scenario.agents;
        let mut actions = prev.actions.clone();
        let mut choices = prev.choices.clone();
        let mut held = vec![false; agents.len()];
        // Consumption sums including this round's earlier movers (round robin only).
        let mut sums = self.consumption_sum.clone();
        let mut counts = vec![self.observations; agents.len()];
        let mut histories = self.choice_history.clone();

        for (i, spec) in agents.iter().enumerate() {
            let current = &prev.actions[i];
            let frozen = FrozenPrefix::from_action(spec, current, frozen_through)?;
            let view: &[ActionVector] = match self.config.update_mode {
                UpdateMode::Simultaneous => &prev.actions,
                UpdateMode::RoundRobin => &actions,
            };
            let mut solver = self.config.solver.clone();
            solver.rng_seed = derive_seed(self.config.solver.rng_seed, &[round as u64, u64::from(spec.id)]);

            let (action, choice, was_held) = match (self.space, self.kind) {
                (ActionSpace::Continuous, kind) => {
                    let opponents = match kind {
                        DynamicsKind::BestResponse => OpponentAggregate::from_actions(scenario, i, view),
                        DynamicsKind::FictitiousPlay => {
                            self.mean_aggregate(i, frozen_through, view, &sums, &counts)?
                        }
                    };
                    let r = best_response_continuous(scenario, spec, &opponents, &frozen, current, &solver)?;
                    (r.action, None, r.held)
                }
                (ActionSpace::Finite(libs), kind) => {
                    let lib = &libs[i];
                    let candidates = restricted_indices(lib, spec, &frozen);
                    let prev_choice = prev.choices.as_ref().expect("finite mode")[i];
                    if candidates.is_empty() {
                        (current.clone(), Some(prev_choice), true)
                    } else {
                        let idx = match kind {
                            DynamicsKind::BestResponse => {
                                let o = OpponentAggregate::from_actions(scenario, i, view);
                                best_response_among(scenario, spec, lib, &candidates, &o)?.0
                            }
                            DynamicsKind::FictitiousPlay => {
                                let beliefs = BeliefProfile::from_histories(
                                    histories
                                        .iter()
                                        .enumerate()
                                        .filter(|&(j, _)| j != i)
                                        .map(|(j, h)| (j, h.as_slice())),
                                );
                                expected_best_response_finite(
                                    scenario, i, libs, &candidates, &beliefs, &solver,
                                )?
                            }
                        };
                        (lib.get(idx).clone(), Some(idx), false)
                    }
                }
            };

            held[i] = was_held;
            if let (Some(c), Some(idx)) = (choices.as_mut(), choice) {
                c[i] = idx;
            }
            if self.config.update_mode == UpdateMode::RoundRobin {
                if let Some(idx) = choice {
                    histories[i].push(idx);
                }
                for ((s, b), d) in sums[i].iter_mut().zip(&spec.baseline).zip(action.deltas()) {
                    *s += b + d;
                }
                counts[i] += 1;
            }
            actions[i] = action;
        }
        self.record(round, frozen_through, actions, choices, held)
    }

    /// B(t) plus each opponent's realized consumption for t < k and mean past consumption after.
    fn mean_aggregate(
        &self,
        agent: usize,
        k: usize,
        view: &[ActionVector],
        sums: &[Vec<f64>],
        counts: &[usize],
    ) -> Result<OpponentAggregate> {
        let scenario = self.scenario;
        let mut o = scenario.baseline.clone();
        for (j, spec) in scenario.agents.iter().enumerate() {
            if j == agent {
                continue;
            }
            let realized = view[j].deltas();
            let count = counts[j] as f64;
            for (t, s) in o.iter_mut().enumerate() {
                *s += if t < k {
                    spec.baseline[t] + realized[t]
                } else {
                    sums[j][t] / count
                };
            }
        }
        OpponentAggregate::new(o)
    }
}

fn same_joint(a: &[ActionVector], b: &[ActionVector], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        x.deltas()
            .iter()
            .zip(y.deltas())
            .all(|(p, q)| (p - q).abs() <= tol)
    })
}

/// Converged when the last `window` rounds share one joint action (reported
/// as the first update round, at least 1, from which it stays unchanged);
/// otherwise the smallest period `p` in `2..=window/2` such that the last
/// `window` rounds satisfy `a[t] = a[t-p]`.
pub fn detect_convergence(trajectory: &Trajectory, window: usize, tol: f64) -> Convergence {
    let rounds = &trajectory.rounds;
    let len = rounds.len();
    if window < 2 || len < window {
        return Convergence::None;
    }
    let same = |a: usize, b: usize| same_joint(&rounds[a].actions, &rounds[b].actions, tol);
    let last = len - 1;
    if (len - window..len).all(|t| same(t, last)) {
        let mut start = len - window;
        while start > 0 && same(start - 1, last) {
            start -= 1;
        }
        return Convergence::Converged { at: start.max(1) };
    }
    for period in 2..=window / 2 {
        if len < window + period {
            break;
        }
        if (len - window..len).all(|t| same(t, t - period)) {
            return Convergence::Oscillation { period };
        }
    }
    Convergence::None
}
