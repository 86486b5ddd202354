//! Ready-made scenarios: the ERCOT-like day and the two-interval games.

use cpgame_core::actions::{ActionVector, FiniteActionLibrary};
use cpgame_core::model::{build_scenario, AgentSpec, Scenario, ScenarioConfig, TimeGrid, DEFAULT_TIE_TOLERANCE_MW};
use cpgame_core::seed::{derive_seed, rng_from_seed};
use rand::Rng;

use crate::error::AppError;
use crate::synthetic::{generate_synthetic_day, SyntheticProfileParams};

/// Allocated transmission cost, $.
pub const DEFAULT_TOTAL_COST: f64 = 5.72e9;
/// Aggregate responsive demand, MW, split evenly across players.
pub const RESPONSIVE_MW: f64 = 5000.0;
/// Seed of the bundled synthetic day.
pub const BUNDLED_DAY_SEED: u64 = 2023;

/// Everything about a day except who plays in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Day {
    pub grid: TimeGrid,
    pub baseline: Vec<f64>,
    pub prices: Vec<f64>,
    pub total_cost: f64,
    pub tie_tolerance_mw: f64,
}

impl Day {
    pub fn synthetic(params: &SyntheticProfileParams, seed: u64, total_cost: f64) -> Result<Self, AppError> {
        let generated = generate_synthetic_day(params, seed)?;
        let n = params.intervals;
        Ok(Self {
            grid: TimeGrid::new(n, (24 * 60 / n) as u32, "synthetic peak day")?,
            baseline: generated.baseline,
            prices: generated.prices,
            total_cost,
            tie_tolerance_mw: DEFAULT_TIE_TOLERANCE_MW,
        })
    }

    /// The bundled day at 24 or 96 intervals.
    pub fn bundled(intervals: usize) -> Result<Self, AppError> {
        let params = SyntheticProfileParams {
            intervals,
            ..Default::default()
        };
        Self::synthetic(&params, BUNDLED_DAY_SEED, DEFAULT_TOTAL_COST)
    }

    pub fn with_agents(&self, agents: Vec<AgentSpec>) -> Result<Scenario, AppError> {
        Ok(build_scenario(ScenarioConfig {
            grid: self.grid.clone(),
            baseline: self.baseline.clone(),
            prices: self.prices.clone(),
            total_cost: self.total_cost,
            agents,
            tie_tolerance_mw: self.tie_tolerance_mw,
        })?)
    }

    /// `players` identical flat agents sharing [`RESPONSIVE_MW`]; each may
    /// rise to `cap_ratio` times its level and drop to zero.
    pub fn with_flat_players(&self, players: usize, cap_ratio: f64) -> Result<Scenario, AppError> {
        if players == 0 {
            return Err(AppError::Validation("at least one player is required".into()));
        }
        if !(cap_ratio >= 1.0) {
            return Err(AppError::Validation(format!("cap ratio must be at least 1, got {cap_ratio}")));
        }
        let level = RESPONSIVE_MW / players as f64;
        let n = self.grid.interval_count;
        let agents = (0..players as u32)
            .map(|i| AgentSpec::flat(i, n, level, 0.0, cap_ratio * level))
            .collect::<Result<Vec<_>, _>>()?;
        self.with_agents(agents)
    }
}

/// Flat-demand players on a synthetic day. `cap_ratio` sets each player's
/// upper bound as a multiple of its flat level (1.2 ↔ 1200 MW at N = 5).
pub fn ercot_like(
    day: &SyntheticProfileParams,
    day_seed: u64,
    players: usize,
    cap_ratio: f64,
    total_cost: f64,
) -> Result<Scenario, AppError> {
    Day::synthetic(day, day_seed, total_cost)?.with_flat_players(players, cap_ratio)
}

/// The bundled 96-interval day with `players` agents.
pub fn bundled_day(players: usize, cap_ratio: f64) -> Result<Scenario, AppError> {
    Day::bundled(96)?.with_flat_players(players, cap_ratio)
}

/// Caps are quoted in MW at the five-player split of 1000 MW each, so a
/// 1200 MW cap means 120% of every player's level whatever N is.
pub fn cap_ratio_from_mw(cap_mw: f64) -> f64 {
    cap_mw / (RESPONSIVE_MW / 5.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoIntervalCase {
    /// B = [1, 1], all-or-nothing library, symmetric start.
    BrdOscillation,
    /// Balanced background load.
    Balanced,
    /// |B(t1) − B(t2)| ≥ E1 + E2.
    HighlyImbalanced,
    /// 0 < |B(t1) − B(t2)| < E1 + E2.
    MildlyImbalanced,
}

impl TwoIntervalCase {
    pub const ALL: [TwoIntervalCase; 4] = [
        TwoIntervalCase::BrdOscillation,
        TwoIntervalCase::Balanced,
        TwoIntervalCase::HighlyImbalanced,
        TwoIntervalCase::MildlyImbalanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TwoIntervalCase::BrdOscillation => "brd-oscillation",
            TwoIntervalCase::Balanced => "case1",
            TwoIntervalCase::HighlyImbalanced => "case2",
            TwoIntervalCase::MildlyImbalanced => "case3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn background(self) -> [f64; 2] {
        match self {
            TwoIntervalCase::BrdOscillation | TwoIntervalCase::Balanced => [1.0, 1.0],
            TwoIntervalCase::HighlyImbalanced => [3.5, 1.0],
            TwoIntervalCase::MildlyImbalanced => [1.5, 1.0],
        }
    }
}

/// Two players with E = 1 split evenly, bounds [0, 1], C = 100, zero prices.
pub fn two_interval(case: TwoIntervalCase) -> Result<Scenario, AppError> {
    let agents = (0..2)
        .map(|i| AgentSpec::flat(i, 2, 0.5, 0.0, 1.0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build_scenario(ScenarioConfig {
        grid: TimeGrid::new(2, 60, case.name())?,
        baseline: case.background().to_vec(),
        prices: vec![0.0; 2],
        total_cost: 100.0,
        agents,
        tie_tolerance_mw: DEFAULT_TIE_TOLERANCE_MW,
    })?)
}

/// The two-entry library {(E, 0), (0, E)} for an agent of [`two_interval`].
pub fn all_or_nothing_library(scenario: &Scenario, agent: usize) -> Result<FiniteActionLibrary, AppError> {
    let spec = &scenario.agents[agent];
    let e = spec.energy_budget;
    let first = ActionVector::from_consumption(spec, &[e, 0.0]);
    let second = ActionVector::from_consumption(spec, &[0.0, e]);
    Ok(FiniteActionLibrary::from_actions(
        spec,
        vec![(first, "all in t1".into()), (second, "all in t2".into())],
    )?)
}

/// Random energy splits for a two-interval game, one per agent, derived from
/// `(seed, draw, agent id)`.
pub fn random_split_init(scenario: &Scenario, seed: u64, draw: u64) -> Vec<ActionVector> {
    scenario
        .agents
        .iter()
        .map(|a| {
            let mut rng = rng_from_seed(derive_seed(seed, &[draw, u64::from(a.id)]));
            let e = a.energy_budget;
            let lo = (e - a.upper).max(a.lower);
            let hi = (e - a.lower).min(a.upper);
            let first = rng.random_range(lo..=hi);
            ActionVector::from_consumption(a, &[first, e - first])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpgame_core::actions::validate_action;

    #[test]
    fn bundled_day_shape() {
        let s = bundled_day(5, 1.2).unwrap();
        assert_eq!(s.intervals(), 96);
        assert_eq!(s.agents[0].upper, 1200.0);
        assert_eq!(s.agents[0].energy_budget, 96_000.0);
        let init = s.initial_load();
        let peak = init.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(peak, 90_000.0);
    }

    #[test]
    fn case_backgrounds_match_regimes() {
        for case in TwoIntervalCase::ALL {
            let s = two_interval(case).unwrap();
            let gap = (s.baseline[0] - s.baseline[1]).abs();
            let energy: f64 = s.agents.iter().map(|a| a.energy_budget).sum();
            match case {
                TwoIntervalCase::HighlyImbalanced => assert!(gap >= energy),
                TwoIntervalCase::MildlyImbalanced => assert!(gap > 0.0 && gap < energy),
                _ => assert_eq!(gap, 0.0),
            }
            assert_eq!(TwoIntervalCase::parse(case.name()), Some(case));
        }
    }

    #[test]
    fn random_inits_are_feasible_and_seeded() {
        let s = two_interval(TwoIntervalCase::MildlyImbalanced).unwrap();
        let a = random_split_init(&s, 5, 0);
        assert_eq!(a, random_split_init(&s, 5, 0));
        assert_ne!(a, random_split_init(&s, 5, 1));
        for (spec, act) in s.agents.iter().zip(&a) {
            assert!(validate_action(spec, act, None));
        }
    }

    #[test]
    fn cap_labels() {
        assert_eq!(cap_ratio_from_mw(1200.0), 1.2);
        assert_eq!(cap_ratio_from_mw(1800.0), 1.8);
    }
}
