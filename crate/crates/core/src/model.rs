//! Scenario types, system-load aggregation and peak identification.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::actions::{validate_action, ActionVector};
use crate::{CpError, Result};

/// Default absolute tolerance (MW) used to decide which intervals tie for the peak.
pub const DEFAULT_TIE_TOLERANCE_MW: f64 = 1e-6;

/// Relative tolerance for `sum(baseline) == energy_budget`.
const BUDGET_REL_TOL: f64 = 1e-9;

/// Discrete time horizon shared by every series of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub interval_count: usize,
    pub interval_duration_minutes: u32,
    pub window_label: String,
}

impl TimeGrid {
    pub fn new(
        interval_count: usize,
        interval_duration_minutes: u32,
        window_label: impl Into<String>,
    ) -> Result<Self> {
        if interval_count < 2 {
            return Err(CpError::GridTooShort {
                needed: 2,
                found: interval_count,
            });
        }
        if interval_duration_minutes == 0 {
            return Err(CpError::InvalidParameter(
                "interval duration must be positive".into(),
            ));
        }
        Ok(Self {
            interval_count,
            interval_duration_minutes,
            window_label: window_label.into(),
        })
    }

    /// Hours per interval; converts $/MWh prices into $ per MW·interval.
    pub fn hours_per_interval(&self) -> f64 {
        f64::from(self.interval_duration_minutes) / 60.0
    }
}

/// A flexible (responsive) load.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: u32,
    /// Reference consumption b_i(t), MW.
    pub baseline: Vec<f64>,
    /// Energy to be consumed over the window, MW·interval.
    pub energy_budget: f64,
    pub lower: f64,
    pub upper: f64,
}

impl AgentSpec {
    /// Builds an agent whose energy budget is the sum of its baseline.
    pub fn new(id: u32, baseline: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        let energy_budget = baseline.iter().sum();
        Self::with_budget(id, baseline, energy_budget, lower, upper)
    }

    pub fn with_budget(
        id: u32,
        baseline: Vec<f64>,
        energy_budget: f64,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let agent = Self {
            id,
            baseline,
            energy_budget,
            lower,
            upper,
        };
        agent.validate()?;
        Ok(agent)
    }

    /// A flat profile of `level` MW over `intervals` intervals.
    pub fn flat(id: u32, intervals: usize, level: f64, lower: f64, upper: f64) -> Result<Self> {
        Self::new(id, alloc::vec![level; intervals], lower, upper)
    }

    pub fn intervals(&self) -> usize {
        self.baseline.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower >= 0.0) || !(self.upper >= self.lower) {
            return Err(CpError::InvalidParameter(format!(
                "agent {}: bounds [{}, {}] must satisfy 0 <= lower <= upper",
                self.id, self.lower, self.upper
            )));
        }
        for (t, &b) in self.baseline.iter().enumerate() {
            if !b.is_finite() {
                return Err(CpError::InvalidParameter(format!(
                    "agent {}: non-finite baseline at interval {}",
                    self.id,
                    t + 1
                )));
            }
            if b < 0.0 {
                return Err(CpError::NegativeDemand {
                    what: "agent baseline",
                    interval: t + 1,
                    value: b,
                });
            }
            if b < self.lower || b > self.upper {
                return Err(CpError::BoundViolation {
                    agent: self.id,
                    interval: t + 1,
                    value: b,
                    lower: self.lower,
                    upper: self.upper,
                });
            }
        }
        let sum: f64 = self.baseline.iter().sum();
        let scale = self.energy_budget.abs().max(1.0);
        if (sum - self.energy_budget).abs() > BUDGET_REL_TOL * scale {
            return Err(CpError::InvalidParameter(format!(
                "agent {}: baseline sums to {} but energy budget is {}",
                self.id, sum, self.energy_budget
            )));
        }
        Ok(())
    }
}

/// Unvalidated scenario description; [`build_scenario`] turns it into a [`Scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: TimeGrid,
    pub baseline: Vec<f64>,
    pub prices: Vec<f64>,
    pub total_cost: f64,
    pub agents: Vec<AgentSpec>,
    pub tie_tolerance_mw: f64,
}

/// A validated CP game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    /// Non-responsive demand B(t), MW.
    pub baseline: Vec<f64>,
    /// Energy prices π_t, $/MWh. Treated as exogenous.
    pub prices: Vec<f64>,
    /// Cost C to be allocated over the coincident peak, $.
    pub total_cost: f64,
    pub agents: Vec<AgentSpec>,
    pub tie_tolerance_mw: f64,
    /// Set when any price is negative. Negative prices are legal.
    pub has_negative_prices: bool,
}

pub fn build_scenario(config: ScenarioConfig) -> Result<Scenario> {
    let n = config.grid.interval_count;
    check_len("baseline", n, config.baseline.len())?;
    check_len("prices", n, config.prices.len())?;
    for (t, &v) in config.baseline.iter().enumerate() {
        if !v.is_finite() {
            return Err(CpError::InvalidParameter(format!(
                "non-finite baseline at interval {}",
                t + 1
            )));
        }
        if v < 0.0 {
            return Err(CpError::NegativeDemand {
                what: "non-responsive baseline",
                interval: t + 1,
                value: v,
            });
        }
    }
    if config.prices.iter().any(|p| !p.is_finite()) {
        return Err(CpError::InvalidParameter("non-finite price".into()));
    }
    if !(config.total_cost >= 0.0) || !config.total_cost.is_finite() {
        return Err(CpError::InvalidParameter(format!(
            "total cost must be finite and non-negative, got {}",
            config.total_cost
        )));
    }
    if !(config.tie_tolerance_mw > 0.0) {
        return Err(CpError::InvalidParameter(format!(
            "tie tolerance must be positive, got {}",
            config.tie_tolerance_mw
        )));
    }
    for (k, agent) in config.agents.iter().enumerate() {
        check_len("agent baseline", n, agent.baseline.len())?;
        agent.validate()?;
        if config.agents[..k].iter().any(|a| a.id == agent.id) {
            return Err(CpError::InvalidParameter(format!(
                "duplicate agent id {}",
                agent.id
            )));
        }
    }
    let has_negative_prices = config.prices.iter().any(|&p| p < 0.0);
    Ok(Scenario {
        grid: config.grid,
        baseline: config.baseline,
        prices: config.prices,
        total_cost: config.total_cost,
        agents: config.agents,
        tie_tolerance_mw: config.tie_tolerance_mw,
        has_negative_prices,
    })
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CpError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

impl Scenario {
    pub fn intervals(&self) -> usize {
        self.grid.interval_count
    }

    /// B(t) plus every agent's baseline: the pre-game system profile.
    pub fn initial_load(&self) -> Vec<f64> {
        let mut load = self.baseline.clone();
        for agent in &self.agents {
            for (s, b) in load.iter_mut().zip(&agent.baseline) {
                *s += b;
            }
        }
        load
    }
}

/// Aggregate system load with its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemProfile {
    pub load: Vec<f64>,
    pub peak_value: f64,
    /// Ascending 0-based interval indices within tolerance of the peak.
    pub peak_set: Vec<usize>,
}

impl SystemProfile {
    pub fn from_load(load: Vec<f64>, tol: f64) -> Self {
        let peak_value = max_of(&load);
        let peak_set = peak_set(&load, tol);
        Self {
            load,
            peak_value,
            peak_set,
        }
    }

    /// Single-peak convention: the earliest interval of the peak set.
    pub fn peak_interval(&self) -> usize {
        self.peak_set[0]
    }
}

/// S(t) = B(t) + Σ_i (b_i(t) + a_i(t)), after checking each action is feasible.
pub fn system_load(scenario: &Scenario, actions: &[ActionVector]) -> Result<SystemProfile> {
    check_len("actions", scenario.agents.len(), actions.len())?;
    let n = scenario.intervals();
    // Accumulate in id order so the sum does not depend on how agents are listed.
    let mut order: Vec<usize> = (0..actions.len()).collect();
    order.sort_by_key(|&k| scenario.agents[k].id);
    let mut load = scenario.baseline.clone();
    for k in order {
        let (agent, action) = (&scenario.agents[k], &actions[k]);
        check_len("action", n, action.len())?;
        if !validate_action(agent, action, None) {
            return Err(CpError::InfeasibleAction { agent: agent.id });
        }
        for ((s, b), a) in load.iter_mut().zip(&agent.baseline).zip(action.deltas()) {
            *s += b + a;
        }
    }
    Ok(SystemProfile::from_load(load, scenario.tie_tolerance_mw))
}

/// All t with `load[t] >= max(load) - tol`, ascending.
pub fn peak_set(load: &[f64], tol: f64) -> Vec<usize> {
    let max = max_of(load);
    load.iter()
        .enumerate()
        .filter(|&(_, &s)| s >= max - tol)
        .map(|(t, _)| t)
        .collect()
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(n, 60, "day").unwrap()
    }

    fn config(n: usize, agents: Vec<AgentSpec>) -> ScenarioConfig {
        ScenarioConfig {
            grid: grid(n),
            baseline: vec![0.0; n],
            prices: vec![0.0; n],
            total_cost: 100.0,
            agents,
            tie_tolerance_mw: DEFAULT_TIE_TOLERANCE_MW,
        }
    }

    #[test]
    fn five_flat_agents_get_full_day_budget() {
        let agents = (0..5)
            .map(|i| AgentSpec::flat(i, 24, 1000.0, 0.0, 1500.0).unwrap())
            .collect();
        let s = build_scenario(config(24, agents)).unwrap();
        for a in &s.agents {
            assert_eq!(a.energy_budget, 24000.0);
        }
        assert!(s.initial_load().iter().all(|&v| v == 5000.0));
    }

    #[test]
    fn minimal_two_interval_scenario() {
        let agent = AgentSpec::with_budget(0, vec![0.5, 0.5], 1.0, 0.0, 1.0).unwrap();
        let s = build_scenario(config(2, vec![agent])).unwrap();
        assert_eq!(s.intervals(), 2);
    }

    #[test]
    fn baseline_above_cap_is_rejected() {
        let mut b = vec![1000.0; 24];
        b[2] = 1600.0;
        let err = AgentSpec::new(0, b, 0.0, 1500.0).unwrap_err();
        assert!(matches!(err, CpError::BoundViolation { interval: 3, .. }));
    }

    #[test]
    fn dimension_mismatch_and_negative_demand() {
        let agent = AgentSpec::flat(0, 3, 1.0, 0.0, 2.0).unwrap();
        let err = build_scenario(config(2, vec![agent])).unwrap_err();
        assert!(matches!(err, CpError::DimensionMismatch { .. }));

        let mut c = config(2, vec![]);
        c.baseline = vec![1.0, -1.0];
        assert!(matches!(
            build_scenario(c).unwrap_err(),
            CpError::NegativeDemand { .. }
        ));
    }

    #[test]
    fn negative_prices_are_flagged_not_rejected() {
        let mut c = config(2, vec![]);
        c.prices = vec![-5.0, 10.0];
        let s = build_scenario(c).unwrap();
        assert!(s.has_negative_prices);
    }

    #[test]
    fn budget_mismatch_rejected() {
        assert!(AgentSpec::with_budget(0, vec![1.0, 1.0], 3.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn system_load_zero_action() {
        let agent = AgentSpec::flat(0, 2, 5.0, 0.0, 10.0).unwrap();
        let mut c = config(2, vec![agent]);
        c.baseline = vec![10.0, 20.0];
        let s = build_scenario(c).unwrap();
        let p = system_load(&s, &[ActionVector::zeros(2)]).unwrap();
        assert_eq!(p.load, vec![15.0, 25.0]);
        assert_eq!(p.peak_set, vec![1]);
        assert_eq!(p.peak_value, 25.0);
    }

    #[test]
    fn system_load_symmetric_tie() {
        let agents = vec![
            AgentSpec::flat(0, 2, 1.0, 0.0, 2.0).unwrap(),
            AgentSpec::flat(1, 2, 1.0, 0.0, 2.0).unwrap(),
        ];
        let mut c = config(2, agents);
        c.baseline = vec![10.0, 10.0];
        let s = build_scenario(c).unwrap();
        let actions = [
            ActionVector::new(vec![1.0, -1.0]),
            ActionVector::new(vec![-1.0, 1.0]),
        ];
        let p = system_load(&s, &actions).unwrap();
        assert_eq!(p.load, vec![12.0, 12.0]);
        assert_eq!(p.peak_set, vec![0, 1]);
    }

    #[test]
    fn system_load_rejects_infeasible() {
        let agent = AgentSpec::flat(0, 2, 1.0, 0.0, 1.5).unwrap();
        let s = build_scenario(config(2, vec![agent])).unwrap();
        let err = system_load(&s, &[ActionVector::new(vec![1.0, -1.0])]).unwrap_err();
        assert_eq!(err, CpError::InfeasibleAction { agent: 0 });
    }

    #[test]
    fn peak_set_examples() {
        assert_eq!(peak_set(&[1.0, 3.0, 2.0], 1e-6), vec![1]);
        assert_eq!(peak_set(&[12.0, 12.0, 10.0], 1e-6), vec![0, 1]);
        // 5e-7 apart: inside the tolerance.
        assert_eq!(peak_set(&[100.0, 99.999_999_5], 1e-6), vec![0, 1]);
        assert_eq!(peak_set(&[100.0, 99.999_998], 1e-6), vec![0]);
    }
}
