//! Information providers that broadcast ranked candidate peak intervals,
//! and the rank-conditioned curtailment rule agents follow.
//!
//! Response rule for a ranking `r1..r8`:
//!
//! | rank   | curtailment                                  |
//! |--------|----------------------------------------------|
//! | 1, 2   | all of b_i(t)                                |
//! | 3      | half of b_i(t)                               |
//! | 4..8   | half of b_i(t) at 3 of the 5, drawn uniformly |
//!
//! Curtailed energy is refilled at the cheapest unranked intervals, each up
//! to X̄_i − b_i(t). When that headroom is short every curtailment is scaled
//! down by the same factor.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::actions::{refill_lowest_price, top_k, validate_action, ActionVector};
use crate::metrics::{mean_and_std, peak_reduction};
use crate::model::{max_of, AgentSpec, Scenario};
use crate::seed::{derive_seed, rng_from_seed, SeedRng};
use crate::{CpError, Result};

/// Number of candidate intervals a provider ranks.
pub const RANKED_INTERVALS: usize = 8;
/// Ranks 4..8 are eligible for the random half shutdown.
const RANDOM_POOL: usize = 5;
/// How many of the pool are curtailed.
const RANDOM_PICKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Naive,
    ResponseAware,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpRanking {
    ranked: Vec<usize>,
    pub kind: ProviderKind,
}

impl IpRanking {
    pub fn new(ranked: Vec<usize>, kind: ProviderKind, intervals: usize) -> Result<Self> {
        if ranked.len() != RANKED_INTERVALS {
            return Err(CpError::InvalidParameter(alloc::format!(
                "a ranking holds exactly {RANKED_INTERVALS} intervals, got {}",
                ranked.len()
            )));
        }
        for (k, &t) in ranked.iter().enumerate() {
            if t >= intervals || ranked[..k].contains(&t) {
                return Err(CpError::InvalidParameter(
                    "ranked intervals must be distinct and inside the grid".into(),
                ));
            }
        }
        Ok(Self { ranked, kind })
    }

    /// Rank 1 first, 0-based interval indices.
    pub fn intervals(&self) -> &[usize] {
        &self.ranked
    }
}

/// The eight highest intervals of `baseline_load`, highest first.
pub fn naive_ranking(baseline_load: &[f64]) -> Result<IpRanking> {
    if baseline_load.len() < RANKED_INTERVALS {
        return Err(CpError::GridTooShort {
            needed: RANKED_INTERVALS,
            found: baseline_load.len(),
        });
    }
    IpRanking::new(
        top_k(baseline_load, RANKED_INTERVALS),
        ProviderKind::Naive,
        baseline_load.len(),
    )
}

/// Ranks the top eight intervals of the load projected under everyone
/// following `naive`, with the random part replaced by its expectation.
pub fn response_aware_ranking(scenario: &Scenario, naive: &IpRanking) -> Result<IpRanking> {
    let expected = RANDOM_PICKS as f64 / RANDOM_POOL as f64 * 0.5;
    let mut fractions = [expected; RANKED_INTERVALS];
    fractions[..3].copy_from_slice(&[1.0, 1.0, 0.5]);
    let mut projected = scenario.baseline.clone();
    for agent in &scenario.agents {
        let outcome = respond_with_fractions(scenario, agent, naive, &fractions)?;
        for (s, x) in projected.iter_mut().zip(outcome.action.consumption(agent)) {
            *s += x;
        }
    }
    IpRanking::new(
        top_k(&projected, RANKED_INTERVALS),
        ProviderKind::ResponseAware,
        scenario.intervals(),
    )
}

/// An agent's response to a ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponderOutcome {
    pub action: ActionVector,
    /// Factor applied to the planned curtailment (1 when the refill fit).
    pub scale: f64,
    pub scaled_down: bool,
}

/// Applies the rank rule; the three half shutdowns among ranks 4..8 are drawn from `rng`.
pub fn responder_action(
    scenario: &Scenario,
    agent: &AgentSpec,
    ranking: &IpRanking,
    rng: &mut SeedRng,
) -> Result<ResponderOutcome> {
    let mut fractions = [0.0; RANKED_INTERVALS];
    fractions[..3].copy_from_slice(&[1.0, 1.0, 0.5]);
    let mut picks = sample(rng, RANDOM_POOL, RANDOM_PICKS).into_vec();
    picks.sort_unstable();
    for p in picks {
        fractions[3 + p] = 0.5;
    }
    respond_with_fractions(scenario, agent, ranking, &fractions)
}

fn respond_with_fractions(
    scenario: &Scenario,
    agent: &AgentSpec,
    ranking: &IpRanking,
    fractions: &[f64; RANKED_INTERVALS],
) -> Result<ResponderOutcome> {
    let n = scenario.intervals();
    let mut cuts = vec![0.0; n];
    for (&t, &f) in ranking.intervals().iter().zip(fractions) {
        let b = agent.baseline[t];
        cuts[t] = (b * f).min(b - agent.lower).max(0.0);
    }
    let planned: f64 = cuts.iter().sum();
    let mut headroom: Vec<f64> = agent
        .baseline
        .iter()
        .map(|b| (agent.upper - b).max(0.0))
        .collect();
    for &t in ranking.intervals() {
        headroom[t] = 0.0;
    }
    let available: f64 = headroom.iter().sum();
    let scale = if planned > available {
        if planned > 0.0 { available / planned } else { 1.0 }
    } else {
        1.0
    };
    let curtailed = if scale < 1.0 {
        for c in cuts.iter_mut() {
            *c *= scale;
        }
        // Scaled cuts may exceed the headroom by rounding; fill exactly what fits.
        cuts.iter().sum::<f64>().min(available)
    } else {
        planned
    };
    let fill = refill_lowest_price(curtailed, &scenario.prices, &headroom, ranking.intervals())?;
    let deltas: Vec<f64> = fill.iter().zip(&cuts).map(|(f, c)| f - c).collect();
    let action = ActionVector::new(deltas);
    if !validate_action(agent, &action, None) {
        return Err(CpError::InfeasibleAction { agent: agent.id });
    }
    Ok(ResponderOutcome {
        action,
        scale,
        scaled_down: scale < 1.0,
    })
}

/// Population split between the two providers.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMix {
    pub n_agents: usize,
    /// Share of agents following the response-aware ranking.
    pub aware_fraction: f64,
    pub runs: usize,
    pub seed: u64,
}

impl PopulationMix {
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.n_agents != scenario.agents.len() {
            return Err(CpError::DimensionMismatch {
                what: "population size",
                expected: scenario.agents.len(),
                found: self.n_agents,
            });
        }
        if !(0.0..=1.0).contains(&self.aware_fraction) {
            return Err(CpError::InvalidParameter("aware fraction must lie in [0, 1]".into()));
        }
        if self.runs == 0 {
            return Err(CpError::InvalidParameter("at least one run is required".into()));
        }
        Ok(())
    }

    pub fn aware_count(&self) -> usize {
        libm::round(self.aware_fraction * self.n_agents as f64) as usize
    }

    /// Positions (in the scenario's agent list) of aware agents: the
    /// `aware_count` smallest ids.
    pub fn aware_agents(&self, scenario: &Scenario) -> Vec<bool> {
        let mut by_id: Vec<usize> = (0..scenario.agents.len()).collect();
        by_id.sort_by_key(|&i| scenario.agents[i].id);
        let mut aware = vec![false; scenario.agents.len()];
        for &i in by_id.iter().take(self.aware_count()) {
            aware[i] = true;
        }
        aware
    }
}

/// Per-run and aggregate peak reductions of a population experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct IpSummary {
    pub naive: IpRanking,
    pub aware: IpRanking,
    /// Peak reduction (%) per run.
    pub per_run: Vec<f64>,
    pub final_peaks: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    /// Responses that needed a scale-down, over all runs and agents.
    pub scaled_down: usize,
}

/// Every agent's response in run `run`; usable as the initial joint action of
/// a dynamics run.
pub fn population_actions(
    scenario: &Scenario,
    mix: &PopulationMix,
    naive: &IpRanking,
    aware: &IpRanking,
    run: usize,
) -> Result<Vec<ResponderOutcome>> {
    let groups = mix.aware_agents(scenario);
    scenario
        .agents
        .iter()
        .zip(groups)
        .map(|(agent, is_aware)| {
            let mut rng = rng_from_seed(derive_seed(mix.seed, &[run as u64, u64::from(agent.id)]));
            let ranking = if is_aware { aware } else { naive };
            responder_action(scenario, agent, ranking, &mut rng)
        })
        .collect()
}

/// One-shot responses to the providers' rankings, repeated `mix.runs` times.
pub fn run_ip_population(scenario: &Scenario, mix: &PopulationMix) -> Result<IpSummary> {
    mix.validate(scenario)?;
    let initial = scenario.initial_load();
    let naive = naive_ranking(&initial)?;
    let aware = response_aware_ranking(scenario, &naive)?;
    let mut per_run = Vec::with_capacity(mix.runs);
    let mut final_peaks = Vec::with_capacity(mix.runs);
    let mut scaled_down = 0;
    for run in 0..mix.runs {
        let outcomes = population_actions(scenario, mix, &naive, &aware, run)?;
        let mut load = scenario.baseline.clone();
        for (agent, out) in scenario.agents.iter().zip(&outcomes) {
            scaled_down += usize::from(out.scaled_down);
            for (s, x) in load.iter_mut().zip(out.action.consumption(agent)) {
                *s += x;
            }
        }
        final_peaks.push(max_of(&load));
        per_run.push(peak_reduction(&initial, &load)?);
    }
    let (mean, std_dev) = mean_and_std(&per_run);
    Ok(IpSummary {
        naive,
        aware,
        per_run,
        final_peaks,
        mean,
        std_dev,
        scaled_down,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, ScenarioConfig, TimeGrid};

    fn scenario(baseline: Vec<f64>, prices: Vec<f64>, agents: Vec<AgentSpec>) -> Scenario {
        build_scenario(ScenarioConfig {
            grid: TimeGrid::new(baseline.len(), 60, "day").unwrap(),
            baseline,
            prices,
            total_cost: 1e6,
            agents,
            tie_tolerance_mw: 1e-6,
        })
        .unwrap()
    }

    #[test]
    fn naive_ranking_examples() {
        let decreasing: Vec<f64> = (0..12).map(|t| 100.0 - t as f64).collect();
        assert_eq!(naive_ranking(&decreasing).unwrap().intervals(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let mut spike = vec![1.0; 10];
        spike[6] = 9.0;
        assert_eq!(naive_ranking(&spike).unwrap().intervals()[0], 6);
        assert!(naive_ranking(&[1.0; 7]).is_err());
    }

    #[test]
    fn ranking_validation() {
        assert!(IpRanking::new(vec![0, 1, 2, 3, 4, 5, 6, 6], ProviderKind::Naive, 10).is_err());
        assert!(IpRanking::new(vec![0, 1, 2, 3, 4, 5, 6, 10], ProviderKind::Naive, 10).is_err());
        assert!(IpRanking::new(vec![0, 1, 2], ProviderKind::Naive, 10).is_err());
    }

    #[test]
    fn aware_equals_naive_without_agents() {
        let base: Vec<f64> = (0..12).map(|t| ((t * 5) % 12) as f64).collect();
        let s = scenario(base.clone(), vec![1.0; 12], vec![]);
        let naive = naive_ranking(&s.initial_load()).unwrap();
        let aware = response_aware_ranking(&s, &naive).unwrap();
        assert_eq!(aware.intervals(), naive.intervals());
        assert_eq!(aware.kind, ProviderKind::ResponseAware);
    }

    #[test]
    fn aware_rank_one_moves_off_naive_peak() {
        // Peak at 5,6 with shoulders; big agents vacate the naive set.
        let base = vec![10.0, 10.0, 20.0, 60.0, 80.0, 100.0, 99.0, 70.0, 75.0, 65.0, 50.0, 10.0];
        let agents = (0..2)
            .map(|i| AgentSpec::flat(i, 12, 20.0, 0.0, 40.0).unwrap())
            .collect();
        let prices: Vec<f64> = (0..12).map(|t| 10.0 + t as f64).collect();
        let s = scenario(base.clone(), prices, agents);
        let naive = naive_ranking(&s.initial_load()).unwrap();
        assert_eq!(naive.intervals()[..2], [5, 6]);
        // Direct projection with expected fractions.
        let mut projected = base.clone();
        for agent in &s.agents {
            let mut x = agent.baseline.clone();
            let fr = [1.0, 1.0, 0.5, 0.3, 0.3, 0.3, 0.3, 0.3];
            let mut cut = 0.0;
            for (&t, f) in naive.intervals().iter().zip(fr) {
                x[t] -= 20.0 * f;
                cut += 20.0 * f;
            }
            // Unranked intervals by price: 0, 1, 11 (9 is ranked? check below).
            let unranked: Vec<usize> = (0..12).filter(|t| !naive.intervals().contains(t)).collect();
            for t in unranked {
                let add = cut.min(20.0);
                x[t] += add;
                cut -= add;
            }
            for (p, v) in projected.iter_mut().zip(x) {
                *p += v;
            }
        }
        let aware = response_aware_ranking(&s, &naive).unwrap();
        assert_eq!(aware.intervals(), top_k(&projected, 8).as_slice());
        assert!(!naive.intervals()[..2].contains(&aware.intervals()[0]));
    }

    fn day24(level: f64, cap: f64, n: usize) -> Scenario {
        let base: Vec<f64> = (0..24)
            .map(|t| 60_000.0 + 25_000.0 * libm::sin(core::f64::consts::PI * t as f64 / 24.0))
            .collect();
        let prices: Vec<f64> = (0..24).map(|t| 30.0 + t as f64).collect();
        let agents = (0..n as u32)
            .map(|i| AgentSpec::flat(i, 24, level, 0.0, cap).unwrap())
            .collect();
        scenario(base, prices, agents)
    }

    #[test]
    fn responder_rule_and_scale_down() {
        let s = day24(1000.0, 1200.0, 1);
        let agent = &s.agents[0];
        let ranking = naive_ranking(&s.initial_load()).unwrap();
        let mut rng = rng_from_seed(3);
        let out = responder_action(&s, agent, &ranking, &mut rng).unwrap();
        // 4000 planned, 16 * 200 = 3200 available.
        assert!(out.scaled_down);
        assert!((out.scale - 0.8).abs() < 1e-12);
        let r = ranking.intervals();
        let d = out.action.deltas();
        assert!((d[r[0]] + 800.0).abs() < 1e-9);
        assert!((d[r[1]] + 800.0).abs() < 1e-9);
        assert!((d[r[2]] + 400.0).abs() < 1e-9);
        let random_cut = r[3..].iter().filter(|&&t| d[t] < 0.0).count();
        assert_eq!(random_cut, 3);
        assert!(validate_action(agent, &out.action, None));
        for (t, &v) in d.iter().enumerate() {
            if !r.contains(&t) {
                assert!((v - 200.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn responder_full_rule_with_room() {
        let s = day24(1000.0, 1300.0, 1);
        let agent = &s.agents[0];
        let ranking = naive_ranking(&s.initial_load()).unwrap();
        let out = responder_action(&s, agent, &ranking, &mut rng_from_seed(5)).unwrap();
        assert!(!out.scaled_down);
        let r = ranking.intervals();
        let d = out.action.deltas();
        assert_eq!((d[r[0]], d[r[1]], d[r[2]]), (-1000.0, -1000.0, -500.0));
        assert_eq!(r[3..].iter().filter(|&&t| d[t] == -500.0).count(), 3);
        let cut: f64 = d.iter().filter(|&&v| v < 0.0).sum();
        assert_eq!(cut, -4000.0);
    }

    #[test]
    fn responder_is_seed_deterministic() {
        let s = day24(1000.0, 1300.0, 1);
        let ranking = naive_ranking(&s.initial_load()).unwrap();
        let a = responder_action(&s, &s.agents[0], &ranking, &mut rng_from_seed(17)).unwrap();
        let b = responder_action(&s, &s.agents[0], &ranking, &mut rng_from_seed(17)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn population_bookkeeping() {
        let s = day24(500.0, 600.0, 10);
        let mix = PopulationMix {
            n_agents: 10,
            aware_fraction: 0.3,
            runs: 20,
            seed: 1,
        };
        assert_eq!(mix.aware_count(), 3);
        let summary = run_ip_population(&s, &mix).unwrap();
        assert_eq!(summary.per_run.len(), 20);
        let mean = summary.per_run.iter().sum::<f64>() / 20.0;
        assert!((summary.mean - mean).abs() < 1e-12);
        let again = run_ip_population(&s, &mix).unwrap();
        assert_eq!(summary, again);
    }

    #[test]
    fn degenerate_mixes_follow_one_provider() {
        let s = day24(500.0, 600.0, 4);
        for (fraction, expected) in [(0.0, false), (1.0, true)] {
            let mix = PopulationMix {
                n_agents: 4,
                aware_fraction: fraction,
                runs: 1,
                seed: 2,
            };
            assert!(mix.aware_agents(&s).iter().all(|&a| a == expected));
        }
        let bad = PopulationMix {
            n_agents: 3,
            aware_fraction: 0.5,
            runs: 1,
            seed: 0,
        };
        assert!(run_ip_population(&s, &bad).is_err());
    }
}
