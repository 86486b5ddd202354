//! Best responses of one flexible load against fixed or believed opponents.
//!
//! Costs are always evaluated exactly: the candidate's consumption is added
//! to the opponent aggregate, the tie-aware peak set is recomputed and the
//! CP share plus energy payments are charged.
//!
//! The continuous solver enumerates the interval that will carry the peak.
//! For a free candidate interval `t_c` and own consumption `v` there, every
//! other free interval is capped so the system load stays strictly below
//! `O(t_c) + v`; the remaining energy then goes to the cheapest intervals.
//! Given `t_c` and `v` the CP charge is fixed, so the greedy fill is the
//! cheapest completion. `v` runs over a uniform grid plus the smallest
//! feasible value, which the grid alone would miss.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::actions::{
    balance_tol, fill_in_order, validate_action, ActionVector, FiniteActionLibrary, FrozenPrefix,
};
use crate::allocation::ChargeBreakdown;
use crate::model::{AgentSpec, Scenario, DEFAULT_TIE_TOLERANCE_MW};
use crate::seed::rng_from_seed;
use crate::{CpError, Result};

/// B(t) + Σ_{j≠i} x_j(t): everything except the responding agent.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentAggregate(Vec<f64>);

impl OpponentAggregate {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((t, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(CpError::NegativeDemand {
                what: "opponent aggregate",
                interval: t + 1,
                value: v,
            });
        }
        Ok(Self(values))
    }

    /// Aggregate seen by `agent` when everyone plays `actions`.
    pub fn from_actions(scenario: &Scenario, agent: usize, actions: &[ActionVector]) -> Self {
        let mut o = scenario.baseline.clone();
        for (j, (spec, action)) in scenario.agents.iter().zip(actions).enumerate() {
            if j == agent {
                continue;
            }
            for ((s, b), a) in o.iter_mut().zip(&spec.baseline).zip(action.deltas()) {
                *s += b + a;
            }
        }
        Self(o)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Knobs for the best-response routines.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Points of the uniform grid over [X̲_i, X̄_i] for the peak-interval consumption.
    pub v_grid_points: usize,
    pub tie_tolerance_mw: f64,
    /// Monte Carlo draws when the belief support is too large to enumerate.
    pub mc_samples: usize,
    /// Largest joint support enumerated exactly.
    pub exact_expectation_limit: usize,
    pub rng_seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            v_grid_points: 101,
            tie_tolerance_mw: DEFAULT_TIE_TOLERANCE_MW,
            mc_samples: 200,
            exact_expectation_limit: 100_000,
            rng_seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.v_grid_points < 2 {
            return Err(CpError::InvalidParameter("v_grid_points must be >= 2".into()));
        }
        if self.mc_samples < 1 {
            return Err(CpError::InvalidParameter("mc_samples must be >= 1".into()));
        }
        if !(self.tie_tolerance_mw > 0.0) {
            return Err(CpError::InvalidParameter("tie tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Exact tie-aware cost of consumption `x` against aggregate `o`.
pub(crate) fn exact_cost(scenario: &Scenario, o: &[f64], x: &[f64]) -> Result<ChargeBreakdown> {
    let tol = scenario.tie_tolerance_mw;
    let peak = o
        .iter()
        .zip(x)
        .map(|(a, b)| a + b)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut energy = 0.0;
    for ((&ot, &xt), &p) in o.iter().zip(x).zip(&scenario.prices) {
        let s = ot + xt;
        if s >= peak - tol {
            num += xt;
            den += s;
        }
        energy += p * xt;
    }
    if !(den > 0.0) {
        return Err(CpError::ZeroPeakLoad);
    }
    Ok(ChargeBreakdown::new(
        scenario.total_cost * num / den,
        energy * scenario.grid.hours_per_interval(),
    ))
}

fn check_dims(scenario: &Scenario, agent: &AgentSpec, o: &OpponentAggregate) -> Result<()> {
    let n = scenario.intervals();
    for (what, found) in [("agent baseline", agent.intervals()), ("opponent aggregate", o.0.len())] {
        if found != n {
            return Err(CpError::DimensionMismatch {
                what,
                expected: n,
                found,
            });
        }
    }
    Ok(())
}

/// Total cost of `agent` playing `action` against `opponents`.
pub fn evaluate_cost(
    scenario: &Scenario,
    agent: &AgentSpec,
    action: &ActionVector,
    opponents: &OpponentAggregate,
) -> Result<ChargeBreakdown> {
    check_dims(scenario, agent, opponents)?;
    if !validate_action(agent, action, None) {
        return Err(CpError::InfeasibleAction { agent: agent.id });
    }
    exact_cost(scenario, &opponents.0, &action.consumption(agent))
}

fn improves(cost: f64, best: f64) -> bool {
    cost < best - 1e-12 * best.abs().max(1.0)
}

/// Cheapest library entry against fixed opponents; ties go to the lowest index.
pub fn best_response_finite(
    scenario: &Scenario,
    agent: &AgentSpec,
    library: &FiniteActionLibrary,
    opponents: &OpponentAggregate,
) -> Result<(usize, ChargeBreakdown)> {
    let all: Vec<usize> = (0..library.len()).collect();
    best_response_among(scenario, agent, library, &all, opponents)
}

/// [`best_response_finite`] restricted to the entries listed in `candidates`.
pub fn best_response_among(
    scenario: &Scenario,
    agent: &AgentSpec,
    library: &FiniteActionLibrary,
    candidates: &[usize],
    opponents: &OpponentAggregate,
) -> Result<(usize, ChargeBreakdown)> {
    check_dims(scenario, agent, opponents)?;
    let mut best: Option<(usize, ChargeBreakdown)> = None;
    for &i in candidates {
        let x = library.get(i).consumption(agent);
        let cost = exact_cost(scenario, &opponents.0, &x)?;
        if best.is_none_or(|(_, b)| improves(cost.total, b.total)) {
            best = Some((i, cost));
        }
    }
    best.ok_or(CpError::EmptyLibrary)
}

/// Empirical belief about one opponent's library choice.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentBelief {
    /// Index of the opponent in the scenario's agent list.
    pub agent: usize,
    /// (library index, probability) pairs with positive probability.
    pub weights: Vec<(usize, f64)>,
}

/// Product belief ⊗_j p_j over every opponent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefProfile {
    pub opponents: Vec<OpponentBelief>,
}

impl BeliefProfile {
    /// Empirical frequencies from per-opponent play histories.
    pub fn from_histories<'a>(histories: impl IntoIterator<Item = (usize, &'a [usize])>) -> Self {
        let opponents = histories
            .into_iter()
            .map(|(agent, history)| {
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for &i in history {
                    *counts.entry(i).or_default() += 1;
                }
                let total = history.len() as f64;
                OpponentBelief {
                    agent,
                    weights: counts
                        .into_iter()
                        .map(|(i, c)| (i, c as f64 / total))
                        .collect(),
                }
            })
            .collect();
        Self { opponents }
    }

    pub fn validate(&self, libraries: &[FiniteActionLibrary]) -> Result<()> {
        for belief in &self.opponents {
            let lib = libraries.get(belief.agent).ok_or_else(|| {
                CpError::InvalidParameter("belief refers to an unknown agent".into())
            })?;
            let sum: f64 = belief.weights.iter().map(|w| w.1).sum();
            if (sum - 1.0).abs() > 1e-9 || belief.weights.is_empty() {
                return Err(CpError::InvalidParameter("belief does not sum to 1".into()));
            }
            if belief
                .weights
                .iter()
                .any(|&(i, p)| i >= lib.len() || !(p >= 0.0))
            {
                return Err(CpError::InvalidParameter("belief support out of range".into()));
            }
        }
        Ok(())
    }

    /// Size of the joint support, saturating.
    pub fn joint_support(&self) -> usize {
        self.opponents
            .iter()
            .fold(1usize, |acc, b| acc.saturating_mul(b.weights.len()))
    }
}

/// Distinct opponent aggregates with their probabilities.
fn belief_scenarios(
    scenario: &Scenario,
    libraries: &[FiniteActionLibrary],
    beliefs: &BeliefProfile,
    params: &SolverParams,
) -> Vec<(Vec<f64>, f64)> {
    let consumptions: Vec<Vec<(Vec<f64>, f64)>> = beliefs
        .opponents
        .iter()
        .map(|b| {
            let spec = &scenario.agents[b.agent];
            b.weights
                .iter()
                .map(|&(i, p)| (libraries[b.agent].get(i).consumption(spec), p))
                .collect()
        })
        .collect();

    let mut merged: BTreeMap<Vec<u64>, (Vec<f64>, f64)> = BTreeMap::new();
    let mut add = |o: Vec<f64>, w: f64| {
        let key: Vec<u64> = o.iter().map(|v| v.to_bits()).collect();
        merged.entry(key).or_insert_with(|| (o, 0.0)).1 += w;
    };

    if beliefs.joint_support() <= params.exact_expectation_limit {
        let mut digits = vec![0usize; consumptions.len()];
        loop {
            let mut o = scenario.baseline.clone();
            let mut w = 1.0;
            for (choice, support) in digits.iter().zip(&consumptions) {
                let (x, p) = &support[*choice];
                w *= p;
                for (s, v) in o.iter_mut().zip(x) {
                    *s += v;
                }
            }
            add(o, w);
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return merged.into_values().collect();
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < consumptions[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    let mut rng = rng_from_seed(params.rng_seed);
    let w = 1.0 / params.mc_samples as f64;
    for _ in 0..params.mc_samples {
        let mut o = scenario.baseline.clone();
        for support in &consumptions {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = support.len() - 1;
            for (k, (_, p)) in support.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            for (s, v) in o.iter_mut().zip(&support[pick].0) {
                *s += v;
            }
        }
        add(o, w);
    }
    merged.into_values().collect()
}

/// Entry of `candidates` minimizing expected cost under `beliefs`.
///
/// Exact enumeration when the joint support is at most
/// `params.exact_expectation_limit`, otherwise `params.mc_samples` draws
/// seeded with `params.rng_seed`. Ties go to the lowest index.
pub fn expected_best_response_finite(
    scenario: &Scenario,
    agent: usize,
    libraries: &[FiniteActionLibrary],
    candidates: &[usize],
    beliefs: &BeliefProfile,
    params: &SolverParams,
) -> Result<usize> {
    beliefs.validate(libraries)?;
    let spec = &scenario.agents[agent];
    let outcomes = belief_scenarios(scenario, libraries, beliefs, params);
    let mut best: Option<(usize, f64)> = None;
    for &i in candidates {
        let x = libraries[agent].get(i).consumption(spec);
        let mut expected = 0.0;
        for (o, w) in &outcomes {
            expected += w * exact_cost(scenario, o, &x)?.total;
        }
        if best.is_none_or(|(_, b)| improves(expected, b)) {
            best = Some((i, expected));
        }
    }
    best.map(|(i, _)| i).ok_or(CpError::EmptyLibrary)
}

/// Result of the continuous best response.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousResponse {
    pub action: ActionVector,
    pub cost: ChargeBreakdown,
    /// No feasible continuation was found and the current action was kept.
    pub held: bool,
}

#[derive(Clone)]
struct Candidate {
    total: f64,
    rank: usize,
    x: Vec<f64>,
    cost: ChargeBreakdown,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.total
            .total_cmp(&other.total)
            .then(self.rank.cmp(&other.rank))
            .then_with(|| lex_cmp(&self.x, &other.x))
            .is_lt()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    core::cmp::Ordering::Equal
}

/// Continuous best response over the free intervals after `frozen`.
///
/// `current` must agree with `frozen`; it is kept unless some candidate is
/// strictly cheaper, so the result is never worse than the current plan.
pub fn best_response_continuous(
    scenario: &Scenario,
    agent: &AgentSpec,
    opponents: &OpponentAggregate,
    frozen: &FrozenPrefix,
    current: &ActionVector,
    params: &SolverParams,
) -> Result<ContinuousResponse> {
    check_dims(scenario, agent, opponents)?;
    params.validate()?;
    let n = scenario.intervals();
    let o = opponents.values();
    let current_x = current.consumption(agent);
    if current.len() != n || !frozen.matches(&current_x) {
        return Err(CpError::InvalidParameter(
            "current action disagrees with the frozen prefix".into(),
        ));
    }
    let current_cost = exact_cost(scenario, o, &current_x)?;
    let hold = |held| ContinuousResponse {
        action: current.clone(),
        cost: current_cost,
        held,
    };

    let k = frozen.frozen_through();
    let m = n - k;
    if m == 0 {
        return Ok(hold(false));
    }
    let (lo, hi) = (agent.lower, agent.upper);
    let residual = frozen.residual_budget(agent);
    let etol = balance_tol(agent) * 1e-3;
    if residual < lo * m as f64 - etol || residual > hi * m as f64 + etol {
        return Ok(hold(true));
    }

    let mut solver = ContinuousSolver {
        o,
        lo,
        hi,
        residual,
        k,
        etol,
        margin: 2.0 * params.tie_tolerance_mw,
        order: crate::actions::price_order(&scenario.prices[k..])
            .into_iter()
            .map(|t| t + k)
            .collect(),
        x: current_x.clone(),
        best: None,
        threshold: current_cost.total,
    };

    // Pure energy minimization; also the energy-cost lower bound for pruning.
    let energy_floor = match solver.fill(None, |_| hi) {
        Some(()) => {
            let c = exact_cost(scenario, o, &solver.x)?;
            solver.offer(c, n)?;
            c.energy_cost
        }
        None => return Ok(hold(true)),
    };

    let frozen_peak = (0..k).map(|t| o[t] + current_x[t]).fold(f64::NEG_INFINITY, f64::max);

    // Peak held at a frozen interval: keep every free interval below it.
    for tc in 0..k {
        let level = o[tc] + current_x[tc];
        if level < frozen_peak - scenario.tie_tolerance_mw {
            continue;
        }
        let cap = level - solver.margin;
        if solver.fill(None, |t| cap - o[t]).is_some() {
            let c = exact_cost(scenario, o, &solver.x)?;
            solver.offer(c, tc)?;
        }
    }

    // Peak at a free interval, highest opponent load first.
    let mut free_by_load: Vec<usize> = (k..n).collect();
    free_by_load.sort_by(|&a, &b| o[b].total_cmp(&o[a]).then(a.cmp(&b)));
    let steps = params.v_grid_points - 1;
    let grid: Vec<f64> = (0..=steps)
        .map(|j| if j == steps { hi } else { lo + (hi - lo) * j as f64 / steps as f64 })
        .collect();
    for &tc in &free_by_load {
        let v_lo = if k > 0 {
            lo.max(frozen_peak + solver.margin - o[tc])
        } else {
            lo
        };
        let v_hi = hi.min(residual - lo * (m - 1) as f64 + solver.etol);
        if v_lo > v_hi {
            continue;
        }
        let Some(v_min) = solver.min_peak_consumption(tc, v_lo, v_hi) else {
            continue;
        };
        let tail = grid.iter().copied().filter(|&v| v > v_min && v <= v_hi);
        for v in core::iter::once(v_min).chain(tail) {
            let bound = scenario.total_cost * v / (o[tc] + v) + energy_floor;
            if bound >= solver.threshold {
                break;
            }
            let cap = o[tc] + v - solver.margin;
            solver.x[tc] = v;
            if solver.fill(Some((tc, v)), |t| cap - o[t]).is_some() {
                let c = exact_cost(scenario, o, &solver.x)?;
                solver.offer(c, tc)?;
            }
        }
    }

    match solver.best {
        Some(best) if improves(best.total, current_cost.total) => {
            let mut deltas: Vec<f64> = best.x.iter().zip(&agent.baseline).map(|(x, b)| x - b).collect();
            // Realized intervals keep their submitted deltas bit for bit.
            deltas[..k].copy_from_slice(&current.deltas()[..k]);
            Ok(ContinuousResponse {
                action: ActionVector::new(deltas),
                cost: best.cost,
                held: false,
            })
        }
        _ => Ok(hold(false)),
    }
}

struct ContinuousSolver<'a> {
    o: &'a [f64],
    lo: f64,
    hi: f64,
    residual: f64,
    /// First free interval.
    k: usize,
    etol: f64,
    margin: f64,
    /// Free intervals by ascending price.
    order: Vec<usize>,
    /// Working consumption; the frozen prefix is never touched.
    x: Vec<f64>,
    best: Option<Candidate>,
    threshold: f64,
}

impl ContinuousSolver<'_> {
    fn upper(&self, cap: f64) -> f64 {
        cap.clamp(self.lo, self.hi)
    }

    /// Fills free intervals (except a pinned `(t_c, v)`) starting at the lower
    /// bound, cheapest first, each up to `min(hi, limit(t))`.
    fn fill(&mut self, pinned: Option<(usize, f64)>, limit: impl Fn(usize) -> f64) -> Option<()> {
        let n = self.x.len();
        let mut energy = self.residual;
        for t in self.k..n {
            self.x[t] = self.lo;
        }
        let free = (n - self.k) as f64;
        energy -= self.lo * free;
        if let Some((tc, v)) = pinned {
            self.x[tc] = v;
            energy -= v - self.lo;
        }
        if energy < -self.etol {
            return None;
        }
        let skip = pinned.map(|p| p.0);
        let (lo, hi) = (self.lo, self.hi);
        let order = core::mem::take(&mut self.order);
        let left = fill_in_order(
            &order,
            |t| {
                if Some(t) == skip {
                    0.0
                } else {
                    limit(t).clamp(lo, hi) - lo
                }
            },
            energy.max(0.0),
            &mut self.x,
        );
        self.order = order;
        (left <= self.etol).then_some(())
    }

    /// Capacity available when `t_c` carries `v`: `v` plus every other free
    /// interval filled to its cap.
    fn capacity(&self, tc: usize, v: f64) -> f64 {
        let cap = self.o[tc] + v - self.margin;
        v + (self.k..self.x.len())
            .filter(|&t| t != tc)
            .map(|t| self.upper(cap - self.o[t]))
            .sum::<f64>()
    }

    /// Smallest `v` in `[v_lo, v_hi]` whose capacity reaches the residual budget.
    fn min_peak_consumption(&self, tc: usize, v_lo: f64, v_hi: f64) -> Option<f64> {
        let need = self.residual - self.etol;
        if self.capacity(tc, v_lo) >= need {
            return Some(v_lo);
        }
        if self.capacity(tc, v_hi) < need {
            return None;
        }
        let (mut a, mut b) = (v_lo, v_hi);
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.capacity(tc, mid) >= need {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(b)
    }

    fn offer(&mut self, cost: ChargeBreakdown, rank: usize) -> Result<()> {
        let cand = Candidate {
            total: cost.total,
            rank,
            x: self.x.clone(),
            cost,
        };
        if self.best.as_ref().is_none_or(|b| cand.beats(b)) {
            self.threshold = self.threshold.min(cand.total);
            self.best = Some(cand);
        }
        Ok(())
    }
}

/// Exhaustive search over free-interval consumptions `b(t) + j·grid_step`
/// (within bounds), the last free interval closing the energy balance.
/// Limited to four free intervals.
pub fn brute_force_oracle(
    scenario: &Scenario,
    agent: &AgentSpec,
    opponents: &OpponentAggregate,
    frozen: &FrozenPrefix,
    grid_step: f64,
) -> Result<ActionVector> {
    check_dims(scenario, agent, opponents)?;
    let n = scenario.intervals();
    let k = frozen.frozen_through();
    let m = n - k;
    if m > 4 {
        return Err(CpError::InvalidParameter(alloc::format!(
            "brute force oracle supports at most 4 free intervals, got {m}"
        )));
    }
    if !(grid_step > 0.0) {
        return Err(CpError::InvalidParameter("grid step must be positive".into()));
    }
    let residual = frozen.residual_budget(agent);
    let tol = balance_tol(agent);
    let (lo, hi) = (agent.lower, agent.upper);
    let levels: Vec<Vec<f64>> = (k..n)
        .map(|t| {
            let b = agent.baseline[t];
            let below = ((b - lo) / grid_step + 1e-9) as i64;
            let above = ((hi - b) / grid_step + 1e-9) as i64;
            (-below..=above).map(|j| b + j as f64 * grid_step).collect()
        })
        .collect();

    let mut x = vec![0.0; n];
    x[..k].copy_from_slice(frozen.values());
    let mut best: Option<(f64, Vec<f64>)> = None;
    if m == 0 {
        return Ok(ActionVector::from_consumption(agent, &x));
    }
    let mut digits = vec![0usize; m - 1];
    loop {
        let mut used = 0.0;
        for (d, (&j, lv)) in digits.iter().zip(&levels).enumerate() {
            x[k + d] = lv[j];
            used += lv[j];
        }
        let last = residual - used;
        if last >= lo - tol && last <= hi + tol {
            x[n - 1] = last.clamp(lo, hi);
            let c = exact_cost(scenario, opponents.values(), &x)?.total;
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, x.clone()));
            }
        }
        let mut pos = digits.len();
        let done = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < levels[pos].len() {
                break false;
            }
            digits[pos] = 0;
        };
        if done {
            break;
        }
    }
    best.map(|(_, x)| ActionVector::from_consumption(agent, &x))
        .ok_or(CpError::InfeasibleAction { agent: agent.id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, ScenarioConfig, TimeGrid};

    fn scenario(
        baseline: Vec<f64>,
        prices: Vec<f64>,
        cost: f64,
        agents: Vec<AgentSpec>,
    ) -> Scenario {
        build_scenario(ScenarioConfig {
            grid: TimeGrid::new(baseline.len(), 60, "t").unwrap(),
            baseline,
            prices,
            total_cost: cost,
            agents,
            tie_tolerance_mw: 1e-6,
        })
        .unwrap()
    }

    fn three_action_setup() -> (Scenario, FiniteActionLibrary, OpponentAggregate) {
        let agent = AgentSpec::flat(0, 2, 5.0, 0.0, 10.0).unwrap();
        let s = scenario(vec![0.0, 0.0], vec![0.0, 0.0], 100.0, vec![agent.clone()]);
        let lib = FiniteActionLibrary::from_actions(
            &agent,
            vec![
                (ActionVector::zeros(2), "none".into()),
                (ActionVector::new(vec![-5.0, 5.0]), "late".into()),
                (ActionVector::new(vec![5.0, -5.0]), "early".into()),
            ],
        )
        .unwrap();
        let o = OpponentAggregate::new(vec![10.0, 0.0]).unwrap();
        (s, lib, o)
    }

    #[test]
    fn evaluate_cost_examples() {
        let (s, lib, o) = three_action_setup();
        let agent = &s.agents[0];
        let c0 = evaluate_cost(&s, agent, lib.get(0), &o).unwrap();
        assert!((c0.total - 100.0 * 5.0 / 15.0).abs() < 1e-12);
        let c1 = evaluate_cost(&s, agent, lib.get(1), &o).unwrap();
        assert_eq!(c1.total, 50.0);
        let c2 = evaluate_cost(&s, agent, lib.get(2), &o).unwrap();
        assert_eq!(c2.total, 50.0);
    }

    #[test]
    fn finite_best_response_exhaustive() {
        let (s, lib, o) = three_action_setup();
        let (idx, cost) = best_response_finite(&s, &s.agents[0], &lib, &o).unwrap();
        assert_eq!(idx, 0);
        for a in lib.actions() {
            assert!(cost.total <= evaluate_cost(&s, &s.agents[0], a, &o).unwrap().total);
        }
    }

    #[test]
    fn finite_single_entry() {
        let (s, _, o) = three_action_setup();
        let lib = FiniteActionLibrary::no_action(2);
        assert_eq!(best_response_finite(&s, &s.agents[0], &lib, &o).unwrap().0, 0);
    }

    #[test]
    fn finite_zero_cost_picks_energy_minimizer() {
        let agent = AgentSpec::flat(0, 3, 5.0, 0.0, 10.0).unwrap();
        let s = scenario(vec![1.0; 3], vec![30.0, 10.0, 20.0], 0.0, vec![agent.clone()]);
        let lib = crate::actions::coarse_library(&agent, &s.prices, 1);
        let o = OpponentAggregate::new(vec![1.0; 3]).unwrap();
        let (idx, _) = best_response_finite(&s, &agent, &lib, &o).unwrap();
        let energy = |i: usize| -> f64 {
            lib.get(i)
                .consumption(&agent)
                .iter()
                .zip(&s.prices)
                .map(|(x, p)| x * p)
                .sum()
        };
        let cheapest = (0..lib.len())
            .min_by(|&a, &b| energy(a).total_cmp(&energy(b)).then(a.cmp(&b)))
            .unwrap();
        assert_eq!(idx, cheapest);
    }

    #[test]
    fn point_mass_belief_matches_finite_response() {
        let (s, lib, _) = three_action_setup();
        // Give the scenario a second agent whose library is a single fixed action.
        let a0 = s.agents[0].clone();
        let a1 = AgentSpec::new(1, vec![10.0, 0.0], 0.0, 10.0).unwrap();
        let s2 = scenario(vec![0.0, 0.0], vec![0.0, 0.0], 100.0, vec![a0.clone(), a1.clone()]);
        let libs = [lib.clone(), FiniteActionLibrary::no_action(2)];
        let beliefs = BeliefProfile::from_histories([(1usize, &[0usize][..])]);
        let cand: Vec<usize> = (0..lib.len()).collect();
        let e = expected_best_response_finite(&s2, 0, &libs, &cand, &beliefs, &SolverParams::default())
            .unwrap();
        let o = OpponentAggregate::from_actions(&s2, 0, &[ActionVector::zeros(2), ActionVector::zeros(2)]);
        assert_eq!(e, best_response_finite(&s2, &a0, &lib, &o).unwrap().0);
    }

    #[test]
    fn continuous_fully_frozen_returns_frozen() {
        let agent = AgentSpec::flat(0, 2, 5.0, 0.0, 10.0).unwrap();
        let s = scenario(vec![10.0, 10.0], vec![0.0, 0.0], 100.0, vec![agent.clone()]);
        let a = ActionVector::new(vec![1.0, -1.0]);
        let frozen = FrozenPrefix::from_action(&agent, &a, 2).unwrap();
        let o = OpponentAggregate::new(vec![10.0, 10.0]).unwrap();
        let r = best_response_continuous(&s, &agent, &o, &frozen, &a, &SolverParams::default()).unwrap();
        assert_eq!(r.action, a);
        assert!(!r.held);
    }

    #[test]
    fn continuous_without_cp_moves_to_cheap_intervals() {
        let agent = AgentSpec::flat(0, 4, 5.0, 0.0, 8.0).unwrap();
        let s = scenario(vec![10.0; 4], vec![1.0, 2.0, 3.0, 4.0], 0.0, vec![agent.clone()]);
        let o = OpponentAggregate::new(vec![10.0; 4]).unwrap();
        let r = best_response_continuous(
            &s,
            &agent,
            &o,
            &FrozenPrefix::none(),
            &ActionVector::zeros(4),
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(r.action.consumption(&agent), vec![8.0, 8.0, 4.0, 0.0]);
    }

    #[test]
    fn continuous_symmetric_toy_not_worse_than_zero() {
        let agent = AgentSpec::flat(0, 2, 5.0, 0.0, 10.0).unwrap();
        let s = scenario(vec![0.0, 0.0], vec![0.0, 0.0], 100.0, vec![agent.clone()]);
        let o = OpponentAggregate::new(vec![10.0, 10.0]).unwrap();
        let zero = ActionVector::zeros(2);
        let r = best_response_continuous(&s, &agent, &o, &FrozenPrefix::none(), &zero, &SolverParams::default())
            .unwrap();
        let zero_cost = evaluate_cost(&s, &agent, &zero, &o).unwrap().total;
        // Both intervals sit at 15 and tie: 100 · (5 + 5) / (15 + 15).
        assert!((zero_cost - 100.0 / 3.0).abs() < 1e-12);
        assert!(r.cost.total <= zero_cost);
        let oracle = brute_force_oracle(&s, &agent, &o, &FrozenPrefix::none(), 0.1).unwrap();
        let oc = evaluate_cost(&s, &agent, &oracle, &o).unwrap().total;
        assert!(r.cost.total <= 1.01 * oc);
    }

    #[test]
    fn continuous_moves_off_fixed_peak() {
        // Highly imbalanced background: all energy leaves the peak interval.
        let agent = AgentSpec::flat(0, 2, 0.5, 0.0, 1.0).unwrap();
        let s = scenario(vec![5.0, 1.0], vec![0.0, 0.0], 100.0, vec![agent.clone()]);
        let o = OpponentAggregate::new(vec![5.5, 1.5]).unwrap();
        let r = best_response_continuous(
            &s,
            &agent,
            &o,
            &FrozenPrefix::none(),
            &ActionVector::zeros(2),
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(r.action.consumption(&agent), vec![0.0, 1.0]);
        assert_eq!(r.cost.cp_charge, 0.0);
    }

    #[test]
    fn oracle_coarse_grid_only_evaluates_zero_action() {
        let agent = AgentSpec::flat(0, 3, 5.0, 0.0, 10.0).unwrap();
        let s = scenario(vec![10.0, 10.0, 10.0], vec![0.0; 3], 100.0, vec![agent.clone()]);
        let o = OpponentAggregate::new(vec![10.0, 12.0, 11.0]).unwrap();
        let a = brute_force_oracle(&s, &agent, &o, &FrozenPrefix::none(), 100.0).unwrap();
        assert!(a.is_zero());
        let b = brute_force_oracle(&s, &agent, &o, &FrozenPrefix::none(), 0.5).unwrap();
        assert_eq!(b, brute_force_oracle(&s, &agent, &o, &FrozenPrefix::none(), 0.5).unwrap());
    }

    #[test]
    fn oracle_dimension_guard() {
        let agent = AgentSpec::flat(0, 5, 1.0, 0.0, 2.0).unwrap();
        let s = scenario(vec![1.0; 5], vec![0.0; 5], 1.0, vec![agent.clone()]);
        let o = OpponentAggregate::new(vec![1.0; 5]).unwrap();
        assert!(brute_force_oracle(&s, &agent, &o, &FrozenPrefix::none(), 0.1).is_err());
    }

    #[test]
    fn params_validation() {
        let bad = SolverParams {
            v_grid_points: 1,
            ..SolverParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
