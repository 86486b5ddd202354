//! Feasible load-shift actions and finite action libraries.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::AgentSpec;
use crate::{CpError, Result};

/// Slack allowed on capacity bounds, MW.
pub const BOUND_EPS: f64 = 1e-9;
/// Energy balance tolerance relative to the agent's budget.
pub const BALANCE_REL_TOL: f64 = 1e-6;
/// Tolerance used when matching a frozen prefix, MW.
pub const PREFIX_TOL: f64 = 1e-9;

/// Load shift a_i(t) relative to the agent's baseline; sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector(Vec<f64>);

impl ActionVector {
    pub fn new(deltas: Vec<f64>) -> Self {
        Self(deltas)
    }

    pub fn zeros(intervals: usize) -> Self {
        Self(vec![0.0; intervals])
    }

    /// The action that produces consumption `x` for `agent`.
    pub fn from_consumption(agent: &AgentSpec, consumption: &[f64]) -> Self {
        Self(
            consumption
                .iter()
                .zip(&agent.baseline)
                .map(|(x, b)| x - b)
                .collect(),
        )
    }

    pub fn deltas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// x_i(t) = b_i(t) + a_i(t).
    pub fn consumption(&self, agent: &AgentSpec) -> Vec<f64> {
        agent.baseline.iter().zip(&self.0).map(|(b, a)| b + a).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0.0)
    }
}

/// Realized consumption for intervals `0..frozen_through`, which can no longer change.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrozenPrefix {
    values: Vec<f64>,
}

impl FrozenPrefix {
    pub fn none() -> Self {
        Self::default()
    }

    /// Freezes `values` as the first `values.len()` intervals of `agent`'s consumption.
    pub fn new(agent: &AgentSpec, values: Vec<f64>) -> Result<Self> {
        let n = agent.intervals();
        if values.len() > n {
            return Err(CpError::DimensionMismatch {
                what: "frozen prefix",
                expected: n,
                found: values.len(),
            });
        }
        for (t, &x) in values.iter().enumerate() {
            if x < agent.lower - BOUND_EPS || x > agent.upper + BOUND_EPS {
                return Err(CpError::BoundViolation {
                    agent: agent.id,
                    interval: t + 1,
                    value: x,
                    lower: agent.lower,
                    upper: agent.upper,
                });
            }
        }
        let prefix = Self { values };
        let remaining = (n - prefix.frozen_through()) as f64;
        let residual = prefix.residual_budget(agent);
        let tol = balance_tol(agent);
        if residual < agent.lower * remaining - tol || residual > agent.upper * remaining + tol {
            return Err(CpError::InvalidParameter(format!(
                "agent {}: residual budget {} cannot be met over {} remaining intervals",
                agent.id, residual, remaining
            )));
        }
        Ok(prefix)
    }

    /// Freezes the first `through` intervals of `action`.
    pub fn from_action(agent: &AgentSpec, action: &ActionVector, through: usize) -> Result<Self> {
        let through = through.min(action.len());
        let values = agent.baseline[..through]
            .iter()
            .zip(&action.deltas()[..through])
            .map(|(b, a)| b + a)
            .collect();
        Self::new(agent, values)
    }

    /// Number of frozen intervals (the index of the first free interval).
    pub fn frozen_through(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// E_i minus the energy already consumed.
    pub fn residual_budget(&self, agent: &AgentSpec) -> f64 {
        agent.energy_budget - self.values.iter().sum::<f64>()
    }

    /// Whether consumption `x` agrees with the frozen values.
    pub fn matches(&self, consumption: &[f64]) -> bool {
        self.values
            .iter()
            .zip(consumption)
            .all(|(f, x)| (f - x).abs() <= PREFIX_TOL)
            && consumption.len() >= self.values.len()
    }
}

pub(crate) fn balance_tol(agent: &AgentSpec) -> f64 {
    BALANCE_REL_TOL * agent.energy_budget.abs().max(1.0)
}

/// Balance, bounds and (when given) frozen-prefix agreement.
pub fn validate_action(agent: &AgentSpec, action: &ActionVector, frozen: Option<&FrozenPrefix>) -> bool {
    if action.len() != agent.intervals() {
        return false;
    }
    let sum: f64 = action.deltas().iter().sum();
    if !sum.is_finite() || sum.abs() > balance_tol(agent) {
        return false;
    }
    let consumption = action.consumption(agent);
    let in_bounds = consumption
        .iter()
        .all(|&x| x >= agent.lower - BOUND_EPS && x <= agent.upper + BOUND_EPS);
    in_bounds && frozen.is_none_or(|f| f.matches(&consumption))
}

/// Intervals sorted by ascending price, ties by ascending index.
pub fn price_order(prices: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..prices.len()).collect();
    order.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
    order
}

/// Greedily places `energy` into intervals in `order`, each taking at most
/// its headroom. Returns the energy that did not fit.
pub(crate) fn fill_in_order(
    order: &[usize],
    headroom: impl Fn(usize) -> f64,
    mut energy: f64,
    out: &mut [f64],
) -> f64 {
    for &t in order {
        if energy <= 0.0 {
            break;
        }
        let room = headroom(t);
        if room <= 0.0 {
            continue;
        }
        let take = room.min(energy);
        out[t] += take;
        energy -= take;
    }
    energy
}

/// Allocates `energy` to the cheapest non-excluded intervals first, each up to its headroom.
pub fn refill_lowest_price(
    energy: f64,
    prices: &[f64],
    headroom: &[f64],
    excluded: &[usize],
) -> Result<Vec<f64>> {
    if prices.len() != headroom.len() {
        return Err(CpError::DimensionMismatch {
            what: "headroom",
            expected: prices.len(),
            found: headroom.len(),
        });
    }
    if !(energy >= 0.0) {
        return Err(CpError::InvalidParameter(format!(
            "refill energy must be non-negative, got {energy}"
        )));
    }
    let mut allowed = vec![true; prices.len()];
    for &t in excluded {
        if let Some(slot) = allowed.get_mut(t) {
            *slot = false;
        }
    }
    let available: f64 = headroom
        .iter()
        .zip(&allowed)
        .filter(|(_, &ok)| ok)
        .map(|(h, _)| h.max(0.0))
        .sum();
    if energy > available + refill_tol(energy) {
        return Err(CpError::InsufficientHeadroom {
            needed: energy,
            available,
        });
    }
    let order: Vec<usize> = price_order(prices)
        .into_iter()
        .filter(|&t| allowed[t])
        .collect();
    let mut out = vec![0.0; prices.len()];
    fill_in_order(&order, |t| headroom[t], energy, &mut out);
    Ok(out)
}

fn refill_tol(energy: f64) -> f64 {
    1e-9 * energy.abs().max(1.0)
}

/// An ordered menu of feasible actions for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteActionLibrary {
    actions: Vec<ActionVector>,
    labels: Vec<String>,
    /// Candidate combinations enumerated (excluding the no-action entry).
    pub combinations: usize,
    /// Combinations dropped because their refill did not fit.
    pub infeasible: usize,
    /// Combinations dropped because they duplicated an earlier entry.
    pub duplicates: usize,
}

impl FiniteActionLibrary {
    /// A library holding only the no-action entry.
    pub fn no_action(intervals: usize) -> Self {
        let mut lib = Self::empty();
        lib.push_unique(ActionVector::zeros(intervals), "no action".into());
        lib
    }

    /// Builds a library from explicit entries. Every entry must pass
    /// [`validate_action`] and entries must be distinct.
    pub fn from_actions(
        agent: &AgentSpec,
        entries: Vec<(ActionVector, String)>,
    ) -> Result<Self> {
        let mut lib = Self::empty();
        for (action, label) in entries {
            if !validate_action(agent, &action, None) {
                return Err(CpError::InfeasibleAction { agent: agent.id });
            }
            if !lib.push_unique(action, label) {
                return Err(CpError::InvalidParameter("duplicate library entry".into()));
            }
        }
        if lib.is_empty() {
            return Err(CpError::EmptyLibrary);
        }
        Ok(lib)
    }

    fn empty() -> Self {
        Self {
            actions: Vec::new(),
            labels: Vec::new(),
            combinations: 0,
            infeasible: 0,
            duplicates: 0,
        }
    }

    fn push_unique(&mut self, action: ActionVector, label: String) -> bool {
        if self.actions.iter().any(|a| a == &action) {
            return false;
        }
        self.actions.push(action);
        self.labels.push(label);
        true
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[ActionVector] {
        &self.actions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> &ActionVector {
        &self.actions[index]
    }

    pub fn index_of(&self, action: &ActionVector) -> Option<usize> {
        self.actions.iter().position(|a| a == action)
    }
}

/// No-action plus, for every set of 1..=`max_shutdown` intervals, a full
/// shutdown of those intervals with the curtailed energy refilled at the
/// cheapest other intervals.
pub fn coarse_library(agent: &AgentSpec, prices: &[f64], max_shutdown: usize) -> FiniteActionLibrary {
    let n = agent.intervals();
    let mut lib = FiniteActionLibrary::no_action(n);
    let headroom: Vec<f64> = agent.baseline.iter().map(|b| agent.upper - b).collect();
    for size in 1..=max_shutdown.min(n) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            lib.combinations += 1;
            let mut deltas = vec![0.0; n];
            let mut curtailed = 0.0;
            for &t in &subset {
                deltas[t] = -agent.baseline[t];
                curtailed += agent.baseline[t];
            }
            let feasible = agent.lower <= BOUND_EPS
                && refill_lowest_price(curtailed, prices, &headroom, &subset)
                    .map(|fill| {
                        for (d, f) in deltas.iter_mut().zip(fill) {
                            *d += f;
                        }
                    })
                    .is_ok();
            if feasible {
                let label = format!("shutdown {}", one_based_set(&subset));
                if !lib.push_unique(ActionVector::new(deltas), label) {
                    lib.duplicates += 1;
                }
            } else {
                lib.infeasible += 1;
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    lib
}

/// Depth of curtailment at a selected interval in the fine library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDepth {
    None,
    Half,
    Full,
}

impl ShiftDepth {
    const ALL: [ShiftDepth; 3] = [ShiftDepth::None, ShiftDepth::Half, ShiftDepth::Full];

    fn fraction(self) -> f64 {
        match self {
            ShiftDepth::None => 0.0,
            ShiftDepth::Half => 0.5,
            ShiftDepth::Full => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ShiftDepth::None => "none",
            ShiftDepth::Half => "half",
            ShiftDepth::Full => "full",
        }
    }
}

/// Number of high-demand intervals the fine library acts on.
pub const FINE_TARGETS: usize = 4;

/// The `k` largest entries of `values`, descending, ties by ascending index.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// 3^4 actions: at each of the four highest intervals of `reference_load`
/// shift none, half or all of the agent's baseline, refilling the cheapest
/// other intervals.
pub fn fine_library(
    agent: &AgentSpec,
    reference_load: &[f64],
    prices: &[f64],
) -> Result<FiniteActionLibrary> {
    let n = agent.intervals();
    if n < FINE_TARGETS {
        return Err(CpError::GridTooShort {
            needed: FINE_TARGETS,
            found: n,
        });
    }
    if reference_load.len() != n {
        return Err(CpError::DimensionMismatch {
            what: "reference load",
            expected: n,
            found: reference_load.len(),
        });
    }
    let targets = top_k(reference_load, FINE_TARGETS);
    let headroom: Vec<f64> = agent.baseline.iter().map(|b| agent.upper - b).collect();
    let mut lib = FiniteActionLibrary::empty();
    let total = 3usize.pow(FINE_TARGETS as u32);
    for code in 0..total {
        let mut depths = [ShiftDepth::None; FINE_TARGETS];
        let mut rest = code;
        for slot in depths.iter_mut().rev() {
            *slot = ShiftDepth::ALL[rest % 3];
            rest /= 3;
        }
        if code > 0 {
            lib.combinations += 1;
        }
        let mut deltas = vec![0.0; n];
        let mut curtailed = 0.0;
        let mut feasible = true;
        for (&t, depth) in targets.iter().zip(depths) {
            let cut = agent.baseline[t] * depth.fraction();
            if agent.baseline[t] - cut < agent.lower - BOUND_EPS {
                feasible = false;
            }
            deltas[t] = -cut;
            curtailed += cut;
        }
        feasible = feasible
            && refill_lowest_price(curtailed, prices, &headroom, &targets)
                .map(|fill| {
                    for (d, f) in deltas.iter_mut().zip(fill) {
                        *d += f;
                    }
                })
                .is_ok();
        if !feasible {
            lib.infeasible += 1;
            continue;
        }
        let label = if code == 0 {
            String::from("no action")
        } else {
            let parts: Vec<String> = targets
                .iter()
                .zip(depths)
                .map(|(t, d)| format!("{}:{}", t + 1, d.name()))
                .collect();
            format!("shift {}", parts.join(","))
        };
        if !lib.push_unique(ActionVector::new(deltas), label) {
            lib.duplicates += 1;
        }
    }
    Ok(lib)
}

/// Indices of library entries consistent with `frozen`.
pub fn restricted_indices(
    library: &FiniteActionLibrary,
    agent: &AgentSpec,
    frozen: &FrozenPrefix,
) -> Vec<usize> {
    let k = frozen.frozen_through();
    library
        .actions()
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            frozen
                .values()
                .iter()
                .zip(&agent.baseline[..k])
                .zip(&a.deltas()[..k])
                .all(|((f, b), d)| (f - (b + d)).abs() <= PREFIX_TOL)
        })
        .map(|(i, _)| i)
        .collect()
}

/// The sub-library whose entries agree with `frozen`. Counters are carried over.
pub fn restrict_library(
    library: &FiniteActionLibrary,
    agent: &AgentSpec,
    frozen: &FrozenPrefix,
) -> Result<FiniteActionLibrary> {
    let keep = restricted_indices(library, agent, frozen);
    if keep.is_empty() {
        return Err(CpError::EmptyLibrary);
    }
    let mut out = FiniteActionLibrary::empty();
    out.combinations = library.combinations;
    out.infeasible = library.infeasible;
    out.duplicates = library.duplicates;
    for i in keep {
        out.actions.push(library.actions[i].clone());
        out.labels.push(library.labels[i].clone());
    }
    Ok(out)
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn one_based_set(subset: &[usize]) -> String {
    let parts: Vec<String> = subset.iter().map(|t| format!("{}", t + 1)).collect();
    format!("{{{}}}", parts.join(","))
}

/// Distinct bit patterns; used to assert library uniqueness in tests.
#[doc(hidden)]
pub fn distinct_count(library: &FiniteActionLibrary) -> usize {
    library
        .actions()
        .iter()
        .map(|a| a.deltas().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}
