//! Coincident-peak cost allocation.
//!
//! The exact rule charges consumer `i` the share
//! `C · Σ_{t∈P} x_i(t) / Σ_{t∈P} S(t)` where `P` is the peak set of the
//! system profile. With a single peak interval this is `C · x_i(t*) / S(t*)`.
//! The charge is nonlinear because `x_i` also enters `S`; callers that
//! evaluate a deviation must rebuild the profile with the deviation included.

use crate::actions::ActionVector;
use crate::model::{AgentSpec, Scenario, SystemProfile};
use crate::{CpError, Result};

/// CP charge plus energy payments for one consumer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChargeBreakdown {
    pub cp_charge: f64,
    pub energy_cost: f64,
    pub total: f64,
}

impl ChargeBreakdown {
    pub fn new(cp_charge: f64, energy_cost: f64) -> Self {
        Self {
            cp_charge,
            energy_cost,
            total: cp_charge + energy_cost,
        }
    }
}

/// Share of `total_cost` paid by a consumer with profile `consumption`.
pub fn cp_charge(profile: &SystemProfile, consumption: &[f64], total_cost: f64) -> Result<f64> {
    if consumption.len() != profile.load.len() {
        return Err(CpError::DimensionMismatch {
            what: "consumption",
            expected: profile.load.len(),
            found: consumption.len(),
        });
    }
    peak_share(&profile.load, &profile.peak_set, consumption, total_cost)
}

pub(crate) fn peak_share(
    load: &[f64],
    peak: &[usize],
    consumption: &[f64],
    total_cost: f64,
) -> Result<f64> {
    let denom: f64 = peak.iter().map(|&t| load[t]).sum();
    if !(denom > 0.0) {
        return Err(CpError::ZeroPeakLoad);
    }
    let num: f64 = peak.iter().map(|&t| consumption[t]).sum();
    Ok(total_cost * num / denom)
}

/// Σ_t π_t · x(t) · hours-per-interval.
pub fn energy_cost(scenario: &Scenario, consumption: &[f64]) -> f64 {
    let hours = scenario.grid.hours_per_interval();
    scenario
        .prices
        .iter()
        .zip(consumption)
        .map(|(p, x)| p * x)
        .sum::<f64>()
        * hours
}

/// Total cost of `agent` playing `action`, given a profile that already includes it.
pub fn total_cost(
    scenario: &Scenario,
    agent: &AgentSpec,
    action: &ActionVector,
    profile: &SystemProfile,
) -> Result<ChargeBreakdown> {
    let consumption = action.consumption(agent);
    let cp = cp_charge(profile, &consumption, scenario.total_cost)?;
    Ok(ChargeBreakdown::new(cp, energy_cost(scenario, &consumption)))
}

/// First-order expansion `ĉ_i = k_i · x_i(t*) + d_i` of the CP charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedCharge {
    /// k_i, $/MW.
    pub slope: f64,
    /// d_i, $.
    pub offset: f64,
    /// x_{i,0}(t*).
    pub reference_x0: f64,
    /// D0 = B(t*) + S0.
    pub reference_d0: f64,
    /// S0 = Σ_j x_{j,0}(t*).
    pub reference_s0: f64,
}

impl LinearizedCharge {
    pub fn charge(&self, peak_consumption: f64) -> f64 {
        self.slope * peak_consumption + self.offset
    }
}

/// Linearizes agent `agent`'s charge around `reference_peak` (every agent's
/// x_{j,0}(t*)). `opponents_peak` is Σ_{k≠i} x_k(t*) at which `d_i` is evaluated.
pub fn linearize_charge(
    reference_peak: &[f64],
    agent: usize,
    baseline_peak: f64,
    total_cost: f64,
    opponents_peak: f64,
) -> Result<LinearizedCharge> {
    if agent >= reference_peak.len() {
        return Err(CpError::DimensionMismatch {
            what: "reference profiles",
            expected: agent + 1,
            found: reference_peak.len(),
        });
    }
    let s0: f64 = reference_peak.iter().sum();
    let d0 = baseline_peak + s0;
    if !(d0 > 0.0) {
        return Err(CpError::NonPositiveReference(d0));
    }
    let x0 = reference_peak[agent];
    let scale = total_cost / (d0 * d0);
    Ok(LinearizedCharge {
        slope: scale * (d0 - x0),
        offset: scale * (-x0 * opponents_peak + x0 * s0),
        reference_x0: x0,
        reference_d0: d0,
        reference_s0: s0,
    })
}

/// `x · C / B(t*)`: the charge when responsive load cannot move the peak.
pub fn fixed_price_charge(peak_consumption: f64, baseline_peak: f64, total_cost: f64) -> Result<f64> {
    if !(baseline_peak > 0.0) {
        return Err(CpError::NonPositiveReference(baseline_peak));
    }
    Ok(peak_consumption * total_cost / baseline_peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, ScenarioConfig, TimeGrid};
    use alloc::vec;

    fn profile(load: &[f64]) -> SystemProfile {
        SystemProfile::from_load(load.to_vec(), 1e-6)
    }

    #[test]
    fn single_peak_charge() {
        let c = cp_charge(&profile(&[15.0, 25.0]), &[5.0, 5.0], 100.0).unwrap();
        assert_eq!(c, 20.0);
    }

    #[test]
    fn tied_peak_charge() {
        let c = cp_charge(&profile(&[12.0, 12.0, 10.0]), &[1.0, 2.0, 3.0], 100.0).unwrap();
        assert_eq!(c, 12.5);
    }

    #[test]
    fn zero_peak_load_is_an_error() {
        let err = cp_charge(&profile(&[0.0, 0.0]), &[0.0, 0.0], 100.0).unwrap_err();
        assert_eq!(err, CpError::ZeroPeakLoad);
    }

    #[test]
    fn pure_energy_cost() {
        let agent = AgentSpec::new(0, vec![3.0, 4.0], 0.0, 10.0).unwrap();
        let scenario = build_scenario(ScenarioConfig {
            grid: TimeGrid::new(2, 60, "t").unwrap(),
            baseline: vec![1.0, 1.0],
            prices: vec![1.0, 2.0],
            total_cost: 0.0,
            agents: vec![agent.clone()],
            tie_tolerance_mw: 1e-6,
        })
        .unwrap();
        let a = ActionVector::zeros(2);
        let p = profile(&[4.0, 5.0]);
        let cb = total_cost(&scenario, &agent, &a, &p).unwrap();
        assert_eq!(cb.total, 11.0);
        assert_eq!(cb.cp_charge, 0.0);
    }

    #[test]
    fn linearization_worked_example() {
        let lin = linearize_charge(&[10.0, 10.0], 0, 80.0, 100.0, 10.0).unwrap();
        assert!((lin.slope - 0.9).abs() < 1e-12);
        assert!((lin.offset - 1.0).abs() < 1e-12);
        assert_eq!(lin.reference_d0, 100.0);
        assert_eq!(lin.reference_s0, 20.0);
        let exact = cp_charge(&profile(&[100.0, 50.0]), &[10.0, 0.0], 100.0).unwrap();
        assert!((lin.charge(10.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn linearization_zero_reference() {
        let lin = linearize_charge(&[0.0, 10.0], 0, 90.0, 100.0, 10.0).unwrap();
        assert!((lin.slope - 1.0).abs() < 1e-15);
        assert_eq!(lin.offset, 0.0);
    }

    #[test]
    fn linearization_needs_positive_d0() {
        assert!(matches!(
            linearize_charge(&[0.0], 0, 0.0, 1.0, 0.0),
            Err(CpError::NonPositiveReference(_))
        ));
    }

    #[test]
    fn fixed_price() {
        assert_eq!(fixed_price_charge(5.0, 100.0, 100.0).unwrap(), 5.0);
        assert_eq!(fixed_price_charge(0.0, 100.0, 100.0).unwrap(), 0.0);
        let price = fixed_price_charge(1.0, 85_000.0, 5.72e9).unwrap();
        assert!((price - 67_294.1).abs() < 1.0);
        assert!(fixed_price_charge(1.0, 0.0, 1.0).is_err());
    }
}
