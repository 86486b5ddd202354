//! Synthetic ERCOT-like peak day: a smooth demand curve with a pre-dawn
//! trough and a late-afternoon peak, and an energy price that tracks demand
//! with an extra evening spike.

use cpgame_core::seed::rng_from_seed;
use rand::Rng;

use crate::error::AppError;

/// Hour of the demand trough.
const TROUGH_HOUR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProfileParams {
    /// 24 or 96.
    pub intervals: usize,
    pub peak_mw: f64,
    pub trough_mw: f64,
    /// Hour of day (interval start) at which demand peaks.
    pub peak_hour: f64,
    /// Price at the trough, $/MWh.
    pub price_base: f64,
    /// Extra multiple of `price_base` added at the evening spike.
    pub price_spike_factor: f64,
    /// Hours between the demand peak and the price spike.
    pub spike_delay_hours: f64,
    /// Standard deviation of the Gaussian price spike, hours.
    pub spike_width_hours: f64,
    /// Half-width of the uniform demand noise, MW.
    pub noise_mw: f64,
}

impl Default for SyntheticProfileParams {
    fn default() -> Self {
        Self {
            intervals: 96,
            peak_mw: 85_000.0,
            trough_mw: 55_000.0,
            peak_hour: 17.0,
            price_base: 25.0,
            price_spike_factor: 3.0,
            spike_delay_hours: 4.0,
            spike_width_hours: 1.0,
            noise_mw: 150.0,
        }
    }
}

impl SyntheticProfileParams {
    pub fn validate(&self) -> Result<(), AppError> {
        if self.intervals != 24 && self.intervals != 96 {
            return Err(AppError::Validation(format!(
                "synthetic day supports 24 or 96 intervals, got {}",
                self.intervals
            )));
        }
        if !(self.trough_mw > 0.0 && self.peak_mw > self.trough_mw) {
            return Err(AppError::Validation("need peak_mw > trough_mw > 0".into()));
        }
        if !(self.peak_hour > TROUGH_HOUR && self.peak_hour < 24.0) {
            return Err(AppError::Validation(format!(
                "peak_hour must lie in ({TROUGH_HOUR}, 24)"
            )));
        }
        if !(self.price_base > 0.0)
            || self.price_spike_factor < 0.0
            || self.noise_mw < 0.0
            || !(self.spike_width_hours > 0.0)
        {
            return Err(AppError::Validation(
                "price_base must be positive; spike factor and noise non-negative".into(),
            ));
        }
        Ok(())
    }

    fn hour(&self, t: usize) -> f64 {
        t as f64 * 24.0 / self.intervals as f64
    }
}

/// Unit-range demand shape: 0 at the trough, 1 at the peak.
fn shape(hour: f64, peak_hour: f64) -> f64 {
    use std::f64::consts::PI;
    let h = if hour < TROUGH_HOUR { hour + 24.0 } else { hour };
    if h <= peak_hour {
        0.5 - 0.5 * (PI * (h - TROUGH_HOUR) / (peak_hour - TROUGH_HOUR)).cos()
    } else {
        0.5 + 0.5 * (PI * (h - peak_hour) / (24.0 + TROUGH_HOUR - peak_hour)).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDay {
    pub baseline: Vec<f64>,
    pub prices: Vec<f64>,
}

/// Deterministic per `(params, seed)`. Demand is rescaled after adding noise
/// so that `min = trough_mw` and `max = peak_mw` exactly.
pub fn generate_synthetic_day(params: &SyntheticProfileParams, seed: u64) -> Result<SyntheticDay, AppError> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..params.intervals)
        .map(|t| {
            let s = shape(params.hour(t), params.peak_hour);
            let noise = if params.noise_mw > 0.0 {
                rng.random_range(-params.noise_mw..=params.noise_mw)
            } else {
                0.0
            };
            s * (params.peak_mw - params.trough_mw) + noise
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = params.peak_mw - params.trough_mw;
    let baseline: Vec<f64> = raw
        .iter()
        .map(|&r| {
            if r == hi {
                params.peak_mw
            } else if r == lo {
                params.trough_mw
            } else {
                params.trough_mw + (r - lo) / (hi - lo) * span
            }
        })
        .collect();
    let spike_hour = params.peak_hour + params.spike_delay_hours;
    let prices = (0..params.intervals)
        .map(|t| {
            let h = params.hour(t);
            let demand = (baseline[t] - params.trough_mw) / span;
            let spike = (-(h - spike_hour).powi(2) / (2.0 * params.spike_width_hours.powi(2))).exp();
            params.price_base * (1.0 + 1.5 * demand * demand + params.price_spike_factor * spike)
        })
        .collect();
    Ok(SyntheticDay { baseline, prices })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_are_exact() {
        let day = generate_synthetic_day(&SyntheticProfileParams::default(), 11).unwrap();
        let max = day.baseline.iter().copied().fold(f64::MIN, f64::max);
        let min = day.baseline.iter().copied().fold(f64::MAX, f64::min);
        assert_eq!(max, 85_000.0);
        assert_eq!(min, 55_000.0);
        assert_eq!(day.baseline.len(), 96);
    }

    #[test]
    fn peak_in_the_afternoon() {
        let p = SyntheticProfileParams {
            intervals: 24,
            noise_mw: 0.0,
            ..Default::default()
        };
        let day = generate_synthetic_day(&p, 0).unwrap();
        let argmax = (0..24).max_by(|&a, &b| day.baseline[a].total_cmp(&day.baseline[b])).unwrap();
        assert_eq!(argmax, 17);
        let argmin = (0..24).min_by(|&a, &b| day.baseline[a].total_cmp(&day.baseline[b])).unwrap();
        assert_eq!(argmin, 5);
    }

    #[test]
    fn noiseless_is_seed_independent() {
        let p = SyntheticProfileParams {
            intervals: 24,
            noise_mw: 0.0,
            ..Default::default()
        };
        assert_eq!(generate_synthetic_day(&p, 1).unwrap(), generate_synthetic_day(&p, 2).unwrap());
    }

    #[test]
    fn rejects_inverted_range() {
        let p = SyntheticProfileParams {
            trough_mw: 90_000.0,
            ..Default::default()
        };
        assert!(matches!(generate_synthetic_day(&p, 0), Err(AppError::Validation(_))));
    }
}
