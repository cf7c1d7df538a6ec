//! Net-present-value accounting over per-well production series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wells::WellRole;

/// Prices, costs, and discounting. All prices are per cubic meter; the
/// discount rate is an annual fraction normalized by `discount_norm_days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    pub gas_revenue_usd_m3: f64,
    pub oil_revenue_usd_m3: f64,
    pub water_prod_cost_usd_m3: f64,
    pub water_inj_cost_usd_m3: f64,
    /// Annual fractional discount rate `b`.
    pub discount_rate_annual: f64,
    /// Days per discounting year (365 by convention).
    pub discount_norm_days: f64,
}

impl EconomicParams {
    pub fn validate(&self) -> Result<()> {
        let prices = [
            self.gas_revenue_usd_m3,
            self.oil_revenue_usd_m3,
            self.water_prod_cost_usd_m3,
            self.water_inj_cost_usd_m3,
        ];
        if prices.iter().any(|p| *p < 0.0) || self.discount_rate_annual < 0.0 {
            return Err(Error::ConfigInconsistent(
                "prices and discount rate must be nonnegative".into(),
            ));
        }
        if !(self.discount_norm_days > 0.0) {
            return Err(Error::ConfigInconsistent(
                "discount_norm_days must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Phase rates for one well, one entry per report step (m3/day).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSeries {
    pub name: String,
    pub role: WellRole,
    pub q_gas_prod_m3d: Vec<f64>,
    pub q_oil_prod_m3d: Vec<f64>,
    pub q_water_prod_m3d: Vec<f64>,
    pub q_water_inj_m3d: Vec<f64>,
}

/// Per-well, per-step phase rates with the report-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionSeries {
    /// End time of each report step (days), strictly increasing.
    pub time_days: Vec<f64>,
    /// Length of each report step (days).
    pub dt_days: Vec<f64>,
    pub wells: Vec<WellSeries>,
}

impl ProductionSeries {
    pub fn steps(&self) -> usize {
        self.time_days.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.time_days.len();
        if self.dt_days.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.dt_days.len(),
            });
        }
        let mut prev = 0.0;
        for (i, (&t, &dt)) in self.time_days.iter().zip(&self.dt_days).enumerate() {
            if !(t > prev) {
                return Err(Error::ConfigInconsistent(format!(
                    "time_days must be strictly increasing at step {i}"
                )));
            }
            if (t - prev - dt).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::ConfigInconsistent(format!(
                    "dt_days inconsistent with time_days at step {i}"
                )));
            }
            prev = t;
        }
        for w in &self.wells {
            for (label, rates) in [
                ("gas", &w.q_gas_prod_m3d),
                ("oil", &w.q_oil_prod_m3d),
                ("water produced", &w.q_water_prod_m3d),
                ("water injected", &w.q_water_inj_m3d),
            ] {
                if rates.len() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        got: rates.len(),
                    });
                }
                if let Some(step) = rates.iter().position(|&q| q < 0.0) {
                    let _ = label;
                    return Err(Error::NegativeRate {
                        well: w.name.clone(),
                        step,
                        value: rates[step],
                    });
                }
            }
        }
        Ok(())
    }
}

/// Discounted cash flow:
/// `sum_k dt_k / (1 + b)^(t_k / tau) * sum_wells (r_gp q_gp + r_op q_op
/// - c_wp q_wp - c_wi q_wi)`.
///
/// Production revenue and water-handling terms accrue on whichever wells
/// report the corresponding rates (producers carry production rates,
/// injectors carry injection rates). An empty series is worth zero.
pub fn npv(series: &ProductionSeries, econ: &EconomicParams) -> Result<f64> {
    econ.validate()?;
    series.validate()?;
    let b = econ.discount_rate_annual;
    let tau = econ.discount_norm_days;
    let mut total = 0.0;
    for k in 0..series.steps() {
        let mut cash = 0.0;
        for w in &series.wells {
            cash += econ.gas_revenue_usd_m3 * w.q_gas_prod_m3d[k]
                + econ.oil_revenue_usd_m3 * w.q_oil_prod_m3d[k]
                - econ.water_prod_cost_usd_m3 * w.q_water_prod_m3d[k]
                - econ.water_inj_cost_usd_m3 * w.q_water_inj_m3d[k];
        }
        let discount = (1.0 + b).powf(series.time_days[k] / tau);
        total += series.dt_days[k] * cash / discount;
    }
    Ok(total)
}

#[cfg(test)]
pub(crate) fn single_producer_series(steps: &[(f64, f64, f64)]) -> ProductionSeries {
    // steps: (t_end, dt, q_oil)
    ProductionSeries {
        time_days: steps.iter().map(|s| s.0).collect(),
        dt_days: steps.iter().map(|s| s.1).collect(),
        wells: vec![WellSeries {
            name: "P1".into(),
            role: WellRole::Producer,
            q_gas_prod_m3d: vec![0.0; steps.len()],
            q_oil_prod_m3d: steps.iter().map(|s| s.2).collect(),
            q_water_prod_m3d: vec![0.0; steps.len()],
            q_water_inj_m3d: vec![0.0; steps.len()],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn econ(b: f64) -> EconomicParams {
        EconomicParams {
            gas_revenue_usd_m3: 0.5,
            oil_revenue_usd_m3: 500.0,
            water_prod_cost_usd_m3: 80.0,
            water_inj_cost_usd_m3: 80.0,
            discount_rate_annual: b,
            discount_norm_days: 365.0,
        }
    }

    #[test]
    fn undiscounted_single_step() {
        let s = single_producer_series(&[(365.0, 365.0, 10.0)]);
        assert_relative_eq!(npv(&s, &econ(0.0)).unwrap(), 1_825_000.0, epsilon = 1e-9);
    }

    #[test]
    fn ten_percent_discount_single_step() {
        let s = single_producer_series(&[(365.0, 365.0, 10.0)]);
        assert_relative_eq!(
            npv(&s, &econ(0.1)).unwrap(),
            1_825_000.0 / 1.1,
            epsilon = 1e-6
        );
    }

    #[test]
    fn zero_rates_zero_value() {
        let s = single_producer_series(&[(30.0, 30.0, 0.0), (60.0, 30.0, 0.0)]);
        assert_eq!(npv(&s, &econ(0.1)).unwrap(), 0.0);
    }

    #[test]
    fn empty_series_zero_value() {
        let s = ProductionSeries {
            time_days: vec![],
            dt_days: vec![],
            wells: vec![],
        };
        assert_eq!(npv(&s, &econ(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn negative_rate_rejected() {
        let mut s = single_producer_series(&[(30.0, 30.0, 5.0)]);
        s.wells[0].q_water_prod_m3d[0] = -1.0;
        assert!(matches!(
            npv(&s, &econ(0.0)),
            Err(Error::NegativeRate { step: 0, .. })
        ));
    }

    #[test]
    fn price_scaling_is_linear() {
        let s = single_producer_series(&[(90.0, 90.0, 7.0), (180.0, 90.0, 3.0)]);
        let base = econ(0.05);
        let mut scaled = base.clone();
        scaled.gas_revenue_usd_m3 *= 3.0;
        scaled.oil_revenue_usd_m3 *= 3.0;
        scaled.water_prod_cost_usd_m3 *= 3.0;
        scaled.water_inj_cost_usd_m3 *= 3.0;
        assert_relative_eq!(
            npv(&s, &scaled).unwrap(),
            3.0 * npv(&s, &base).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn undiscounted_npv_is_additive_over_steps() {
        let s = single_producer_series(&[(90.0, 90.0, 7.0), (180.0, 90.0, 3.0)]);
        let a = single_producer_series(&[(90.0, 90.0, 7.0)]);
        // Second step alone, shifted grid: same dt and rate; with b = 0 the
        // time stamp is irrelevant.
        let b = single_producer_series(&[(90.0, 90.0, 3.0)]);
        let e = econ(0.0);
        assert_relative_eq!(
            npv(&s, &e).unwrap(),
            npv(&a, &e).unwrap() + npv(&b, &e).unwrap(),
            epsilon = 1e-9
        );
    }
}
