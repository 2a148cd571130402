use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::monte_carlo::{run_monte_carlo, Placement, TrialConfig};
use crate::error::{Error, Result};
use crate::routing::Scheme;
use crate::traffic::{apply_policy, two_cell_fixture, ControlPolicy, CrossRoadPolicy, TddConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "bs_count")]
    BsCount,
    #[serde(rename = "f_c")]
    CarrierFrequency,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "lambda_m_T_m")]
    MessageLoad,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::BsCount => "bs_count",
            SweepAxis::CarrierFrequency => "f_c",
            SweepAxis::Alpha => "alpha",
            SweepAxis::MessageLoad => "lambda_m_T_m",
        }
    }

    pub fn is_routing(self) -> bool {
        matches!(self, SweepAxis::Gamma | SweepAxis::BsCount)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gamma" => SweepAxis::Gamma,
            "bs_count" => SweepAxis::BsCount,
            "f_c" => SweepAxis::CarrierFrequency,
            "alpha" => SweepAxis::Alpha,
            "lambda_m_T_m" => SweepAxis::MessageLoad,
            other => return Err(Error::param("axis", format!("unknown sweep axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingRow {
    pub value: f64,
    pub scheme: Scheme,
    pub trials: usize,
    pub success_pct: f64,
    pub mean_pc: f64,
    pub mean_duration: f64,
}

/// Traffic scenario swept over TDD parameters: the two-cell fixture with
/// `b0` channels, one series per `alphas` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSweepConfig {
    pub tdd: TddConfig,
    pub b0: f64,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub cross_road: CrossRoadPolicy,
}

impl Default for TrafficSweepConfig {
    fn default() -> Self {
        TrafficSweepConfig {
            tdd: TddConfig::default().with_message_load(0.25),
            b0: 10.0,
            alphas: vec![2.0, 4.0],
            cross_road: CrossRoadPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRow {
    pub value: f64,
    pub alpha: f64,
    pub carrier_frequency: f64,
    pub message_load: f64,
    pub policy: ControlPolicy,
    /// Total road throughput, AVs/s.
    pub throughput: f64,
}

fn check_sorted(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("values", "sweep needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("values", "sweep values must be finite and strictly ascending"));
    }
    Ok(())
}

/// Routing sweep over γ or BS count: one Monte-Carlo batch per value.
///
/// For the BS-count axis a `Lattice` placement is replaced by `Halton` so
/// that each station set contains the previous one.
pub fn sweep_routing(cfg: &TrialConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<RoutingRow>> {
    check_sorted(values)?;
    let mut rows = Vec::new();
    for &value in values {
        let mut c = cfg.clone();
        match axis {
            SweepAxis::Gamma => c.gamma = value,
            SweepAxis::BsCount => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::param("values", "BS counts must be positive integers"));
                }
                c.stations.count = value as u32;
                if c.stations.placement == Placement::Lattice {
                    c.stations.placement = Placement::Halton;
                }
            }
            _ => return Err(Error::param("axis", format!("`{}` is not a routing axis", axis.as_str()))),
        }
        let result = run_monte_carlo(&c)?;
        for s in result.summary {
            rows.push(RoutingRow {
                value,
                scheme: s.scheme,
                trials: s.trials,
                success_pct: s.success_pct,
                mean_pc: s.mean_pc,
                mean_duration: s.mean_duration,
            });
        }
    }
    Ok(rows)
}

/// Traffic sweep over carrier frequency (Hz), α, or message load λ_m T_m,
/// evaluating all three control policies at every point.
pub fn sweep_traffic(cfg: &TrafficSweepConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<TrafficRow>> {
    check_sorted(values)?;
    let series: Vec<Option<f64>> = match axis {
        SweepAxis::Alpha => vec![None],
        SweepAxis::CarrierFrequency | SweepAxis::MessageLoad => cfg.alphas.iter().map(|&a| Some(a)).collect(),
        _ => return Err(Error::param("axis", format!("`{}` is not a traffic axis", axis.as_str()))),
    };
    let points: Vec<(Option<f64>, f64)> = series
        .iter()
        .flat_map(|&a| values.iter().map(move |&v| (a, v)))
        .collect();
    let rows: Result<Vec<Vec<TrafficRow>>> = points
        .par_iter()
        .map(|&(alpha, value)| {
            let mut tdd = cfg.tdd.clone();
            if let Some(a) = alpha {
                tdd.alpha = a;
            }
            match axis {
                SweepAxis::CarrierFrequency => tdd.carrier_frequency = value,
                SweepAxis::Alpha => tdd.alpha = value,
                _ => tdd = tdd.with_message_load(value),
            }
            let fixture = two_cell_fixture(&tdd);
            ControlPolicy::ALL
                .iter()
                .map(|&policy| {
                    let alloc = apply_policy(&fixture, cfg.b0, policy, cfg.cross_road)?;
                    Ok(TrafficRow {
                        value,
                        alpha: tdd.alpha,
                        carrier_frequency: tdd.carrier_frequency,
                        message_load: tdd.message_load(),
                        policy,
                        throughput: alloc.total_throughput,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Carrier frequencies 0.5 to 6 GHz in 0.5 GHz steps.
pub fn default_carrier_values() -> Vec<f64> {
    (1..=12).map(|k| k as f64 * 0.5e9).collect()
}

/// λ_m T_m from 0.05 to 0.95 in steps of 0.05.
pub fn default_message_load_values() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// α from 2 to 10.
pub fn default_alpha_values() -> Vec<f64> {
    (2..=10).map(|k| k as f64).collect()
}
