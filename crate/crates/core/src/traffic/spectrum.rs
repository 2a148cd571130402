use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::kpi::{n_controllable_one_channel, optimal_speed, CellGeometry, TddConfig};
use crate::error::{Error, Result};

/// One BS cell of a balancing scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficCell {
    pub id: String,
    pub geometry: CellGeometry,
    pub tdd: TddConfig,
}

/// The part of a road lying in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadSection {
    pub cell: String,
    pub lanes: u32,
    /// Road surface inside the cell, m². Defaults to the cell's coverage
    /// scaled by this road's share of its lanes.
    #[serde(default)]
    pub coverage: Option<f64>,
}

/// A one-way road and the cells it crosses, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Road {
    pub id: String,
    pub sections: Vec<RoadSection>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadCellIncidence {
    pub cells: Vec<TrafficCell>,
    pub roads: Vec<Road>,
}

impl RoadCellIncidence {
    pub fn validate(&self) -> Result<()> {
        let mut lanes_used: BTreeMap<&str, u32> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for c in &self.cells {
            if !ids.insert(c.id.as_str()) {
                return Err(Error::param("cells", format!("duplicate cell `{}`", c.id)));
            }
            c.geometry.validate()?;
            c.tdd.validate()?;
            lanes_used.insert(&c.id, 0);
        }
        let mut road_ids = BTreeSet::new();
        for r in &self.roads {
            if !road_ids.insert(r.id.as_str()) {
                return Err(Error::param("roads", format!("duplicate road `{}`", r.id)));
            }
            if r.sections.is_empty() {
                return Err(Error::param("roads", format!("road `{}` crosses no cell", r.id)));
            }
            if !(r.weight.is_finite() && r.weight > 0.0) {
                return Err(Error::param("weight", format!("road `{}` needs a positive weight", r.id)));
            }
            let mut seen = BTreeSet::new();
            for s in &r.sections {
                let Some(used) = lanes_used.get_mut(s.cell.as_str()) else {
                    return Err(Error::param("cell", format!("road `{}` names unknown cell `{}`", r.id, s.cell)));
                };
                if !seen.insert(s.cell.as_str()) {
                    return Err(Error::param("sections", format!("road `{}` enters `{}` twice", r.id, s.cell)));
                }
                if s.lanes == 0 {
                    return Err(Error::param("lanes", format!("road `{}` has no lanes in `{}`", r.id, s.cell)));
                }
                if let Some(a) = s.coverage {
                    if !(a.is_finite() && a > 0.0) {
                        return Err(Error::param("coverage", "section coverage must be positive"));
                    }
                }
                *used += s.lanes;
            }
        }
        for c in &self.cells {
            if lanes_used[c.id.as_str()] > c.geometry.lanes {
                return Err(Error::param(
                    "lanes",
                    format!("roads use more lanes than cell `{}` has", c.id),
                ));
            }
        }
        Ok(())
    }

    fn cell(&self, id: &str) -> &TrafficCell {
        self.cells.iter().find(|c| c.id == id).expect("validated cell id")
    }

    fn section_area(&self, s: &RoadSection) -> f64 {
        s.coverage.unwrap_or_else(|| {
            let g = &self.cell(&s.cell).geometry;
            g.coverage * s.lanes as f64 / g.lanes as f64
        })
    }
}

/// Speed every cell runs at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedRule {
    /// Each cell's own flow-maximising speed.
    Optimal,
    /// Half of it.
    HalfOptimal,
}

/// How channels are divided between roads once each road is balanced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossRoadPolicy {
    /// Road flows proportional to weights, as large as possible.
    #[default]
    WeightedMaxMin,
    /// Maximise total flow; all channels go to the cheapest roads.
    MaxTotal,
    /// Maximise the weighted sum of log flows; road j gets `B0 w_j / Σ w`.
    ProportionalFair,
}

/// End-to-end traffic control policies compared in the throughput sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlPolicy {
    /// Half the optimal speed, channels split equally among cells.
    Naive,
    /// Optimal speed, equal split.
    OptimalSpeed,
    /// Optimal speed with per-road balanced channels.
    Balanced,
}

impl ControlPolicy {
    pub const ALL: [ControlPolicy; 3] = [ControlPolicy::Naive, ControlPolicy::OptimalSpeed, ControlPolicy::Balanced];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlPolicy::Naive => "naive",
            ControlPolicy::OptimalSpeed => "optimal-speed",
            ControlPolicy::Balanced => "balanced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionAllocation {
    pub road: String,
    pub cell: String,
    pub channels: f64,
    /// AVs/s on this road inside this cell.
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadFlow {
    pub road: String,
    /// Bottleneck flow, AVs/s.
    pub flow: f64,
}

/// Channel assignment per (road, cell) with the flows it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAllocation {
    pub cell_speeds: BTreeMap<String, f64>,
    pub sections: Vec<SectionAllocation>,
    pub roads: Vec<RoadFlow>,
    pub total_throughput: f64,
}

impl SpectrumAllocation {
    pub fn total_channels(&self) -> f64 {
        self.sections.iter().map(|s| s.channels).sum()
    }

    /// Channels assigned to `cell` over all roads.
    pub fn cell_channels(&self, cell: &str) -> f64 {
        self.sections.iter().filter(|s| s.cell == cell).map(|s| s.channels).sum()
    }

    pub fn road_flow(&self, road: &str) -> Option<f64> {
        self.roads.iter().find(|r| r.road == road).map(|r| r.flow)
    }
}

/// Operating speed of every cell under `rule`.
pub fn cell_speeds(incidence: &RoadCellIncidence, rule: SpeedRule) -> BTreeMap<String, f64> {
    incidence
        .cells
        .iter()
        .map(|c| {
            let v = optimal_speed(&c.tdd).speed;
            let v = match rule {
                SpeedRule::Optimal => v,
                SpeedRule::HalfOptimal => v / 2.0,
            };
            (c.id.clone(), v)
        })
        .collect()
}

/// Flow per channel (AVs/s) of every section, road-major:
/// `lanes * W / area * N(v) * v`.
pub fn flow_coefficients(incidence: &RoadCellIncidence, speeds: &BTreeMap<String, f64>) -> Vec<Vec<f64>> {
    incidence
        .roads
        .iter()
        .map(|r| {
            r.sections
                .iter()
                .map(|s| {
                    let c = incidence.cell(&s.cell);
                    let v = speeds[&s.cell];
                    let n = n_controllable_one_channel(v, &c.tdd) as f64;
                    s.lanes as f64 * c.geometry.lane_width / incidence.section_area(s) * n * v
                })
                .collect()
        })
        .collect()
}

fn assemble(
    incidence: &RoadCellIncidence,
    speeds: BTreeMap<String, f64>,
    coeffs: &[Vec<f64>],
    channels: &[Vec<f64>],
) -> SpectrumAllocation {
    let mut sections = Vec::new();
    let mut roads = Vec::new();
    for (j, r) in incidence.roads.iter().enumerate() {
        let mut bottleneck = f64::INFINITY;
        for (i, s) in r.sections.iter().enumerate() {
            let flow = coeffs[j][i] * channels[j][i];
            bottleneck = bottleneck.min(flow);
            sections.push(SectionAllocation {
                road: r.id.clone(),
                cell: s.cell.clone(),
                channels: channels[j][i],
                flow,
            });
        }
        roads.push(RoadFlow {
            road: r.id.clone(),
            flow: bottleneck,
        });
    }
    let total_throughput = roads.iter().map(|r| r.flow).sum();
    SpectrumAllocation {
        cell_speeds: speeds,
        sections,
        roads,
        total_throughput,
    }
}

fn check_feasible(incidence: &RoadCellIncidence, coeffs: &[Vec<f64>]) -> Result<()> {
    for (r, row) in incidence.roads.iter().zip(coeffs) {
        for (s, &a) in r.sections.iter().zip(row) {
            if !(a > 0.0) {
                return Err(Error::Infeasible {
                    road: r.id.clone(),
                    cell: s.cell.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Per-road flows and total of an existing allocation, recomputed from its
/// channels and cell speeds.
pub fn road_throughput(alloc: &SpectrumAllocation, incidence: &RoadCellIncidence) -> (Vec<RoadFlow>, f64) {
    let coeffs = flow_coefficients(incidence, &alloc.cell_speeds);
    let mut roads = Vec::new();
    for (j, r) in incidence.roads.iter().enumerate() {
        let mut bottleneck = f64::INFINITY;
        for (i, s) in r.sections.iter().enumerate() {
            let b: f64 = alloc
                .sections
                .iter()
                .filter(|x| x.road == r.id && x.cell == s.cell)
                .map(|x| x.channels)
                .sum();
            bottleneck = bottleneck.min(coeffs[j][i] * b);
        }
        roads.push(RoadFlow {
            road: r.id.clone(),
            flow: bottleneck,
        });
    }
    let total = roads.iter().map(|r| r.flow).sum();
    (roads, total)
}

/// Balances every road so that all its cells carry the same flow, then
/// divides `b0` between roads by `policy`. Cells run at `speeds`.
pub fn balance_with_speeds(
    incidence: &RoadCellIncidence,
    b0: f64,
    speeds: BTreeMap<String, f64>,
    policy: CrossRoadPolicy,
) -> Result<SpectrumAllocation> {
    incidence.validate()?;
    if !(b0.is_finite() && b0 > 0.0) {
        return Err(Error::param("b0", "total channels must be positive"));
    }
    let coeffs = flow_coefficients(incidence, &speeds);
    check_feasible(incidence, &coeffs)?;
    // Channels needed per unit of flow on each road.
    let cost: Vec<f64> = coeffs.iter().map(|row| row.iter().map(|a| 1.0 / a).sum()).collect();
    let weights: Vec<f64> = incidence.roads.iter().map(|r| r.weight).collect();
    let flows: Vec<f64> = match policy {
        CrossRoadPolicy::WeightedMaxMin => {
            let denom: f64 = weights.iter().zip(&cost).map(|(w, c)| w * c).sum();
            weights.iter().map(|w| w * b0 / denom).collect()
        }
        CrossRoadPolicy::ProportionalFair => {
            let total_w: f64 = weights.iter().sum();
            weights.iter().zip(&cost).map(|(w, c)| b0 * w / total_w / c).collect()
        }
        CrossRoadPolicy::MaxTotal => {
            let cheapest = cost.iter().copied().fold(f64::INFINITY, f64::min);
            let tied: Vec<bool> = cost.iter().map(|&c| c <= cheapest * (1.0 + 1e-12)).collect();
            let denom: f64 = (0..cost.len()).filter(|&j| tied[j]).map(|j| weights[j] * cost[j]).sum();
            (0..cost.len())
                .map(|j| if tied[j] { weights[j] * b0 / denom } else { 0.0 })
                .collect()
        }
    };
    let channels: Vec<Vec<f64>> = coeffs
        .iter()
        .zip(&flows)
        .map(|(row, f)| row.iter().map(|a| f / a).collect())
        .collect();
    Ok(assemble(incidence, speeds, &coeffs, &channels))
}

/// [`balance_with_speeds`] with every cell at its optimal speed.
pub fn balance_spectrum(
    incidence: &RoadCellIncidence,
    b0: f64,
    policy: CrossRoadPolicy,
) -> Result<SpectrumAllocation> {
    let speeds = cell_speeds(incidence, SpeedRule::Optimal);
    balance_with_speeds(incidence, b0, speeds, policy)
}

/// Equal share `b0 / cells` per cell, divided among the roads in that cell
/// by road surface.
pub fn equal_split(
    incidence: &RoadCellIncidence,
    b0: f64,
    speeds: BTreeMap<String, f64>,
) -> Result<SpectrumAllocation> {
    incidence.validate()?;
    let per_cell = b0 / incidence.cells.len() as f64;
    let mut area: BTreeMap<&str, f64> = BTreeMap::new();
    for r in &incidence.roads {
        for s in &r.sections {
            *area.entry(s.cell.as_str()).or_default() += incidence.section_area(s);
        }
    }
    let channels: Vec<Vec<f64>> = incidence
        .roads
        .iter()
        .map(|r| {
            r.sections
                .iter()
                .map(|s| per_cell * incidence.section_area(s) / area[s.cell.as_str()])
                .collect()
        })
        .collect();
    let coeffs = flow_coefficients(incidence, &speeds);
    Ok(assemble(incidence, speeds, &coeffs, &channels))
}

/// Evaluates one end-to-end policy on a scenario.
pub fn apply_policy(
    incidence: &RoadCellIncidence,
    b0: f64,
    policy: ControlPolicy,
    cross_road: CrossRoadPolicy,
) -> Result<SpectrumAllocation> {
    match policy {
        ControlPolicy::Naive => equal_split(incidence, b0, cell_speeds(incidence, SpeedRule::HalfOptimal)),
        ControlPolicy::OptimalSpeed => equal_split(incidence, b0, cell_speeds(incidence, SpeedRule::Optimal)),
        ControlPolicy::Balanced => balance_spectrum(incidence, b0, cross_road),
    }
}

/// Equalises flows along one road by repeatedly moving channels from its
/// highest-flow cell to its lowest-flow cell. `coeffs` are flows per
/// channel; `channels` is updated in place and keeps its sum. Returns the
/// number of shifts.
pub fn shift_balance(coeffs: &[f64], channels: &mut [f64], rtol: f64) -> usize {
    let mut shifts = 0;
    loop {
        let flows: Vec<f64> = coeffs.iter().zip(channels.iter()).map(|(a, b)| a * b).collect();
        let (mut hi, mut lo) = (0, 0);
        for i in 0..flows.len() {
            if flows[i] > flows[hi] {
                hi = i;
            }
            if flows[i] < flows[lo] {
                lo = i;
            }
        }
        if flows[hi] - flows[lo] <= rtol * flows[hi] || shifts >= 100_000 {
            return shifts;
        }
        // Amount that leaves the two cells with equal flow.
        let delta = (flows[hi] - flows[lo]) / (coeffs[hi] + coeffs[lo]);
        channels[hi] -= delta;
        channels[lo] += delta;
        shifts += 1;
    }
}

/// Two cells side by side: red carries one two-lane horizontal road; green
/// carries that road and a two-lane vertical one, with twice red's road
/// surface. Lanes are 3 m wide and red covers 12,000 m².
pub fn two_cell_fixture(tdd: &TddConfig) -> RoadCellIncidence {
    let cell = |id: &str, lanes, coverage| TrafficCell {
        id: id.into(),
        geometry: CellGeometry::new(lanes, 3.0, coverage),
        tdd: tdd.clone(),
    };
    let section = |cell: &str| RoadSection {
        cell: cell.into(),
        lanes: 2,
        coverage: None,
    };
    RoadCellIncidence {
        cells: vec![cell("red", 2, 12_000.0), cell("green", 4, 24_000.0)],
        roads: vec![
            Road {
                id: "horizontal".into(),
                sections: vec![section("red"), section("green")],
                weight: 1.0,
            },
            Road {
                id: "vertical".into(),
                sections: vec![section("green")],
                weight: 1.0,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> RoadCellIncidence {
        two_cell_fixture(&TddConfig::default().with_message_load(0.25))
    }

    #[test]
    fn two_cells_get_two_thirds() {
        let inc = fixture();
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::default()).unwrap();
        assert!((bal.cell_channels("green") - 20.0 / 3.0).abs() < 1e-12);
        assert!((bal.cell_channels("red") - 10.0 / 3.0).abs() < 1e-12);
        assert!((bal.total_channels() - 10.0).abs() < 1e-12);
        let eq = equal_split(&inc, 10.0, bal.cell_speeds.clone()).unwrap();
        assert!((eq.cell_channels("green") - 5.0).abs() < 1e-12);
        let gain = bal.total_throughput / eq.total_throughput;
        assert!((gain - 4.0 / 3.0).abs() < 1e-12, "gain {gain}");
    }

    #[test]
    fn max_total_starves_the_two_cell_road() {
        let inc = fixture();
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::MaxTotal).unwrap();
        assert_eq!(bal.road_flow("horizontal"), Some(0.0));
        assert!((bal.cell_channels("green") - 10.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_fair_splits_channels_by_weight() {
        let inc = fixture();
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::ProportionalFair).unwrap();
        let per_road = |r: &str| bal.sections.iter().filter(|s| s.road == r).map(|s| s.channels).sum::<f64>();
        assert!((per_road("horizontal") - 5.0).abs() < 1e-12);
        assert!((per_road("vertical") - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_road_single_cell_takes_everything() {
        let mut inc = fixture();
        inc.cells.truncate(1);
        inc.roads = vec![Road {
            id: "r".into(),
            sections: vec![RoadSection {
                cell: "red".into(),
                lanes: 2,
                coverage: None,
            }],
            weight: 1.0,
        }];
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::default()).unwrap();
        assert_eq!(bal.sections[0].channels, 10.0);
    }

    #[test]
    fn identical_cells_split_evenly() {
        let tdd = TddConfig::default();
        let cell = |id: &str| TrafficCell {
            id: id.into(),
            geometry: CellGeometry::new(2, 3.0, 12_000.0),
            tdd: tdd.clone(),
        };
        let inc = RoadCellIncidence {
            cells: vec![cell("a"), cell("b")],
            roads: vec![Road {
                id: "r".into(),
                sections: ["a", "b"]
                    .iter()
                    .map(|c| RoadSection {
                        cell: (*c).into(),
                        lanes: 2,
                        coverage: None,
                    })
                    .collect(),
                weight: 1.0,
            }],
        };
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::default()).unwrap();
        assert!((bal.sections[0].channels - 5.0).abs() < 1e-12);
        assert!((bal.sections[1].channels - 5.0).abs() < 1e-12);
    }

    #[test]
    fn road_throughput_recomputes() {
        let inc = fixture();
        let bal = balance_spectrum(&inc, 10.0, CrossRoadPolicy::default()).unwrap();
        let (roads, total) = road_throughput(&bal, &inc);
        assert_eq!(roads, bal.roads);
        assert!((total - bal.total_throughput).abs() < 1e-15);
        let mut starved = bal.clone();
        starved.sections[0].channels = 0.0;
        assert_eq!(road_throughput(&starved, &inc).0[0].flow, 0.0);
    }

    #[test]
    fn infeasible_cell() {
        let mut inc = fixture();
        // A carrier so high that one AV cannot even send its pilots.
        inc.cells[1].tdd.speed_limit = Some(1e4);
        inc.cells[1].tdd.t_pilot = 1.0;
        inc.cells[1].tdd.t_slot = 1e-3;
        let speeds = [("red".to_string(), 22.5), ("green".to_string(), 1e4)].into();
        let err = balance_with_speeds(&inc, 10.0, speeds, CrossRoadPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { ref cell, .. } if cell == "green"));
    }

    #[test]
    fn shifting_reaches_closed_form() {
        let coeffs = [2.0, 5.0, 1.0];
        let mut b = [3.0, 3.0, 4.0];
        shift_balance(&coeffs, &mut b, 1e-12);
        let flow = 10.0 / coeffs.iter().map(|a| 1.0 / a).sum::<f64>();
        for (a, x) in coeffs.iter().zip(&b) {
            assert!((a * x - flow).abs() < 1e-9 * flow);
        }
        assert!((b.iter().sum::<f64>() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn policies_ordered_on_fixture() {
        let inc = fixture();
        let t: Vec<f64> = ControlPolicy::ALL
            .iter()
            .map(|&p| apply_policy(&inc, 10.0, p, CrossRoadPolicy::default()).unwrap().total_throughput)
            .collect();
        assert!(t[0] <= t[1] && t[1] <= t[2], "{t:?}");
    }

    #[test]
    fn validation_errors() {
        let mut inc = fixture();
        inc.roads[0].sections[0].cell = "blue".into();
        assert!(inc.validate().is_err());
        let mut inc = fixture();
        inc.roads[1].sections[0].lanes = 3;
        assert!(inc.validate().is_err());
        let mut inc = fixture();
        inc.roads[1].sections.clear();
        assert!(inc.validate().is_err());
    }
}
