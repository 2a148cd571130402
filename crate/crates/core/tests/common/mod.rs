#![allow(dead_code)]

pub mod checks;
pub mod packer;

use ccroute_core::net::{assign_esm, generate_grid, EffectiveSpeedMap, IntersectionId, Point, RoadNetwork};
use ccroute_core::radio::{BaseStation, ChannelModel, Deployment, EvalSpeed, GammaRateCell, SampleLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small routing instance with cells computed at a fixed γ.
pub struct Instance {
    pub network: RoadNetwork,
    pub esm: EffectiveSpeedMap,
    pub deployment: Deployment,
    pub cells: Vec<GammaRateCell>,
    pub gamma: f64,
    pub src: IntersectionId,
    pub dst: IntersectionId,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.random_range(5..=8u32);
    let s = rng.random_range(5..=8u32);
    let network = generate_grid(a, s, 250.0, 100.0).unwrap();
    let esm = assign_esm(&network, &[10.0, 20.0, 30.0], rng.random()).unwrap();
    let g = *network.grid().unwrap();
    let k = rng.random_range(2..=5u32);
    let stations = (0..k)
        .map(|i| {
            BaseStation::new(
                i,
                Point::new(rng.random_range(0.0..g.width()), rng.random_range(0.0..g.height())),
            )
        })
        .collect();
    let deployment = Deployment::new(stations, ChannelModel::default()).unwrap();
    let gamma = rng.random_range(30.0..110.0);
    let layout = SampleLayout::new(&network, 5.0).unwrap();
    let cells = deployment
        .cells(&network, &layout, gamma, 0.01, EvalSpeed::Esm(&esm))
        .unwrap();
    let n = network.intersections().len() as u32;
    let src = IntersectionId(rng.random_range(0..n));
    let dst = IntersectionId(rng.random_range(0..n));
    Instance {
        network,
        esm,
        deployment,
        cells,
        gamma,
        src,
        dst,
    }
}

/// All-pairs shortest times over intersections, by Floyd–Warshall.
pub fn floyd_warshall(network: &RoadNetwork, esm: &EffectiveSpeedMap) -> Vec<Vec<f64>> {
    let n = network.intersections().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for s in network.segments() {
        let (a, b) = (s.endpoints.0.index(), s.endpoints.1.index());
        let w = s.length / esm.speeds()[s.id.index()];
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let t = dik + d[k][j];
                if t < d[i][j] {
                    d[i][j] = t;
                }
            }
        }
    }
    d
}
