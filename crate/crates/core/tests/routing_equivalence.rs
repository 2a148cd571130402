mod common;

use ccroute_core::routing::{
    oracle_constrained_shortest, route_in_cells, shortest_time_route, times_equal, TopLayerSearch, TwoLayerOptions,
};
use common::random_instance;

#[test]
fn two_layer_matches_oracle_on_random_instances() {
    let mut both_ok = 0;
    let mut simple_worse = 0;
    for seed in 0..1000 {
        let inst = random_instance(seed);
        let oracle = oracle_constrained_shortest(&inst.network, &inst.cells, &inst.esm, inst.src, inst.dst, inst.gamma);
        let two = route_in_cells(
            &inst.network,
            &inst.cells,
            &inst.esm,
            inst.src,
            inst.dst,
            inst.gamma,
            TwoLayerOptions::default(),
        );
        match (&oracle, &two) {
            (Ok(o), Ok(t)) => {
                both_ok += 1;
                assert!(times_equal(o.total_time, t.total_time), "seed {seed}: oracle {} vs two-layer {}", o.total_time, t.total_time);
                t.check_walk(&inst.network, &inst.esm).unwrap();
                let st = shortest_time_route(&inst.network, &inst.esm, inst.src, inst.dst).unwrap();
                assert!(st.total_time <= t.total_time * (1.0 + 1e-12));
                let simple = route_in_cells(
                    &inst.network,
                    &inst.cells,
                    &inst.esm,
                    inst.src,
                    inst.dst,
                    inst.gamma,
                    TwoLayerOptions { search: TopLayerSearch::SimplePaths, max_paths: 10_000 },
                );
                match simple {
                    Ok(s) if times_equal(s.total_time, o.total_time) => {}
                    _ => simple_worse += 1,
                }
            }
            (Err(a), Err(b)) => {
                assert!(a.is_routing_failure() && b.is_routing_failure(), "seed {seed}: {a} / {b}");
            }
            _ => panic!("seed {seed}: oracle {:?} vs two-layer {:?}", oracle.as_ref().map(|r| r.total_time), two.as_ref().map(|r| r.total_time)),
        }
    }
    println!("both succeeded on {both_ok}/1000; simple-path search fell short on {simple_worse}");
    assert!(both_ok > 200);
}
