use interdict_core::harness::{build_instance, InstanceSpec};
use interdict_core::instances::Family;
use interdict_core::oracle::{brute_cip, DEFAULT_CAP};
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    family: Family,
    n: usize,
    l: usize,
    seed: u64,
    er_p: f64,
    m: usize,
    value: f64,
    cuts: Vec<Vec<(usize, usize)>>,
    evaluated: usize,
}

#[test]
fn brute_force_er6_matches_frozen_value() {
    let golden: Golden = serde_json::from_str(include_str!("golden/brute_cip_er6.json")).unwrap();
    let spec = InstanceSpec {
        family: golden.family,
        n: golden.n,
        l: golden.l,
        seed: golden.seed,
    };
    let inst = build_instance(spec, golden.er_p).unwrap();
    assert_eq!(inst.p.m(), golden.m);
    let r = brute_cip(&inst.p, &inst.x0, golden.l, DEFAULT_CAP).unwrap();
    assert!((r.best_value - golden.value).abs() < 1e-12, "{}", r.best_value);
    let cuts: Vec<Vec<(usize, usize)>> = r
        .optimal_cuts
        .iter()
        .map(|c| c.ids().map(|id| inst.p.edges()[id]).collect())
        .collect();
    assert_eq!(cuts, golden.cuts);
    assert_eq!(r.evaluated, golden.evaluated);
}
