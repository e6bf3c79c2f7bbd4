//! Shared fixtures for the benchmarks.

use sqwlab::{build_graph, build_unitary, make_family, sample_disorder, Digraph, DisorderSpec, FamilyKind, GraphSpec, WalkOperator};

/// A Haar walk on `cycle(k)` with one uniform disorder realization.
pub fn haar_cycle(k: usize) -> (Digraph, WalkOperator) {
    let g = build_graph(&GraphSpec::Cycle { k }).expect("cycle");
    let fam = make_family(&g, &FamilyKind::Haar { seed: 11 }).expect("family");
    let dis = sample_disorder(&g, &DisorderSpec::Uniform, 7, 0).expect("disorder");
    let u = build_unitary(&g, &fam, &dis).expect("unitary");
    (g, u)
}
