use std::collections::BTreeSet;

use proptest::prelude::*;
use transport_core::diagram::{EnumerationOptions, TransportSet};
use transport_core::{parse_diagram, AdmissibilityMode, SelectionDiagram};

mod support;

use support::{names, random_dag, subsets, PathOracle};

const LITERAL: AdmissibilityMode = AdmissibilityMode::Literal;

fn read_diagram(name: &str) -> SelectionDiagram {
    let path = format!("{}/../../diagrams/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_diagram(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn set(names: &[&str]) -> TransportSet {
    TransportSet::new(names.iter().copied())
}

#[test]
fn d_separation_matches_path_enumeration() {
    let mut queries = 0usize;
    let mut separated = 0usize;
    for graph in 0..120u64 {
        let n = 3 + (graph % 6) as usize;
        let density = [0.2, 0.35, 0.5, 0.7][(graph / 6 % 4) as usize];
        let (g, edges) = random_dag(n, density, graph);
        let oracle = PathOracle { n, edges };
        let all: Vec<usize> = (0..n).collect();
        // singleton endpoints, plus one pair-vs-singleton query family per graph
        let mut endpoint_sets: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                endpoint_sets.push((BTreeSet::from([x]), BTreeSet::from([y])));
            }
        }
        if n >= 4 {
            endpoint_sets.push((BTreeSet::from([0, 1]), BTreeSet::from([n - 1])));
        }
        for (a, b) in &endpoint_sets {
            let rest: Vec<usize> = all.iter().copied().filter(|v| !a.contains(v) && !b.contains(v)).collect();
            for cond in subsets(&rest) {
                let expect = oracle.d_separated(a, b, &cond);
                let got = g.d_separated(&names(a), &names(b), &names(&cond)).unwrap();
                assert_eq!(got, expect, "graph {graph} edges {:?}: {a:?} vs {b:?} given {cond:?}", oracle.edges);
                let witness = g.active_trail(&names(a), &names(b), &names(&cond)).unwrap();
                assert_eq!(witness.is_none(), expect);
                if let Some(trail) = witness {
                    let nodes = trail.nodes();
                    assert!(names(a).iter().any(|n| n == nodes[0]));
                    assert!(names(b).iter().any(|n| n == nodes[nodes.len() - 1]));
                }
                queries += 1;
                separated += usize::from(expect);
            }
        }
    }
    assert!(queries > 10_000, "{queries}");
    // both answers must be well represented for the comparison to mean anything
    assert!(separated > queries / 10 && separated < queries * 9 / 10, "{separated} of {queries}");
}

#[test]
fn collider_opens_when_conditioned() {
    let g = parse_diagram("A -> C; B -> C; exposure A; outcome B").unwrap();
    assert!(g.d_separated(&["A"], &["B"], &[] as &[&str]).unwrap());
    assert!(!g.d_separated(&["A"], &["B"], &["C"]).unwrap());
    let g = parse_diagram("A -> C -> D; B -> C; exposure A; outcome B").unwrap();
    assert!(!g.d_separated(&["A"], &["B"], &["D"]).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_separation_is_symmetric(graph in 1000u64..100_000, n in 3usize..=8, cmask in 0u32..256) {
        let (g, _) = random_dag(n, 0.4, graph);
        for x in 0..n {
            for y in x + 1..n {
                let cond: BTreeSet<usize> = (0..n).filter(|&v| v != x && v != y && cmask >> v & 1 == 1).collect();
                let a = names(&BTreeSet::from([x]));
                let b = names(&BTreeSet::from([y]));
                let c = names(&cond);
                prop_assert_eq!(g.d_separated(&a, &b, &c).unwrap(), g.d_separated(&b, &a, &c).unwrap());
            }
        }
    }

    #[test]
    fn blocking_is_monotone_without_colliders(len in 3usize..=8, cmask in 0u32..256, extra in 0u32..256) {
        // a chain has no colliders
        let names: Vec<String> = (0..len).map(|i| format!("N{i}")).collect();
        let mut b = SelectionDiagram::builder();
        for w in names.windows(2) {
            b.edge(&w[0], &w[1]);
        }
        let g = b.exposure(&names[0]).outcome(&names[len - 1]).build().unwrap();
        let interior: Vec<usize> = (1..len - 1).collect();
        let cond: Vec<String> = interior.iter().filter(|&&v| cmask >> v & 1 == 1).map(|&v| names[v].clone()).collect();
        let sup: Vec<String> = interior.iter().filter(|&&v| (cmask | extra) >> v & 1 == 1).map(|&v| names[v].clone()).collect();
        let ends = (&names[..1], &names[len - 1..]);
        if g.d_separated(ends.0, ends.1, &cond).unwrap() {
            prop_assert!(g.d_separated(ends.0, ends.1, &sup).unwrap());
        }
    }
}

#[test]
fn standard_selection_diagram() {
    let g = read_diagram("fig1b.dag");
    assert_eq!(g.selection_nodes().len(), 2);
    assert_eq!(g.edge_count(), 5);
    assert!(g.is_s_admissible(&set(&["B", "G"]), LITERAL).unwrap());
    assert!(!g.is_s_admissible(&set(&["B"]), LITERAL).unwrap());
    let trail = g.open_selection_trail(&set(&["B"]), LITERAL).unwrap().unwrap();
    assert_eq!(trail.to_string(), "S_G → G → Y");
    let opts = EnumerationOptions::default();
    assert_eq!(g.minimal_sets(&["B", "G"], &opts).unwrap(), vec![set(&["B", "G"])]);
}

#[test]
fn contrast_diagram_needs_only_b() {
    let g = read_diagram("fig1c.dag");
    let opts = EnumerationOptions::default();
    assert_eq!(g.minimal_sets(&g.eligible_pool(), &opts).unwrap(), vec![set(&["B"])]);
}

#[test]
fn unnecessary_variable_diagram() {
    let g = read_diagram("fig2.dag");
    let pool = g.eligible_pool();
    assert_eq!(pool, vec!["MSTS", "W_a", "W_b", "W_c", "W_d", "W_e"]);
    let opts = EnumerationOptions::default();
    assert_eq!(g.minimal_sets(&pool, &opts).unwrap(), vec![set(&["MSTS"])]);
    let all = g.enumerate_s_admissible(&pool, &opts).unwrap();
    assert_eq!(all.len(), 32);
    assert!(all.iter().all(|ts| ts.contains("MSTS")));
}

#[test]
fn enumeration_is_closed_under_the_check() {
    for file in ["fig1b.dag", "fig1c.dag", "fig2.dag"] {
        let g = read_diagram(file);
        let pool = g.eligible_pool();
        let opts = EnumerationOptions::default();
        let found: BTreeSet<TransportSet> = g.enumerate_s_admissible(&pool, &opts).unwrap().into_iter().collect();
        for mask in 0u32..1 << pool.len() {
            let ts: TransportSet =
                pool.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| n.as_str()).collect();
            assert_eq!(found.contains(&ts), g.is_s_admissible(&ts, LITERAL).unwrap(), "{file} {ts}");
        }
        let minimal = g.minimal_sets(&pool, &opts).unwrap();
        for m in &minimal {
            assert!(found.contains(m));
            assert!(!found.iter().any(|f| f.len() < m.len() && f.is_subset(m)));
        }
    }
}
