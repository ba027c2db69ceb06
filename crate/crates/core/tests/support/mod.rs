//! Shared helpers: seeded random DAGs and a brute-force d-separation oracle.

use std::collections::BTreeSet;

use rand::Rng;
use transport_core::rng::substream;
use transport_core::SelectionDiagram;

/// Random DAG over `N0..N{n-1}`; edges only go from lower to higher index.
pub fn random_dag(n: usize, density: f64, graph: u64) -> (SelectionDiagram, Vec<(usize, usize)>) {
    let mut rng = substream(7, "oracle-dag", &[graph]);
    let mut b = SelectionDiagram::builder();
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    for name in &names {
        b.node(name);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                b.edge(&names[i], &names[j]);
                edges.push((i, j));
            }
        }
    }
    b.exposure(&names[0]).outcome(&names[n - 1]);
    (b.build().unwrap(), edges)
}

/// Brute-force d-separation: enumerate every simple undirected path and apply
/// the blocking rule to each interior node.
pub struct PathOracle {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl PathOracle {
    fn adjacent(&self, u: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(p, c)| if p == u { Some(c) } else if c == u { Some(p) } else { None })
            .collect()
    }

    fn has_edge(&self, p: usize, c: usize) -> bool {
        self.edges.contains(&(p, c))
    }

    fn descendants(&self, u: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::from([u]);
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            for &(p, c) in &self.edges {
                if p == v && out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    fn path_active(&self, path: &[usize], cond: &BTreeSet<usize>) -> bool {
        path.windows(3).all(|w| {
            let (prev, v, next) = (w[0], w[1], w[2]);
            let collider = self.has_edge(prev, v) && self.has_edge(next, v);
            if collider {
                self.descendants(v).iter().any(|d| cond.contains(d))
            } else {
                !cond.contains(&v)
            }
        })
    }

    fn connected(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>, cond: &BTreeSet<usize>) -> bool {
        fn walk(o: &PathOracle, path: &mut Vec<usize>, b: &BTreeSet<usize>, cond: &BTreeSet<usize>) -> bool {
            let last = *path.last().unwrap();
            if path.len() > 1 && b.contains(&last) {
                return o.path_active(path, cond);
            }
            for next in o.adjacent(last) {
                if path.contains(&next) {
                    continue;
                }
                path.push(next);
                // prune as soon as the prefix is blocked
                let ok = path.len() < 3 || o.path_active(&path[path.len() - 3..], cond);
                if ok && walk(o, path, b, cond) {
                    return true;
                }
                path.pop();
            }
            false
        }
        a.iter().any(|&s| walk(self, &mut vec![s], b, cond))
    }

    pub fn d_separated(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>, cond: &BTreeSet<usize>) -> bool {
        debug_assert!(self.n >= a.len() + b.len());
        !self.connected(a, b, cond)
    }
}

pub fn names(ids: &BTreeSet<usize>) -> Vec<String> {
    ids.iter().map(|i| format!("N{i}")).collect()
}

pub fn subsets(items: &[usize]) -> impl Iterator<Item = BTreeSet<usize>> + '_ {
    (0u32..1 << items.len()).map(move |mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
}
