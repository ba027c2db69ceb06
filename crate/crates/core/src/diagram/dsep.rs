//! d-separation by reachability over (node, direction) states.
//!
//! A trail is explored as a sequence of moves; arriving at a node "from below"
//! (from one of its children) or "from above" (from one of its parents)
//! decides which moves are active. Each state is visited at most once, so a
//! query is linear in the number of edges.

use std::collections::VecDeque;
use std::fmt;

use super::{DiagramError, NodeId, SelectionDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// arrived from a child (or the trail starts here)
    Up,
    /// arrived from a parent
    Down,
}

/// One step of an active trail: the node reached and whether the edge used
/// points along the direction of travel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailStep {
    pub node: String,
    pub forward: bool,
}

/// Witness of an active trail, e.g. `S_G → G → Y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trail {
    pub start: String,
    pub steps: Vec<TrailStep>,
}

impl Trail {
    pub fn nodes(&self) -> Vec<&str> {
        std::iter::once(self.start.as_str()).chain(self.steps.iter().map(|s| s.node.as_str())).collect()
    }
}

impl fmt::Display for Trail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for step in &self.steps {
            let arrow = if step.forward { "→" } else { "←" };
            write!(f, " {arrow} {}", step.node)?;
        }
        Ok(())
    }
}

impl SelectionDiagram {
    pub(crate) fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<NodeId>, DiagramError> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    fn check_disjoint(&self, sets: [&[NodeId]; 3]) -> Result<(), DiagramError> {
        let mut owner = vec![usize::MAX; self.node_count()];
        for (k, set) in sets.iter().enumerate() {
            for id in *set {
                if owner[id.0] != usize::MAX && owner[id.0] != k {
                    return Err(DiagramError::OverlappingQuery(self.name(*id).to_string()));
                }
                owner[id.0] = k;
            }
        }
        Ok(())
    }

    /// True when every trail between `a` and `b` is blocked given `cond`.
    pub fn d_separated<S: AsRef<str>>(&self, a: &[S], b: &[S], cond: &[S]) -> Result<bool, DiagramError> {
        Ok(self.active_trail(a, b, cond)?.is_none())
    }

    /// Some active trail from `a` to `b` given `cond`, if one exists.
    pub fn active_trail<S: AsRef<str>>(&self, a: &[S], b: &[S], cond: &[S]) -> Result<Option<Trail>, DiagramError> {
        let (a, b, cond) = (self.resolve(a)?, self.resolve(b)?, self.resolve(cond)?);
        self.check_disjoint([&a, &b, &cond])?;
        Ok(self.active_trail_ids(&a, &b, &cond))
    }

    pub(crate) fn active_trail_ids(&self, a: &[NodeId], b: &[NodeId], cond: &[NodeId]) -> Option<Trail> {
        let n = self.node_count();
        let mut conditioned = vec![false; n];
        for c in cond {
            conditioned[c.0] = true;
        }
        let mut target = vec![false; n];
        for t in b {
            target[t.0] = true;
        }
        // a collider passes the trail iff it or one of its descendants is conditioned
        let opens_collider = self.reach(cond, |v| self.parent_ids(v));

        let state = |id: NodeId, dir: Dir| id.0 * 2 + usize::from(dir == Dir::Down);
        let mut prev: Vec<Option<usize>> = vec![None; 2 * n];
        let mut seen = vec![false; 2 * n];
        let mut queue = VecDeque::new();
        for &s in a {
            let k = state(s, Dir::Up);
            if !seen[k] {
                seen[k] = true;
                queue.push_back((s, Dir::Up));
            }
        }
        while let Some((v, dir)) = queue.pop_front() {
            if target[v.0] {
                return Some(self.unwind(&prev, state(v, dir)));
            }
            let mut moves: Vec<(NodeId, Dir)> = Vec::new();
            match dir {
                Dir::Up if !conditioned[v.0] => {
                    moves.extend(self.parent_ids(v).iter().map(|&p| (p, Dir::Up)));
                    moves.extend(self.child_ids(v).iter().map(|&c| (c, Dir::Down)));
                }
                Dir::Up => {}
                Dir::Down => {
                    if !conditioned[v.0] {
                        moves.extend(self.child_ids(v).iter().map(|&c| (c, Dir::Down)));
                    }
                    if opens_collider[v.0] {
                        moves.extend(self.parent_ids(v).iter().map(|&p| (p, Dir::Up)));
                    }
                }
            }
            let from = state(v, dir);
            for (w, d) in moves {
                let k = state(w, d);
                if !seen[k] {
                    seen[k] = true;
                    prev[k] = Some(from);
                    queue.push_back((w, d));
                }
            }
        }
        None
    }

    fn unwind(&self, prev: &[Option<usize>], mut k: usize) -> Trail {
        let mut rev = Vec::new();
        loop {
            let node = NodeId(k / 2);
            match prev[k] {
                Some(p) => {
                    rev.push(TrailStep { node: self.name(node).to_string(), forward: k % 2 == 1 });
                    k = p;
                }
                None => {
                    rev.reverse();
                    return Trail { start: self.name(node).to_string(), steps: rev };
                }
            }
        }
    }
}
