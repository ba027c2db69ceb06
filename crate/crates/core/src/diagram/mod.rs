//! Selection diagrams and the identification queries run against them.
//!
//! A [`SelectionDiagram`] is a causal DAG over the measured variables plus a set
//! of selection nodes. Each selection node is a parentless indicator pointing at
//! a mechanism that may differ between the source and target populations. A
//! transport set is s-admissible when it d-separates every selection node from
//! the outcome.

mod admissible;
mod dsep;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use admissible::{AdmissibilityMode, EnumerationOptions, TransportSet, DEFAULT_ENUMERATION_LIMIT};
pub use dsep::{Trail, TrailStep};
pub use parse::parse_diagram;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("selection node `{node}` has incoming edge from `{parent}`")]
    SelectionHasParent { node: String, parent: String },
    #[error("selection node `{0}` has no outgoing edge")]
    SelectionWithoutChild(String),
    #[error("selection node `{0}` points into the exposure")]
    SelectionIntoExposure(String),
    #[error("missing `{0}` declaration")]
    MissingDeclaration(&'static str),
    #[error("duplicate `{keyword}` declaration at line {line}")]
    DuplicateDeclaration { keyword: &'static str, line: usize },
    #[error("exposure and outcome must be distinct (both are `{0}`)")]
    ExposureIsOutcome(String),
    #[error("`{0}` is a selection node and cannot be the {1}")]
    SelectionRole(String, &'static str),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` appears in more than one of the query sets")]
    OverlappingQuery(String),
    #[error("`{node}` cannot be used as a transport variable: {reason}")]
    IneligibleVariable { node: String, reason: &'static str },
    #[error("pool of {size} variables exceeds the enumeration limit of {limit}")]
    EnumerationLimit { size: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) usize);

/// Validated selection diagram. Immutable once built.
#[derive(Debug, Clone)]
pub struct SelectionDiagram {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    selection: Vec<bool>,
    exposure: NodeId,
    outcome: NodeId,
}

/// Incremental construction of a [`SelectionDiagram`]; all invariants are
/// checked in [`DiagramBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct DiagramBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
    selection: BTreeSet<usize>,
    exposure: Option<String>,
    outcome: Option<String>,
}

impl DiagramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn node(&mut self, name: &str) -> &mut Self {
        self.intern(name);
        self
    }

    pub fn edge(&mut self, parent: &str, child: &str) -> &mut Self {
        let p = self.intern(parent);
        let c = self.intern(child);
        self.edges.insert((p, c));
        self
    }

    /// Marks `name` as a selection node.
    pub fn selection(&mut self, name: &str) -> &mut Self {
        let id = self.intern(name);
        self.selection.insert(id);
        self
    }

    /// Adds selection node `S_<target>` with a single edge into `target`.
    pub fn differs(&mut self, target: &str) -> &mut Self {
        let s = format!("S_{target}");
        self.selection(&s);
        self.edge(&s, target)
    }

    pub fn exposure(&mut self, name: &str) -> &mut Self {
        self.intern(name);
        self.exposure = Some(name.to_string());
        self
    }

    pub fn outcome(&mut self, name: &str) -> &mut Self {
        self.intern(name);
        self.outcome = Some(name.to_string());
        self
    }

    pub fn build(&self) -> Result<SelectionDiagram, DiagramError> {
        let n = self.names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &self.edges {
            parents[c].push(NodeId(p));
            children[p].push(NodeId(c));
        }
        let mut selection = vec![false; n];
        for &s in &self.selection {
            selection[s] = true;
        }
        let exposure = self.exposure.as_deref().ok_or(DiagramError::MissingDeclaration("exposure"))?;
        let outcome = self.outcome.as_deref().ok_or(DiagramError::MissingDeclaration("outcome"))?;
        if exposure == outcome {
            return Err(DiagramError::ExposureIsOutcome(exposure.to_string()));
        }
        let exposure = NodeId(self.index[exposure]);
        let outcome = NodeId(self.index[outcome]);

        for (id, &is_sel) in selection.iter().enumerate() {
            if !is_sel {
                continue;
            }
            let name = &self.names[id];
            if let Some(p) = parents[id].first() {
                return Err(DiagramError::SelectionHasParent {
                    node: name.clone(),
                    parent: self.names[p.0].clone(),
                });
            }
            if children[id].is_empty() {
                return Err(DiagramError::SelectionWithoutChild(name.clone()));
            }
            if id == exposure.0 {
                return Err(DiagramError::SelectionRole(name.clone(), "exposure"));
            }
            if id == outcome.0 {
                return Err(DiagramError::SelectionRole(name.clone(), "outcome"));
            }
            if children[id].contains(&exposure) {
                return Err(DiagramError::SelectionIntoExposure(name.clone()));
            }
        }

        let diagram = SelectionDiagram {
            names: self.names.clone(),
            index: self.index.iter().map(|(k, &v)| (k.clone(), NodeId(v))).collect(),
            parents,
            children,
            selection,
            exposure,
            outcome,
        };
        if let Some(cycle) = diagram.find_cycle() {
            return Err(DiagramError::Cycle(cycle.into_iter().map(|id| diagram.names[id.0].clone()).collect()));
        }
        Ok(diagram)
    }
}

impl SelectionDiagram {
    pub fn builder() -> DiagramBuilder {
        DiagramBuilder::new()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.0]
    }

    pub fn id(&self, name: &str) -> Result<NodeId, DiagramError> {
        self.index.get(name).copied().ok_or_else(|| DiagramError::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn exposure(&self) -> &str {
        self.name(self.exposure)
    }

    pub fn outcome(&self) -> &str {
        self.name(self.outcome)
    }

    pub fn is_selection(&self, name: &str) -> bool {
        self.index.get(name).is_some_and(|id| self.selection[id.0])
    }

    /// Names of all nodes in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn selection_nodes(&self) -> Vec<&str> {
        self.ids().filter(|id| self.selection[id.0]).map(|id| self.name(id)).collect()
    }

    /// Directed edges as `(parent, child)` name pairs.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.ids()
            .flat_map(|p| self.children[p.0].iter().map(move |&c| (p, c)))
            .map(|(p, c)| (self.name(p), self.name(c)))
            .collect()
    }

    pub fn parents(&self, name: &str) -> Result<Vec<&str>, DiagramError> {
        let id = self.id(name)?;
        Ok(self.parents[id.0].iter().map(|&p| self.name(p)).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>, DiagramError> {
        let id = self.id(name)?;
        Ok(self.children[id.0].iter().map(|&c| self.name(c)).collect())
    }

    pub(crate) fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.names.len()).map(NodeId)
    }

    pub(crate) fn parent_ids(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.0]
    }

    pub(crate) fn child_ids(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    /// Descendants of `name`, including `name` itself.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<String>, DiagramError> {
        let id = self.id(name)?;
        let mask = self.reach(&[id], |v| self.child_ids(v));
        Ok(self.ids().filter(|v| mask[v.0]).map(|v| self.name(v).to_string()).collect())
    }

    pub(crate) fn reach<'a, F>(&'a self, start: &[NodeId], next: F) -> Vec<bool>
    where
        F: Fn(NodeId) -> &'a [NodeId],
    {
        let mut seen = vec![false; self.names.len()];
        let mut stack: Vec<NodeId> = start.to_vec();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v.0], true) {
                continue;
            }
            stack.extend(next(v).iter().copied().filter(|w| !seen[w.0]));
        }
        seen
    }

    /// Copy of the diagram with every edge into `name` removed.
    pub(crate) fn without_incoming(&self, id: NodeId) -> SelectionDiagram {
        let mut g = self.clone();
        for p in std::mem::take(&mut g.parents[id.0]) {
            g.children[p.0].retain(|&c| c != id);
        }
        g
    }

    fn find_cycle(&self) -> Option<Vec<NodeId>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.names.len()];
        let mut path: Vec<NodeId> = Vec::new();
        for root in self.ids() {
            if state[root.0] != 0 {
                continue;
            }
            let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
            state[root.0] = 1;
            path.push(root);
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&c) = self.children[v.0].get(*next) {
                    *next += 1;
                    match state[c.0] {
                        0 => {
                            state[c.0] = 1;
                            path.push(c);
                            stack.push((c, 0));
                        }
                        1 => {
                            let start = path.iter().position(|&x| x == c).expect("node on stack");
                            let mut cycle = path[start..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[v.0] = 2;
                    path.pop();
                    stack.pop();
                }
            }
        }
        None
    }
}

impl fmt::Display for SelectionDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, c) in self.edges() {
            writeln!(f, "{p} -> {c};")?;
        }
        for id in self.ids() {
            if self.parents[id.0].is_empty() && self.children[id.0].is_empty() {
                writeln!(f, "{};", self.name(id))?;
            }
        }
        writeln!(f, "exposure {};", self.exposure())?;
        writeln!(f, "outcome {};", self.outcome())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_validates_selection_nodes() {
        let err = SelectionDiagram::builder()
            .selection("S")
            .edge("A", "S")
            .edge("S", "Y")
            .exposure("Z")
            .outcome("Y")
            .build()
            .unwrap_err();
        assert!(matches!(err, DiagramError::SelectionHasParent { .. }));

        let err = SelectionDiagram::builder()
            .differs("Z")
            .edge("Z", "Y")
            .exposure("Z")
            .outcome("Y")
            .build()
            .unwrap_err();
        assert_eq!(err, DiagramError::SelectionIntoExposure("S_Z".into()));

        let err = SelectionDiagram::builder().selection("S").edge("Z", "Y").exposure("Z").outcome("Y").build();
        assert_eq!(err.unwrap_err(), DiagramError::SelectionWithoutChild("S".into()));
    }

    #[test]
    fn builder_requires_distinct_roles() {
        let err = SelectionDiagram::builder().edge("Z", "Y").exposure("Z").outcome("Z").build();
        assert!(matches!(err, Err(DiagramError::ExposureIsOutcome(_))));
        let err = SelectionDiagram::builder().edge("Z", "Y").exposure("Z").build();
        assert_eq!(err.unwrap_err(), DiagramError::MissingDeclaration("outcome"));
    }

    #[test]
    fn cycle_is_reported_with_its_nodes() {
        let err = SelectionDiagram::builder()
            .edge("Z", "A")
            .edge("A", "B")
            .edge("B", "C")
            .edge("C", "A")
            .edge("C", "Y")
            .exposure("Z")
            .outcome("Y")
            .build()
            .unwrap_err();
        assert_eq!(err, DiagramError::Cycle(vec!["A".into(), "B".into(), "C".into(), "A".into()]));
    }

    #[test]
    fn descendants_include_self() {
        let g = SelectionDiagram::builder()
            .edge("Z", "M")
            .edge("M", "Y")
            .edge("W", "Y")
            .exposure("Z")
            .outcome("Y")
            .build()
            .unwrap();
        let d: Vec<_> = g.descendants("Z").unwrap().into_iter().collect();
        assert_eq!(d, vec!["M", "Y", "Z"]);
    }
}
