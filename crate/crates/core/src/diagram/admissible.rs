use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DiagramError, NodeId, SelectionDiagram, Trail};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 16;

/// Set of variables handed to a transport estimator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransportSet(BTreeSet<String>);

impl TransportSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(members.into_iter().map(Into::into).collect())
    }

    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn to_vec(&self) -> Vec<String> {
        self.0.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn is_subset(&self, other: &TransportSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl PartialOrd for TransportSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Cardinality first, then lexicographic over the sorted members.
impl Ord for TransportSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.iter().cmp(other.0.iter()))
    }
}

impl fmt::Display for TransportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

impl<S: Into<String>> FromIterator<S> for TransportSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// How the independence `Y ⊥ S | TS` is checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityMode {
    /// Condition on exactly the transport set in the diagram as drawn.
    #[default]
    Literal,
    /// Also condition on the exposure, in the diagram with edges into the
    /// exposure removed.
    Interventional,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub limit: usize,
    pub mode: AdmissibilityMode,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { limit: DEFAULT_ENUMERATION_LIMIT, mode: AdmissibilityMode::Literal }
    }
}

impl SelectionDiagram {
    fn check_transport_variable(&self, name: &str) -> Result<NodeId, DiagramError> {
        let id = self.id(name)?;
        let reason = if self.is_selection(name) {
            "selection node"
        } else if id == self.exposure {
            "exposure"
        } else if id == self.outcome {
            "outcome"
        } else {
            return Ok(id);
        };
        Err(DiagramError::IneligibleVariable { node: name.to_string(), reason })
    }

    fn check_pool<S: AsRef<str>>(&self, pool: &[S]) -> Result<Vec<String>, DiagramError> {
        let downstream = self.descendants(self.exposure())?;
        let mut names = BTreeSet::new();
        for name in pool {
            let name = name.as_ref();
            self.check_transport_variable(name)?;
            if downstream.contains(name) {
                return Err(DiagramError::IneligibleVariable {
                    node: name.to_string(),
                    reason: "descendant of the exposure",
                });
            }
            names.insert(name.to_string());
        }
        Ok(names.into_iter().collect())
    }

    /// Pre-treatment candidates: every node that is not a selection node, the
    /// exposure, the outcome, or a descendant of the exposure.
    pub fn eligible_pool(&self) -> Vec<String> {
        let downstream = self.descendants(self.exposure()).expect("exposure exists");
        let mut pool: Vec<String> = self
            .nodes()
            .filter(|n| !self.is_selection(n) && *n != self.outcome() && !downstream.contains(*n))
            .map(str::to_string)
            .collect();
        pool.sort();
        pool
    }

    fn admissibility_query(
        &self,
        ts: &TransportSet,
        mode: AdmissibilityMode,
    ) -> Result<(Option<SelectionDiagram>, Vec<NodeId>), DiagramError> {
        let mut cond = ts.members().map(|m| self.check_transport_variable(m)).collect::<Result<Vec<_>, _>>()?;
        match mode {
            AdmissibilityMode::Literal => Ok((None, cond)),
            AdmissibilityMode::Interventional => {
                cond.push(self.exposure);
                Ok((Some(self.without_incoming(self.exposure)), cond))
            }
        }
    }

    fn selection_ids(&self) -> Vec<NodeId> {
        self.ids().filter(|id| self.selection[id.0]).collect()
    }

    /// An active trail from some selection node to the outcome given `ts`;
    /// `None` means `ts` is s-admissible.
    pub fn open_selection_trail(&self, ts: &TransportSet, mode: AdmissibilityMode) -> Result<Option<Trail>, DiagramError> {
        let (mutilated, cond) = self.admissibility_query(ts, mode)?;
        let g = mutilated.as_ref().unwrap_or(self);
        let sel = self.selection_ids();
        if sel.is_empty() {
            return Ok(None);
        }
        Ok(g.active_trail_ids(&sel, &[self.outcome], &cond))
    }

    pub fn is_s_admissible(&self, ts: &TransportSet, mode: AdmissibilityMode) -> Result<bool, DiagramError> {
        Ok(self.open_selection_trail(ts, mode)?.is_none())
    }

    /// All s-admissible subsets of `pool`, ordered by cardinality then
    /// lexicographically.
    pub fn enumerate_s_admissible<S: AsRef<str>>(
        &self,
        pool: &[S],
        opts: &EnumerationOptions,
    ) -> Result<Vec<TransportSet>, DiagramError> {
        let pool = self.check_pool(pool)?;
        if pool.len() > opts.limit {
            return Err(DiagramError::EnumerationLimit { size: pool.len(), limit: opts.limit });
        }
        let mut found = Vec::new();
        for mask in 0u64..(1u64 << pool.len()) {
            let ts: TransportSet = pool.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| n.as_str()).collect();
            if self.is_s_admissible(&ts, opts.mode)? {
                found.push(ts);
            }
        }
        found.sort();
        Ok(found)
    }

    /// Minimum-cardinality s-admissible subsets of `pool`. Empty when no
    /// subset is admissible.
    pub fn minimal_sets<S: AsRef<str>>(&self, pool: &[S], opts: &EnumerationOptions) -> Result<Vec<TransportSet>, DiagramError> {
        let all = self.enumerate_s_admissible(pool, opts)?;
        let Some(smallest) = all.first().map(TransportSet::len) else {
            return Ok(Vec::new());
        };
        Ok(all.into_iter().take_while(|ts| ts.len() == smallest).collect())
    }
}
