use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Ontology, OntologyError, RelationType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyInfo {
    pub lca: Option<String>,
    pub depth1: usize,
    pub depth2: usize,
    /// Zero when there is no common ancestor.
    pub depth_lca: usize,
}

/// Memoizing view over the is_a hierarchy of one ontology.
///
/// Depth is the length of the longest is_a path up to a root, so a concept
/// with several parents sits below the deepest of them.
pub struct Taxonomy<'a> {
    ontology: &'a Ontology,
    depths: RefCell<BTreeMap<String, usize>>,
}

impl<'a> Taxonomy<'a> {
    pub fn new(ontology: &'a Ontology) -> Self {
        Taxonomy { ontology, depths: RefCell::new(BTreeMap::new()) }
    }

    pub fn ontology(&self) -> &'a Ontology {
        self.ontology
    }

    fn require(&self, id: &str) -> Result<(), OntologyError> {
        if self.ontology.contains(id) {
            Ok(())
        } else {
            Err(OntologyError::UnknownConcept(id.to_string()))
        }
    }

    pub fn depth(&self, id: &str) -> Result<usize, OntologyError> {
        self.require(id)?;
        Ok(self.depth_of(id))
    }

    fn depth_of(&self, id: &str) -> usize {
        if let Some(d) = self.depths.borrow().get(id) {
            return *d;
        }
        let d = self
            .ontology
            .targets_of(RelationType::IsA, id)
            .into_iter()
            .map(|parent| self.depth_of(parent) + 1)
            .max()
            .unwrap_or(0);
        self.depths.borrow_mut().insert(id.to_string(), d);
        d
    }

    /// `id` and everything reachable from it along is_a.
    pub fn ancestors(&self, id: &str) -> Result<BTreeSet<String>, OntologyError> {
        self.require(id)?;
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(node) = stack.pop() {
            if seen.insert(node.clone()) {
                stack.extend(self.ontology.targets_of(RelationType::IsA, &node).into_iter().map(String::from));
            }
        }
        Ok(seen)
    }

    pub fn query(&self, c1: &str, c2: &str) -> Result<TaxonomyInfo, OntologyError> {
        let a1 = self.ancestors(c1)?;
        let a2 = self.ancestors(c2)?;
        // Deepest shared ancestor; BTreeSet order makes the smallest id win ties.
        let lca = a1
            .intersection(&a2)
            .map(|id| (self.depth_of(id), id))
            .fold(None::<(usize, &String)>, |best, cand| match best {
                Some(b) if b.0 >= cand.0 => Some(b),
                _ => Some(cand),
            });
        Ok(TaxonomyInfo {
            depth1: self.depth_of(c1),
            depth2: self.depth_of(c2),
            depth_lca: lca.map_or(0, |(d, _)| d),
            lca: lca.map(|(_, id)| id.clone()),
        })
    }
}

pub fn taxonomy_query(o: &Ontology, c1: &str, c2: &str) -> Result<TaxonomyInfo, OntologyError> {
    Taxonomy::new(o).query(c1, c2)
}
