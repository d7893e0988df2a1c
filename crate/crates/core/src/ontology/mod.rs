//! Ontology value type: labelled concepts plus typed, provenance-carrying
//! relations.
//!
//! Ontologies are plain values. [`Ontology::add_relation`] returns a new
//! ontology; the `insert_*` methods mutate in place and are what the
//! pipeline uses internally when it owns the value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

mod document;
mod taxonomy;
mod turtle;

pub use document::{load_ontology, save_ontology, OntologyDocument};
pub use taxonomy::{taxonomy_query, Taxonomy, TaxonomyInfo};
pub use turtle::{export_turtle, import_turtle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    Action,
    DeonticOperator,
    Entity,
    Predicate,
    Policy,
    Generic,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 6] = [
        ConceptKind::Action,
        ConceptKind::DeonticOperator,
        ConceptKind::Entity,
        ConceptKind::Predicate,
        ConceptKind::Policy,
        ConceptKind::Generic,
    ];

    /// Short form used inside generated concept ids.
    pub fn slug(self) -> &'static str {
        match self {
            ConceptKind::Action => "action",
            ConceptKind::DeonticOperator => "deontic",
            ConceptKind::Entity => "entity",
            ConceptKind::Predicate => "predicate",
            ConceptKind::Policy => "policy",
            ConceptKind::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    /// First entry is the preferred label.
    pub labels: Vec<String>,
    pub kind: ConceptKind,
}

impl Concept {
    pub fn new(id: impl Into<String>, labels: &[&str], kind: ConceptKind) -> Self {
        Concept {
            id: id.into(),
            labels: labels.iter().map(|l| l.to_string()).collect(),
            kind,
        }
    }

    pub fn preferred_label(&self) -> &str {
        &self.labels[0]
    }

    fn validate(&self) -> Result<(), OntologyError> {
        let invalid = |reason: &str| OntologyError::InvalidConcept { id: self.id.clone(), reason: reason.to_string() };
        match self.id.split_once('#') {
            Some((prefix, local)) if !prefix.is_empty() && !local.is_empty() => {}
            _ => return Err(invalid("id must have the form `<ontology>#<local>`")),
        }
        if self.labels.is_empty() {
            return Err(invalid("at least one label is required"));
        }
        let mut seen = BTreeSet::new();
        for label in &self.labels {
            if label.is_empty() || label.trim() != label {
                return Err(invalid(&format!("label {label:?} is empty or not trimmed")));
            }
            if !seen.insert(label.as_str()) {
                return Err(invalid(&format!("label {label:?} is repeated")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    IsA,
    PartOf,
    SynonymOf,
    HomonymOf,
    EquivalentTo,
    RelatedTo,
}

impl RelationType {
    pub const ALL: [RelationType; 6] = [
        RelationType::IsA,
        RelationType::PartOf,
        RelationType::SynonymOf,
        RelationType::HomonymOf,
        RelationType::EquivalentTo,
        RelationType::RelatedTo,
    ];

    pub fn is_symmetric(self) -> bool {
        !self.is_hierarchical()
    }

    /// is_a and part_of must stay acyclic.
    pub fn is_hierarchical(self) -> bool {
        matches!(self, RelationType::IsA | RelationType::PartOf)
    }

    /// synonym_of and equivalent_to both mean "same meaning".
    pub fn is_equivalence(self) -> bool {
        matches!(self, RelationType::SynonymOf | RelationType::EquivalentTo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::IsA => "is_a",
            RelationType::PartOf => "part_of",
            RelationType::SynonymOf => "synonym_of",
            RelationType::HomonymOf => "homonym_of",
            RelationType::EquivalentTo => "equivalent_to",
            RelationType::RelatedTo => "related_to",
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Authored,
    Case1,
    Case2,
    Case3,
    SyntacticMatch,
    ExpertDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    pub rel_type: RelationType,
    pub provenance: Provenance,
    pub confidence: f64,
}

pub type RelationKey = (String, RelationType, String);

impl Relation {
    /// Builds a relation with symmetric endpoints already ordered.
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        rel_type: RelationType,
        provenance: Provenance,
        confidence: f64,
    ) -> Self {
        Relation {
            source: source.into(),
            target: target.into(),
            rel_type,
            provenance,
            confidence,
        }
        .canonical()
    }

    pub fn authored(source: impl Into<String>, target: impl Into<String>, rel_type: RelationType) -> Self {
        Relation::new(source, target, rel_type, Provenance::Authored, 1.0)
    }

    pub fn canonical(mut self) -> Self {
        if self.rel_type.is_symmetric() && self.source > self.target {
            std::mem::swap(&mut self.source, &mut self.target);
        }
        self
    }

    pub fn key(&self) -> RelationKey {
        (self.source.clone(), self.rel_type, self.target.clone())
    }

    pub fn touches(&self, id: &str) -> bool {
        self.source == id || self.target == id
    }

    /// The endpoint opposite `id`, if `id` is one of them.
    pub fn other(&self, id: &str) -> Option<&str> {
        if self.source == id {
            Some(&self.target)
        } else if self.target == id {
            Some(&self.source)
        } else {
            None
        }
    }

    fn describe(&self) -> String {
        format!("({}, {}, {})", self.source, self.rel_type, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OntologyError {
    #[error("malformed ontology document: {0}")]
    Malformed(String),
    #[error("invalid concept `{id}`: {reason}")]
    InvalidConcept { id: String, reason: String },
    #[error("duplicate concept id `{0}`")]
    DuplicateConcept(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("relation {triple} has a dangling endpoint `{missing}`")]
    DanglingEndpoint { triple: String, missing: String },
    #[error("invalid relation {triple}: {reason}")]
    InvalidRelation { triple: String, reason: String },
    #[error("duplicate relation {0}")]
    DuplicateRelation(String),
    #[error("{rel_type} cycle: {}", .cycle.join(" -> "))]
    Cycle { rel_type: RelationType, cycle: Vec<String> },
}

/// What happened when a relation was inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    Added,
    /// The triple already existed; the higher confidence was kept.
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "OntologyDocument", try_from = "OntologyDocument")]
pub struct Ontology {
    pub id: String,
    concepts: BTreeMap<String, Concept>,
    relations: BTreeMap<RelationKey, Relation>,
}

impl Ontology {
    pub fn new(id: impl Into<String>) -> Self {
        Ontology { id: id.into(), concepts: BTreeMap::new(), relations: BTreeMap::new() }
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.concepts.contains_key(id)
    }

    /// Concepts in id order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    /// Relations in (source, type, target) order.
    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn relation(&self, source: &str, rel_type: RelationType, target: &str) -> Option<&Relation> {
        let probe = Relation::new(source, target, rel_type, Provenance::Authored, 1.0);
        self.relations.get(&probe.key())
    }

    pub fn has_relation(&self, source: &str, rel_type: RelationType, target: &str) -> bool {
        self.relation(source, rel_type, target).is_some()
    }

    /// Any relation at all between two concepts, in either direction.
    pub fn related(&self, a: &str, b: &str) -> bool {
        RelationType::ALL
            .iter()
            .any(|&t| self.has_relation(a, t, b) || self.has_relation(b, t, a))
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Sources of `rel_type` edges pointing at `target` (e.g. part_of children).
    pub fn sources_of(&self, rel_type: RelationType, target: &str) -> Vec<&str> {
        self.relations
            .values()
            .filter(|r| r.rel_type == rel_type && r.target == target)
            .map(|r| r.source.as_str())
            .collect()
    }

    /// Targets of `rel_type` edges leaving `source` (e.g. is_a parents).
    pub fn targets_of(&self, rel_type: RelationType, source: &str) -> Vec<&str> {
        let lo = (source.to_string(), rel_type, String::new());
        self.relations
            .range(lo..)
            .take_while(|(k, _)| k.0 == source && k.1 == rel_type)
            .map(|(_, r)| r.target.as_str())
            .collect()
    }

    pub fn insert_concept(&mut self, concept: Concept) -> Result<(), OntologyError> {
        concept.validate()?;
        if self.concepts.contains_key(&concept.id) {
            return Err(OntologyError::DuplicateConcept(concept.id));
        }
        self.concepts.insert(concept.id.clone(), concept);
        Ok(())
    }

    /// Replaces the labels of an existing concept.
    pub fn set_labels(&mut self, id: &str, labels: Vec<String>) -> Result<(), OntologyError> {
        let existing = self.concepts.get(id).ok_or_else(|| OntologyError::UnknownConcept(id.to_string()))?;
        let updated = Concept { labels, ..existing.clone() };
        updated.validate()?;
        self.concepts.insert(id.to_string(), updated);
        Ok(())
    }

    /// Pure form of [`Ontology::insert_relation`].
    pub fn add_relation(&self, relation: Relation) -> Result<Ontology, OntologyError> {
        let mut out = self.clone();
        out.insert_relation(relation)?;
        Ok(out)
    }

    pub fn insert_relation(&mut self, relation: Relation) -> Result<Inserted, OntologyError> {
        let r = relation.canonical();
        self.check_relation(&r)?;
        if let Some(existing) = self.relations.get_mut(&r.key()) {
            if r.confidence > existing.confidence {
                existing.confidence = r.confidence;
            }
            return Ok(Inserted::Duplicate);
        }
        if r.rel_type.is_hierarchical() {
            if let Some(mut path) = self.path(r.rel_type, &r.target, &r.source) {
                path.push(r.target.clone());
                return Err(OntologyError::Cycle { rel_type: r.rel_type, cycle: path });
            }
        }
        self.relations.insert(r.key(), r);
        Ok(Inserted::Added)
    }

    fn check_relation(&self, r: &Relation) -> Result<(), OntologyError> {
        for end in [&r.source, &r.target] {
            if !self.concepts.contains_key(end) {
                return Err(OntologyError::DanglingEndpoint { triple: r.describe(), missing: end.clone() });
            }
        }
        let invalid = |reason: &str| OntologyError::InvalidRelation { triple: r.describe(), reason: reason.to_string() };
        if r.source == r.target {
            return Err(invalid("source and target must differ"));
        }
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(invalid("confidence must lie in [0, 1]"));
        }
        if r.provenance == Provenance::Authored && r.confidence != 1.0 {
            return Err(invalid("authored relations carry confidence 1.0"));
        }
        Ok(())
    }

    /// A `rel_type` path from `from` to `to`, both ends included.
    fn path(&self, rel_type: RelationType, from: &str, to: &str) -> Option<Vec<String>> {
        let mut stack = vec![(from.to_string(), vec![from.to_string()])];
        let mut seen = BTreeSet::new();
        while let Some((node, path)) = stack.pop() {
            if node == to {
                return Some(path);
            }
            if !seen.insert(node.clone()) {
                continue;
            }
            for next in self.targets_of(rel_type, &node) {
                let mut p = path.clone();
                p.push(next.to_string());
                stack.push((next.to_string(), p));
            }
        }
        None
    }

    /// Removes a concept together with every relation touching it.
    pub fn remove_concept(&mut self, id: &str) -> Option<Concept> {
        let removed = self.concepts.remove(id)?;
        self.relations.retain(|_, r| !r.touches(id));
        Some(removed)
    }

    /// Moves every relation of `from` onto `to` and drops `from`. Relations
    /// that would become self-loops or duplicates disappear.
    pub fn redirect_concept(&mut self, from: &str, to: &str) -> Result<(), OntologyError> {
        if !self.contains(to) {
            return Err(OntologyError::UnknownConcept(to.to_string()));
        }
        let moved: Vec<Relation> = self.relations.values().filter(|r| r.touches(from)).cloned().collect();
        self.remove_concept(from).ok_or_else(|| OntologyError::UnknownConcept(from.to_string()))?;
        for mut r in moved {
            if r.source == from {
                r.source = to.to_string();
            }
            if r.target == from {
                r.target = to.to_string();
            }
            if r.source == r.target {
                continue;
            }
            match self.insert_relation(r) {
                Ok(_) | Err(OntologyError::Cycle { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Full invariant check, used when loading documents.
    pub fn validate(&self) -> Result<(), OntologyError> {
        for c in self.concepts.values() {
            c.validate()?;
        }
        for r in self.relations.values() {
            self.check_relation(r)?;
            if r.rel_type.is_symmetric() && r.source > r.target {
                return Err(OntologyError::InvalidRelation {
                    triple: r.describe(),
                    reason: "symmetric relations are stored with source < target".into(),
                });
            }
        }
        for t in [RelationType::IsA, RelationType::PartOf] {
            if let Some(cycle) = self.find_cycle(t) {
                return Err(OntologyError::Cycle { rel_type: t, cycle });
            }
        }
        Ok(())
    }

    fn find_cycle(&self, rel_type: RelationType) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit(
            o: &Ontology,
            t: RelationType,
            node: &str,
            marks: &mut BTreeMap<String, Mark>,
            stack: &mut Vec<String>,
        ) -> Option<Vec<String>> {
            match marks.get(node) {
                Some(Mark::Done) => return None,
                Some(Mark::Open) => {
                    let start = stack.iter().position(|n| n == node).unwrap_or(0);
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(node.to_string());
                    return Some(cycle);
                }
                None => {}
            }
            marks.insert(node.to_string(), Mark::Open);
            stack.push(node.to_string());
            for next in o.targets_of(t, node) {
                if let Some(c) = visit(o, t, next, marks, stack) {
                    return Some(c);
                }
            }
            stack.pop();
            marks.insert(node.to_string(), Mark::Done);
            None
        }
        let mut marks = BTreeMap::new();
        for id in self.concepts.keys() {
            if let Some(c) = visit(self, rel_type, id, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
        None
    }

    /// Same concepts (ids, labels, kinds) and the same relation triples,
    /// ignoring provenance and confidence.
    pub fn same_shape(&self, other: &Ontology) -> bool {
        self.concepts == other.concepts && self.relations.keys().eq(other.relations.keys())
    }

    /// True when every relation triple of `other` is present here.
    pub fn contains_relations_of(&self, other: &Ontology) -> bool {
        other.relations.keys().all(|k| self.relations.contains_key(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so() -> Ontology {
        let mut o = Ontology::new("so");
        for (id, label) in [("so#A", "a"), ("so#B", "b"), ("so#C", "c")] {
            o.insert_concept(Concept::new(id, &[label], ConceptKind::Generic)).unwrap();
        }
        o
    }

    #[test]
    fn symmetric_relations_are_canonical_and_deduplicated() {
        let o = so()
            .add_relation(Relation::new("so#B", "so#A", RelationType::SynonymOf, Provenance::Case1, 0.5))
            .unwrap()
            .add_relation(Relation::new("so#A", "so#B", RelationType::SynonymOf, Provenance::Case1, 0.8))
            .unwrap();
        assert_eq!(o.relation_count(), 1);
        let r = o.relations().next().unwrap();
        assert_eq!((r.source.as_str(), r.target.as_str()), ("so#A", "so#B"));
        assert_eq!(r.confidence, 0.8);
    }

    #[test]
    fn hierarchical_cycle_rejected() {
        let o = so()
            .add_relation(Relation::authored("so#A", "so#B", RelationType::IsA))
            .unwrap()
            .add_relation(Relation::authored("so#B", "so#C", RelationType::IsA))
            .unwrap();
        let err = o.add_relation(Relation::authored("so#C", "so#A", RelationType::IsA)).unwrap_err();
        match err {
            OntologyError::Cycle { rel_type, cycle } => {
                assert_eq!(rel_type, RelationType::IsA);
                assert_eq!(cycle, ["so#A", "so#B", "so#C", "so#A"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        // part_of is checked independently of is_a.
        assert!(o.add_relation(Relation::authored("so#C", "so#A", RelationType::PartOf)).is_ok());
    }

    #[test]
    fn missing_endpoint() {
        let err = so().add_relation(Relation::authored("so#A", "so#ghost", RelationType::RelatedTo)).unwrap_err();
        assert_eq!(
            err,
            OntologyError::DanglingEndpoint { triple: "(so#A, related_to, so#ghost)".into(), missing: "so#ghost".into() }
        );
    }

    #[test]
    fn authored_confidence_enforced() {
        let r = Relation::new("so#A", "so#B", RelationType::RelatedTo, Provenance::Authored, 0.4);
        assert!(matches!(so().add_relation(r), Err(OntologyError::InvalidRelation { .. })));
    }

    #[test]
    fn concept_validation() {
        let mut o = so();
        assert!(o.insert_concept(Concept::new("nohash", &["x"], ConceptKind::Entity)).is_err());
        assert!(o.insert_concept(Concept::new("so#x", &[], ConceptKind::Entity)).is_err());
        assert!(o.insert_concept(Concept::new("so#x", &[" x"], ConceptKind::Entity)).is_err());
        assert!(o.insert_concept(Concept::new("so#x", &["x", "x"], ConceptKind::Entity)).is_err());
        assert_eq!(
            o.insert_concept(Concept::new("so#A", &["x"], ConceptKind::Entity)),
            Err(OntologyError::DuplicateConcept("so#A".into()))
        );
    }

    #[test]
    fn redirect_merges_relations() {
        let mut o = so();
        o.insert_relation(Relation::authored("so#A", "so#C", RelationType::PartOf)).unwrap();
        o.insert_relation(Relation::authored("so#B", "so#C", RelationType::PartOf)).unwrap();
        o.insert_relation(Relation::authored("so#A", "so#B", RelationType::RelatedTo)).unwrap();
        o.redirect_concept("so#B", "so#A").unwrap();
        assert!(!o.contains("so#B"));
        assert_eq!(o.relation_count(), 1);
        assert!(o.has_relation("so#A", RelationType::PartOf, "so#C"));
    }

    #[test]
    fn remove_concept_drops_relations() {
        let mut o = so();
        o.insert_relation(Relation::authored("so#A", "so#B", RelationType::IsA)).unwrap();
        o.remove_concept("so#B");
        assert_eq!(o.relation_count(), 0);
        assert!(o.validate().is_ok());
    }
}
