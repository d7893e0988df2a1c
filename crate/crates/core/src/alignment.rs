//! Cross-SOP alignment against the support ontology.
//!
//! Vocabulary concepts are first anchored into the support ontology. Every
//! same-kind pair of concepts from two different SOPs is then checked
//! against three rules:
//!
//! * (a) same anchor: `equivalent_to` when the preferred labels are equal,
//!   `synonym_of` otherwise;
//! * (b) equal labels on distinct anchors that are semantically far apart:
//!   `homonym_of`;
//! * (c) at least one side unanchored and labels syntactically close: a
//!   candidate that needs expert confirmation.
//!
//! Policy-kind nodes are never aligned directly; enrichment relates them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ontology::{Concept, ConceptKind, Ontology, OntologyError, Provenance, Relation, RelationType, Taxonomy};
use crate::similarity::{anchor_concept, syntactic_similarity, Anchor, SimilarityConfig};
use crate::sop::Sop;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptRef {
    pub sop_id: String,
    pub concept_id: String,
}

impl ConceptRef {
    pub fn new(sop_id: impl Into<String>, concept_id: impl Into<String>) -> Self {
        ConceptRef { sop_id: sop_id.into(), concept_id: concept_id.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    Anchored,
    SupportRelation,
    R1,
    R2,
    SyntacticCandidate,
}

impl Derivation {
    pub fn provenance(self) -> Provenance {
        match self {
            Derivation::Anchored | Derivation::SupportRelation | Derivation::SyntacticCandidate => {
                Provenance::SyntacticMatch
            }
            Derivation::R1 => Provenance::Case2,
            Derivation::R2 => Provenance::Case3,
        }
    }

    pub fn is_derived(self) -> bool {
        matches!(self, Derivation::R1 | Derivation::R2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub left: ConceptRef,
    pub right: ConceptRef,
    pub rel_type: RelationType,
    pub confidence: f64,
    pub derivation: Derivation,
    #[serde(default)]
    pub needs_confirmation: bool,
}

pub type CorrespondenceKey = (ConceptRef, RelationType, ConceptRef);

impl Correspondence {
    /// Orders the endpoints so that `left < right`.
    pub fn new(a: ConceptRef, b: ConceptRef, rel_type: RelationType, confidence: f64, derivation: Derivation) -> Self {
        let (left, right) = if a <= b { (a, b) } else { (b, a) };
        Correspondence { left, right, rel_type, confidence, derivation, needs_confirmation: false }
    }

    pub fn confirm(mut self, needed: bool) -> Self {
        self.needs_confirmation = needed;
        self
    }

    pub fn key(&self) -> CorrespondenceKey {
        (self.left.clone(), self.rel_type, self.right.clone())
    }

    pub fn touches(&self, concept_id: &str) -> bool {
        self.left.concept_id == concept_id || self.right.concept_id == concept_id
    }

    pub fn other(&self, concept_id: &str) -> Option<&ConceptRef> {
        if self.left.concept_id == concept_id {
            Some(&self.right)
        } else if self.right.concept_id == concept_id {
            Some(&self.left)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceOntology {
    /// Sorted by (left, rel_type, right).
    pub correspondences: Vec<Correspondence>,
    /// SOP concept id to its support anchor.
    pub anchors: BTreeMap<String, Anchor>,
}

impl CorrespondenceOntology {
    pub fn get(&self, a: &str, rel_type: RelationType, b: &str) -> Option<&Correspondence> {
        self.correspondences.iter().find(|c| {
            c.rel_type == rel_type
                && ((c.left.concept_id == a && c.right.concept_id == b) || (c.left.concept_id == b && c.right.concept_id == a))
        })
    }

    pub fn between(&self, a: &str, b: &str) -> impl Iterator<Item = &Correspondence> {
        let (a, b) = (a.to_string(), b.to_string());
        self.correspondences.iter().filter(move |c| c.touches(&a) && c.other(&a).is_some_and(|o| o.concept_id == b))
    }

    /// Same concept, or a synonym_of / equivalent_to correspondence.
    pub fn equivalent(&self, a: &str, b: &str) -> bool {
        a == b || self.between(a, b).any(|c| c.rel_type.is_equivalence())
    }

    /// Adds a correspondence. An existing (left, type, right) entry keeps
    /// the higher confidence; returns whether anything changed.
    pub fn insert(&mut self, c: Correspondence) -> bool {
        let key = c.key();
        match self.correspondences.binary_search_by(|x| x.key().cmp(&key)) {
            Ok(i) => {
                if c.confidence > self.correspondences[i].confidence {
                    self.correspondences[i].confidence = c.confidence;
                    true
                } else {
                    false
                }
            }
            Err(i) => {
                self.correspondences.insert(i, c);
                true
            }
        }
    }

    pub fn contains_key(&self, key: &CorrespondenceKey) -> bool {
        self.correspondences.binary_search_by(|x| x.key().cmp(key)).is_ok()
    }

    pub fn anchor_of(&self, concept_id: &str) -> Option<&str> {
        self.anchors.get(concept_id).map(|a| a.support_concept.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("alignment needs at least two SOPs, got {0}")]
    TooFewSops(usize),
    #[error("SOP `{0}` appears more than once")]
    DuplicateSop(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

fn aligned_kind(kind: ConceptKind) -> bool {
    kind != ConceptKind::Policy
}

fn max_label_similarity(a: &Concept, b: &Concept) -> f64 {
    a.labels
        .iter()
        .flat_map(|x| b.labels.iter().map(move |y| syntactic_similarity(x, y)))
        .fold(0.0, f64::max)
}

pub fn anchor_sops(sops: &[Sop], support: &Ontology, cfg: &SimilarityConfig) -> BTreeMap<String, Anchor> {
    sops.iter()
        .flat_map(|s| s.ontology.concepts())
        .filter(|c| aligned_kind(c.kind))
        .filter_map(|c| anchor_concept(support, c, cfg).map(|a| (c.id.clone(), a)))
        .collect()
}

/// Evaluates rules (a)-(c) for one cross-SOP pair.
pub fn align_pair(
    a: (&str, &Concept),
    b: (&str, &Concept),
    anchors: &BTreeMap<String, Anchor>,
    taxonomy: &Taxonomy,
    cfg: &SimilarityConfig,
) -> Result<Option<Correspondence>, OntologyError> {
    let (ca, cb) = (a.1, b.1);
    if ca.kind != cb.kind || !aligned_kind(ca.kind) {
        return Ok(None);
    }
    let ra = ConceptRef::new(a.0, &ca.id);
    let rb = ConceptRef::new(b.0, &cb.id);
    let same_label = ca.preferred_label() == cb.preferred_label();
    let found = match (anchors.get(&ca.id), anchors.get(&cb.id)) {
        (Some(x), Some(y)) if x.support_concept == y.support_concept => {
            let t = if same_label { RelationType::EquivalentTo } else { RelationType::SynonymOf };
            Some(Correspondence::new(ra, rb, t, x.score.min(y.score), Derivation::Anchored))
        }
        (Some(x), Some(y)) => {
            let sem = taxonomy.similarity(&x.support_concept, &y.support_concept)?;
            (same_label && sem <= cfg.homonym_semantic_ceiling).then(|| {
                Correspondence::new(ra, rb, RelationType::HomonymOf, x.score.min(y.score), Derivation::SupportRelation)
            })
        }
        _ => {
            let score = max_label_similarity(ca, cb);
            (score >= cfg.syn_threshold).then(|| {
                let t = if same_label { RelationType::EquivalentTo } else { RelationType::SynonymOf };
                Correspondence::new(ra, rb, t, score, Derivation::SyntacticCandidate).confirm(true)
            })
        }
    };
    Ok(found)
}

/// True when `c` has a concept of the same kind and preferred label in `other`.
fn has_twin(c: &Concept, other: &Ontology) -> bool {
    other.concepts().any(|o| o.kind == c.kind && o.preferred_label() == c.preferred_label())
}

pub fn align(sops: &[Sop], support: &Ontology, cfg: &SimilarityConfig) -> Result<CorrespondenceOntology, AlignError> {
    if sops.len() < 2 {
        return Err(AlignError::TooFewSops(sops.len()));
    }
    let mut seen = BTreeSet::new();
    for s in sops {
        if !seen.insert(s.id()) {
            return Err(AlignError::DuplicateSop(s.id().to_string()));
        }
    }
    let anchors = anchor_sops(sops, support, cfg);
    let taxonomy = Taxonomy::new(support);
    let mut out = CorrespondenceOntology { correspondences: Vec::new(), anchors };
    for (i, sa) in sops.iter().enumerate() {
        for sb in &sops[i + 1..] {
            for ca in sa.ontology.concepts() {
                for cb in sb.ontology.concepts() {
                    let Some(c) = align_pair((sa.id(), ca), (sb.id(), cb), &out.anchors, &taxonomy, cfg)? else {
                        continue;
                    };
                    // A concept whose exact twin sits in the other SOP is
                    // already spoken for; a synonym on top of that is noise.
                    if c.rel_type == RelationType::SynonymOf
                        && (has_twin(ca, &sb.ontology) || has_twin(cb, &sa.ontology))
                    {
                        continue;
                    }
                    out.insert(c);
                }
            }
        }
    }
    Ok(out)
}

/// Document form of a correspondence ontology: the ontology document
/// layout plus `derivation` and `needs_confirmation` on each relation, and
/// the anchors used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceDocument {
    pub id: String,
    pub concepts: Vec<Concept>,
    pub relations: Vec<CorrespondenceRelation>,
    pub anchors: Vec<Anchor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceRelation {
    pub source: String,
    pub target: String,
    #[serde(rename = "type")]
    pub rel_type: RelationType,
    pub provenance: Provenance,
    pub confidence: f64,
    pub derivation: Derivation,
    pub needs_confirmation: bool,
}

pub const CORRESPONDENCE_ONTOLOGY_ID: &str = "correspondences";

fn referenced_concepts(corr: &CorrespondenceOntology, sops: &[Sop]) -> Vec<Concept> {
    let ids: BTreeSet<&str> = corr
        .correspondences
        .iter()
        .flat_map(|c| [c.left.concept_id.as_str(), c.right.concept_id.as_str()])
        .collect();
    ids.into_iter()
        .filter_map(|id| sops.iter().find_map(|s| s.ontology.concept(id)).cloned())
        .collect()
}

pub fn correspondence_document(corr: &CorrespondenceOntology, sops: &[Sop]) -> CorrespondenceDocument {
    CorrespondenceDocument {
        id: CORRESPONDENCE_ONTOLOGY_ID.to_string(),
        concepts: referenced_concepts(corr, sops),
        relations: corr
            .correspondences
            .iter()
            .map(|c| CorrespondenceRelation {
                source: c.left.concept_id.clone(),
                target: c.right.concept_id.clone(),
                rel_type: c.rel_type,
                provenance: c.derivation.provenance(),
                confidence: c.confidence,
                derivation: c.derivation,
                needs_confirmation: c.needs_confirmation,
            })
            .collect(),
        anchors: corr.anchors.values().cloned().collect(),
    }
}

/// The correspondences as a plain ontology over the referenced SOP
/// concepts, used for the Turtle view.
pub fn correspondence_ontology(corr: &CorrespondenceOntology, sops: &[Sop]) -> Result<Ontology, OntologyError> {
    let mut o = Ontology::new(CORRESPONDENCE_ONTOLOGY_ID);
    for c in referenced_concepts(corr, sops) {
        o.insert_concept(c)?;
    }
    for c in &corr.correspondences {
        o.insert_relation(Relation::new(
            &c.left.concept_id,
            &c.right.concept_id,
            c.rel_type,
            c.derivation.provenance(),
            c.confidence,
        ))?;
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::rei;
    use crate::sop::build_sop;

    fn support() -> Ontology {
        let mut so = Ontology::new("so");
        so.insert_concept(Concept::new("so#Permit", &["permit", "allow", "grant"], ConceptKind::DeonticOperator))
            .unwrap();
        so.insert_concept(Concept::new("so#Prohibit", &["prohibit", "deny"], ConceptKind::DeonticOperator)).unwrap();
        so
    }

    fn sop(text: &str, domain: &str) -> Sop {
        build_sop(&rei::parse(text, domain).unwrap())
    }

    #[test]
    fn permit_allow_synonym() {
        let a = sop("has(P,permit(usePrintingService,[member(P, ITDepartment)])).", "A");
        let b = sop("has(Q, allow(usePrintingService,[member (Q, ITDepartment)])).", "B");
        let corr = align(&[a, b], &support(), &SimilarityConfig::default()).unwrap();
        let syn: Vec<&Correspondence> =
            corr.correspondences.iter().filter(|c| c.rel_type == RelationType::SynonymOf).collect();
        assert_eq!(syn.len(), 1);
        assert_eq!(syn[0].left, ConceptRef::new("sop-A", "sop-A#deontic-permit"));
        assert_eq!(syn[0].right, ConceptRef::new("sop-B", "sop-B#deontic-allow"));
        assert_eq!(syn[0].derivation, Derivation::Anchored);
        assert_eq!(syn[0].confidence, 1.0);
        // action, predicate, argument pair up as unanchored equal labels.
        let eq = corr.correspondences.iter().filter(|c| c.rel_type == RelationType::EquivalentTo).count();
        assert_eq!(eq, 3);
        assert_eq!(corr.correspondences.len(), 4);
    }

    #[test]
    fn self_alignment_has_only_equivalences() {
        let text = "has(P, permit(a, [m(P, x)])).\nhas(P, allow(b, [])).\n";
        let corr = align(&[sop(text, "A"), sop(text, "B")], &support(), &SimilarityConfig::default()).unwrap();
        assert!(corr.correspondences.iter().all(|c| c.rel_type == RelationType::EquivalentTo));
        // permit, allow, a, b, m, x
        assert_eq!(corr.correspondences.len(), 6);
    }

    #[test]
    fn needs_two_sops() {
        let a = sop("", "A");
        assert_eq!(align(std::slice::from_ref(&a), &support(), &SimilarityConfig::default()), Err(AlignError::TooFewSops(1)));
        assert_eq!(
            align(&[a.clone(), a], &support(), &SimilarityConfig::default()),
            Err(AlignError::DuplicateSop("sop-A".into()))
        );
    }

    #[test]
    fn input_order_irrelevant() {
        let a = sop("has(P, permit(print, [])).", "A");
        let b = sop("has(P, allow(print, [])).", "B");
        let c = sop("has(P, grant(printing, [])).", "C");
        let cfg = SimilarityConfig::default();
        let x = align(&[a.clone(), b.clone(), c.clone()], &support(), &cfg).unwrap();
        let y = align(&[c, a, b], &support(), &cfg).unwrap();
        assert_eq!(x, y);
    }
}
