//! Builders over the files in `fixtures/`.

use std::collections::BTreeMap;

use smsp_core::alignment::{ConceptRef, Correspondence, CorrespondenceOntology, Derivation};
use smsp_core::ontology::{load_ontology, Concept, ConceptKind, Ontology, Relation, RelationType};
use smsp_core::policy::SourceLang;
use smsp_core::session::{PolicyInput, SessionInputs};
use smsp_core::similarity::Anchor;
use smsp_core::sop::Sop;

use crate::fixture;

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

pub fn security_core() -> Ontology {
    load_ontology(&std::fs::read(fixture("security-core.json")).unwrap()).unwrap()
}

pub fn input(lang: SourceLang, domain: &str, rel: &str) -> PolicyInput {
    PolicyInput { lang, domain_id: domain.into(), text: read(rel) }
}

pub fn inputs(policies: Vec<PolicyInput>) -> SessionInputs {
    SessionInputs {
        support: security_core(),
        policies,
        similarity: Default::default(),
        enrichment: Default::default(),
        catalogue: Default::default(),
        deontic: Default::default(),
    }
}

/// The two printing-service clauses, domains A and B, both REI.
pub fn cloud_inputs() -> SessionInputs {
    inputs(vec![input(SourceLang::Rei, "A", "cloud/domain-a.rei"), input(SourceLang::Rei, "B", "cloud/domain-b.rei")])
}

/// Support concepts `Print ≡ Printing` and `Output ≡ Outputting`, plus a
/// synonym between SOP concepts anchored at Print and Output. Case 1 has
/// to lift the synonym before Case 2 can carry it to the equivalents.
pub fn two_stage() -> (Ontology, CorrespondenceOntology) {
    let mut so = Ontology::new("so");
    for (id, label) in [("so#Print", "print"), ("so#Output", "output"), ("so#Printing", "printing"), ("so#Outputting", "outputting")] {
        so.insert_concept(Concept::new(id, &[label], ConceptKind::Action)).unwrap();
    }
    so.insert_relation(Relation::authored("so#Print", "so#Printing", RelationType::EquivalentTo)).unwrap();
    so.insert_relation(Relation::authored("so#Output", "so#Outputting", RelationType::EquivalentTo)).unwrap();
    let anchors: BTreeMap<String, Anchor> = [("sop-A#action-print", "so#Print"), ("sop-B#action-output", "so#Output")]
        .iter()
        .map(|(c, s)| (c.to_string(), Anchor { sop_concept: c.to_string(), support_concept: s.to_string(), score: 1.0 }))
        .collect();
    let mut corr = CorrespondenceOntology { correspondences: Vec::new(), anchors };
    corr.insert(Correspondence::new(
        ConceptRef::new("sop-A", "sop-A#action-print"),
        ConceptRef::new("sop-B", "sop-B#action-output"),
        RelationType::SynonymOf,
        0.9,
        Derivation::Anchored,
    ));
    (so, corr)
}

/// Two single-concept SOPs whose `key` entities carry a second label that
/// anchors them to CryptoKey and DatabaseKey respectively.
pub fn key_sops() -> Vec<Sop> {
    [("A", "cryptoKey"), ("B", "databaseKey")]
        .iter()
        .map(|(d, extra)| {
            let mut o = Ontology::new(format!("sop-{d}"));
            o.insert_concept(Concept::new(format!("sop-{d}#entity-key"), &["key", extra], ConceptKind::Entity)).unwrap();
            Sop { domain_id: d.to_string(), lang: SourceLang::Rei, ontology: o, bindings: Vec::new() }
        })
        .collect()
}
