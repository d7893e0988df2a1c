//! Naming and modality conflicts over a correspondence ontology.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{Correspondence, CorrespondenceOntology};
use crate::ontology::RelationType;
use crate::policy::{Modality, PolicySet, SourceLang};
use crate::sop::{Sop, SopBinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    NamingSynonym,
    NamingHomonym,
    ModalityOpposition,
}

impl ConflictKind {
    pub const ALL: [ConflictKind; 3] =
        [ConflictKind::NamingSynonym, ConflictKind::NamingHomonym, ConflictKind::ModalityOpposition];

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictKind::NamingSynonym => "naming_synonym",
            ConflictKind::NamingHomonym => "naming_homonym",
            ConflictKind::ModalityOpposition => "modality_opposition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictForm {
    /// Both policy sets use the same language.
    Vertical,
    Horizontal,
}

impl ConflictForm {
    pub fn of(a: SourceLang, b: SourceLang) -> Self {
        if a == b {
            ConflictForm::Vertical
        } else {
            ConflictForm::Horizontal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictStatus {
    Open,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolicyRef {
    pub domain_id: String,
    pub policy_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConflictPayload {
    Synonym { shared_anchor: Option<String> },
    Homonym { left_anchor: Option<String>, right_anchor: Option<String> },
    Modality { left: Modality, right: Modality },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictRecord {
    pub id: String,
    pub kind: ConflictKind,
    pub form: ConflictForm,
    pub correspondences: Vec<Correspondence>,
    pub policies: Vec<PolicyRef>,
    pub status: ConflictStatus,
    pub payload: ConflictPayload,
    /// Raised from a syntactic or derived match; never resolved automatically.
    pub needs_confirmation: bool,
}

fn conflict_id(kind: ConflictKind, parts: &[&str]) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_str());
    for p in parts {
        h.update([0u8]);
        h.update(p);
    }
    format!("c-{}", &hex::encode(h.finalize())[..12])
}

fn sop_by_id<'a>(sops: &'a [Sop], id: &str) -> Option<&'a Sop> {
    sops.iter().find(|s| s.id() == id)
}

fn policies_mentioning(sop: &Sop, concept: &str) -> Vec<PolicyRef> {
    sop.bindings
        .iter()
        .filter(|b| b.mentions(concept))
        .map(|b| PolicyRef { domain_id: sop.domain_id.clone(), policy_id: b.policy_id.clone() })
        .collect()
}

fn label<'a>(sops: &'a [Sop], sop_id: &str, concept: &str) -> Option<&'a str> {
    sop_by_id(sops, sop_id)?.ontology.concept(concept).map(|c| c.preferred_label())
}

/// One NamingSynonym per synonym_of correspondence with differing labels,
/// one NamingHomonym per homonym_of correspondence.
pub fn classify_conflicts(corr: &CorrespondenceOntology, sops: &[Sop]) -> Vec<ConflictRecord> {
    let mut out = Vec::new();
    for c in &corr.correspondences {
        let (Some(ls), Some(rs)) = (sop_by_id(sops, &c.left.sop_id), sop_by_id(sops, &c.right.sop_id)) else {
            continue;
        };
        let la = corr.anchor_of(&c.left.concept_id).map(String::from);
        let ra = corr.anchor_of(&c.right.concept_id).map(String::from);
        let (kind, payload) = match c.rel_type {
            RelationType::SynonymOf => {
                if label(sops, &c.left.sop_id, &c.left.concept_id) == label(sops, &c.right.sop_id, &c.right.concept_id) {
                    continue;
                }
                let shared = if la == ra { la } else { None };
                (ConflictKind::NamingSynonym, ConflictPayload::Synonym { shared_anchor: shared })
            }
            RelationType::HomonymOf => {
                (ConflictKind::NamingHomonym, ConflictPayload::Homonym { left_anchor: la, right_anchor: ra })
            }
            _ => continue,
        };
        let mut policies = policies_mentioning(ls, &c.left.concept_id);
        policies.extend(policies_mentioning(rs, &c.right.concept_id));
        policies.sort();
        out.push(ConflictRecord {
            id: conflict_id(kind, &[&c.left.concept_id, &c.right.concept_id]),
            kind,
            form: ConflictForm::of(ls.lang, rs.lang),
            correspondences: vec![c.clone()],
            policies,
            status: ConflictStatus::Open,
            payload,
            needs_confirmation: c.needs_confirmation,
        });
    }
    out
}

fn covered(xs: &[String], ys: &[String], corr: &CorrespondenceOntology) -> bool {
    xs.iter().all(|x| ys.iter().any(|y| corr.equivalent(x, y)))
}

fn equivalence_between<'a>(corr: &'a CorrespondenceOntology, a: &str, b: &str) -> Option<&'a Correspondence> {
    corr.between(a, b).find(|c| c.rel_type.is_equivalence())
}

/// Opposed modalities on the same action (and target, and condition
/// predicates) across two domains.
pub fn detect_modality_conflicts(
    policy_sets: &[PolicySet],
    sops: &[Sop],
    corr: &CorrespondenceOntology,
) -> Vec<ConflictRecord> {
    let mut out = Vec::new();
    for (i, pa) in policy_sets.iter().enumerate() {
        for pb in &policy_sets[i + 1..] {
            let (Some(sa), Some(sb)) = (sops.iter().find(|s| s.domain_id == pa.domain_id), sops.iter().find(|s| s.domain_id == pb.domain_id)) else {
                continue;
            };
            for ra in &pa.rules {
                for rb in &pb.rules {
                    if !ra.modality.opposes(rb.modality) {
                        continue;
                    }
                    let (Some(ba), Some(bb)) = (sa.binding(&ra.id), sb.binding(&rb.id)) else {
                        continue;
                    };
                    if let Some(record) = modality_record(ba, bb, sa, sb, corr, (ra.modality, rb.modality)) {
                        out.push(record);
                    }
                }
            }
        }
    }
    out
}

fn modality_record(
    ba: &SopBinding,
    bb: &SopBinding,
    sa: &Sop,
    sb: &Sop,
    corr: &CorrespondenceOntology,
    modalities: (Modality, Modality),
) -> Option<ConflictRecord> {
    let mut evidence = vec![equivalence_between(corr, &ba.action, &bb.action)?.clone()];
    match (&ba.target, &bb.target) {
        (None, None) => {}
        (Some(ta), Some(tb)) => evidence.push(equivalence_between(corr, ta, tb)?.clone()),
        _ => return None,
    }
    if !covered(&ba.predicates, &bb.predicates, corr) || !covered(&bb.predicates, &ba.predicates, corr) {
        return None;
    }
    let left = PolicyRef { domain_id: sa.domain_id.clone(), policy_id: ba.policy_id.clone() };
    let right = PolicyRef { domain_id: sb.domain_id.clone(), policy_id: bb.policy_id.clone() };
    let (left, right, lm, rm) =
        if left <= right { (left, right, modalities.0, modalities.1) } else { (right, left, modalities.1, modalities.0) };
    Some(ConflictRecord {
        id: conflict_id(
            ConflictKind::ModalityOpposition,
            &[&left.domain_id, &left.policy_id, &right.domain_id, &right.policy_id],
        ),
        kind: ConflictKind::ModalityOpposition,
        form: ConflictForm::of(sa.lang, sb.lang),
        correspondences: evidence,
        policies: vec![left, right],
        status: ConflictStatus::Open,
        payload: ConflictPayload::Modality { left: lm, right: rm },
        needs_confirmation: false,
    })
}

/// All conflicts in a stable order: by kind, then id.
pub fn evaluate_conflicts(
    policy_sets: &[PolicySet],
    sops: &[Sop],
    corr: &CorrespondenceOntology,
) -> Vec<ConflictRecord> {
    let mut all = classify_conflicts(corr, sops);
    all.extend(detect_modality_conflicts(policy_sets, sops, corr));
    all.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
    let mut seen = BTreeSet::new();
    all.retain(|c| seen.insert(c.id.clone()));
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::align;
    use crate::ontology::{Concept, ConceptKind, Ontology};
    use crate::policy::{ponder, rei};
    use crate::similarity::SimilarityConfig;
    use crate::sop::build_sop;

    fn support() -> Ontology {
        let mut so = Ontology::new("so");
        so.insert_concept(Concept::new("so#Permit", &["permit", "allow", "grant", "auth+"], ConceptKind::DeonticOperator))
            .unwrap();
        so.insert_concept(Concept::new("so#Prohibit", &["prohibit", "deny", "auth-"], ConceptKind::DeonticOperator))
            .unwrap();
        so
    }

    fn run(sets: &[PolicySet]) -> Vec<ConflictRecord> {
        let sops: Vec<Sop> = sets.iter().map(build_sop).collect();
        let corr = align(&sops, &support(), &SimilarityConfig::default()).unwrap();
        evaluate_conflicts(sets, &sops, &corr)
    }

    const A: &str = "has(P,permit(usePrintingService,[member(P, ITDepartment)])).";

    #[test]
    fn vertical_synonym() {
        let b = rei::parse("has(Q, allow(usePrintingService,[member (Q, ITDepartment)])).", "B").unwrap();
        let conflicts = run(&[rei::parse(A, "A").unwrap(), b]);
        assert_eq!(conflicts.len(), 1);
        let c = &conflicts[0];
        assert_eq!(c.kind, ConflictKind::NamingSynonym);
        assert_eq!(c.form, ConflictForm::Vertical);
        assert_eq!(c.payload, ConflictPayload::Synonym { shared_anchor: Some("so#Permit".into()) });
        assert_eq!(c.policies.len(), 2);
        assert!(c.id.starts_with("c-") && c.id.len() == 14);
    }

    #[test]
    fn horizontal_synonym() {
        let b = ponder::parse("inst auth+ r1 { subject Q; action usePrintingService; when member(Q, ITDepartment); }", "B")
            .unwrap();
        let conflicts = run(&[rei::parse(A, "A").unwrap(), b]);
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].form, ConflictForm::Horizontal);
    }

    #[test]
    fn modality_opposition() {
        let b = rei::parse("has(Q, prohibit(usePrintingService,[member(Q, ITDepartment)])).", "B").unwrap();
        let conflicts = run(&[rei::parse(A, "A").unwrap(), b]);
        let kinds: Vec<ConflictKind> = conflicts.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [ConflictKind::ModalityOpposition]);
        assert_eq!(conflicts[0].payload, ConflictPayload::Modality { left: Modality::AuthPos, right: Modality::AuthNeg });
    }

    #[test]
    fn different_conditions_no_opposition() {
        let b = rei::parse("has(Q, prohibit(usePrintingService,[guest(Q)])).", "B").unwrap();
        assert!(run(&[rei::parse(A, "A").unwrap(), b]).is_empty());
    }

    #[test]
    fn empty_policy_set() {
        assert!(run(&[rei::parse(A, "A").unwrap(), rei::parse("", "B").unwrap()]).is_empty());
    }
}
