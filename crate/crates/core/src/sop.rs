//! Policy set to Security Ontology Policy (SOP).
//!
//! Every rule becomes a Policy-kind composite concept whose vocabulary
//! (deontic operator, action, target, condition predicates, named condition
//! arguments) hangs off it through part_of. Vocabulary concepts are shared
//! between rules of the same set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ontology::{Concept, ConceptKind, Ontology, Relation, RelationType};
use crate::policy::{PolicyRule, PolicySet, SourceLang};
use crate::similarity::tokens;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SopBinding {
    pub policy_id: String,
    pub policy_node: String,
    pub deontic: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Sorted and unique.
    #[serde(default)]
    pub predicates: Vec<String>,
    /// Sorted and unique.
    #[serde(default)]
    pub arguments: Vec<String>,
}

impl SopBinding {
    pub fn mentions(&self, concept: &str) -> bool {
        self.policy_node == concept
            || self.deontic == concept
            || self.action == concept
            || self.target.as_deref() == Some(concept)
            || self.predicates.iter().any(|p| p == concept)
            || self.arguments.iter().any(|a| a == concept)
    }

    /// Points every reference to `from` at `to`.
    pub fn redirect(&mut self, from: &str, to: &str) {
        for slot in [&mut self.policy_node, &mut self.deontic, &mut self.action] {
            if slot == from {
                *slot = to.to_string();
            }
        }
        if self.target.as_deref() == Some(from) {
            self.target = Some(to.to_string());
        }
        for list in [&mut self.predicates, &mut self.arguments] {
            for id in list.iter_mut() {
                if id == from {
                    *id = to.to_string();
                }
            }
            list.sort();
            list.dedup();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sop {
    pub domain_id: String,
    pub lang: SourceLang,
    pub ontology: Ontology,
    pub bindings: Vec<SopBinding>,
}

impl Sop {
    pub fn id(&self) -> &str {
        &self.ontology.id
    }

    pub fn binding(&self, policy_id: &str) -> Option<&SopBinding> {
        self.bindings.iter().find(|b| b.policy_id == policy_id)
    }
}

pub fn sop_id(domain_id: &str) -> String {
    format!("sop-{domain_id}")
}

fn slug(label: &str) -> String {
    let t = tokens(label);
    if t.is_empty() {
        "x".to_string()
    } else {
        t.join("-")
    }
}

fn vocabulary(rule: &PolicyRule) -> Vec<(ConceptKind, &str)> {
    let mut v = vec![
        (ConceptKind::Policy, rule.id.as_str()),
        (ConceptKind::DeonticOperator, rule.deontic_label.as_str()),
        (ConceptKind::Action, rule.action.as_str()),
    ];
    if let Some(t) = &rule.target {
        v.push((ConceptKind::Entity, t.name.as_str()));
    }
    for c in &rule.conditions {
        v.push((ConceptKind::Predicate, c.predicate.as_str()));
        for a in c.args.iter().filter(|a| !a.is_variable()) {
            v.push((ConceptKind::Entity, a.name.as_str()));
        }
    }
    v
}

pub fn build_sop(ps: &PolicySet) -> Sop {
    let sid = sop_id(&ps.domain_id);
    let rules: Vec<PolicyRule> = ps.normalized().rules;

    // Ids are assigned over the sorted vocabulary so rule order cannot
    // change them. Labels that slug to the same id get _2, _3, ...
    let vocab: BTreeSet<(ConceptKind, &str)> = rules.iter().flat_map(vocabulary).collect();
    let mut ids: BTreeMap<(ConceptKind, &str), String> = BTreeMap::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for &(kind, label) in &vocab {
        let base = format!("{sid}#{}-{}", kind.slug(), slug(label));
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { base } else { format!("{base}_{n}") };
        ids.insert((kind, label), id);
    }

    let mut ontology = Ontology::new(&sid);
    for (&(kind, label), id) in &ids {
        ontology
            .insert_concept(Concept::new(id.clone(), &[label], kind))
            .expect("generated concepts are valid");
    }

    let mut bindings = Vec::new();
    for rule in &rules {
        let id_of = |kind, label: &str| ids[&(kind, label)].clone();
        let policy_node = id_of(ConceptKind::Policy, &rule.id);
        let mut predicates = BTreeSet::new();
        let mut arguments = BTreeSet::new();
        for c in &rule.conditions {
            predicates.insert(id_of(ConceptKind::Predicate, &c.predicate));
            for a in c.args.iter().filter(|a| !a.is_variable()) {
                arguments.insert(id_of(ConceptKind::Entity, &a.name));
            }
        }
        let binding = SopBinding {
            policy_id: rule.id.clone(),
            policy_node: policy_node.clone(),
            deontic: id_of(ConceptKind::DeonticOperator, &rule.deontic_label),
            action: id_of(ConceptKind::Action, &rule.action),
            target: rule.target.as_ref().map(|t| id_of(ConceptKind::Entity, &t.name)),
            predicates: predicates.into_iter().collect(),
            arguments: arguments.into_iter().collect(),
        };
        let children: BTreeSet<&String> = [&binding.deontic, &binding.action]
            .into_iter()
            .chain(&binding.target)
            .chain(&binding.predicates)
            .chain(&binding.arguments)
            .collect();
        for child in children {
            ontology
                .insert_relation(Relation::authored(child.clone(), policy_node.clone(), RelationType::PartOf))
                .expect("part_of edges point at policy nodes only");
        }
        bindings.push(binding);
    }
    bindings.sort_by(|a, b| a.policy_id.cmp(&b.policy_id));

    Sop { domain_id: ps.domain_id.clone(), lang: ps.lang, ontology, bindings }
}

/// Part_of children of a composite concept, sorted.
pub fn children<'a>(o: &'a Ontology, parent: &str) -> Vec<&'a str> {
    o.sources_of(RelationType::PartOf, parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::rei;

    const CASE_A: &str = "has(P,permit(usePrintingService,[member(P, ITDepartment)])).";
    const CASE_B: &str = "has(Q, allow(usePrintingService,[member (Q, ITDepartment)])).";

    #[test]
    fn case_one_fragment() {
        let sop = build_sop(&rei::parse(CASE_A, "A").unwrap());
        let ids: Vec<&str> = sop.ontology.concepts().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "sop-A#action-use-printing-service",
                "sop-A#deontic-permit",
                "sop-A#entity-it-department",
                "sop-A#policy-r1",
                "sop-A#predicate-member",
            ]
        );
        assert_eq!(sop.ontology.relation_count(), 4);
        assert_eq!(children(&sop.ontology, "sop-A#policy-r1").len(), 4);
        let b = &sop.bindings[0];
        assert_eq!(b.deontic, "sop-A#deontic-permit");
        assert_eq!(b.target, None);
        assert_eq!(b.arguments, ["sop-A#entity-it-department"]);
    }

    #[test]
    fn case_two_same_shape() {
        let a = build_sop(&rei::parse(CASE_A, "A").unwrap());
        let b = build_sop(&rei::parse(CASE_B, "A").unwrap());
        let labels = |s: &Sop| s.ontology.concepts().map(|c| c.labels[0].clone()).collect::<Vec<_>>();
        assert_eq!(labels(&b), ["usePrintingService", "allow", "ITDepartment", "r1", "member"]);
        assert_eq!(a.ontology.relation_count(), b.ontology.relation_count());
    }

    #[test]
    fn empty_set() {
        let sop = build_sop(&rei::parse("", "A").unwrap());
        assert_eq!(sop.ontology.id, "sop-A");
        assert_eq!(sop.ontology.concept_count(), 0);
        assert!(sop.bindings.is_empty());
    }

    #[test]
    fn shared_vocabulary_and_slug_collisions() {
        let src = "has(P, permit(usePrinting, [])).\nhas(P, permit(use_printing, [member(P, hq)])).\nhas(P, deny(usePrinting, [member(P, hq)])).\n";
        let sop = build_sop(&rei::parse(src, "D").unwrap());
        assert!(sop.ontology.contains("sop-D#action-use-printing"));
        assert!(sop.ontology.contains("sop-D#action-use-printing_2"));
        assert_eq!(sop.ontology.concept("sop-D#action-use-printing_2").unwrap().labels, ["use_printing"]);
        // permit, deny, two actions, member, hq, three policies.
        assert_eq!(sop.ontology.concept_count(), 9);
    }

    #[test]
    fn rule_order_does_not_matter() {
        let x = "has(P, permit(a, [c(P, k)])).\nhas(P, deny(b, [c(P, j)])).\n";
        let y = "has(P, deny(b, [c(P, j)])).\nhas(P, permit(a, [c(P, k)])).\n";
        let sx = build_sop(&rei::parse(x, "D").unwrap());
        let sy = build_sop(&rei::parse(y, "D").unwrap());
        // Rule ids are positional, so only the vocabulary is compared.
        let vocab = |s: &Sop| {
            s.ontology.concepts().filter(|c| c.kind != ConceptKind::Policy).cloned().collect::<Vec<_>>()
        };
        assert_eq!(vocab(&sx), vocab(&sy));
    }
}
