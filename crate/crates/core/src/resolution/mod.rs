//! Resolution catalogue, proposals and action application.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignError, ConceptRef};
use crate::conflicts::{ConflictKind, ConflictPayload, ConflictRecord, ConflictStatus, PolicyRef};
use crate::ontology::{ConceptKind, OntologyError};
use crate::policy::{is_variable_name, map_deontic, Modality, PolicyRule};
use crate::session::SessionState;
use crate::sop::Sop;

const DEFAULT_CATALOGUE: &str = include_str!("default_catalogue.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionTemplate {
    RenameRightToLeft,
    RenameLeftToRight,
    RenameBothToAnchor,
    /// The left concept survives.
    Merge,
    RenameLeftWithDomainSuffix,
    RenameRightWithDomainSuffix,
    DeleteLeft,
    DeleteRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionRule {
    pub id: String,
    pub trigger: ConflictKind,
    pub action_templates: Vec<ActionTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalogue {
    pub rules: Vec<ResolutionRule>,
}

impl Default for Catalogue {
    fn default() -> Self {
        Catalogue::from_json(DEFAULT_CATALOGUE.as_bytes()).expect("embedded catalogue is valid")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogueError {
    #[error("malformed catalogue: {0}")]
    Malformed(String),
    #[error("catalogue rule id `{0}` is repeated")]
    DuplicateId(String),
    #[error("catalogue has no rule for {}", .0.as_str())]
    MissingTrigger(ConflictKind),
}

impl Catalogue {
    pub fn from_json(bytes: &[u8]) -> Result<Self, CatalogueError> {
        let c: Catalogue = serde_json::from_slice(bytes).map_err(|e| CatalogueError::Malformed(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CatalogueError> {
        let mut ids = BTreeSet::new();
        for r in &self.rules {
            if !ids.insert(r.id.as_str()) {
                return Err(CatalogueError::DuplicateId(r.id.clone()));
            }
        }
        for kind in [ConflictKind::NamingSynonym, ConflictKind::NamingHomonym] {
            if self.rule_for(kind).is_none() {
                return Err(CatalogueError::MissingTrigger(kind));
            }
        }
        Ok(())
    }

    pub fn rule_for(&self, kind: ConflictKind) -> Option<&ResolutionRule> {
        self.rules.iter().find(|r| r.trigger == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    Expert,
    AutoDefault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ActionOp {
    Rename { targets: Vec<ConceptRef>, new_label: String },
    Merge { survivor: ConceptRef, absorbed: ConceptRef },
    Delete { concept: ConceptRef },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionAction {
    pub conflict_id: String,
    pub decided_by: DecidedBy,
    #[serde(flatten)]
    pub op: ActionOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposals {
    pub actions: Vec<ResolutionAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

pub const MODALITY_ADVISORY: &str = "No catalogue rule covers opposed modalities. Review both policies and edit them outside the workbench.";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolutionError {
    #[error("unknown conflict `{0}`")]
    UnknownConflict(String),
    #[error("conflict `{0}` is already resolved")]
    AlreadyResolved(String),
    #[error("the catalogue has no rule for {}", .0.as_str())]
    NoRule(ConflictKind),
    #[error("concept `{}` does not exist in `{}`", .0.concept_id, .0.sop_id)]
    DanglingConcept(ConceptRef),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("label `{label}` is rejected: {reason}")]
    InvalidLabel { label: String, reason: String },
    #[error("action would raise the number of open {} conflicts from {before} to {after}", .kind.as_str())]
    MoreConflicts { kind: ConflictKind, before: usize, after: usize },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Align(#[from] AlignError),
}

fn concept_label(sops: &[Sop], r: &ConceptRef) -> Option<String> {
    sops.iter()
        .find(|s| s.id() == r.sop_id)?
        .ontology
        .concept(&r.concept_id)
        .map(|c| c.preferred_label().to_string())
}

fn domain_of<'a>(sops: &'a [Sop], r: &ConceptRef) -> Option<&'a str> {
    sops.iter().find(|s| s.id() == r.sop_id).map(|s| s.domain_id.as_str())
}

/// Candidate actions for an open conflict, in catalogue order. The first
/// one is the automatic default.
pub fn propose_actions(
    conflict: &ConflictRecord,
    catalogue: &Catalogue,
    state: &SessionState,
) -> Result<Proposals, ResolutionError> {
    if conflict.kind == ConflictKind::ModalityOpposition {
        return Ok(Proposals { actions: Vec::new(), advisory: Some(MODALITY_ADVISORY.to_string()) });
    }
    let rule = catalogue.rule_for(conflict.kind).ok_or(ResolutionError::NoRule(conflict.kind))?;
    let Some(corr) = conflict.correspondences.first() else {
        return Ok(Proposals { actions: Vec::new(), advisory: None });
    };
    let (left, right) = (&corr.left, &corr.right);
    let sops = &state.sops;
    let (Some(ll), Some(rl)) = (concept_label(sops, left), concept_label(sops, right)) else {
        return Ok(Proposals { actions: Vec::new(), advisory: None });
    };
    let rename = |targets: Vec<ConceptRef>, new_label: String| ActionOp::Rename { targets, new_label };
    let mut ops = Vec::new();
    for t in &rule.action_templates {
        let op = match t {
            ActionTemplate::RenameRightToLeft => Some(rename(vec![right.clone()], ll.clone())),
            ActionTemplate::RenameLeftToRight => Some(rename(vec![left.clone()], rl.clone())),
            ActionTemplate::RenameBothToAnchor => match &conflict.payload {
                ConflictPayload::Synonym { shared_anchor: Some(a) } => state
                    .support()
                    .concept(a)
                    .map(|c| rename(vec![left.clone(), right.clone()], c.preferred_label().to_string())),
                _ => None,
            },
            ActionTemplate::Merge => Some(ActionOp::Merge { survivor: left.clone(), absorbed: right.clone() }),
            ActionTemplate::RenameLeftWithDomainSuffix => {
                domain_of(sops, left).map(|d| rename(vec![left.clone()], format!("{ll}_{d}")))
            }
            ActionTemplate::RenameRightWithDomainSuffix => {
                domain_of(sops, right).map(|d| rename(vec![right.clone()], format!("{rl}_{d}")))
            }
            ActionTemplate::DeleteLeft => Some(ActionOp::Delete { concept: left.clone() }),
            ActionTemplate::DeleteRight => Some(ActionOp::Delete { concept: right.clone() }),
        };
        if let Some(op) = op {
            if !ops.contains(&op) {
                ops.push(op);
            }
        }
    }
    let actions = ops
        .into_iter()
        .enumerate()
        .map(|(i, op)| ResolutionAction {
            conflict_id: conflict.id.clone(),
            decided_by: if i == 0 { DecidedBy::AutoDefault } else { DecidedBy::Expert },
            op,
        })
        .collect();
    Ok(Proposals { actions, advisory: None })
}

/// What an applied action changed, for the caller to display.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionEffects {
    pub renamed: Vec<Renamed>,
    pub merged: Vec<Merged>,
    pub deleted: Vec<ConceptRef>,
    pub needs_review: Vec<PolicyRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Renamed {
    pub concept: ConceptRef,
    pub old_label: String,
    pub new_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merged {
    pub survivor: ConceptRef,
    pub absorbed: ConceptRef,
    /// Concept that now stands for the absorbed one in its own SOP.
    pub replacement: String,
}

/// Labels end up in policy text, so they must lex as plain identifiers
/// and must not read as variables.
fn check_label(label: &str) -> Result<(), ResolutionError> {
    let invalid = |reason: &str| ResolutionError::InvalidLabel { label: label.to_string(), reason: reason.to_string() };
    let mut chars = label.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return Err(invalid("labels must start with a letter or `_`")),
    }
    if !chars.all(|c| c.is_alphanumeric() || c == '_') {
        return Err(invalid("labels may only contain letters, digits and `_`"));
    }
    if is_variable_name(label) {
        return Err(invalid("a single capital letter (with optional digits) reads as a variable"));
    }
    Ok(())
}

fn sop_index(state: &SessionState, r: &ConceptRef) -> Result<usize, ResolutionError> {
    state
        .sops
        .iter()
        .position(|s| s.id() == r.sop_id && s.ontology.contains(&r.concept_id))
        .ok_or_else(|| ResolutionError::DanglingConcept(r.clone()))
}

/// Rewrites the policy text bound to `concept` from any of `old` to `new`.
fn rewrite_rules(state: &mut SessionState, si: usize, concept: &str, kind: ConceptKind, old: &[String], new: &str) {
    let sop = &state.sops[si];
    let bound: Vec<String> =
        sop.bindings.iter().filter(|b| b.mentions(concept)).map(|b| b.policy_id.clone()).collect();
    let table = state.inputs.deontic.clone();
    let Some(ps) = state.policy_sets.iter_mut().find(|p| p.domain_id == sop.domain_id) else { return };
    let is_old = |s: &str| old.iter().any(|o| o == s);
    for rule in ps.rules.iter_mut().filter(|r| bound.contains(&r.id)) {
        rewrite_rule(rule, kind, &is_old, new, &table);
    }
}

fn rewrite_rule(
    rule: &mut PolicyRule,
    kind: ConceptKind,
    is_old: &dyn Fn(&str) -> bool,
    new: &str,
    table: &crate::policy::DeonticTable,
) {
    match kind {
        ConceptKind::DeonticOperator if is_old(&rule.deontic_label) => {
            rule.deontic_label = new.to_string();
            let m = map_deontic(new, table);
            if m != Modality::Unknown {
                rule.modality = m;
            }
        }
        ConceptKind::Action if is_old(&rule.action) => rule.action = new.to_string(),
        ConceptKind::Entity => {
            if let Some(t) = rule.target.as_mut().filter(|t| !t.is_variable() && is_old(&t.name)) {
                t.name = new.to_string();
            }
            for a in rule.conditions.iter_mut().flat_map(|c| c.args.iter_mut()) {
                if !a.is_variable() && is_old(&a.name) {
                    a.name = new.to_string();
                }
            }
        }
        ConceptKind::Predicate => {
            for c in rule.conditions.iter_mut().filter(|c| is_old(&c.predicate)) {
                c.predicate = new.to_string();
            }
        }
        _ => {}
    }
}

fn relabel(state: &mut SessionState, r: &ConceptRef, labels: Vec<String>) -> Result<Renamed, ResolutionError> {
    let si = sop_index(state, r)?;
    let concept = state.sops[si].ontology.concept(&r.concept_id).expect("checked").clone();
    let new = labels[0].clone();
    if concept.kind == ConceptKind::Policy {
        return Err(ResolutionError::InvalidAction("policy nodes are named after their rules and cannot be renamed".into()));
    }
    if let Some(clash) = state.sops[si]
        .ontology
        .concepts()
        .find(|c| c.id != concept.id && c.kind == concept.kind && c.labels.contains(&new))
    {
        let anchors = (state.correspondences.anchor_of(&concept.id), state.correspondences.anchor_of(&clash.id));
        let reason = match anchors {
            (Some(a), Some(b)) if a != b => {
                format!("`{}` already carries it in {} and is anchored to `{b}`, not `{a}`; this would create a homonym", clash.id, r.sop_id)
            }
            _ => format!("`{}` already carries it in {}; merge the two concepts instead", clash.id, r.sop_id),
        };
        return Err(ResolutionError::InvalidLabel { label: new, reason });
    }
    state.sops[si].ontology.set_labels(&concept.id, labels)?;
    rewrite_rules(state, si, &concept.id, concept.kind, &concept.labels, &new);
    Ok(Renamed { concept: r.clone(), old_label: concept.preferred_label().to_string(), new_label: new })
}

fn rename(state: &mut SessionState, r: &ConceptRef, new_label: &str) -> Result<Option<Renamed>, ResolutionError> {
    let si = sop_index(state, r)?;
    let concept = state.sops[si].ontology.concept(&r.concept_id).expect("checked");
    if concept.preferred_label() == new_label {
        return Ok(None);
    }
    let mut labels = vec![new_label.to_string()];
    labels.extend(concept.labels[1..].iter().filter(|l| *l != new_label).cloned());
    relabel(state, r, labels).map(Some)
}

fn merge(state: &mut SessionState, survivor: &ConceptRef, absorbed: &ConceptRef, fx: &mut ActionEffects) -> Result<(), ResolutionError> {
    let ss = sop_index(state, survivor)?;
    let si = sop_index(state, absorbed)?;
    if survivor == absorbed {
        return Err(ResolutionError::InvalidAction("a concept cannot absorb itself".into()));
    }
    let s = state.sops[ss].ontology.concept(&survivor.concept_id).expect("checked").clone();
    let a = state.sops[si].ontology.concept(&absorbed.concept_id).expect("checked").clone();
    if s.kind != a.kind {
        return Err(ResolutionError::InvalidAction(format!("cannot merge a {:?} into a {:?}", a.kind, s.kind)));
    }
    check_label(s.preferred_label())?;
    let local = state.sops[si]
        .ontology
        .concepts()
        .find(|c| c.id != a.id && c.kind == a.kind && c.preferred_label() == s.preferred_label())
        .map(|c| c.id.clone());
    let replacement = match local {
        Some(target) if ss != si || target == s.id => {
            let sop = &mut state.sops[si];
            sop.ontology.redirect_concept(&a.id, &target)?;
            for b in &mut sop.bindings {
                b.redirect(&a.id, &target);
            }
            rewrite_rules(state, si, &target, a.kind, &a.labels, s.preferred_label());
            fx.deleted.push(absorbed.clone());
            target
        }
        _ => {
            // No local twin: the absorbed concept takes the survivor's names.
            let mut labels = s.labels.clone();
            labels.extend(a.labels.iter().filter(|l| !s.labels.contains(l)).cloned());
            fx.renamed.push(relabel(state, absorbed, labels)?);
            a.id.clone()
        }
    };
    fx.merged.push(Merged { survivor: survivor.clone(), absorbed: absorbed.clone(), replacement });
    Ok(())
}

fn delete(state: &mut SessionState, r: &ConceptRef, fx: &mut ActionEffects) -> Result<(), ResolutionError> {
    let si = sop_index(state, r)?;
    let sop = &mut state.sops[si];
    sop.ontology.remove_concept(&r.concept_id);
    let mut review = Vec::new();
    sop.bindings.retain_mut(|b| {
        if !b.mentions(&r.concept_id) {
            return true;
        }
        review.push(PolicyRef { domain_id: sop.domain_id.clone(), policy_id: b.policy_id.clone() });
        b.predicates.retain(|p| p != &r.concept_id);
        b.arguments.retain(|p| p != &r.concept_id);
        if b.target.as_deref() == Some(r.concept_id.as_str()) {
            b.target = None;
        }
        // Without its node, operator or action the rule has no image left.
        ![&b.policy_node, &b.deontic, &b.action].contains(&&r.concept_id)
    });
    fx.deleted.push(r.clone());
    for p in review {
        state.needs_review.insert(p.clone());
        fx.needs_review.push(p);
    }
    Ok(())
}

fn open_of(conflicts: &[ConflictRecord], kind: ConflictKind) -> usize {
    conflicts.iter().filter(|c| c.kind == kind && c.status == ConflictStatus::Open).count()
}

/// Applies `action` to a copy of `state` and re-evaluates conflicts.
pub fn apply_action(
    state: &SessionState,
    action: &ResolutionAction,
) -> Result<(SessionState, ActionEffects), ResolutionError> {
    let conflict = state
        .conflicts
        .iter()
        .find(|c| c.id == action.conflict_id)
        .ok_or_else(|| ResolutionError::UnknownConflict(action.conflict_id.clone()))?;
    if conflict.status == ConflictStatus::Resolved {
        return Err(ResolutionError::AlreadyResolved(conflict.id.clone()));
    }
    let kind = conflict.kind;
    let mut next = state.clone();
    let mut fx = ActionEffects::default();
    match &action.op {
        ActionOp::Rename { targets, new_label } => {
            if targets.is_empty() {
                return Err(ResolutionError::InvalidAction("rename needs at least one target".into()));
            }
            check_label(new_label)?;
            for t in targets {
                fx.renamed.extend(rename(&mut next, t, new_label)?);
            }
        }
        ActionOp::Merge { survivor, absorbed } => merge(&mut next, survivor, absorbed, &mut fx)?,
        ActionOp::Delete { concept } => delete(&mut next, concept, &mut fx)?,
    }
    next.reevaluate()?;
    let (before, after) = (open_of(&state.conflicts, kind), open_of(&next.conflicts, kind));
    if after > before {
        return Err(ResolutionError::MoreConflicts { kind, before, after });
    }
    Ok((next, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalogue_loads() {
        let c = Catalogue::default();
        assert_eq!(c.rule_for(ConflictKind::NamingSynonym).unwrap().id, "rule1");
        assert_eq!(c.rule_for(ConflictKind::NamingHomonym).unwrap().action_templates.len(), 2);
        assert!(c.rule_for(ConflictKind::ModalityOpposition).is_none());
    }

    #[test]
    fn catalogue_validation() {
        let missing = br#"{"rules":[{"id":"rule1","trigger":"naming_synonym","action_templates":["merge"]}]}"#;
        assert_eq!(Catalogue::from_json(missing), Err(CatalogueError::MissingTrigger(ConflictKind::NamingHomonym)));
        let dup = br#"{"rules":[{"id":"r","trigger":"naming_synonym","action_templates":[]},{"id":"r","trigger":"naming_homonym","action_templates":[]}]}"#;
        assert_eq!(Catalogue::from_json(dup), Err(CatalogueError::DuplicateId("r".into())));
        assert!(matches!(Catalogue::from_json(b"{}"), Err(CatalogueError::Malformed(_))));
    }

    #[test]
    fn labels() {
        assert!(check_label("permit").is_ok());
        assert!(check_label("key_A").is_ok());
        assert!(check_label("ITDepartment").is_ok());
        assert!(check_label("").is_err());
        assert!(check_label("two words").is_err());
        assert!(check_label("auth+").is_err());
        assert!(check_label("Q").is_err());
        assert!(check_label("1st").is_err());
    }

    #[test]
    fn action_json_shape() {
        let a = ResolutionAction {
            conflict_id: "c-1".into(),
            decided_by: DecidedBy::AutoDefault,
            op: ActionOp::Rename { targets: vec![ConceptRef::new("sop-B", "sop-B#deontic-allow")], new_label: "permit".into() },
        };
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["op"], "rename");
        assert_eq!(v["new_label"], "permit");
        assert_eq!(serde_json::from_value::<ResolutionAction>(v).unwrap(), a);
    }
}
