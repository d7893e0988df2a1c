//! A review session: inputs, the derived pipeline state, and the decision
//! log. Every mutation goes through [`SessionState::decide`], so replaying
//! the log over the inputs rebuilds the same state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{align, correspondence_document, correspondence_ontology, AlignError, CorrespondenceOntology};
use crate::conflicts::{evaluate_conflicts, ConflictKind, ConflictRecord, ConflictStatus, PolicyRef};
use crate::enrichment::{enrich_all, EnrichmentConfig, InjectionReport};
use crate::ontology::{export_turtle, save_ontology, Ontology, OntologyError};
use crate::policy::{self, DeonticTable, ParseError, PolicySet, SourceLang};
use crate::resolution::{
    apply_action, propose_actions, ActionEffects, Catalogue, Proposals, ResolutionAction, ResolutionError,
};
use crate::similarity::{ConfigError, SimilarityConfig};
use crate::sop::{build_sop, Sop};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyInput {
    pub lang: SourceLang,
    pub domain_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInputs {
    pub support: Ontology,
    pub policies: Vec<PolicyInput>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub enrichment: EnrichmentConfig,
    #[serde(default)]
    pub catalogue: Catalogue,
    #[serde(default)]
    pub deontic: DeonticTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub action: ResolutionAction,
    /// Enrichment was re-run after the action.
    #[serde(default)]
    pub enrich: bool,
    /// Wall clock at decision time; never part of exports.
    pub timestamp_ms: u64,
    pub status: ConflictStatus,
    pub open_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub inputs: SessionInputs,
    pub policy_sets: Vec<PolicySet>,
    pub sops: Vec<Sop>,
    pub correspondences: CorrespondenceOntology,
    /// Sorted by (kind, id); resolved records stay in the list.
    pub conflicts: Vec<ConflictRecord>,
    pub decision_log: Vec<DecisionEntry>,
    pub enriched_so: Ontology,
    pub injections: InjectionReport,
    pub enrichment_iterations: usize,
    pub needs_review: BTreeSet<PolicyRef>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("{domain_id}: {error}")]
    Parse { domain_id: String, error: ParseError },
    #[error("at least two policy inputs are required, got {0}")]
    TooFewPolicies(usize),
    #[error("domain `{0}` is given more than once")]
    DuplicateDomain(String),
    #[error("domain id `{0}` may only use letters, digits, `_`, `-` and `.`")]
    InvalidDomain(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid enrichment config: damping must lie in [0, 1]")]
    Damping,
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("replaying decision {index}: {error}")]
    Replay { index: usize, error: ResolutionError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    /// Open conflicts per kind; every kind is listed.
    pub open: BTreeMap<ConflictKind, usize>,
    pub open_total: usize,
    pub resolved_total: usize,
    pub decisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportWhat {
    EnrichedOntology,
    Correspondences,
    HarmonizedPolicies,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Canonical,
    Turtle,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExportError {
    #[error("turtle is only available for ontology exports")]
    TurtleUnsupported,
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// Harmonized policy text for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonizedPolicy {
    pub domain_id: String,
    pub lang: SourceLang,
    pub file: String,
    pub text: String,
}

#[derive(Serialize)]
struct HarmonizedBundle<'a> {
    policies: &'a [HarmonizedPolicy],
}

#[derive(Serialize)]
struct ReportDecision<'a> {
    action: &'a ResolutionAction,
    enrich: bool,
    status: ConflictStatus,
    open_after: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    session_id: &'a str,
    summary: SessionSummary,
    conflicts: &'a [ConflictRecord],
    decisions: Vec<ReportDecision<'a>>,
    injections: &'a InjectionReport,
    enrichment_iterations: usize,
    needs_review: &'a BTreeSet<PolicyRef>,
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("session values serialize");
    bytes.push(b'\n');
    bytes
}

fn valid_domain(d: &str) -> bool {
    !d.is_empty() && d.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Content-derived session id.
pub fn session_id(inputs: &SessionInputs) -> String {
    let digest = Sha256::digest(serde_json::to_vec(inputs).expect("inputs serialize"));
    format!("s-{}", &hex::encode(digest)[..16])
}

impl SessionState {
    /// Parses, builds SOPs, aligns, enriches and classifies.
    pub fn create(inputs: SessionInputs) -> Result<SessionState, SessionError> {
        inputs.similarity.validate()?;
        if !(0.0..=1.0).contains(&inputs.enrichment.damping) {
            return Err(SessionError::Damping);
        }
        inputs.catalogue.validate().map_err(|e| SessionError::Ontology(OntologyError::Malformed(e.to_string())))?;
        if inputs.policies.len() < 2 {
            return Err(SessionError::TooFewPolicies(inputs.policies.len()));
        }
        let mut seen = BTreeSet::new();
        for p in &inputs.policies {
            if !valid_domain(&p.domain_id) {
                return Err(SessionError::InvalidDomain(p.domain_id.clone()));
            }
            if !seen.insert(p.domain_id.as_str()) {
                return Err(SessionError::DuplicateDomain(p.domain_id.clone()));
            }
        }
        inputs.support.validate()?;
        let policy_sets = inputs
            .policies
            .iter()
            .map(|p| {
                policy::parse_with(p.lang, &p.text, &p.domain_id, &inputs.deontic)
                    .map_err(|error| SessionError::Parse { domain_id: p.domain_id.clone(), error })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sops: Vec<Sop> = policy_sets.iter().map(build_sop).collect();
        let corr = align(&sops, &inputs.support, &inputs.similarity)?;
        let enrichment = enrich_all(&inputs.support, &sops, &corr, &inputs.enrichment);
        let conflicts = evaluate_conflicts(&policy_sets, &sops, &enrichment.correspondences);
        Ok(SessionState {
            session_id: session_id(&inputs),
            policy_sets,
            sops,
            correspondences: enrichment.correspondences,
            conflicts,
            decision_log: Vec::new(),
            enriched_so: enrichment.enriched_so,
            injections: enrichment.report,
            enrichment_iterations: enrichment.iterations,
            needs_review: BTreeSet::new(),
            inputs,
        })
    }

    pub fn support(&self) -> &Ontology {
        &self.inputs.support
    }

    /// Re-aligns the current SOPs and refreshes conflict statuses. Derived
    /// correspondences are kept while both endpoints still exist. Callers
    /// that edit `sops` directly must run this afterwards.
    pub fn reevaluate(&mut self) -> Result<(), AlignError> {
        let mut corr = align(&self.sops, &self.inputs.support, &self.inputs.similarity)?;
        let exists = |sop_id: &str, id: &str| self.sops.iter().any(|s| s.id() == sop_id && s.ontology.contains(id));
        for c in self.correspondences.correspondences.iter().filter(|c| c.derivation.is_derived()) {
            if exists(&c.left.sop_id, &c.left.concept_id) && exists(&c.right.sop_id, &c.right.concept_id) {
                corr.insert(c.clone());
            }
        }
        let fresh = evaluate_conflicts(&self.policy_sets, &self.sops, &corr);
        let fresh_ids: BTreeSet<&str> = fresh.iter().map(|c| c.id.as_str()).collect();
        let mut merged: Vec<ConflictRecord> = self
            .conflicts
            .iter()
            .filter(|c| !fresh_ids.contains(c.id.as_str()))
            .cloned()
            .map(|mut c| {
                c.status = ConflictStatus::Resolved;
                c
            })
            .collect();
        merged.extend(fresh);
        merged.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
        self.conflicts = merged;
        self.correspondences = corr;
        Ok(())
    }

    fn enrich(&mut self) {
        let e = enrich_all(&self.enriched_so, &self.sops, &self.correspondences, &self.inputs.enrichment);
        self.injections = InjectionReport {
            injected: e
                .enriched_so
                .relations()
                .filter(|r| !self.inputs.support.has_relation(&r.source, r.rel_type, &r.target))
                .cloned()
                .collect(),
            derived: e.correspondences.correspondences.iter().filter(|c| c.derivation.is_derived()).cloned().collect(),
            skipped_duplicates: self.injections.skipped_duplicates + e.report.skipped_duplicates,
        };
        self.enrichment_iterations += e.iterations;
        self.enriched_so = e.enriched_so;
        self.correspondences = e.correspondences;
        self.conflicts.retain(|c| c.status == ConflictStatus::Resolved);
        if let Err(e) = self.reevaluate() {
            unreachable!("SOPs aligned before enrichment: {e}");
        }
    }

    pub fn conflict(&self, id: &str) -> Option<&ConflictRecord> {
        self.conflicts.iter().find(|c| c.id == id)
    }

    pub fn remaining_conflicts(&self) -> Vec<&ConflictRecord> {
        self.conflicts.iter().filter(|c| c.status == ConflictStatus::Open).collect()
    }

    pub fn proposals(&self, conflict: &ConflictRecord) -> Result<Proposals, ResolutionError> {
        propose_actions(conflict, &self.inputs.catalogue, self)
    }

    pub fn summary(&self) -> SessionSummary {
        let mut open: BTreeMap<ConflictKind, usize> = ConflictKind::ALL.iter().map(|k| (*k, 0)).collect();
        for c in self.remaining_conflicts() {
            *open.entry(c.kind).or_default() += 1;
        }
        SessionSummary {
            session_id: self.session_id.clone(),
            open_total: open.values().sum(),
            open,
            resolved_total: self.conflicts.iter().filter(|c| c.status == ConflictStatus::Resolved).count(),
            decisions: self.decision_log.len(),
        }
    }

    /// Applies one decision, optionally re-enriches, and logs it.
    pub fn decide(
        &self,
        action: &ResolutionAction,
        enrich: bool,
        timestamp_ms: u64,
    ) -> Result<(SessionState, ActionEffects), ResolutionError> {
        let (mut next, fx) = apply_action(self, action)?;
        if enrich {
            next.enrich();
        }
        let status = next.conflict(&action.conflict_id).map_or(ConflictStatus::Resolved, |c| c.status);
        let open_after = next.remaining_conflicts().len();
        next.decision_log.push(DecisionEntry { action: action.clone(), enrich, timestamp_ms, status, open_after });
        Ok((next, fx))
    }

    /// Rebuilds a session from its inputs and a decision log.
    pub fn replay(inputs: SessionInputs, log: &[DecisionEntry]) -> Result<SessionState, SessionError> {
        let mut state = SessionState::create(inputs)?;
        for (index, entry) in log.iter().enumerate() {
            state = state
                .decide(&entry.action, entry.enrich, entry.timestamp_ms)
                .map_err(|error| SessionError::Replay { index, error })?
                .0;
        }
        Ok(state)
    }

    /// Repeatedly applies the default proposal of every open conflict that
    /// does not need expert confirmation, until nothing more applies.
    pub fn auto_resolve(&self, mut now: impl FnMut() -> u64) -> SessionState {
        let mut state = self.clone();
        loop {
            let mut progressed = false;
            let open: Vec<ConflictRecord> =
                state.remaining_conflicts().into_iter().filter(|c| !c.needs_confirmation).cloned().collect();
            for c in open {
                let Some(action) = state.proposals(&c).ok().and_then(|p| p.actions.into_iter().next()) else {
                    continue;
                };
                if state.conflict(&c.id).is_none_or(|c| c.status != ConflictStatus::Open) {
                    continue;
                }
                if let Ok((next, _)) = state.decide(&action, false, now()) {
                    state = next;
                    progressed = true;
                }
            }
            if !progressed {
                return state;
            }
        }
    }

    pub fn harmonized(&self) -> Vec<HarmonizedPolicy> {
        self.policy_sets
            .iter()
            .map(|ps| HarmonizedPolicy {
                domain_id: ps.domain_id.clone(),
                lang: ps.lang,
                file: format!("{}.{}", ps.domain_id, ps.lang.extension()),
                text: policy::print(ps),
            })
            .collect()
    }

    pub fn export(&self, what: ExportWhat, format: ExportFormat, domain: Option<&str>) -> Result<Vec<u8>, ExportError> {
        match (what, format) {
            (ExportWhat::EnrichedOntology, ExportFormat::Canonical) => Ok(save_ontology(&self.enriched_so)),
            (ExportWhat::EnrichedOntology, ExportFormat::Turtle) => Ok(export_turtle(&self.enriched_so)),
            (ExportWhat::Correspondences, ExportFormat::Canonical) => {
                Ok(pretty(&correspondence_document(&self.correspondences, &self.sops)))
            }
            (ExportWhat::Correspondences, ExportFormat::Turtle) => {
                Ok(export_turtle(&correspondence_ontology(&self.correspondences, &self.sops)?))
            }
            (ExportWhat::HarmonizedPolicies, ExportFormat::Canonical) => {
                let all = self.harmonized();
                match domain {
                    Some(d) => all
                        .into_iter()
                        .find(|h| h.domain_id == d)
                        .map(|h| h.text.into_bytes())
                        .ok_or_else(|| ExportError::UnknownDomain(d.to_string())),
                    None => Ok(pretty(&HarmonizedBundle { policies: &all })),
                }
            }
            (ExportWhat::Report, ExportFormat::Canonical) => Ok(pretty(&Report {
                session_id: &self.session_id,
                summary: self.summary(),
                conflicts: &self.conflicts,
                decisions: self
                    .decision_log
                    .iter()
                    .map(|d| ReportDecision { action: &d.action, enrich: d.enrich, status: d.status, open_after: d.open_after })
                    .collect(),
                injections: &self.injections,
                enrichment_iterations: self.enrichment_iterations,
                needs_review: &self.needs_review,
            })),
            (_, ExportFormat::Turtle) => Err(ExportError::TurtleUnsupported),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        pretty(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SessionState, OntologyError> {
        serde_json::from_slice(bytes).map_err(|e| OntologyError::Malformed(e.to_string()))
    }
}
