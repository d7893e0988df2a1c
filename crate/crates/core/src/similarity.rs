//! Label and taxonomy similarity, and anchoring of SOP concepts into the
//! support ontology.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ontology::{Concept, Ontology, OntologyError, RelationType, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub syn_threshold: f64,
    pub homonym_semantic_ceiling: f64,
    pub anchor_threshold: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { syn_threshold: 0.85, homonym_semantic_ceiling: 0.30, anchor_threshold: 0.90 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid similarity config: {0}")]
pub struct ConfigError(pub String);

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("syn_threshold", self.syn_threshold),
            ("homonym_semantic_ceiling", self.homonym_semantic_ceiling),
            ("anchor_threshold", self.anchor_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.homonym_semantic_ceiling >= self.syn_threshold {
            return Err(ConfigError("homonym_semantic_ceiling must be below syn_threshold".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub sop_concept: String,
    pub support_concept: String,
    pub score: f64,
}

/// Lowercased tokens of a label. Splits on `_`, `-`, whitespace and
/// camelCase boundaries; a run of capitals followed by a lowercase letter
/// keeps its last capital for the next word (`ITDepartment` -> it, department).
pub fn tokens(label: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in label.split(|c: char| c == '_' || c == '-' || c.is_whitespace()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if c.is_uppercase() && !current.is_empty() {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                if !prev.is_uppercase() || next_lower {
                    out.push(std::mem::take(&mut current));
                }
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

pub fn normalize_label(label: &str) -> String {
    tokens(label).join(" ")
}

/// max(normalized Levenshtein, token Jaccard) over normalized labels.
pub fn syntactic_similarity(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let tb = tokens(b);
    let lev = strsim::normalized_levenshtein(&ta.join(" "), &tb.join(" "));
    let sa: BTreeSet<&String> = ta.iter().collect();
    let sb: BTreeSet<&String> = tb.iter().collect();
    let union = sa.union(&sb).count();
    let jaccard = if union == 0 { 1.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
    lev.max(jaccard)
}

/// Wu-Palmer over the is_a taxonomy. Identity and direct synonym_of /
/// equivalent_to edges score 1.
pub fn semantic_similarity(support: &Ontology, c1: &str, c2: &str) -> Result<f64, OntologyError> {
    Taxonomy::new(support).similarity(c1, c2)
}

impl Taxonomy<'_> {
    pub fn similarity(&self, c1: &str, c2: &str) -> Result<f64, OntologyError> {
        let info = self.query(c1, c2)?;
        let o = self.ontology();
        if c1 == c2 || [RelationType::SynonymOf, RelationType::EquivalentTo].iter().any(|&t| o.has_relation(c1, t, c2)) {
            return Ok(1.0);
        }
        Ok(match info.lca {
            Some(_) if info.depth1 + info.depth2 > 0 => {
                2.0 * info.depth_lca as f64 / (info.depth1 + info.depth2) as f64
            }
            _ => 0.0,
        })
    }
}

/// Best support concept for `c` by label similarity, kept only when the
/// score reaches the anchor threshold. Ties go to the smallest support id.
pub fn anchor_concept(support: &Ontology, c: &Concept, cfg: &SimilarityConfig) -> Option<Anchor> {
    let mut best: Option<(f64, &str)> = None;
    for s in support.concepts() {
        let score = c
            .labels
            .iter()
            .flat_map(|a| s.labels.iter().map(move |b| syntactic_similarity(a, b)))
            .fold(0.0, f64::max);
        // Concepts arrive in id order, so strict > keeps the smallest id.
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, &s.id));
        }
    }
    best.filter(|(score, _)| *score >= cfg.anchor_threshold).map(|(score, id)| Anchor {
        sop_concept: c.id.clone(),
        support_concept: id.to_string(),
        score,
    })
}
