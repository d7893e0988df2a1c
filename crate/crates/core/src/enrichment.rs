//! Enrichment of the support ontology (SO) from the correspondences.
//!
//! * Case 1: a direct cross-SOP correspondence between two anchored
//!   concepts is copied onto their anchors.
//! * Case 2 (R1): if C1 is equivalent to C1', C2 to C2', and C1' and C2'
//!   are related by r, then r is derived between C1 and C2.
//! * Case 3 (R2): two composite concepts whose part_of children can be
//!   matched one-to-one through equivalences are themselves related.
//!
//! Derived relations land on the SO anchors of their endpoints. When an
//! endpoint has no anchor the result is kept as an R1/R2 correspondence
//! instead.
//!
//! [`enrich_all`] runs all three cases against a snapshot, applies the
//! results, and repeats until a pass changes nothing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::alignment::{ConceptRef, Correspondence, CorrespondenceOntology, Derivation};
use crate::ontology::{Inserted, Ontology, Provenance, Relation, RelationType};
use crate::sop::{children, Sop};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichmentConfig {
    /// Applied to Case 2 and Case 3 confidences so chained derivations decay.
    pub damping: f64,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        EnrichmentConfig { damping: 0.95 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    /// Relations new to the SO, in canonical order.
    pub injected: Vec<Relation>,
    /// Correspondences derived for unanchored concepts.
    pub derived: Vec<Correspondence>,
    pub skipped_duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enrichment {
    pub enriched_so: Ontology,
    pub correspondences: CorrespondenceOntology,
    pub report: InjectionReport,
    /// Passes that changed something.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Derived {
    Inject(Relation),
    Correspond(Correspondence),
}

struct View<'a> {
    so: &'a Ontology,
    corr: &'a CorrespondenceOntology,
    /// SOP concept id to the id of its SOP.
    owner: BTreeMap<&'a str, &'a str>,
}

impl<'a> View<'a> {
    fn new(so: &'a Ontology, corr: &'a CorrespondenceOntology, sops: &'a [Sop]) -> Self {
        let mut owner = BTreeMap::new();
        for s in sops {
            for c in s.ontology.concepts() {
                owner.insert(c.id.as_str(), s.id());
            }
        }
        for c in &corr.correspondences {
            owner.entry(c.left.concept_id.as_str()).or_insert(c.left.sop_id.as_str());
            owner.entry(c.right.concept_id.as_str()).or_insert(c.right.sop_id.as_str());
        }
        View { so, corr, owner }
    }

    fn anchor(&self, id: &str) -> Option<&'a str> {
        if self.so.contains(id) {
            return self.so.concept(id).map(|c| c.id.as_str());
        }
        self.corr.anchor_of(id).filter(|a| self.so.contains(a))
    }

    /// Where a relation r(x, y) derived by `case` belongs.
    fn place(&self, x: &str, y: &str, r: RelationType, confidence: f64, case: Provenance) -> Option<Derived> {
        match (self.anchor(x), self.anchor(y)) {
            (Some(ax), Some(ay)) if ax != ay => Some(Derived::Inject(Relation::new(ax, ay, r, case, confidence))),
            (Some(_), Some(_)) => None,
            _ => {
                let (sx, sy) = (self.owner.get(x)?, self.owner.get(y)?);
                if sx == sy {
                    return None;
                }
                let derivation = if case == Provenance::Case3 { Derivation::R2 } else { Derivation::R1 };
                Some(Derived::Correspond(
                    Correspondence::new(ConceptRef::new(*sx, x), ConceptRef::new(*sy, y), r, confidence, derivation)
                        .confirm(true),
                ))
            }
        }
    }

    fn directly_corresponding(&self, x: &str, y: &str) -> bool {
        self.corr.between(x, y).next().is_some()
    }
}

fn case1(v: &View) -> Vec<Derived> {
    v.corr
        .correspondences
        .iter()
        .filter(|c| matches!(c.derivation, Derivation::Anchored | Derivation::SupportRelation))
        .filter_map(|c| {
            let (a, b) = (v.corr.anchor_of(&c.left.concept_id)?, v.corr.anchor_of(&c.right.concept_id)?);
            (a != b && v.so.contains(a) && v.so.contains(b))
                .then(|| Derived::Inject(Relation::new(a, b, c.rel_type, Provenance::Case1, c.confidence)))
        })
        .collect()
}

/// Relation types Case 2 carries over from C1', C2' to C1, C2.
const CASE2_TYPES: [RelationType; 3] = [RelationType::SynonymOf, RelationType::EquivalentTo, RelationType::RelatedTo];

fn case2(v: &View, cfg: &EnrichmentConfig) -> Vec<Derived> {
    let so_edges = v.so.relations().map(|r| (r.source.as_str(), r.target.as_str(), r.rel_type, r.confidence));
    let corr_edges = v
        .corr
        .correspondences
        .iter()
        .map(|c| (c.left.concept_id.as_str(), c.right.concept_id.as_str(), c.rel_type, c.confidence));
    let mut equiv: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    let mut edges = Vec::new();
    for (a, b, t, conf) in so_edges.chain(corr_edges).filter(|e| CASE2_TYPES.contains(&e.2)) {
        if t.is_equivalence() {
            equiv.entry(a).or_default().push((b, conf));
            equiv.entry(b).or_default().push((a, conf));
        }
        edges.push((a, b, t, conf));
        edges.push((b, a, t, conf));
    }

    let mut out = Vec::new();
    for &(u, w, r, cr) in &edges {
        let (Some(eu), Some(ew)) = (equiv.get(u), equiv.get(w)) else { continue };
        for &(x, ex) in eu.iter().filter(|(x, _)| *x != w) {
            for &(y, ey) in ew.iter().filter(|(y, _)| *y != u) {
                if x == y || v.directly_corresponding(x, y) {
                    continue;
                }
                let conf = ex.min(ey).min(cr) * cfg.damping;
                out.extend(v.place(x, y, r, conf, Provenance::Case2));
            }
        }
    }
    out
}

/// Maximum bipartite matching (augmenting paths). `adj[i]` lists
/// (right index, weight). Returns the matched weights, one per matched left.
fn matching(adj: &[Vec<(usize, f64)>], n_right: usize) -> Vec<f64> {
    fn augment(i: usize, adj: &[Vec<(usize, f64)>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &(j, _) in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    for i in 0..adj.len() {
        augment(i, adj, &mut vec![false; n_right], &mut owner);
    }
    owner
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.map(|i| adj[i].iter().find(|(jj, _)| *jj == j).map_or(0.0, |(_, w)| *w)))
        .collect()
}

fn case3(v: &View, sops: &[Sop], cfg: &EnrichmentConfig) -> Vec<Derived> {
    let composites: Vec<(usize, &str, Vec<&str>)> = sops
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            s.ontology.concepts().filter_map(move |c| {
                let kids = children(&s.ontology, &c.id);
                (!kids.is_empty()).then_some((i, c.id.as_str(), kids))
            })
        })
        .collect();
    let mut out = Vec::new();
    for (n, (si, c1, k1)) in composites.iter().enumerate() {
        for (sj, c2, k2) in &composites[n + 1..] {
            if si == sj || v.directly_corresponding(c1, c2) {
                continue;
            }
            let (small, large) = if k1.len() <= k2.len() { (k1, k2) } else { (k2, k1) };
            let adj: Vec<Vec<(usize, f64)>> = small
                .iter()
                .map(|a| {
                    large
                        .iter()
                        .enumerate()
                        .filter_map(|(j, b)| {
                            v.corr.between(a, b).filter(|c| c.rel_type.is_equivalence()).map(|c| c.confidence).reduce(f64::max).map(|w| (j, w))
                        })
                        .collect()
                })
                .collect();
            let matched = matching(&adj, large.len());
            if matched.len() < small.len() {
                continue;
            }
            let r = if k1.len() == k2.len() { RelationType::EquivalentTo } else { RelationType::RelatedTo };
            let conf = matched.iter().copied().fold(1.0, f64::min) * cfg.damping;
            out.extend(v.place(c1, c2, r, conf, Provenance::Case3));
        }
    }
    out
}

/// Applies derived items and returns how many were already present.
fn apply(so: &mut Ontology, corr: &mut CorrespondenceOntology, derived: Vec<Derived>) -> usize {
    let mut skipped = 0;
    for d in derived {
        let fresh = match d {
            Derived::Inject(r) => {
                so.insert_relation(r).expect("derived relations join existing, distinct SO concepts") == Inserted::Added
            }
            Derived::Correspond(c) => {
                let fresh = !corr.contains_key(&c.key());
                corr.insert(c);
                fresh
            }
        };
        if !fresh {
            skipped += 1;
        }
    }
    skipped
}

fn report(before_so: &Ontology, after_so: &Ontology, before: &CorrespondenceOntology, after: &CorrespondenceOntology, skipped: usize) -> InjectionReport {
    InjectionReport {
        injected: after_so
            .relations()
            .filter(|r| !before_so.has_relation(&r.source, r.rel_type, &r.target))
            .cloned()
            .collect(),
        derived: after.correspondences.iter().filter(|c| !before.contains_key(&c.key())).cloned().collect(),
        skipped_duplicates: skipped,
    }
}

fn run_once(
    so: &Ontology,
    corr: &CorrespondenceOntology,
    sops: &[Sop],
    derive: impl Fn(&View) -> Vec<Derived>,
) -> (Ontology, CorrespondenceOntology, InjectionReport) {
    let v = View::new(so, corr, sops);
    let derived = derive(&v);
    let (mut so2, mut corr2) = (so.clone(), corr.clone());
    let skipped = apply(&mut so2, &mut corr2, derived);
    let rep = report(so, &so2, corr, &corr2, skipped);
    (so2, corr2, rep)
}

pub fn enrich_case1(so: &Ontology, corr: &CorrespondenceOntology) -> (Ontology, InjectionReport) {
    let (so2, _, rep) = run_once(so, corr, &[], case1);
    (so2, rep)
}

pub fn enrich_case2(
    so: &Ontology,
    corr: &CorrespondenceOntology,
    sops: &[Sop],
    cfg: &EnrichmentConfig,
) -> (Ontology, CorrespondenceOntology, InjectionReport) {
    run_once(so, corr, sops, |v| case2(v, cfg))
}

pub fn enrich_case3(
    so: &Ontology,
    corr: &CorrespondenceOntology,
    sops: &[Sop],
    cfg: &EnrichmentConfig,
) -> (Ontology, CorrespondenceOntology, InjectionReport) {
    run_once(so, corr, sops, |v| case3(v, sops, cfg))
}

pub fn enrich_all(so: &Ontology, sops: &[Sop], corr: &CorrespondenceOntology, cfg: &EnrichmentConfig) -> Enrichment {
    let (mut cur_so, mut cur_corr) = (so.clone(), corr.clone());
    let mut iterations = 0;
    let mut skipped = 0;
    loop {
        let derived = {
            let v = View::new(&cur_so, &cur_corr, sops);
            let mut d = case1(&v);
            d.extend(case2(&v, cfg));
            d.extend(case3(&v, sops, cfg));
            d
        };
        // A raised confidence counts as progress too.
        let before = (relation_state(&cur_so), cur_corr.clone());
        skipped += apply(&mut cur_so, &mut cur_corr, derived);
        if relation_state(&cur_so) == before.0 && cur_corr == before.1 {
            break;
        }
        iterations += 1;
    }
    let report = report(so, &cur_so, corr, &cur_corr, skipped);
    Enrichment { enriched_so: cur_so, correspondences: cur_corr, report, iterations }
}

fn relation_state(o: &Ontology) -> BTreeSet<(String, RelationType, String, u64)> {
    o.relations().map(|r| (r.source.clone(), r.rel_type, r.target.clone(), r.confidence.to_bits())).collect()
}
