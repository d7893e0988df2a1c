//! Slow, direct reference implementations. Nothing here calls into the
//! similarity, taxonomy or alignment code of the core crate.

use std::collections::{BTreeMap, BTreeSet};

use smsp_core::alignment::Derivation;
use smsp_core::ontology::{Concept, ConceptKind, Ontology, RelationType};
use smsp_core::similarity::SimilarityConfig;
use smsp_core::sop::Sop;

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Sep,
    Upper,
    Other,
}

fn class(c: char) -> Class {
    if c == '_' || c == '-' || c.is_whitespace() {
        Class::Sep
    } else if c.is_uppercase() {
        Class::Upper
    } else {
        Class::Other
    }
}

/// Word splitting by character classes: separators end a word; an
/// uppercase letter starts one unless it continues a run of capitals that
/// is not about to hand over to lowercase.
pub fn words(label: &str) -> Vec<String> {
    let cs: Vec<char> = label.chars().collect();
    let mut out: Vec<String> = Vec::new();
    let mut word = String::new();
    for i in 0..cs.len() {
        let c = cs[i];
        match class(c) {
            Class::Sep => {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                continue;
            }
            Class::Upper if !word.is_empty() => {
                let prev_upper = class(cs[i - 1]) == Class::Upper;
                let next_lower = i + 1 < cs.len() && cs[i + 1].is_lowercase();
                if !prev_upper || next_lower {
                    out.push(std::mem::take(&mut word));
                }
            }
            _ => {}
        }
        for l in c.to_lowercase() {
            word.push(l);
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Textbook dynamic-programming edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}

pub fn syntactic(a: &str, b: &str) -> f64 {
    let wa = words(a);
    let wb = words(b);
    let (ja, jb) = (wa.join(" "), wb.join(" "));
    let longest = ja.chars().count().max(jb.chars().count());
    let lev = if longest == 0 { 1.0 } else { 1.0 - levenshtein(&ja, &jb) as f64 / longest as f64 };
    let sa: BTreeSet<&String> = wa.iter().collect();
    let sb: BTreeSet<&String> = wb.iter().collect();
    let union = sa.union(&sb).count();
    let jac = if union == 0 { 1.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
    lev.max(jac)
}

fn parents<'a>(o: &'a Ontology, id: &str) -> Vec<&'a str> {
    o.relations()
        .filter(|r| r.rel_type == RelationType::IsA && r.source == id)
        .map(|r| r.target.as_str())
        .collect()
}

/// Every upward is_a path starting at `id`, each ending at a root.
pub fn all_paths(o: &Ontology, id: &str) -> Vec<Vec<String>> {
    let ps = parents(o, id);
    if ps.is_empty() {
        return vec![vec![id.to_string()]];
    }
    ps.into_iter()
        .flat_map(|p| {
            all_paths(o, p).into_iter().map(|mut path| {
                path.insert(0, id.to_string());
                path
            })
        })
        .collect()
}

/// Length of the longest upward path, in edges.
pub fn depth(o: &Ontology, id: &str) -> usize {
    all_paths(o, id).iter().map(|p| p.len() - 1).max().unwrap()
}

/// Wu-Palmer by enumerating every path from both concepts.
pub fn wu_palmer(o: &Ontology, a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let direct = o.relations().any(|r| {
        matches!(r.rel_type, RelationType::SynonymOf | RelationType::EquivalentTo)
            && ((r.source == a && r.target == b) || (r.source == b && r.target == a))
    });
    if direct {
        return 1.0;
    }
    let up = |x: &str| -> BTreeSet<String> { all_paths(o, x).into_iter().flatten().collect() };
    let common: Vec<String> = up(a).intersection(&up(b)).cloned().collect();
    let (da, db) = (depth(o, a), depth(o, b));
    match common.iter().map(|c| depth(o, c)).max() {
        Some(dl) if da + db > 0 => 2.0 * dl as f64 / (da + db) as f64,
        _ => 0.0,
    }
}

/// (support concept, score): best label-pair score, smallest id on ties.
pub fn anchor(support: &Ontology, c: &Concept, cfg: &SimilarityConfig) -> Option<(String, f64)> {
    let mut scored: Vec<(f64, &str)> = support
        .concepts()
        .map(|s| {
            let best = c.labels.iter().flat_map(|x| s.labels.iter().map(move |y| syntactic(x, y))).fold(0.0, f64::max);
            (best, s.id.as_str())
        })
        .collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(y.1)));
    scored.first().filter(|(s, _)| *s >= cfg.anchor_threshold).map(|(s, id)| (id.to_string(), *s))
}

/// One expected correspondence: ((sop, concept), (sop, concept)) in
/// canonical order, with its type, derivation, confidence and whether it
/// needs confirmation.
pub type Expected = ((String, String), (String, String), RelationType, Derivation, f64, bool);

/// Rule-by-rule evaluation over every cross-SOP pair of concepts.
pub fn align(sops: &[Sop], support: &Ontology, cfg: &SimilarityConfig) -> Vec<Expected> {
    let mut anchors = BTreeMap::new();
    for s in sops {
        for c in s.ontology.concepts().filter(|c| c.kind != ConceptKind::Policy) {
            if let Some(a) = anchor(support, c, cfg) {
                anchors.insert(c.id.clone(), a);
            }
        }
    }
    let twin = |c: &Concept, o: &Ontology| o.concepts().any(|x| x.kind == c.kind && x.labels[0] == c.labels[0]);
    let mut out = Vec::new();
    for (i, sa) in sops.iter().enumerate() {
        for sb in &sops[i + 1..] {
            for ca in sa.ontology.concepts() {
                for cb in sb.ontology.concepts() {
                    if ca.kind != cb.kind || ca.kind == ConceptKind::Policy {
                        continue;
                    }
                    let same = ca.labels[0] == cb.labels[0];
                    let eq_or_syn = if same { RelationType::EquivalentTo } else { RelationType::SynonymOf };
                    let hit = match (anchors.get(&ca.id), anchors.get(&cb.id)) {
                        (Some((x, sx)), Some((y, sy))) if x == y => Some((eq_or_syn, Derivation::Anchored, sx.min(*sy), false)),
                        (Some((x, sx)), Some((y, sy))) => (same && wu_palmer(support, x, y) <= cfg.homonym_semantic_ceiling)
                            .then(|| (RelationType::HomonymOf, Derivation::SupportRelation, sx.min(*sy), false)),
                        _ => {
                            let best = ca
                                .labels
                                .iter()
                                .flat_map(|x| cb.labels.iter().map(move |y| syntactic(x, y)))
                                .fold(0.0, f64::max);
                            (best >= cfg.syn_threshold).then_some((eq_or_syn, Derivation::SyntacticCandidate, best, true))
                        }
                    };
                    let Some((t, d, conf, confirm)) = hit else { continue };
                    if t == RelationType::SynonymOf && (twin(ca, &sb.ontology) || twin(cb, &sa.ontology)) {
                        continue;
                    }
                    let l = (sa.id().to_string(), ca.id.clone());
                    let r = (sb.id().to_string(), cb.id.clone());
                    let (l, r) = if l <= r { (l, r) } else { (r, l) };
                    out.push((l, r, t, d, conf, confirm));
                }
            }
        }
    }
    out.sort_by(|a, b| (&a.0, &a.1, a.2).cmp(&(&b.0, &b.1, b.2)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(words("ITDepartment"), ["it", "department"]);
        assert_eq!(words("use_printing-service"), ["use", "printing", "service"]);
        assert_eq!(syntactic("permit", "allow"), 0.0);
        assert_eq!(syntactic("usePrintingService", "use_printing_service"), 1.0);
    }
}
